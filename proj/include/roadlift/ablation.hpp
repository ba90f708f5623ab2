#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "roadlift/descriptor.hpp"
#include "roadlift/eval.hpp"
#include "roadlift/synth.hpp"

namespace roadlift {

enum class Setup { Full, NoCenterlines, BottomOnly };
std::string setupLabel(Setup setup);  // row label of the comparison grid

struct AblationConfig {
  OracleNoise oracle;                         // descriptor source for every cell
  std::vector<double> map_sigmas = {0, 0.1, 0.4};  // ElevationOnly noise per column, m
  std::uint64_t map_seed = 0;
  bool vertex_perturbed = false;              // stress mode instead of ElevationOnly
  std::vector<Setup> setups = {Setup::Full, Setup::NoCenterlines, Setup::BottomOnly};
  MatchConfig match;
  int workers = 1;
};

struct AblationCell {
  Setup setup = Setup::Full;
  double map_sigma = 0;
  EvalReport report;
  int lift_failures = 0;
};

struct AblationTable {
  std::vector<double> map_sigmas;
  std::vector<Setup> setups;
  std::vector<AblationCell> cells;  // row-major: setup, then sigma

  const AblationCell& at(std::size_t row, std::size_t col) const { return cells[row * map_sigmas.size() + col]; }
};

// Oracle descriptors stand in for the network, and they read neither image nor lane
// channels, so the no-centerline row repeats the full row. The bottom-only row uses
// the reduced descriptor layout.
AblationTable runAblation(const std::vector<Scene>& scenes, const AblationConfig& cfg);

std::string columnLabel(double sigma);  // "Nominal", "STD 10cm", ...

// Pooled AP in percent, rows by setup, columns by map noise.
std::string formatGrid(const AblationTable& table);
std::string formatCsv(const AblationTable& table);

}  // namespace roadlift
