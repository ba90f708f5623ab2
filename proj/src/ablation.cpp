#include "roadlift/ablation.hpp"

#include <cmath>
#include <cstdio>

#include "roadlift/pipeline.hpp"

namespace roadlift {

namespace {

std::string percent(const std::optional<double>& ap) {
  if (!ap) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f%%", *ap * 100);
  return buf;
}

std::string number(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

std::string setupLabel(Setup setup) {
  switch (setup) {
    case Setup::Full: return "Full model";
    case Setup::NoCenterlines: return "No driving centerlines";
    case Setup::BottomOnly: return "Keypoints at bottom";
  }
  return "";
}

std::string columnLabel(double sigma) {
  if (sigma == 0) return "Nominal";
  char buf[32];
  std::snprintf(buf, sizeof buf, "STD %gcm", std::round(sigma * 1000) / 10);
  return buf;
}

AblationTable runAblation(const std::vector<Scene>& scenes, const AblationConfig& cfg) {
  cfg.match.validate();
  AblationTable table;
  table.map_sigmas = cfg.map_sigmas;
  table.setups = cfg.setups;
  const std::size_t ncols = cfg.map_sigmas.size();
  const std::size_t ncells = cfg.setups.size() * ncols;

  // per scene, per cell lift records
  using SceneCells = std::vector<std::vector<LiftRecord>>;
  const auto per_scene = orderedParallelMap<SceneCells>(
      static_cast<int>(scenes.size()), cfg.workers, [&](int s) {
        const Scene& scene = scenes[s];
        SceneCells cells(ncells);
        for (std::size_t col = 0; col < ncols; ++col) {
          const double sigma = cfg.map_sigmas[col];
          NoiseMode mode = ElevationOnlyNoise{sigma, cfg.map_seed};
          if (cfg.vertex_perturbed) mode = VertexPerturbedNoise{sigma, cfg.map_seed};
          const TinMap map = scene.map.withNoise(mode);
          for (std::size_t row = 0; row < cfg.setups.size(); ++row) {
            const DescriptorLayout layout =
                cfg.setups[row] == Setup::BottomOnly ? DescriptorLayout::BottomOnly : DescriptorLayout::Full;
            const auto detections = oracleDescriptor(scene.frame, cfg.oracle, layout);
            cells[row * ncols + col] = liftDetections(detections, scene.frame.camera, map);
          }
        }
        return cells;
      });

  std::vector<LabeledFrame> ground_truth;
  for (const auto& s : scenes) ground_truth.push_back(s.frame);
  for (std::size_t row = 0; row < cfg.setups.size(); ++row) {
    for (std::size_t col = 0; col < ncols; ++col) {
      AblationCell cell;
      cell.setup = cfg.setups[row];
      cell.map_sigma = cfg.map_sigmas[col];
      std::vector<ScoredBox> boxes;
      for (const auto& scene_cells : per_scene) {
        const auto& records = scene_cells[row * ncols + col];
        for (const auto& r : records) cell.lift_failures += r.result ? 0 : 1;
        const auto scored = scoredBoxes(records);
        boxes.insert(boxes.end(), scored.begin(), scored.end());
      }
      cell.report = evaluate(boxes, ground_truth, cfg.match);
      table.cells.push_back(std::move(cell));
    }
  }
  return table;
}

std::string formatGrid(const AblationTable& table) {
  std::size_t label_width = 5;
  for (Setup s : table.setups) label_width = std::max(label_width, setupLabel(s).size());
  std::vector<std::string> headers;
  for (double sigma : table.map_sigmas) headers.push_back(columnLabel(sigma));
  std::size_t col_width = 8;
  for (const auto& h : headers) col_width = std::max(col_width, h.size());

  std::string out = "Average precision (BEV, pooled)\n";
  std::string line = pad("Setup", label_width);
  for (const auto& h : headers) line += " | " + pad(h, col_width);
  out += line + "\n" + std::string(line.size(), '-') + "\n";
  for (std::size_t row = 0; row < table.setups.size(); ++row) {
    std::string l = pad(setupLabel(table.setups[row]), label_width);
    for (std::size_t col = 0; col < table.map_sigmas.size(); ++col)
      l += " | " + pad(percent(table.at(row, col).report.pooled_ap), col_width);
    out += l + "\n";
  }
  return out;
}

std::string formatCsv(const AblationTable& table) {
  std::string out = "setup,column,map_sigma,ap_pooled,ap_mean,ap_car,ap_truck,tp,fp,fn,lift_failures\n";
  for (std::size_t row = 0; row < table.setups.size(); ++row) {
    for (std::size_t col = 0; col < table.map_sigmas.size(); ++col) {
      const AblationCell& c = table.at(row, col);
      const EvalReport& r = c.report;
      char sigma[32];
      std::snprintf(sigma, sizeof sigma, "%g", c.map_sigma);
      out += setupLabel(c.setup) + "," + columnLabel(c.map_sigma) + "," + sigma + "," + number(r.pooled_ap) + "," +
             number(r.mean_ap) + "," + number(r.per_class[0].ap) + "," + number(r.per_class[1].ap) + "," +
             std::to_string(r.totals.tp) + "," + std::to_string(r.totals.fp) + "," + std::to_string(r.totals.fn) +
             "," + std::to_string(c.lift_failures) + "\n";
    }
  }
  return out;
}

}  // namespace roadlift
