#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace roadlift::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kInternal = 3 };

struct GenerateOptions {
  std::filesystem::path out;
  std::uint64_t seed = 7;
  std::string profile = "flat";
  std::optional<double> profile_parameter;  // grade, curvature or cross slope
  double spacing = 4;
  int scenes_per_pose = 10;
  int vehicles = 10;
  double heading_jitter_deg = 3;
  bool snippets = false;
};

struct OracleOptions {
  double sigma_keypoint = 0.02;
  double sigma_dims = 0.02;
  double sigma_alpha = 0.005;
  double confidence_scale = 2;
  std::uint64_t seed = 0;
};

struct LiftOptions {
  std::filesystem::path dataset;
  std::filesystem::path out;
  std::string descriptor = "perfect";  // perfect | noisy | file | net
  std::filesystem::path detections;    // file mode
  std::filesystem::path weights;       // net mode; random weights from `seed` when empty
  std::uint64_t seed = 0;
  OracleOptions oracle;
  std::string map_noise = "nominal";  // nominal | elevation | vertex
  double map_sigma = 0;
  std::uint64_t map_seed = 0;
  std::string setup = "full";  // full | no-centerlines | bottom-only
  int workers = 1;
};

struct EvalOptions {
  std::filesystem::path dataset;
  std::vector<std::filesystem::path> lifted;
  std::filesystem::path out_prefix;
  std::string metric = "bev";     // bev | 3d
  std::string footprint = "hull";  // hull | yaw
  bool self_check = false;
  bool svg = false;
};

struct AblateOptions {
  std::filesystem::path dataset;
  std::filesystem::path out_prefix;
  std::string oracle = "noisy";  // perfect | noisy
  OracleOptions noise;
  std::vector<double> map_sigmas = {0, 0.1, 0.4};
  std::uint64_t map_seed = 0;
  bool vertex_perturbed = false;
  int workers = 1;
};

struct InspectNetOptions {
  std::filesystem::path weights;
  std::filesystem::path write_random;
  std::uint64_t seed = 0;
  std::string layout = "full";
};

struct RenderOptions {
  std::filesystem::path dataset;
  std::filesystem::path lifted;
  std::filesystem::path out;
  std::optional<int> frame;
  double scale = 0.25;
};

int runGenerate(const GenerateOptions& o, std::ostream& log);
int runLift(const LiftOptions& o, std::ostream& log);
int runEval(const EvalOptions& o, std::ostream& log);
int runAblate(const AblateOptions& o, std::ostream& log);
int runInspectNet(const InspectNetOptions& o, std::ostream& out);
int runRender(const RenderOptions& o, std::ostream& log);

}  // namespace roadlift::cli
