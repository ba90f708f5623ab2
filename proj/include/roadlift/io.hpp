#pragma once

// On-disk formats. Every format carries a "major.minor" version; readers reject
// unknown majors with FormatError.
//
//   camera.json    intrinsics plus the world-to-camera rotation and translation
//   tin.obj        "# roadlift-tin <version>" then "v x y z" and 1-based "f i j k" lines
//   lanes.json     lane polylines
//   labels.txt     "# roadlift-labels <version>" then one object per line:
//                  type truncation occlusion alpha u_min v_min u_max v_max h w l x y z
//                  rotation_y score rotation_x rotation_z model_name
//                  Location is the world-frame centroid; rotation_y/x/z hold yaw,
//                  pitch and roll. The object id is the 0-based line index.
//   detections     JSON lines: a header object, then one detection per line
//   lifted boxes   JSON lines: a header object, then one record per detection
//   manifest.json  dataset index: generation parameters and scene directories

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "roadlift/descriptor.hpp"
#include "roadlift/lane_map.hpp"
#include "roadlift/pipeline.hpp"
#include "roadlift/synth.hpp"
#include "roadlift/tin_map.hpp"

namespace roadlift {

inline constexpr int kFormatMajor = 1;
inline constexpr int kFormatMinor = 0;
std::string formatVersion();  // "1.0"

// Throws FormatError unless `version` is "<kFormatMajor>.<minor>".
void checkVersion(const std::string& version, const std::string& what);

// Shortest decimal that parses back to the same double.
std::string formatDouble(double v);
double parseDouble(const std::string& token, const std::string& context);

// Writes to "<path>.tmp" then renames over `path`.
void writeFileAtomic(const std::filesystem::path& path, const std::string& content);
std::string readFile(const std::filesystem::path& path);

nlohmann::json cameraToJson(const Camera& camera);
Camera cameraFromJson(const nlohmann::json& j);

std::string emitTin(const TinMap& map);
TinMap parseTin(const std::string& text);

nlohmann::json lanesToJson(const LaneMap& lanes);
LaneMap lanesFromJson(const nlohmann::json& j);

std::string emitLabels(const std::vector<LabeledObject>& objects);
std::vector<LabeledObject> parseLabels(const std::string& text);

struct DetectionsHeader {
  DescriptorLayout layout = DescriptorLayout::Full;
  std::string source;  // "perfect", "noisy", "net", ...
};
std::string emitDetections(const DetectionsHeader& header, const std::vector<Detection>& detections);
// Errors name the 1-based line number.
std::vector<Detection> parseDetections(const std::string& text, DetectionsHeader* header = nullptr);

nlohmann::json boxToJson(const Box3D& box);
Box3D boxFromJson(const nlohmann::json& j);

std::string emitLifted(const nlohmann::json& header, const std::vector<LiftRecord>& records);
// Lifted records as scored boxes; failed records are skipped.
std::vector<ScoredBox> parseLifted(const std::string& text, nlohmann::json* header = nullptr);

nlohmann::json profileToJson(const RoadProfile& profile);
RoadProfile profileFromJson(const nlohmann::json& j);

// Writes manifest.json last, so an interrupted run leaves no manifest.
void writeDataset(const std::filesystem::path& dir, const BenchmarkSpec& spec, const std::vector<Scene>& scenes,
                  bool with_snippets);
std::vector<Scene> readDataset(const std::filesystem::path& dir);
nlohmann::json readManifest(const std::filesystem::path& dir);

// Per-object 4 x 128 x 128 float tensors: "RLSN", u16 major, u16 minor, u32 count,
// then per object u32 id followed by the values in channel-major order.
std::string emitSnippets(const std::vector<std::pair<int, FeatureMap>>& snippets);

}  // namespace roadlift
