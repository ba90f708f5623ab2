#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <ostream>

#include "roadlift/ablation.hpp"
#include "roadlift/error.hpp"
#include "roadlift/io.hpp"
#include "roadlift/net.hpp"
#include "roadlift/pipeline.hpp"
#include "roadlift/report.hpp"
#include "roadlift/synth.hpp"

namespace roadlift::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Setup parseSetup(const std::string& s) {
  if (s == "full") return Setup::Full;
  if (s == "no-centerlines") return Setup::NoCenterlines;
  if (s == "bottom-only") return Setup::BottomOnly;
  throw InvalidArgument("unknown setup '" + s + "'");
}

std::string setupKey(Setup s) {
  switch (s) {
    case Setup::Full: return "full";
    case Setup::NoCenterlines: return "no-centerlines";
    case Setup::BottomOnly: return "bottom-only";
  }
  return "full";
}

OracleNoise toNoise(const OracleOptions& o) {
  OracleNoise n;
  n.sigma_keypoint = o.sigma_keypoint;
  n.sigma_dims = o.sigma_dims;
  n.sigma_alpha = o.sigma_alpha;
  n.confidence_scale = o.confidence_scale;
  n.seed = o.seed;
  return n;
}

void ensureParent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

fs::path withSuffix(const fs::path& prefix, const std::string& suffix) { return prefix.string() + suffix; }

const Scene& sceneForFrame(const std::map<int, const Scene*>& by_frame, int frame) {
  const auto it = by_frame.find(frame);
  if (it == by_frame.end()) throw FormatError("frame " + std::to_string(frame) + " is not in the dataset");
  return *it->second;
}

}  // namespace

int runGenerate(const GenerateOptions& o, std::ostream& log) {
  BenchmarkSpec spec;
  spec.seed = o.seed;
  spec.profile.kind = parseProfileKind(o.profile);
  if (o.profile_parameter) {
    spec.profile.parameter = *o.profile_parameter;
  } else {
    switch (spec.profile.kind) {
      case ProfileKind::Flat: break;
      case ProfileKind::Grade: spec.profile.parameter = 0.08; break;
      case ProfileKind::Crest:
      case ProfileKind::Sag: spec.profile.parameter = 0.0004; break;
      case ProfileKind::Banked: spec.profile.parameter = 0.06; break;
    }
  }
  spec.profile.sample_spacing = o.spacing;
  spec.scenes_per_pose = o.scenes_per_pose;
  spec.vehicles_per_scene = o.vehicles;
  spec.heading_jitter = o.heading_jitter_deg * std::numbers::pi / 180;
  const auto scenes = benchmark(spec);
  writeDataset(o.out, spec, scenes, o.snippets);
  std::size_t vehicles = 0;
  for (const auto& s : scenes) vehicles += s.frame.objects.size();
  log << "wrote " << scenes.size() << " scenes, " << vehicles << " vehicles to " << o.out.string() << "\n";
  return kOk;
}

int runLift(const LiftOptions& o, std::ostream& log) {
  const auto scenes = readDataset(o.dataset);
  std::map<int, const Scene*> by_frame;
  for (const auto& s : scenes) by_frame[s.frame.frame] = &s;
  const Setup setup = parseSetup(o.setup);
  const DescriptorLayout layout = setup == Setup::BottomOnly ? DescriptorLayout::BottomOnly : DescriptorLayout::Full;

  NoiseMode noise = NominalNoise{};
  if (o.map_noise == "elevation") {
    noise = ElevationOnlyNoise{o.map_sigma, o.map_seed};
  } else if (o.map_noise == "vertex") {
    noise = VertexPerturbedNoise{o.map_sigma, o.map_seed};
  } else if (o.map_noise != "nominal") {
    throw InvalidArgument("unknown map noise mode '" + o.map_noise + "'");
  }
  if (!(o.map_sigma >= 0)) throw InvalidArgument("map sigma must be non-negative");

  // detections grouped per frame, in dataset order
  std::map<int, std::vector<Detection>> detections;
  std::optional<WeightBundle> weights;
  if (o.descriptor == "perfect" || o.descriptor == "noisy") {
    const OracleNoise noise_spec = o.descriptor == "perfect" ? OracleNoise{} : toNoise(o.oracle);
    for (const auto& s : scenes) detections[s.frame.frame] = oracleDescriptor(s.frame, noise_spec, layout);
  } else if (o.descriptor == "file") {
    if (o.detections.empty()) throw InvalidArgument("--detections is required in file mode");
    DetectionsHeader header;
    for (auto& d : parseDetections(readFile(o.detections), &header)) {
      sceneForFrame(by_frame, d.frame);
      detections[d.frame].push_back(std::move(d));
    }
  } else if (o.descriptor == "net") {
    NetSpec spec;
    spec.fc_sizes.back() = descriptorSize(layout);
    weights = o.weights.empty() ? WeightBundle::random(o.seed, spec) : WeightBundle::load(o.weights, spec);
  } else {
    throw InvalidArgument("unknown descriptor mode '" + o.descriptor + "'");
  }

  const auto per_scene = orderedParallelMap<std::vector<LiftRecord>>(
      static_cast<int>(scenes.size()), o.workers, [&](int i) {
        const Scene& s = scenes[i];
        const TinMap map = s.map.withNoise(noise);
        std::vector<Detection> dets;
        if (weights) {
          const auto lanes = setup == Setup::NoCenterlines ? std::vector<ImagePolyline>{}
                                                           : projectLanes(s.lanes, s.frame.camera);
          for (const auto& obj : s.frame.objects) {
            Detection d;
            d.frame = s.frame.frame;
            d.object_id = obj.object_id;
            d.object_class = obj.object_class;
            d.box2d = obj.box2d;
            const Eigen::VectorXf out = forward(*weights, snippetTensor(obj.box2d, obj.object_id, lanes));
            d.descriptor.layout = layout;
            d.descriptor.values.assign(out.data(), out.data() + out.size());
            d.confidence = 1;
            dets.push_back(std::move(d));
          }
        } else {
          const auto it = detections.find(s.frame.frame);
          if (it != detections.end()) dets = it->second;
        }
        return liftDetections(dets, s.frame.camera, map);
      });

  std::vector<LiftRecord> records;
  int failures = 0;
  for (const auto& scene_records : per_scene) {
    for (const auto& r : scene_records) {
      failures += r.result ? 0 : 1;
      records.push_back(r);
    }
  }
  json header;
  header["descriptor"] = o.descriptor;
  header["setup"] = setupKey(setup);
  header["map_noise"] = {{"mode", o.map_noise}, {"sigma", o.map_noise == "nominal" ? 0.0 : o.map_sigma},
                         {"seed", o.map_seed}};
  header["dataset"] = fs::path(o.dataset).lexically_normal().filename().string();
  ensureParent(o.out);
  writeFileAtomic(o.out, emitLifted(header, records));
  log << "lifted " << records.size() - failures << " of " << records.size() << " detections";
  if (failures) log << " (" << failures << " failed)";
  log << "\n";
  return kOk;
}

namespace {

// Dataset sanity: every object in front of the camera with its 2D box inside the
// image, every bottom corner visible on the map.
std::vector<std::string> selfCheck(const std::vector<Scene>& scenes) {
  std::vector<std::string> issues;
  for (const auto& s : scenes) {
    const Camera& cam = s.frame.camera;
    const Vec3d c = cam.center();
    for (const auto& o : s.frame.objects) {
      const std::string where = "frame " + std::to_string(s.frame.frame) + " object " + std::to_string(o.object_id);
      const auto corners = boxCorners(o.box);
      if (cam.toCamera(o.box.center).z() <= 0) issues.push_back(where + ": behind the camera");
      const Box2D& b = o.box2d;
      if (!b.valid() || b.u_min < 0 || b.v_min < 0 || b.u_max > cam.image_width || b.v_max > cam.image_height)
        issues.push_back(where + ": 2D box outside the image");
      for (int i = 0; i < 4; ++i) {
        const auto hit = s.map.intersect(RayD::through(c, corners[i]));
        if (!hit) issues.push_back(where + ": bottom corner " + std::to_string(i) + " off the map");
      }
    }
  }
  return issues;
}

}  // namespace

int runEval(const EvalOptions& o, std::ostream& log) {
  const auto scenes = readDataset(o.dataset);
  if (o.self_check) {
    const auto issues = selfCheck(scenes);
    for (const auto& i : issues) log << "self-check: " << i << "\n";
    std::size_t objects = 0;
    for (const auto& s : scenes) objects += s.frame.objects.size();
    log << "self-check: " << scenes.size() << " scenes, " << objects << " objects, " << issues.size() << " issues\n";
    if (!issues.empty()) return kDataError;
    if (o.lifted.empty()) return kOk;
  }
  if (o.lifted.empty()) throw InvalidArgument("--lifted is required unless --self-check is given");
  if (o.out_prefix.empty()) throw InvalidArgument("--out-prefix is required");

  MatchConfig cfg;
  if (o.metric == "3d") {
    cfg.metric_space = MetricSpace::ThreeD;
  } else if (o.metric != "bev") {
    throw InvalidArgument("unknown metric '" + o.metric + "'");
  }
  if (o.footprint == "yaw") {
    cfg.footprint = BevFootprint::YawOnly;
  } else if (o.footprint != "hull") {
    throw InvalidArgument("unknown footprint '" + o.footprint + "'");
  }

  std::vector<LabeledFrame> gt;
  for (const auto& s : scenes) gt.push_back(s.frame);

  AblationTable table;
  table.setups = {Setup::Full, Setup::NoCenterlines, Setup::BottomOnly};
  table.map_sigmas = {0, 0.1, 0.4};
  struct Run {
    Setup setup;
    double sigma;
    EvalReport report;
    std::string source;
  };
  std::vector<Run> runs;
  for (const auto& path : o.lifted) {
    json header;
    const auto boxes = parseLifted(readFile(path), &header);
    Run run;
    run.setup = parseSetup(header.value("setup", "full"));
    run.sigma = header.contains("map_noise") ? header["map_noise"].value("sigma", 0.0) : 0.0;
    run.report = evaluate(boxes, gt, cfg);
    run.source = path.filename().string();
    if (std::find(table.map_sigmas.begin(), table.map_sigmas.end(), run.sigma) == table.map_sigmas.end())
      table.map_sigmas.push_back(run.sigma);
    runs.push_back(std::move(run));
  }
  std::sort(table.map_sigmas.begin(), table.map_sigmas.end());
  table.cells.resize(table.setups.size() * table.map_sigmas.size());
  for (std::size_t r = 0; r < table.setups.size(); ++r)
    for (std::size_t c = 0; c < table.map_sigmas.size(); ++c)
      table.cells[r * table.map_sigmas.size() + c] = {table.setups[r], table.map_sigmas[c], {}, 0};
  for (const auto& run : runs) {
    const std::size_t r = std::find(table.setups.begin(), table.setups.end(), run.setup) - table.setups.begin();
    const std::size_t c =
        std::find(table.map_sigmas.begin(), table.map_sigmas.end(), run.sigma) - table.map_sigmas.begin();
    table.cells[r * table.map_sigmas.size() + c].report = run.report;
  }

  std::string text = formatGrid(table) + "\n";
  std::string csv;
  for (const auto& run : runs) {
    text += "== " + run.source + " (" + setupLabel(run.setup) + ", " + columnLabel(run.sigma) + ")\n" +
            formatEvalText(run.report) + "\n";
    const std::string detail = formatEvalCsv(run.report);
    std::size_t pos = detail.find('\n') + 1;
    if (csv.empty()) csv = "source,setup,column," + detail.substr(0, pos);
    while (pos < detail.size()) {
      const std::size_t end = detail.find('\n', pos);
      csv += run.source + "," + setupKey(run.setup) + "," + columnLabel(run.sigma) + "," +
             detail.substr(pos, end - pos + 1);
      pos = end + 1;
    }
  }
  ensureParent(o.out_prefix);
  writeFileAtomic(withSuffix(o.out_prefix, ".txt"), text);
  writeFileAtomic(withSuffix(o.out_prefix, ".csv"), csv);
  if (o.svg) writeFileAtomic(withSuffix(o.out_prefix, ".svg"), formatBinsSvg(table));
  log << text;
  return kOk;
}

int runAblate(const AblateOptions& o, std::ostream& log) {
  const auto scenes = readDataset(o.dataset);
  AblationConfig cfg;
  if (o.oracle == "noisy") {
    cfg.oracle = toNoise(o.noise);
  } else if (o.oracle != "perfect") {
    throw InvalidArgument("unknown oracle '" + o.oracle + "'");
  }
  cfg.map_sigmas = o.map_sigmas;
  cfg.map_seed = o.map_seed;
  cfg.vertex_perturbed = o.vertex_perturbed;
  cfg.workers = o.workers;
  const AblationTable table = runAblation(scenes, cfg);
  const std::string grid = formatGrid(table);
  ensureParent(o.out_prefix);
  writeFileAtomic(withSuffix(o.out_prefix, ".txt"), grid);
  writeFileAtomic(withSuffix(o.out_prefix, ".csv"), formatCsv(table));
  writeFileAtomic(withSuffix(o.out_prefix, ".svg"), formatBinsSvg(table));
  log << grid;
  return kOk;
}

int runInspectNet(const InspectNetOptions& o, std::ostream& out) {
  NetSpec spec;
  if (o.layout == "bottom") {
    spec.fc_sizes.back() = descriptorSize(DescriptorLayout::BottomOnly);
  } else if (o.layout != "full") {
    throw InvalidArgument("unknown layout '" + o.layout + "'");
  }
  const auto shapes = layerShapes(spec);
  std::int64_t conv = 0, fc = 0;
  char line[160];
  std::snprintf(line, sizeof line, "%-8s %-18s %12s\n", "layer", "weight", "parameters");
  out << line;
  for (const auto& s : shapes) {
    std::string shape;
    for (std::size_t i = 0; i < s.weight_shape.size(); ++i) shape += (i ? "x" : "") + std::to_string(s.weight_shape[i]);
    std::snprintf(line, sizeof line, "%-8s %-18s %12lld\n", s.name.c_str(), shape.c_str(),
                  static_cast<long long>(s.parameters()));
    out << line;
    (s.name.rfind("conv", 0) == 0 ? conv : fc) += s.parameters();
  }
  out << "conv parameters: " << conv << "\n";
  out << "fc parameters: " << fc << "\n";
  out << "total trainable parameters: " << parameterCount(spec) << "\n";
  out << "float32 payload bytes: " << parameterCount(spec) * 4 << "\n";

  if (!o.write_random.empty()) {
    ensureParent(o.write_random);
    WeightBundle::random(o.seed, spec).save(o.write_random);
    out << "wrote random weights (seed " << o.seed << ") to " << o.write_random.string() << ": "
        << fs::file_size(o.write_random) << " bytes\n";
  }
  if (!o.weights.empty()) {
    const WeightBundle w = WeightBundle::load(o.weights, spec);
    std::int64_t n = 0;
    for (const auto& l : w.layers()) n += l.weight.size() + l.bias.size();
    out << "loaded " << o.weights.string() << ": " << fs::file_size(o.weights) << " bytes, " << n
        << " parameters, shapes valid\n";
  }
  return kOk;
}

int runRender(const RenderOptions& o, std::ostream& log) {
  const auto scenes = readDataset(o.dataset);
  std::map<int, std::vector<Box3D>> predicted;
  if (!o.lifted.empty())
    for (const auto& b : parseLifted(readFile(o.lifted))) predicted[b.frame].push_back(b.box);
  fs::create_directories(o.out);
  int written = 0;
  for (const auto& s : scenes) {
    if (o.frame && *o.frame != s.frame.frame) continue;
    char name[48];
    std::snprintf(name, sizeof name, "frame_%04d.svg", s.frame.frame);
    writeFileAtomic(o.out / name, renderOverlaySvg(s.frame, predicted[s.frame.frame], o.scale));
    ++written;
  }
  if (o.frame && written == 0) throw InvalidArgument("frame " + std::to_string(*o.frame) + " is not in the dataset");
  log << "rendered " << written << " frames to " << o.out.string() << "\n";
  return kOk;
}

}  // namespace roadlift::cli
