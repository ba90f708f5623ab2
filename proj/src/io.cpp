#include "roadlift/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "roadlift/error.hpp"

namespace roadlift {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kSnippetMagic[4] = {'R', 'L', 'S', 'N'};

std::vector<std::string> splitWhitespace(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

template <typename T>
T parseInt(const std::string& token, const std::string& context) {
  T v{};
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size())
    throw FormatError(context + ": expected an integer, got '" + token + "'");
  return v;
}

json vec3Json(const Vec3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3d vec3FromJson(const json& j) {
  if (!j.is_array() || j.size() != 3) throw FormatError("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void expectFormat(const json& j, const std::string& format) {
  if (!j.is_object() || j.value("format", "") != format) throw FormatError("not a " + format + " document");
  checkVersion(j.value("version", ""), format);
}

json header(const std::string& format) { return {{"format", format}, {"version", formatVersion()}}; }

std::string sceneDirName(int frame) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%04d", frame);
  return buf;
}

template <typename T>
void appendRaw(std::string& out, const T& v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

std::string formatVersion() { return std::to_string(kFormatMajor) + "." + std::to_string(kFormatMinor); }

void checkVersion(const std::string& version, const std::string& what) {
  const auto dot = version.find('.');
  if (version.empty() || dot == std::string::npos) throw FormatError(what + ": missing or malformed version");
  int major = 0;
  const auto [ptr, ec] = std::from_chars(version.data(), version.data() + dot, major);
  if (ec != std::errc() || ptr != version.data() + dot) throw FormatError(what + ": malformed version " + version);
  if (major != kFormatMajor) throw FormatError(what + ": unsupported major version " + version);
}

std::string formatDouble(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw FormatError("cannot format number");
  return std::string(buf, ptr);
}

double parseDouble(const std::string& token, const std::string& context) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size())
    throw FormatError(context + ": expected a number, got '" + token + "'");
  return v;
}

void writeFileAtomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw FormatError("failed writing " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

std::string readFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json cameraToJson(const Camera& c) {
  json j = header("roadlift-camera");
  j["fx"] = c.fx;
  j["fy"] = c.fy;
  j["cx"] = c.cx;
  j["cy"] = c.cy;
  j["width"] = c.image_width;
  j["height"] = c.image_height;
  json rot = json::array();
  for (int r = 0; r < 3; ++r) rot.push_back({c.rotation(r, 0), c.rotation(r, 1), c.rotation(r, 2)});
  j["rotation"] = rot;
  j["translation"] = vec3Json(c.translation);
  return j;
}

Camera cameraFromJson(const json& j) {
  expectFormat(j, "roadlift-camera");
  try {
    Camera c;
    c.fx = j.at("fx").get<double>();
    c.fy = j.at("fy").get<double>();
    c.cx = j.at("cx").get<double>();
    c.cy = j.at("cy").get<double>();
    c.image_width = j.at("width").get<int>();
    c.image_height = j.at("height").get<int>();
    const json& rot = j.at("rotation");
    if (!rot.is_array() || rot.size() != 3) throw FormatError("camera rotation must be 3x3");
    for (int r = 0; r < 3; ++r) c.rotation.row(r) = vec3FromJson(rot[r]).transpose();
    c.translation = vec3FromJson(j.at("translation"));
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("camera: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("camera: ") + e.what());
  }
}

std::string emitTin(const TinMap& map) {
  std::string out = "# roadlift-tin " + formatVersion() + "\n";
  for (const auto& v : map.vertices())
    out += "v " + formatDouble(v.x()) + " " + formatDouble(v.y()) + " " + formatDouble(v.z()) + "\n";
  for (const auto& t : map.triangles())
    out += "f " + std::to_string(t[0] + 1) + " " + std::to_string(t[1] + 1) + " " + std::to_string(t[2] + 1) + "\n";
  return out;
}

TinMap parseTin(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<Vec3d> vertices;
  std::vector<Eigen::Vector3i> triangles;
  bool versioned = false;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    const auto tok = splitWhitespace(line);
    const std::string ctx = "tin line " + std::to_string(lineno);
    if (tok.empty()) continue;
    if (tok[0] == "#") {
      if (tok.size() >= 3 && tok[1] == "roadlift-tin") {
        checkVersion(tok[2], "tin");
        versioned = true;
      }
      continue;
    }
    if (tok[0] == "v") {
      if (tok.size() != 4) throw FormatError(ctx + ": vertex needs three coordinates");
      vertices.emplace_back(parseDouble(tok[1], ctx), parseDouble(tok[2], ctx), parseDouble(tok[3], ctx));
    } else if (tok[0] == "f") {
      if (tok.size() != 4) throw FormatError(ctx + ": face needs three indices");
      Eigen::Vector3i f;
      for (int k = 0; k < 3; ++k) f[k] = parseInt<int>(tok[k + 1], ctx) - 1;
      triangles.push_back(f);
    } else {
      throw FormatError(ctx + ": unknown record '" + tok[0] + "'");
    }
  }
  if (!versioned) throw FormatError("tin: missing version header");
  try {
    return TinMap(std::move(vertices), std::move(triangles));
  } catch (const DegenerateInput& e) {
    throw FormatError(std::string("tin: ") + e.what());
  }
}

json lanesToJson(const LaneMap& lanes) {
  json j = header("roadlift-lanes");
  json arr = json::array();
  for (const auto& lane : lanes.lanes()) {
    json pts = json::array();
    for (const auto& p : lane.points) pts.push_back(vec3Json(p));
    arr.push_back({{"id", lane.id}, {"points", pts}});
  }
  j["lanes"] = arr;
  return j;
}

LaneMap lanesFromJson(const json& j) {
  expectFormat(j, "roadlift-lanes");
  try {
    std::vector<Lane> lanes;
    for (const auto& l : j.at("lanes")) {
      Lane lane;
      lane.id = l.at("id").get<int>();
      for (const auto& p : l.at("points")) lane.points.push_back(vec3FromJson(p));
      lanes.push_back(std::move(lane));
    }
    return LaneMap(std::move(lanes));
  } catch (const json::exception& e) {
    throw FormatError(std::string("lanes: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("lanes: ") + e.what());
  }
}

std::string emitLabels(const std::vector<LabeledObject>& objects) {
  std::string out = "# roadlift-labels " + formatVersion() + "\n";
  for (const auto& o : objects) {
    const Box3D& b = o.box;
    const double fields[] = {o.truncation,  static_cast<double>(o.occlusion),
                             o.alpha,       o.box2d.u_min,
                             o.box2d.v_min, o.box2d.u_max,
                             o.box2d.v_max, b.size.height,
                             b.size.width,  b.size.length,
                             b.center.x(),  b.center.y(),
                             b.center.z(),  b.rotation.yaw,
                             1.0,           b.rotation.pitch,
                             b.rotation.roll};
    out += toString(o.object_class);
    for (double f : fields) out += " " + formatDouble(f);
    out += " " + (o.model_name.empty() ? std::string("unknown") : o.model_name) + "\n";
  }
  return out;
}

std::vector<LabeledObject> parseLabels(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<LabeledObject> out;
  bool versioned = false;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    const auto tok = splitWhitespace(line);
    const std::string ctx = "labels line " + std::to_string(lineno);
    if (tok.empty()) continue;
    if (tok[0] == "#") {
      if (tok.size() >= 3 && tok[1] == "roadlift-labels") {
        checkVersion(tok[2], "labels");
        versioned = true;
      }
      continue;
    }
    if (tok.size() != 19) throw FormatError(ctx + ": expected 19 fields, got " + std::to_string(tok.size()));
    LabeledObject o;
    o.object_id = static_cast<int>(out.size());
    o.object_class = parseObjectClass(tok[0]);
    auto num = [&](int i) { return parseDouble(tok[i], ctx); };
    o.truncation = num(1);
    o.occlusion = parseInt<int>(tok[2], ctx);
    o.alpha = num(3);
    o.box2d = {num(4), num(5), num(6), num(7)};
    o.box.size.height = num(8);
    o.box.size.width = num(9);
    o.box.size.length = num(10);
    o.box.center = {num(11), num(12), num(13)};
    o.box.rotation.yaw = num(14);
    o.box.rotation.pitch = num(16);
    o.box.rotation.roll = num(17);
    o.model_name = tok[18];
    out.push_back(std::move(o));
  }
  if (!versioned) throw FormatError("labels: missing version header");
  return out;
}

namespace {

std::string layoutName(DescriptorLayout l) { return l == DescriptorLayout::Full ? "full" : "bottom"; }

DescriptorLayout parseLayout(const std::string& s) {
  if (s == "full") return DescriptorLayout::Full;
  if (s == "bottom") return DescriptorLayout::BottomOnly;
  throw FormatError("unknown descriptor layout '" + s + "'");
}

}  // namespace

std::string emitDetections(const DetectionsHeader& h, const std::vector<Detection>& detections) {
  json head = header("roadlift-detections");
  head["layout"] = layoutName(h.layout);
  head["source"] = h.source;
  head["fields"] = {"frame", "object_id", "class", "box2d", "descriptor", "confidence"};
  std::string out = head.dump() + "\n";
  for (const auto& d : detections) {
    if (d.descriptor.layout != h.layout) throw InvalidArgument("detection layout differs from the file header");
    json j;
    j["frame"] = d.frame;
    j["object_id"] = d.object_id;
    j["class"] = toString(d.object_class);
    j["box2d"] = {d.box2d.u_min, d.box2d.v_min, d.box2d.u_max, d.box2d.v_max};
    j["descriptor"] = d.descriptor.values;
    j["confidence"] = d.confidence;
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<Detection> parseDetections(const std::string& text, DetectionsHeader* header_out) {
  std::istringstream in(text);
  std::string line;
  std::vector<Detection> out;
  DetectionsHeader h;
  bool have_header = false;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string ctx = "detections line " + std::to_string(lineno);
    try {
      const json j = json::parse(line);
      if (!have_header) {
        expectFormat(j, "roadlift-detections");
        h.layout = parseLayout(j.at("layout").get<std::string>());
        h.source = j.value("source", "");
        have_header = true;
        continue;
      }
      Detection d;
      d.frame = j.at("frame").get<int>();
      d.object_id = j.at("object_id").get<int>();
      d.object_class = parseObjectClass(j.at("class").get<std::string>());
      const auto& b = j.at("box2d");
      if (!b.is_array() || b.size() != 4) throw FormatError("box2d needs four numbers");
      d.box2d = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
      if (!d.box2d.valid()) throw FormatError("box2d is empty");
      d.descriptor.layout = h.layout;
      d.descriptor.values = j.at("descriptor").get<std::vector<double>>();
      if (static_cast<int>(d.descriptor.values.size()) != descriptorSize(h.layout))
        throw FormatError("descriptor has " + std::to_string(d.descriptor.values.size()) + " values, expected " +
                          std::to_string(descriptorSize(h.layout)));
      d.confidence = j.at("confidence").get<double>();
      if (!(d.confidence >= 0 && d.confidence <= 1)) throw FormatError("confidence outside [0, 1]");
      out.push_back(std::move(d));
    } catch (const json::exception& e) {
      throw FormatError(ctx + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError(ctx + ": " + e.what());
    }
  }
  if (!have_header && !text.empty() && text.find_first_not_of(" \t\r\n") != std::string::npos)
    throw FormatError("detections: missing header");
  if (header_out) *header_out = h;
  return out;
}

json boxToJson(const Box3D& b) {
  return {{"center", vec3Json(b.center)},
          {"size", {{"width", b.size.width}, {"length", b.size.length}, {"height", b.size.height}}},
          {"rotation", {{"yaw", b.rotation.yaw}, {"pitch", b.rotation.pitch}, {"roll", b.rotation.roll}}}};
}

Box3D boxFromJson(const json& j) {
  Box3D b;
  b.center = vec3FromJson(j.at("center"));
  const auto& s = j.at("size");
  b.size.width = s.at("width").get<double>();
  b.size.length = s.at("length").get<double>();
  b.size.height = s.at("height").get<double>();
  const auto& r = j.at("rotation");
  b.rotation.yaw = r.at("yaw").get<double>();
  b.rotation.pitch = r.at("pitch").get<double>();
  b.rotation.roll = r.at("roll").get<double>();
  return b;
}

std::string emitLifted(const json& extra, const std::vector<LiftRecord>& records) {
  json head = header("roadlift-lifted");
  for (auto it = extra.begin(); it != extra.end(); ++it)
    if (it.key() != "format" && it.key() != "version") head[it.key()] = it.value();
  std::string out = head.dump() + "\n";
  for (const auto& r : records) {
    const Detection& d = r.detection;
    json j;
    j["frame"] = d.frame;
    j["object_id"] = d.object_id;
    j["class"] = toString(d.object_class);
    j["confidence"] = d.confidence;
    j["ok"] = r.result.has_value();
    if (r.result) {
      const LiftResult& l = *r.result;
      j["box"] = boxToJson(l.box);
      j["surface_normal"] = vec3Json(l.surface_normal);
      j["flags"] = {{"ray_hit", l.flags.ray_hit},
                    {"fallback", l.flags.fallback},
                    {"closure_from_other_triple", l.flags.closure_from_other_triple},
                    {"dims_completion", l.flags.dims_completion},
                    {"plane_extension", l.flags.plane_extension}};
      if (l.closure_residual) j["closure_residual"] = *l.closure_residual;
      if (l.dim_deltas) j["dim_deltas"] = vec3Json(*l.dim_deltas);
    } else {
      j["error"] = r.error;
    }
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<ScoredBox> parseLifted(const std::string& text, json* header_out) {
  std::istringstream in(text);
  std::string line;
  std::vector<ScoredBox> out;
  bool have_header = false;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string ctx = "lifted line " + std::to_string(lineno);
    try {
      const json j = json::parse(line);
      if (!have_header) {
        expectFormat(j, "roadlift-lifted");
        if (header_out) *header_out = j;
        have_header = true;
        continue;
      }
      if (!j.at("ok").get<bool>()) continue;
      ScoredBox s;
      s.frame = j.at("frame").get<int>();
      s.object_id = j.at("object_id").get<int>();
      s.object_class = parseObjectClass(j.at("class").get<std::string>());
      s.confidence = j.at("confidence").get<double>();
      s.box = boxFromJson(j.at("box"));
      out.push_back(s);
    } catch (const json::exception& e) {
      throw FormatError(ctx + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError(ctx + ": " + e.what());
    }
  }
  if (!have_header) throw FormatError("lifted boxes: missing header");
  return out;
}

json profileToJson(const RoadProfile& p) {
  return {{"kind", toString(p.kind)},
          {"parameter", p.parameter},
          {"apex_x", p.apex_x},
          {"extent", {p.x_min, p.y_min, p.x_max, p.y_max}},
          {"sample_spacing", p.sample_spacing}};
}

RoadProfile profileFromJson(const json& j) {
  RoadProfile p;
  try {
    p.kind = parseProfileKind(j.at("kind").get<std::string>());
    p.parameter = j.at("parameter").get<double>();
    p.apex_x = j.at("apex_x").get<double>();
    const auto& e = j.at("extent");
    p.x_min = e.at(0).get<double>();
    p.y_min = e.at(1).get<double>();
    p.x_max = e.at(2).get<double>();
    p.y_max = e.at(3).get<double>();
    p.sample_spacing = j.at("sample_spacing").get<double>();
  } catch (const json::exception& ex) {
    throw FormatError(std::string("profile: ") + ex.what());
  } catch (const InvalidArgument& ex) {
    throw FormatError(std::string("profile: ") + ex.what());
  }
  return p;
}

std::string emitSnippets(const std::vector<std::pair<int, FeatureMap>>& snippets) {
  std::string out(kSnippetMagic, 4);
  appendRaw(out, static_cast<std::uint16_t>(kFormatMajor));
  appendRaw(out, static_cast<std::uint16_t>(kFormatMinor));
  appendRaw(out, static_cast<std::uint32_t>(snippets.size()));
  for (const auto& [id, fm] : snippets) {
    appendRaw(out, static_cast<std::uint32_t>(id));
    for (int c = 0; c < fm.channels; ++c)
      for (int i = 0; i < fm.height * fm.width; ++i) appendRaw(out, fm.data(c, i));
  }
  return out;
}

void writeDataset(const fs::path& dir, const BenchmarkSpec& spec, const std::vector<Scene>& scenes,
                  bool with_snippets) {
  fs::create_directories(dir);
  std::error_code ec;
  fs::remove(dir / "manifest.json", ec);
  json manifest = header("roadlift-dataset");
  manifest["seed"] = spec.seed;
  manifest["profile"] = profileToJson(spec.profile);
  manifest["scenes_per_pose"] = spec.scenes_per_pose;
  manifest["vehicles_per_scene"] = spec.vehicles_per_scene;
  manifest["heading_jitter"] = spec.heading_jitter;
  json entries = json::array();
  for (const auto& s : scenes) {
    const std::string name = sceneDirName(s.frame.frame);
    const fs::path sd = dir / name;
    fs::create_directories(sd);
    writeFileAtomic(sd / "camera.json", cameraToJson(s.frame.camera).dump(2) + "\n");
    writeFileAtomic(sd / "tin.obj", emitTin(s.map));
    writeFileAtomic(sd / "lanes.json", lanesToJson(s.lanes).dump() + "\n");
    writeFileAtomic(sd / "labels.txt", emitLabels(s.frame.objects));
    if (with_snippets) {
      const auto polylines = projectLanes(s.lanes, s.frame.camera);
      std::vector<std::pair<int, FeatureMap>> snippets;
      for (const auto& o : s.frame.objects) snippets.emplace_back(o.object_id, snippetTensor(o.box2d, o.object_id, polylines));
      writeFileAtomic(sd / "snippets.bin", emitSnippets(snippets));
    }
    entries.push_back({{"frame", s.frame.frame},
                       {"dir", name},
                       {"seed", s.spec.seed},
                       {"pose", {{"lateral", s.spec.pose.lateral}, {"yaw", s.spec.pose.yaw}, {"held_out", s.spec.pose.held_out}}},
                       {"objects", s.frame.objects.size()}});
  }
  manifest["scenes"] = entries;
  writeFileAtomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

json readManifest(const fs::path& dir) {
  json manifest;
  try {
    manifest = json::parse(readFile(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  expectFormat(manifest, "roadlift-dataset");
  return manifest;
}

std::vector<Scene> readDataset(const fs::path& dir) {
  const json manifest = readManifest(dir);
  const RoadProfile profile = profileFromJson(manifest.at("profile"));
  std::vector<Scene> scenes;
  try {
    for (const auto& e : manifest.at("scenes")) {
      const fs::path sd = dir / e.at("dir").get<std::string>();
      SceneSpec spec;
      spec.profile = profile;
      spec.frame = e.at("frame").get<int>();
      spec.seed = e.at("seed").get<std::uint64_t>();
      spec.pose.lateral = e.at("pose").at("lateral").get<double>();
      spec.pose.yaw = e.at("pose").at("yaw").get<double>();
      spec.pose.held_out = e.at("pose").at("held_out").get<bool>();
      LabeledFrame frame;
      frame.frame = spec.frame;
      frame.camera = cameraFromJson(json::parse(readFile(sd / "camera.json")));
      frame.objects = parseLabels(readFile(sd / "labels.txt"));
      scenes.push_back(Scene{spec, parseTin(readFile(sd / "tin.obj")),
                             lanesFromJson(json::parse(readFile(sd / "lanes.json"))), std::move(frame)});
    }
  } catch (const json::exception& ex) {
    throw FormatError(std::string("dataset: ") + ex.what());
  }
  return scenes;
}

}  // namespace roadlift
