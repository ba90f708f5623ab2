#include "roadlift/report.hpp"

#include <cstdio>

#include "roadlift/io.hpp"

namespace roadlift {

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string binName(const RangeBin& b) { return "[" + formatDouble(b.lo) + ";" + formatDouble(b.hi) + ")"; }

const char* sigmaColor(double sigma) {
  if (sigma == 0) return "#2ca02c";
  if (sigma <= 0.1) return "#ff7f0e";
  return "#d62728";
}

const char* setupDash(Setup s) {
  switch (s) {
    case Setup::Full: return "";
    case Setup::NoCenterlines: return " stroke-dasharray=\"8 4\"";
    case Setup::BottomOnly: return " stroke-dasharray=\"2 3\"";
  }
  return "";
}

}  // namespace

const std::vector<std::pair<int, int>>& boxEdges() {
  static const std::vector<std::pair<int, int>> edges = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                                         {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
  return edges;
}

std::string formatEvalCsv(const EvalReport& r) {
  std::string out = "metric,scope,value\n";
  auto row = [&](const std::string& m, const std::string& s, const std::string& v) { out += m + "," + s + "," + v + "\n"; };
  auto opt = [](const std::optional<double>& v) { return v ? fixed(*v) : std::string(); };
  for (const auto& c : r.per_class) {
    row("ap", toString(c.object_class), opt(c.ap));
    row("ground_truth", toString(c.object_class), std::to_string(c.ground_truth));
    row("detections", toString(c.object_class), std::to_string(c.detections));
    row("true_positives", toString(c.object_class), std::to_string(c.true_positives));
  }
  row("ap", "mean", opt(r.mean_ap));
  row("ap", "pooled", opt(r.pooled_ap));
  for (const auto& b : r.bins) {
    row("mean_iou_3d", binName(b), opt(b.mean_iou));
    row("pairs", binName(b), std::to_string(b.pairs));
    row("tp", binName(b), std::to_string(b.counts.tp));
    row("fp", binName(b), std::to_string(b.counts.fp));
    row("fn", binName(b), std::to_string(b.counts.fn));
  }
  row("tp", "outside", std::to_string(r.outside_bins.tp));
  row("fp", "outside", std::to_string(r.outside_bins.fp));
  row("fn", "outside", std::to_string(r.outside_bins.fn));
  row("tp", "total", std::to_string(r.totals.tp));
  row("fp", "total", std::to_string(r.totals.fp));
  row("fn", "total", std::to_string(r.totals.fn));
  return out;
}

std::string formatEvalText(const EvalReport& r) {
  auto pct = [](const std::optional<double>& v) { return v ? fixed(*v * 100, 3) + "%" : std::string("n/a"); };
  std::string out;
  for (const auto& c : r.per_class)
    out += "AP " + toString(c.object_class) + ": " + pct(c.ap) + " (" + std::to_string(c.true_positives) + "/" +
           std::to_string(c.ground_truth) + " matched, " + std::to_string(c.detections) + " detections)\n";
  out += "AP mean over classes: " + pct(r.mean_ap) + "\n";
  out += "AP pooled: " + pct(r.pooled_ap) + "\n";
  out += "range bin        mean 3D IoU  pairs     TP     FP     FN\n";
  for (const auto& b : r.bins) {
    char line[160];
    std::snprintf(line, sizeof line, "%-16s %11s %6d %6d %6d %6d\n", binName(b).c_str(),
                  b.mean_iou ? fixed(*b.mean_iou, 4).c_str() : "-", b.pairs, b.counts.tp, b.counts.fp, b.counts.fn);
    out += line;
  }
  return out;
}

std::string formatBinsSvg(const AblationTable& table) {
  const double w = 640, h = 360, left = 60, right = 20, top = 20, bottom = 50;
  std::vector<double> edges;
  for (const auto& c : table.cells) {
    if (!c.report.bins.empty()) {
      for (const auto& b : c.report.bins) edges.push_back(b.lo);
      edges.push_back(c.report.bins.back().hi);
      break;
    }
  }
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(w, 0) + "\" height=\"" +
                    fixed(h, 0) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (edges.size() < 2) return out + "</svg>\n";
  const double x0 = edges.front(), x1 = edges.back();
  auto px = [&](double range) { return left + (range - x0) / (x1 - x0) * (w - left - right); };
  auto py = [&](double iou) { return top + (1 - iou) * (h - top - bottom); };
  out += "<line x1=\"" + fixed(left, 1) + "\" y1=\"" + fixed(py(0), 1) + "\" x2=\"" + fixed(w - right, 1) +
         "\" y2=\"" + fixed(py(0), 1) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + fixed(left, 1) + "\" y1=\"" + fixed(py(0), 1) + "\" x2=\"" + fixed(left, 1) + "\" y2=\"" +
         fixed(py(1), 1) + "\" stroke=\"black\"/>\n";
  for (double e : edges)
    out += "<text x=\"" + fixed(px(e), 1) + "\" y=\"" + fixed(py(0) + 16, 1) + "\" text-anchor=\"middle\">" +
           formatDouble(e) + "</text>\n";
  for (int k = 0; k <= 4; ++k)
    out += "<text x=\"" + fixed(left - 6, 1) + "\" y=\"" + fixed(py(k / 4.0) + 4, 1) + "\" text-anchor=\"end\">" +
           fixed(k / 4.0, 2) + "</text>\n";
  out += "<text x=\"" + fixed((left + w - right) / 2, 1) + "\" y=\"" + fixed(h - 10, 1) +
         "\" text-anchor=\"middle\">range (m)</text>\n";
  for (const auto& c : table.cells) {
    std::string pts;
    for (const auto& b : c.report.bins) {
      if (!b.mean_iou) continue;
      pts += fixed(px((b.lo + b.hi) / 2), 1) + "," + fixed(py(*b.mean_iou), 1) + " ";
    }
    if (pts.empty()) continue;
    out += "<polyline fill=\"none\" stroke=\"" + std::string(sigmaColor(c.map_sigma)) + "\" stroke-width=\"2\"" +
           setupDash(c.setup) + " points=\"" + pts + "\"><title>" + setupLabel(c.setup) + ", " +
           columnLabel(c.map_sigma) + "</title></polyline>\n";
  }
  return out + "</svg>\n";
}

std::string renderOverlaySvg(const LabeledFrame& frame, const std::vector<Box3D>& predictions, double scale) {
  const Camera& cam = frame.camera;
  const double w = cam.image_width * scale, h = cam.image_height * scale;
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(w, 1) + "\" height=\"" +
                    fixed(h, 1) + "\" viewBox=\"0 0 " + fixed(w, 1) + " " + fixed(h, 1) + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + fixed(w, 1) + "\" height=\"" + fixed(h, 1) +
         "\" fill=\"#202020\" stroke=\"#808080\"/>\n";
  auto wire = [&](const Box3D& box, const char* color, const std::string& id) {
    const auto c = boxCorners(box);
    std::string g = "<g stroke=\"" + std::string(color) + "\" stroke-width=\"1\" fill=\"none\" data-id=\"" + id + "\">\n";
    for (const auto& [a, b] : boxEdges()) {
      const Vec3d pa = cam.toCamera(c[a]), pb = cam.toCamera(c[b]);
      if (pa.z() <= 1e-6 || pb.z() <= 1e-6) continue;
      const Vec2d ua = projectCameraPoint(cam, pa) * scale, ub = projectCameraPoint(cam, pb) * scale;
      g += "<line x1=\"" + fixed(ua.x(), 2) + "\" y1=\"" + fixed(ua.y(), 2) + "\" x2=\"" + fixed(ub.x(), 2) +
           "\" y2=\"" + fixed(ub.y(), 2) + "\"/>\n";
    }
    return g + "</g>\n";
  };
  for (const auto& o : frame.objects) out += wire(o.box, "#00c000", "gt-" + std::to_string(o.object_id));
  for (std::size_t i = 0; i < predictions.size(); ++i)
    out += wire(predictions[i], "#ff0000", "pred-" + std::to_string(i));
  return out + "</svg>\n";
}

}  // namespace roadlift
