#pragma once

#include <string>
#include <vector>

#include "roadlift/ablation.hpp"
#include "roadlift/eval.hpp"

namespace roadlift {

// Long-format CSV: metric,scope,value.
std::string formatEvalCsv(const EvalReport& report);
std::string formatEvalText(const EvalReport& report);

// Mean 3D IoU per range bin, one polyline per cell of the table.
std::string formatBinsSvg(const AblationTable& table);

// Wireframes of ground truth (green) and predictions (red) projected into the frame,
// drawn at `scale` image pixels per SVG unit.
std::string renderOverlaySvg(const LabeledFrame& frame, const std::vector<Box3D>& predictions, double scale = 0.25);

// The 12 box edges as corner index pairs.
const std::vector<std::pair<int, int>>& boxEdges();

}  // namespace roadlift
