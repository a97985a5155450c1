#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "cow/localization.hpp"

namespace cow {

// One tuning frame: which categories appear, and their ground-truth masks.
struct LabeledFrame {
    AgentObservation observation;
    std::map<std::string, BinaryMask> gt_masks;   // categories present (O+)
    std::vector<std::string> absent_categories;   // O-
};

struct DetectionCounts {
    int tp = 0;
    int fp = 0;
    int fn = 0;
};

// Lenient overlap rule: TP when |pred ∩ GT| / |pred| > 0.5 on a present
// category, FP when the overlap score is in (0, 0.5] or the prediction is
// entirely off-target, FN when the prediction is empty; any prediction pixel
// on an absent category is an FP.
void score_frame(const std::map<std::string, BinaryMask>& predictions, const LabeledFrame& frame,
                 std::map<std::string, DetectionCounts>& counts);

// Per-category F1 = TP / (TP + 0.5 (FP + FN)), averaged unweighted. A category
// with no counts at all contributes 0.
double macro_f1(const std::map<std::string, DetectionCounts>& counts);

// Relevance scorer for a (frame, category) pair; thresholded at each tau.
using FrameScorer = std::function<RelevanceMap(const LabeledFrame&, const std::string& category)>;

struct GridSearchResult {
    double tau = 0.0;
    double f1 = 0.0;
};

// Evaluate macro F1 at each tau over all frames and both present and absent
// categories; argmax, lowest tau on ties.
GridSearchResult grid_search_threshold(const std::vector<LabeledFrame>& frames,
                                       const FrameScorer& scorer,
                                       const std::vector<double>& grid);

// Default grid {0.125 k : k = 1..7} plus 0.95.
std::vector<double> default_tau_grid();

}  // namespace cow
