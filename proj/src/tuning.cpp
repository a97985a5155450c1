#include "cow/tuning.hpp"

#include <stdexcept>

namespace cow {

void score_frame(const std::map<std::string, BinaryMask>& predictions, const LabeledFrame& frame,
                 std::map<std::string, DetectionCounts>& counts) {
    for (const auto& [category, gt] : frame.gt_masks) {
        auto it = predictions.find(category);
        long pred_count = 0, inter = 0;
        if (it != predictions.end()) {
            const BinaryMask& pred = it->second;
            if (pred.width != gt.width || pred.height != gt.height)
                throw std::invalid_argument("prediction/GT mask dimension mismatch");
            for (size_t i = 0; i < pred.values.size(); ++i) {
                if (pred.values[i]) {
                    ++pred_count;
                    if (gt.values[i]) ++inter;
                }
            }
        }
        auto& c = counts[category];
        if (pred_count == 0) {
            ++c.fn;
        } else {
            const double score = static_cast<double>(inter) / static_cast<double>(pred_count);
            if (score > 0.5)
                ++c.tp;
            else
                ++c.fp;
        }
    }
    for (const auto& category : frame.absent_categories) {
        auto it = predictions.find(category);
        if (it == predictions.end()) continue;
        if (it->second.popcount() > 0) ++counts[category].fp;
    }
}

double macro_f1(const std::map<std::string, DetectionCounts>& counts) {
    if (counts.empty()) throw std::invalid_argument("macro_f1 over empty category set");
    double sum = 0.0;
    for (const auto& [category, c] : counts) {
        const double denom = c.tp + 0.5 * (c.fp + c.fn);
        sum += denom > 0.0 ? c.tp / denom : 0.0;
    }
    return sum / static_cast<double>(counts.size());
}

GridSearchResult grid_search_threshold(const std::vector<LabeledFrame>& frames,
                                       const FrameScorer& scorer,
                                       const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("empty threshold grid");
    GridSearchResult best{grid.front(), -1.0};
    for (double tau : grid) {
        std::map<std::string, DetectionCounts> counts;
        for (const auto& frame : frames) {
            std::map<std::string, BinaryMask> predictions;
            for (const auto& [category, gt] : frame.gt_masks)
                predictions[category] = threshold_mask(scorer(frame, category), tau);
            for (const auto& category : frame.absent_categories)
                predictions[category] = threshold_mask(scorer(frame, category), tau);
            score_frame(predictions, frame, counts);
        }
        const double f1 = macro_f1(counts);
        if (f1 > best.f1) best = GridSearchResult{tau, f1};
    }
    return best;
}

std::vector<double> default_tau_grid() {
    std::vector<double> grid;
    for (int k = 1; k <= 7; ++k) grid.push_back(0.125 * k);
    grid.push_back(0.95);
    return grid;
}

}  // namespace cow
