#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "cow/mapping.hpp"
#include "cow/simulator.hpp"

namespace cow {

// Per-pixel goal relevance in [0, 1].
struct RelevanceMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    RelevanceMap() = default;
    RelevanceMap(int w, int h) : width(w), height(h), values(static_cast<size_t>(w) * h, 0.0) {}
    double at(int u, int v) const { return values[static_cast<size_t>(v) * width + u]; }
    double& at(int u, int v) { return values[static_cast<size_t>(v) * width + u]; }
};

struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> values;

    BinaryMask() = default;
    BinaryMask(int w, int h) : width(w), height(h), values(static_cast<size_t>(w) * h, 0) {}
    bool at(int u, int v) const { return values[static_cast<size_t>(v) * width + u] != 0; }
    void set(int u, int v, bool b) { values[static_cast<size_t>(v) * width + u] = b ? 1 : 0; }
    int popcount() const;
};

struct Localizer {
    virtual ~Localizer() = default;
    // Deterministic given the seed; never sees the true pose.
    virtual RelevanceMap localize(const AgentObservation& obs,
                                  const std::string& goal_description) = 0;
};

struct OracleLocalizerConfig {
    double p_false_negative = 0.0;  // per frame with the goal in view
    double p_false_positive = 0.0;  // per frame
    double attribute_blindness = 0.0;  // category-only matching probability
    int dilate_mask_px = 0;  // inflate detections, leaking onto neighbors
    uint64_t seed = 0;
};

// Test-harness localizer reading the semantic render. Matches the goal
// instances of a task (hidden goals match their container); with attribute
// blindness, any same-category instance fires too.
class OracleLocalizer final : public Localizer {
public:
    OracleLocalizer(const Scene& scene, const Task& task, const OracleLocalizerConfig& cfg);
    RelevanceMap localize(const AgentObservation& obs, const std::string& goal) override;

private:
    const Scene* scene_;
    OracleLocalizerConfig cfg_;
    std::vector<std::string> match_ids_;           // exact matches
    std::vector<std::string> category_match_ids_;  // category-only matches
    std::mt19937_64 rng_;
};

// Pixel true iff value >= tau (closed inequality).
BinaryMask threshold_mask(const RelevanceMap& rel, double tau);

// Keep one pixel per 8-connected component: the member nearest its centroid,
// lexicographic tie-break.
BinaryMask center_pixel_postprocess(const BinaryMask& mask);

// Back-project masked pixels through depth; per-cell relevance takes the max.
void project_relevance(TopDownMap& map, const BinaryMask& mask, const RelevanceMap& rel,
                       const DepthImage& depth, const PoseEstimate& est,
                       const CameraIntrinsics& k, double camera_height);

// Flat-text relevance map, 16-bit quantized: "relmap v1 <w> <h>" then rows.
void save_relmap(const RelevanceMap& rel, const std::string& path);
RelevanceMap load_relmap(const std::string& path);

// Precomputed relevance from <dir>/<episode_id>/<step>.relmap. Out-of-range
// values are clamped with a warning on stderr.
RelevanceMap load_precomputed(const std::string& dir, const std::string& episode_id, int step,
                              int expect_width, int expect_height);

// Localizer backed by a precomputed relevance directory.
class PrecomputedLocalizer final : public Localizer {
public:
    PrecomputedLocalizer(std::string dir, std::string episode_id)
        : dir_(std::move(dir)), episode_id_(std::move(episode_id)) {}
    RelevanceMap localize(const AgentObservation& obs, const std::string& goal) override;

private:
    std::string dir_;
    std::string episode_id_;
    int step_ = 0;
};

}  // namespace cow
