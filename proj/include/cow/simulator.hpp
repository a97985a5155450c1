#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cow/geometry.hpp"
#include "cow/scene.hpp"

namespace cow {

struct AgentConfig {
    double step_size = 0.25;
    double turn_angle = deg_to_rad(30.0);
    double camera_height = 0.9;
    CameraIntrinsics intrinsics;
    double translation_noise_sigma = 0.0;
    double rotation_noise_sigma = 0.0;
    double depth_noise_sigma = 0.0;  // multiplicative, per pixel
    double max_depth = 10.0;
    double agent_radius = 0.18;
    double clearance_height = 0.2;
    double success_radius = 1.0;
    int max_steps = 500;
};

// Noise presets. RoboTHOR-style has actuation noise only, Habitat-style depth
// noise only.
AgentConfig with_noise_profile(AgentConfig cfg, const std::string& profile);

// Per-pixel instance labels; empty string = wall/floor/no hit.
struct SemanticImage {
    int width = 0;
    int height = 0;
    std::vector<std::string> ids;

    SemanticImage() = default;
    SemanticImage(int w, int h) : width(w), height(h), ids(static_cast<size_t>(w) * h) {}
    const std::string& at(int u, int v) const { return ids[static_cast<size_t>(v) * width + u]; }
    std::string& at(int u, int v) { return ids[static_cast<size_t>(v) * width + u]; }
};

// What the agent is allowed to see.
struct AgentObservation {
    DepthImage depth;
    SemanticImage semantic;
};

// Simulator-side observation; true_pose never crosses to the agent.
struct Observation {
    AgentObservation view;
    Pose true_pose;
};

// Precomputed per-cell solid intervals for raycasting.
class RenderGrid {
public:
    explicit RenderGrid(const Scene& scene);

    struct Hit {
        double t = 0.0;
        const std::string* instance = nullptr;  // null for structure/floor
    };

    // First solid intersection along origin + t*dir, t in (0, max_t].
    std::optional<Hit> raycast(const Vec3& origin, const Vec3& dir, double max_t) const;

    const Scene& scene() const { return *scene_; }

    // Cached traversability grid for one clearance height.
    const std::vector<uint8_t>& blocked(double clearance_height) const;

private:
    struct Interval {
        double z_lo, z_hi;
        int object_index;  // -1 for structure
    };
    const Scene* scene_;
    std::vector<std::vector<Interval>> cells_;
    mutable std::vector<uint8_t> blocked_cache_;
    mutable double blocked_clearance_ = -1.0;
};

struct SimulatorState {
    Pose pose;
    bool stopped = false;
};

struct StepResult {
    SimulatorState state;
    Observation observation;
    bool action_succeeded = true;
};

Observation render(const RenderGrid& grid, const Pose& pose, const AgentConfig& cfg,
                   std::mt19937_64* depth_noise_rng = nullptr);

StepResult step(const RenderGrid& grid, const SimulatorState& state, Action action,
                const AgentConfig& cfg, std::mt19937_64& rng);

// Success on Stop: within the radius of some goal instance with an unoccluded
// line of sight (hidden goals substitute their container).
bool check_success(const RenderGrid& grid, const Task& task, const Pose& pose,
                   const AgentConfig& cfg);

// Oracle shortest path (meters) from start to the nearest cell satisfying the
// success predicate. nullopt when no goal is reachable.
std::optional<double> shortest_path_length(const RenderGrid& grid, const Pose& start,
                                           const Task& task, const AgentConfig& cfg);

}  // namespace cow
