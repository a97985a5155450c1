#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cow/exploration.hpp"
#include "cow/localization.hpp"
#include "cow/mapping.hpp"
#include "cow/simulator.hpp"

namespace cow {

enum class Postprocess { FullMask, CenterPixel };

struct CowConfig {
    double tau = 0.5;            // localization threshold
    double trigger = 0.5;        // map relevance that switches to target-driven planning
    Postprocess postprocess = Postprocess::CenterPixel;
    double stop_distance = 1.0;
    int max_steps = 500;
    double map_resolution = 0.125;
    FailureDetectorConfig failure_detector;
};

enum class TerminalStatus { Stopped, BudgetExhausted };

struct StepRecord {
    int step = 0;
    Action action = Action::Stop;
    bool action_succeeded = true;
    Pose est_pose;
    Pose true_pose;
    bool localizer_fired = false;   // thresholded mask nonempty
    bool target_in_view = false;    // goal instance pixel in the semantic render
    bool fired_on_target = false;   // mask overlapped goal pixels
};

struct Trajectory {
    std::string task_id;
    std::string scene_id;
    TerminalStatus terminal = TerminalStatus::BudgetExhausted;
    std::vector<StepRecord> records;
    Pose final_true_pose;
    Pose final_est_pose;
    uint64_t seed = 0;
};

// One CoW decision against the current belief: target-driven planning once the
// map's max relevance reaches the trigger, exploration otherwise, forced Stop
// when exploration is complete with no detection.
Action cow_step(TopDownMap& map, const PoseEstimate& est, const CowConfig& cfg,
                double turn_angle, ExplorationPolicy& policy, std::mt19937_64& rng);

// When final_map is non-null it receives the belief map as the controller last
// saw it (including cells plugged after detected action failures).
Trajectory run_episode(const RenderGrid& grid, const Task& task, const CowConfig& cfg,
                       const AgentConfig& agent_cfg, Localizer& localizer,
                       ExplorationPolicy& policy, uint64_t seed,
                       TopDownMap* final_map = nullptr);

// Goal visibility helpers shared with evaluation.
bool goal_in_view(const SemanticImage& semantic, const Scene& scene, const Task& task);
bool mask_overlaps_goal(const BinaryMask& mask, const SemanticImage& semantic, const Scene& scene,
                        const Task& task);

}  // namespace cow
