#pragma once

#include <optional>
#include <random>
#include <vector>

#include "cow/mapping.hpp"

namespace cow {

struct Frontier {
    std::vector<GridCell> cells;  // free cells with an unknown 4-neighbor
    GridCell representative;      // medoid
};

// Frontier cells clustered by 8-connectivity, ordered row-major by representative.
std::vector<Frontier> extract_frontiers(const TopDownMap& map);

// Shortest 8-connected path over free cells; the goal cell itself may be
// non-free. Deterministic tie-breaking. nullopt when unreachable.
std::optional<std::vector<GridCell>> plan_path(const TopDownMap& map, const GridCell& from,
                                               const GridCell& to);

// Nearest free cell (by path cost from `from`) adjacent to `target`, or the
// target itself when free. Used for target-driven planning.
std::optional<std::vector<GridCell>> plan_to_adjacent(const TopDownMap& map,
                                                      const GridCell& from,
                                                      const GridCell& target);

enum class ExploreStatus { Act, Complete };

struct ExploreDecision {
    ExploreStatus status = ExploreStatus::Complete;
    Action action = Action::Stop;
};

// Turn the next waypoint of a planned path into a discrete action: rotate
// until the heading error is within half a turn, then move.
Action waypoint_action(const TopDownMap& map, const Pose& est_pose,
                       const std::vector<GridCell>& path, double turn_angle);

// Greedy frontier-based exploration: replan to the cheapest frontier each step.
ExploreDecision fbe_next_action(const TopDownMap& map, const PoseEstimate& est,
                                double turn_angle);

struct ExplorationPolicy {
    virtual ~ExplorationPolicy() = default;
    // Never returns Stop; Complete signals exploration is exhausted.
    virtual ExploreDecision next_action(const TopDownMap& map, const PoseEstimate& est,
                                        std::mt19937_64& rng) = 0;
};

struct FbePolicy final : ExplorationPolicy {
    double turn_angle;
    explicit FbePolicy(double turn) : turn_angle(turn) {}
    ExploreDecision next_action(const TopDownMap& map, const PoseEstimate& est,
                                std::mt19937_64& rng) override;
};

// Ablation baseline: forward-biased random walk, never completes.
struct RandomWalkPolicy final : ExplorationPolicy {
    ExploreDecision next_action(const TopDownMap& map, const PoseEstimate& est,
                                std::mt19937_64& rng) override;
};

// Offline count-based exploration metric: +0.1 per first visit to a quantized
// location (start pose included), -0.01 per step.
double exploration_reward(const std::vector<Pose>& true_poses, double resolution);

}  // namespace cow
