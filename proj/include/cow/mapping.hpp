#pragma once

#include <cstdint>
#include <vector>

#include "cow/geometry.hpp"
#include "cow/scene.hpp"

namespace cow {

enum class CellState : uint8_t { Unknown = 0, Free = 1, Occupied = 2 };

// Agent-side top-down belief grid. Grows on demand; origin tracks the world
// position of cell (0, 0)'s corner.
struct TopDownMap {
    double resolution = 0.125;
    double origin_x = 0.0;
    double origin_y = 0.0;
    int width = 0;
    int height = 0;
    std::vector<CellState> cells;
    std::vector<double> relevance;

    GridCell world_to_cell(double wx, double wy) const {
        return GridCell{static_cast<int>(std::floor((wx - origin_x) / resolution)),
                        static_cast<int>(std::floor((wy - origin_y) / resolution))};
    }
    double cell_center_x(int cx) const { return origin_x + (cx + 0.5) * resolution; }
    double cell_center_y(int cy) const { return origin_y + (cy + 0.5) * resolution; }
    bool in_bounds(const GridCell& c) const {
        return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height;
    }
    size_t index(const GridCell& c) const { return static_cast<size_t>(c.y) * width + c.x; }
    CellState state(const GridCell& c) const {
        return in_bounds(c) ? cells[index(c)] : CellState::Unknown;
    }

    // Expand the grid so that c is addressable, shifting the origin if needed.
    void ensure_contains(const GridCell& c);
    GridCell ensure_contains_world(double wx, double wy);

    void mark_free(const GridCell& c);      // never downgrades occupied
    void mark_occupied(const GridCell& c);
    void set_relevance_max(const GridCell& c, double value);
    double max_relevance(GridCell* argmax = nullptr) const;
    int count(CellState s) const;
};

struct PoseEstimate {
    Pose pose;  // frame W, initialized to identity
};

struct FailureDetectorConfig {
    double mu_threshold = 0.1;     // meters
    double sigma_threshold = 0.1;  // meters
};

// An action failed when successive depth frames barely differ: both the mean
// and the stddev of |prev - cur| fall below their thresholds.
bool detect_action_failure(const DepthImage& prev, const DepthImage& cur,
                           const FailureDetectorConfig& cfg);

// Concatenate the action delta unless the action failed.
PoseEstimate update_pose_estimate(const PoseEstimate& est, Action action, bool failed,
                                  double step_size, double turn_angle);

// Register one depth frame: floor-level points mark free, points below agent
// height mark occupied, and cells under each ray are carved free up to the hit.
void register_depth(TopDownMap& map, const DepthImage& depth, const PoseEstimate& est,
                    const CameraIntrinsics& k, double camera_height, double agent_height,
                    double free_height_epsilon = 0.125);

// Reset the map to unknown when frontiers exist but none is reachable.
bool reinitialize_if_stuck(TopDownMap& map, const PoseEstimate& est);

// ASCII snapshot: '#' occupied, '.' free, '?' unknown, '@' agent.
std::string render_map_ascii(const TopDownMap& map, const Pose* agent = nullptr);

}  // namespace cow
