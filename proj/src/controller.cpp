#include "cow/controller.hpp"

#include <cmath>
#include <set>

namespace cow {

namespace {

// Ids whose pixels count as "seeing" the goal; hidden goals are represented
// by their container.
std::set<std::string> visible_goal_ids(const Scene& scene, const Task& task) {
    std::set<std::string> ids;
    for (const auto& gid : task.goal_instance_ids) {
        const ObjectSpec* goal = scene.find_object(gid);
        if (!goal) continue;
        if (goal->hidden() && goal->hidden_in_or_under)
            ids.insert(*goal->hidden_in_or_under);
        else
            ids.insert(gid);
    }
    return ids;
}

constexpr double kStopMargin = 0.5;  // fraction of stop_distance; the peak sits
                                     // on the target's surface, so stop close
                                     // enough that the object's center is still
                                     // within the radius

}  // namespace

bool goal_in_view(const SemanticImage& semantic, const Scene& scene, const Task& task) {
    const auto ids = visible_goal_ids(scene, task);
    for (const auto& id : semantic.ids)
        if (!id.empty() && ids.count(id)) return true;
    return false;
}

bool mask_overlaps_goal(const BinaryMask& mask, const SemanticImage& semantic, const Scene& scene,
                        const Task& task) {
    const auto ids = visible_goal_ids(scene, task);
    for (int v = 0; v < mask.height; ++v)
        for (int u = 0; u < mask.width; ++u)
            if (mask.at(u, v) && ids.count(semantic.at(u, v))) return true;
    return false;
}

Action cow_step(TopDownMap& map, const PoseEstimate& est, const CowConfig& cfg,
                double turn_angle, ExplorationPolicy& policy, std::mt19937_64& rng) {
    GridCell agent = map.world_to_cell(est.pose.x, est.pose.y);
    map.ensure_contains(agent);
    agent = map.world_to_cell(est.pose.x, est.pose.y);
    // The agent stands here, whatever depth said about this cell.
    map.cells[map.index(agent)] = CellState::Free;

    GridCell target{0, 0};
    const double max_rel = map.max_relevance(&target);
    if (max_rel >= cfg.trigger) {
        const double dx = map.cell_center_x(target.x) - est.pose.x;
        const double dy = map.cell_center_y(target.y) - est.pose.y;
        if (std::sqrt(dx * dx + dy * dy) <= cfg.stop_distance * kStopMargin) return Action::Stop;
        const double dist = std::sqrt(dx * dx + dy * dy);
        auto path = plan_to_adjacent(map, agent, target);
        if (path) {
            if (path->size() < 2) return Action::Stop;  // already at the nearest approach
            return waypoint_action(map, est.pose, *path, turn_angle);
        }
        // No believed-free approach is left (e.g. failure plugs sealed it).
        // Already inside the stop distance: this is as close as the agent can
        // get, so commit. Otherwise keep exploring for another way around.
        if (dist <= cfg.stop_distance) return Action::Stop;
    }
    auto decision = policy.next_action(map, est, rng);
    if (decision.status == ExploreStatus::Complete) return Action::Stop;
    return decision.action;
}

Trajectory run_episode(const RenderGrid& grid, const Task& task, const CowConfig& cfg,
                       const AgentConfig& agent_cfg, Localizer& localizer,
                       ExplorationPolicy& policy, uint64_t seed, TopDownMap* final_map) {
    Trajectory traj;
    traj.task_id = task.id;
    traj.scene_id = grid.scene().id;
    traj.seed = seed;

    std::mt19937_64 rng(seed);
    SimulatorState state{task.start_pose, false};
    TopDownMap map;
    map.resolution = cfg.map_resolution;
    PoseEstimate est;  // frame W anchored at the start pose

    std::mt19937_64* depth_rng = agent_cfg.depth_noise_sigma > 0.0 ? &rng : nullptr;
    Observation obs = render(grid, state.pose, agent_cfg, depth_rng);
    std::vector<std::pair<double, double>> plugs;  // frame-W cells plugged on failure
    constexpr int kMaxMapResets = 2;
    int resets = 0;
    DepthImage prev_depth;
    Action last_action = Action::Stop;
    bool have_last = false;

    for (int t = 0; t < cfg.max_steps; ++t) {
        RelevanceMap rel = localizer.localize(obs.view, task.goal_description);
        BinaryMask mask = threshold_mask(rel, cfg.tau);
        if (cfg.postprocess == Postprocess::CenterPixel) mask = center_pixel_postprocess(mask);

        bool failed = false;
        if (have_last && last_action == Action::MoveForward)
            failed = detect_action_failure(prev_depth, obs.view.depth, cfg.failure_detector);
        if (have_last)
            est = update_pose_estimate(est, last_action, failed, agent_cfg.step_size,
                                       agent_cfg.turn_angle);
        if (failed) {
            // The obstacle that stopped us is invisible to depth registration
            // (below the field of view or inside the swept disc); make the
            // intended destination untraversable so planning routes around it.
            // A plug the width of the agent keeps replanned paths from
            // squeezing past the same obstacle.
            for (double fwd : {map.resolution, agent_cfg.step_size})
                for (int lat = -1; lat <= 1; ++lat) {
                    const Pose p = compose(est.pose, Pose{fwd, lat * map.resolution, 0.0});
                    plugs.emplace_back(p.x, p.y);
                    map.mark_occupied(map.ensure_contains_world(p.x, p.y));
                }
        }

        register_depth(map, obs.view.depth, est, agent_cfg.intrinsics, agent_cfg.camera_height,
                       agent_cfg.camera_height);
        // The agent's collision disc spans a 3x3 block of map cells; mark the
        // whole footprint traversable (sticky occupancy still wins) so the
        // trail through the camera's near-field blind zone is wider than one
        // cell and a failure plug cannot seal the region behind it.
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
                map.mark_free(map.ensure_contains_world(est.pose.x + dx * map.resolution,
                                                        est.pose.y + dy * map.resolution));
        project_relevance(map, mask, rel, obs.view.depth, est, agent_cfg.intrinsics,
                          agent_cfg.camera_height);
        // A bounded number of map resets recovers from registration artifacts;
        // past that, unreachable frontiers mean exploration is genuinely done
        // and the policy should be allowed to report completion.
        if (resets < kMaxMapResets && reinitialize_if_stuck(map, est)) {
            ++resets;
            // A fresh map forgets the plugs; without them the agent would
            // retry the same physically blocked route and reset forever.
            for (const auto& [px, py] : plugs)
                map.mark_occupied(map.ensure_contains_world(px, py));
        }

        StepRecord rec;
        rec.step = t;
        rec.localizer_fired = mask.popcount() > 0;
        rec.target_in_view = goal_in_view(obs.view.semantic, grid.scene(), task);
        rec.fired_on_target = mask_overlaps_goal(mask, obs.view.semantic, grid.scene(), task);
        rec.est_pose = est.pose;

        const Action action = cow_step(map, est, cfg, agent_cfg.turn_angle, policy, rng);
        rec.action = action;
        if (action == Action::Stop) {
            rec.action_succeeded = true;
            rec.true_pose = state.pose;
            traj.records.push_back(rec);
            traj.terminal = TerminalStatus::Stopped;
            break;
        }
        StepResult result = step(grid, state, action, agent_cfg, rng);
        rec.action_succeeded = result.action_succeeded;
        rec.true_pose = result.state.pose;
        traj.records.push_back(rec);

        prev_depth = std::move(obs.view.depth);
        obs = std::move(result.observation);
        state = result.state;
        last_action = action;
        have_last = true;
    }
    traj.final_true_pose = state.pose;
    traj.final_est_pose = est.pose;
    if (final_map) *final_map = std::move(map);
    return traj;
}

}  // namespace cow
