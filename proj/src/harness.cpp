#include "cow/harness.hpp"

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "cow/serialize.hpp"

namespace cow {

uint64_t episode_seed(uint64_t run_seed, const std::string& task_id) {
    std::ostringstream key;
    key << run_seed << "|" << task_id;
    return config_hash(key.str());
}

const Scene& scene_by_id(const Suite& suite, const std::string& scene_id) {
    for (const auto& s : suite.scenes)
        if (s.id == scene_id) return s;
    throw std::runtime_error("suite has no scene: " + scene_id);
}

namespace {

std::unique_ptr<Localizer> make_localizer(const RunOptions& opts, const Scene& scene,
                                          const Task& task, uint64_t seed) {
    if (opts.localizer == "oracle") {
        OracleLocalizerConfig cfg = opts.oracle;
        cfg.seed = seed ^ 0x9e3779b97f4a7c15ULL;
        return std::make_unique<OracleLocalizer>(scene, task, cfg);
    }
    if (opts.localizer == "precomputed")
        return std::make_unique<PrecomputedLocalizer>(opts.precomputed_dir, task.id);
    throw std::invalid_argument("unknown localizer: " + opts.localizer);
}

std::unique_ptr<ExplorationPolicy> make_policy(const RunOptions& opts) {
    if (opts.exploration == "fbe") return std::make_unique<FbePolicy>(opts.agent.turn_angle);
    if (opts.exploration == "random") return std::make_unique<RandomWalkPolicy>();
    throw std::invalid_argument("unknown exploration policy: " + opts.exploration);
}

EpisodeOutcome run_one(const RenderGrid& grid, const Task& task, const RunOptions& opts) {
    const uint64_t seed = episode_seed(opts.seed, task.id);
    auto localizer = make_localizer(opts, grid.scene(), task, seed);
    auto policy = make_policy(opts);
    EpisodeOutcome outcome;
    outcome.trajectory = run_episode(grid, task, opts.cow, opts.agent, *localizer, *policy, seed);
    outcome.result = evaluate_episode(grid, task, outcome.trajectory, opts.agent);
    return outcome;
}

}  // namespace

EpisodeOutcome run_task(const Suite& suite, const Task& task, const RunOptions& opts) {
    RenderGrid grid(scene_by_id(suite, task.scene_id));
    return run_one(grid, task, opts);
}

std::vector<EpisodeOutcome> run_suite(const Suite& suite, const RunOptions& opts) {
    // One render grid per scene, shared read-only across workers.
    std::map<std::string, std::unique_ptr<RenderGrid>> grids;
    for (const auto& s : suite.scenes) grids.emplace(s.id, std::make_unique<RenderGrid>(s));
    for (const auto& [id, grid] : grids) grid->blocked(opts.agent.clearance_height);

    std::vector<EpisodeOutcome> outcomes(suite.tasks.size());
    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= suite.tasks.size()) return;
            try {
                const Task& task = suite.tasks[i];
                outcomes[i] = run_one(*grids.at(task.scene_id), task, opts);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    const int n = std::max(1, opts.parallelism);
    if (n == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int i = 0; i < n; ++i) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    if (error) std::rethrow_exception(error);
    return outcomes;
}

std::vector<Pose> resimulate_actions(const RenderGrid& grid, const Task& task,
                                     const Trajectory& traj, const AgentConfig& agent_cfg) {
    std::mt19937_64 rng(traj.seed);
    SimulatorState state{task.start_pose, false};
    // Match run_episode's rng consumption: the initial render draws depth noise.
    std::mt19937_64* depth_rng = agent_cfg.depth_noise_sigma > 0.0 ? &rng : nullptr;
    render(grid, state.pose, agent_cfg, depth_rng);
    std::vector<Pose> poses;
    for (const auto& r : traj.records) {
        if (r.action == Action::Stop) {
            poses.push_back(state.pose);
            break;
        }
        StepResult result = step(grid, state, r.action, agent_cfg, rng);
        state = result.state;
        poses.push_back(state.pose);
    }
    return poses;
}

std::string replay_ascii(const RenderGrid& grid, const Task& task, const Trajectory& traj,
                         const AgentConfig& agent_cfg, int every_n) {
    std::ostringstream out;
    TopDownMap map;
    SimulatorState state{task.start_pose, false};
    std::mt19937_64 rng(traj.seed);
    std::mt19937_64* depth_rng = agent_cfg.depth_noise_sigma > 0.0 ? &rng : nullptr;
    Observation obs = render(grid, state.pose, agent_cfg, depth_rng);

    auto emit = [&](int step_idx, const char* action, const Pose& est) {
        out << "-- step " << step_idx << " action=" << action << " est=(" << est.x << ","
            << est.y << "," << est.yaw << ")\n";
        out << render_map_ascii(map, &est);
    };

    if (traj.records.empty()) {
        register_depth(map, obs.view.depth, PoseEstimate{}, agent_cfg.intrinsics,
                       agent_cfg.camera_height, agent_cfg.camera_height);
        emit(0, "-", Pose{});
        return out.str();
    }
    int idx = 0;
    for (const auto& r : traj.records) {
        register_depth(map, obs.view.depth, PoseEstimate{r.est_pose}, agent_cfg.intrinsics,
                       agent_cfg.camera_height, agent_cfg.camera_height);
        if (idx % std::max(1, every_n) == 0) emit(idx, action_name(r.action), r.est_pose);
        if (r.action == Action::Stop) break;
        StepResult result = step(grid, state, r.action, agent_cfg, rng);
        state = result.state;
        obs = std::move(result.observation);
        ++idx;
    }
    emit(static_cast<int>(traj.records.size()) - 1, "final",
         traj.records.back().est_pose);
    return out.str();
}

}  // namespace cow
