#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cow/controller.hpp"
#include "cow/evaluation.hpp"

namespace cow {

struct RunOptions {
    CowConfig cow;
    AgentConfig agent;
    std::string localizer = "oracle";  // "oracle" or "precomputed"
    OracleLocalizerConfig oracle;
    std::string precomputed_dir;
    std::string exploration = "fbe";  // "fbe" or "random"
    uint64_t seed = 0;
    int parallelism = 1;
};

struct EpisodeOutcome {
    Trajectory trajectory;
    EpisodeResult result;
};

// Stable per-episode seed derived from the run seed and the task id.
uint64_t episode_seed(uint64_t run_seed, const std::string& task_id);

// Run every task of the suite; outcomes come back in task order regardless of
// the parallelism degree.
std::vector<EpisodeOutcome> run_suite(const Suite& suite, const RunOptions& opts);

EpisodeOutcome run_task(const Suite& suite, const Task& task, const RunOptions& opts);

// Re-simulate the logged action sequence with the logged seed; returns the
// resulting true poses, one per record.
std::vector<Pose> resimulate_actions(const RenderGrid& grid, const Task& task,
                                     const Trajectory& traj, const AgentConfig& agent_cfg);

// ASCII map-and-pose frames for a logged trajectory, one frame per `every_n`
// steps (plus the final state).
std::string replay_ascii(const RenderGrid& grid, const Task& task, const Trajectory& traj,
                         const AgentConfig& agent_cfg, int every_n = 25);

const Scene& scene_by_id(const Suite& suite, const std::string& scene_id);

}  // namespace cow
