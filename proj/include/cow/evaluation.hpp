#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cow/controller.hpp"

namespace cow {

enum class FailureMode { None, Exploration, Localization, Planning };

const char* failure_mode_name(FailureMode m);

struct EpisodeResult {
    std::string task_id;
    Split split = Split::Plain;
    std::string category;
    std::string scene_id;
    bool success = false;
    double path_length = 0.0;    // true-pose displacement sum, meters
    double shortest_path = 0.0;  // oracle, meters
    bool unreachable = false;    // excluded from aggregates
    double spl_term = 0.0;
    int steps = 0;
    FailureMode failure_mode = FailureMode::None;
};

// Fig.-6-style taxonomy on an unsuccessful trajectory: the goal was never
// rendered (exploration), rendered but the mask never overlapped it
// (localization), or both happened and the agent still stopped wrong (planning).
FailureMode classify_failure(const Trajectory& traj, bool success);

EpisodeResult evaluate_episode(const RenderGrid& grid, const Task& task, const Trajectory& traj,
                               const AgentConfig& cfg);

double success_rate(const std::vector<EpisodeResult>& results);
double spl(const std::vector<EpisodeResult>& results);

struct AggregateRow {
    std::string group;
    int n = 0;
    double sr = 0.0;
    double spl = 0.0;
};

enum class GroupBy { SplitKey, Category, SceneKey };

std::vector<AggregateRow> aggregate(const std::vector<EpisodeResult>& results, GroupBy group_by);

// CSV: group,n,SR,SPL with 6 decimal places.
std::string aggregate_csv(const std::vector<AggregateRow>& rows);

}  // namespace cow
