#include "cow/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cow {

const char* failure_mode_name(FailureMode m) {
    switch (m) {
        case FailureMode::None: return "none";
        case FailureMode::Exploration: return "exploration";
        case FailureMode::Localization: return "localization";
        case FailureMode::Planning: return "planning";
    }
    return "?";
}

FailureMode classify_failure(const Trajectory& traj, bool success) {
    if (success) return FailureMode::None;
    bool seen = false, fired_on = false;
    for (const auto& r : traj.records) {
        seen = seen || r.target_in_view;
        fired_on = fired_on || r.fired_on_target;
    }
    if (!seen) return FailureMode::Exploration;
    if (!fired_on) return FailureMode::Localization;
    return FailureMode::Planning;
}

EpisodeResult evaluate_episode(const RenderGrid& grid, const Task& task, const Trajectory& traj,
                               const AgentConfig& cfg) {
    EpisodeResult res;
    res.task_id = task.id;
    res.split = task.split;
    res.scene_id = task.scene_id;
    if (!task.goal_instance_ids.empty()) {
        const ObjectSpec* goal = grid.scene().find_object(task.goal_instance_ids.front());
        if (goal) res.category = goal->category;
    }
    res.steps = static_cast<int>(traj.records.size());

    // Actual path: metric displacement over true poses, external judgment.
    Pose prev = task.start_pose;
    for (const auto& r : traj.records) {
        res.path_length += std::hypot(r.true_pose.x - prev.x, r.true_pose.y - prev.y);
        prev = r.true_pose;
    }

    res.success = traj.terminal == TerminalStatus::Stopped &&
                  check_success(grid, task, traj.final_true_pose, cfg);

    auto shortest = shortest_path_length(grid, task.start_pose, task, cfg);
    if (!shortest) {
        res.unreachable = true;
        res.spl_term = 0.0;
    } else {
        res.shortest_path = *shortest;
        res.spl_term =
            res.success ? res.shortest_path / std::max(res.path_length, res.shortest_path) : 0.0;
        if (res.success && res.shortest_path == 0.0) res.spl_term = 1.0;
    }
    res.failure_mode = classify_failure(traj, res.success);
    return res;
}

namespace {

std::vector<const EpisodeResult*> scored(const std::vector<EpisodeResult>& results) {
    std::vector<const EpisodeResult*> out;
    for (const auto& r : results)
        if (!r.unreachable) out.push_back(&r);
    return out;
}

}  // namespace

double success_rate(const std::vector<EpisodeResult>& results) {
    auto rs = scored(results);
    if (rs.empty()) throw std::invalid_argument("success_rate over empty result set");
    double sum = 0.0;
    for (const auto* r : rs) sum += r->success ? 1.0 : 0.0;
    return sum / static_cast<double>(rs.size());
}

double spl(const std::vector<EpisodeResult>& results) {
    auto rs = scored(results);
    if (rs.empty()) throw std::invalid_argument("spl over empty result set");
    double sum = 0.0;
    for (const auto* r : rs) sum += r->spl_term;
    return sum / static_cast<double>(rs.size());
}

std::vector<AggregateRow> aggregate(const std::vector<EpisodeResult>& results, GroupBy group_by) {
    std::map<std::string, std::vector<EpisodeResult>> groups;
    for (const auto& r : results) {
        std::string key;
        switch (group_by) {
            case GroupBy::SplitKey: key = split_name(r.split); break;
            case GroupBy::Category: key = r.category; break;
            case GroupBy::SceneKey: key = r.scene_id; break;
        }
        groups[key].push_back(r);
    }
    std::vector<AggregateRow> rows;
    for (const auto& [key, rs] : groups) {
        AggregateRow row;
        row.group = key;
        row.n = static_cast<int>(scored(rs).size());
        if (row.n > 0) {
            row.sr = success_rate(rs);
            row.spl = spl(rs);
        }
        rows.push_back(row);
    }
    return rows;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
    std::ostringstream out;
    out << "group,n,SR,SPL\n";
    out.setf(std::ios::fixed);
    out.precision(6);
    for (const auto& r : rows) out << r.group << "," << r.n << "," << r.sr << "," << r.spl << "\n";
    return out.str();
}

}  // namespace cow
