#include "cow/exploration.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

namespace cow {

namespace {

bool is_frontier_cell(const TopDownMap& map, int x, int y) {
    if (map.cells[static_cast<size_t>(y) * map.width + x] != CellState::Free) return false;
    const GridCell n4[4] = {{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}};
    for (const auto& n : n4)
        if (map.state(n) == CellState::Unknown) return true;
    return false;
}

}  // namespace

std::vector<Frontier> extract_frontiers(const TopDownMap& map) {
    std::vector<uint8_t> frontier(map.cells.size(), 0);
    for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x)
            if (is_frontier_cell(map, x, y)) frontier[static_cast<size_t>(y) * map.width + x] = 1;

    std::vector<Frontier> out;
    std::vector<uint8_t> seen(map.cells.size(), 0);
    for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x) {
            const size_t i = static_cast<size_t>(y) * map.width + x;
            if (!frontier[i] || seen[i]) continue;
            Frontier f;
            std::vector<GridCell> stack{GridCell{x, y}};
            seen[i] = 1;
            while (!stack.empty()) {
                const GridCell c = stack.back();
                stack.pop_back();
                f.cells.push_back(c);
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const GridCell n{c.x + dx, c.y + dy};
                        if ((dx == 0 && dy == 0) || !map.in_bounds(n)) continue;
                        const size_t j = map.index(n);
                        if (frontier[j] && !seen[j]) {
                            seen[j] = 1;
                            stack.push_back(n);
                        }
                    }
            }
            std::sort(f.cells.begin(), f.cells.end(),
                      [](const GridCell& a, const GridCell& b) {
                          return a.y != b.y ? a.y < b.y : a.x < b.x;
                      });
            // Medoid: minimal summed distance, lexicographic tie-break.
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : f.cells) {
                double total = 0.0;
                for (const auto& d : f.cells)
                    total += std::hypot(static_cast<double>(c.x - d.x),
                                        static_cast<double>(c.y - d.y));
                if (total < best) {
                    best = total;
                    f.representative = c;
                }
            }
            out.push_back(std::move(f));
        }
    std::sort(out.begin(), out.end(), [](const Frontier& a, const Frontier& b) {
        return a.representative.y != b.representative.y ? a.representative.y < b.representative.y
                                                        : a.representative.x < b.representative.x;
    });
    return out;
}

namespace {

struct DijkstraResult {
    std::vector<double> dist;
    std::vector<int> parent;
};

// Single-source shortest paths over free cells. `extra_goal`, when in bounds,
// is enterable regardless of its state (as a terminal cell only).
DijkstraResult dijkstra_free(const TopDownMap& map, const GridCell& from,
                             const GridCell* extra_goal = nullptr) {
    const int w = map.width, h = map.height;
    const double inf = std::numeric_limits<double>::infinity();
    DijkstraResult res{std::vector<double>(map.cells.size(), inf),
                       std::vector<int>(map.cells.size(), -1)};
    const size_t start = map.index(from);
    res.dist[start] = 0.0;
    using QItem = std::pair<double, size_t>;
    std::priority_queue<QItem, std::vector<QItem>, std::greater<>> pq;
    pq.push({0.0, start});
    const double kDiag = std::sqrt(2.0);
    while (!pq.empty()) {
        auto [d, i] = pq.top();
        pq.pop();
        if (d > res.dist[i]) continue;
        const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
        if (map.cells[i] != CellState::Free && GridCell{x, y} != from) continue;  // terminal
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0) continue;
                const int nx = x + dx, ny = y + dy;
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                const size_t j = static_cast<size_t>(ny) * w + nx;
                const bool enterable =
                    map.cells[j] == CellState::Free ||
                    (extra_goal && GridCell{nx, ny} == *extra_goal);
                if (!enterable) continue;
                if (dx != 0 && dy != 0) {
                    const size_t a = static_cast<size_t>(y) * w + nx;
                    const size_t b = static_cast<size_t>(ny) * w + x;
                    if (map.cells[a] != CellState::Free || map.cells[b] != CellState::Free)
                        continue;
                }
                const double nd = d + ((dx != 0 && dy != 0) ? kDiag : 1.0);
                if (nd < res.dist[j]) {
                    res.dist[j] = nd;
                    res.parent[j] = static_cast<int>(i);
                    pq.push({nd, j});
                }
            }
    }
    return res;
}

std::vector<GridCell> reconstruct(const TopDownMap& map, const DijkstraResult& res,
                                  const GridCell& to) {
    std::vector<GridCell> path;
    int i = static_cast<int>(map.index(to));
    while (i >= 0) {
        path.push_back(GridCell{i % map.width, i / map.width});
        i = res.parent[static_cast<size_t>(i)];
    }
    std::reverse(path.begin(), path.end());
    return path;
}

}  // namespace

std::optional<std::vector<GridCell>> plan_path(const TopDownMap& map, const GridCell& from,
                                               const GridCell& to) {
    if (!map.in_bounds(from) || map.cells[map.index(from)] != CellState::Free)
        throw std::invalid_argument("plan_path: start cell is not free");
    if (!map.in_bounds(to)) return std::nullopt;
    if (from == to) return std::vector<GridCell>{from};
    auto res = dijkstra_free(map, from, &to);
    if (!std::isfinite(res.dist[map.index(to)])) return std::nullopt;
    return reconstruct(map, res, to);
}

std::optional<std::vector<GridCell>> plan_to_adjacent(const TopDownMap& map,
                                                      const GridCell& from,
                                                      const GridCell& target) {
    if (map.in_bounds(target) && map.cells[map.index(target)] == CellState::Free)
        return plan_path(map, from, target);
    if (!map.in_bounds(from) || map.cells[map.index(from)] != CellState::Free)
        throw std::invalid_argument("plan_to_adjacent: start cell is not free");
    auto res = dijkstra_free(map, from);
    double best = std::numeric_limits<double>::infinity();
    GridCell best_cell{0, 0};
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const GridCell n{target.x + dx, target.y + dy};
            if (!map.in_bounds(n) || map.cells[map.index(n)] != CellState::Free) continue;
            if (res.dist[map.index(n)] < best) {
                best = res.dist[map.index(n)];
                best_cell = n;
            }
        }
    if (!std::isfinite(best)) return std::nullopt;
    return reconstruct(map, res, best_cell);
}

Action waypoint_action(const TopDownMap& map, const Pose& est_pose,
                       const std::vector<GridCell>& path, double turn_angle) {
    const GridCell target = path.size() >= 2 ? path[1] : path[0];
    const double wx = map.cell_center_x(target.x), wy = map.cell_center_y(target.y);
    const double err = normalize_angle(std::atan2(wy - est_pose.y, wx - est_pose.x) - est_pose.yaw);
    if (std::abs(err) <= turn_angle / 2.0 + 1e-9) return Action::MoveForward;
    return err > 0 ? Action::RotateLeft : Action::RotateRight;
}

ExploreDecision fbe_next_action(const TopDownMap& map, const PoseEstimate& est,
                                double turn_angle) {
    const auto frontiers = extract_frontiers(map);
    if (frontiers.empty()) return ExploreDecision{ExploreStatus::Complete, Action::Stop};
    const GridCell agent = map.world_to_cell(est.pose.x, est.pose.y);
    if (!map.in_bounds(agent) || map.cells[map.index(agent)] != CellState::Free)
        return ExploreDecision{ExploreStatus::Complete, Action::Stop};

    auto res = dijkstra_free(map, agent);
    const Frontier* best = nullptr;
    double best_cost = std::numeric_limits<double>::infinity();
    for (const auto& f : frontiers) {
        const double c = res.dist[map.index(f.representative)];
        if (c < best_cost) {
            best_cost = c;
            best = &f;
        }
    }
    GridCell goal{0, 0};
    if (best) {
        goal = best->representative;
    } else {
        // Every cluster representative is sealed off, but part of a cluster
        // can still be adjacent to the agent's region (one 8-connected chain
        // of frontier cells may straddle both sides of an obstacle). Fall
        // back to the nearest reachable frontier cell before giving up.
        double best_cell_cost = std::numeric_limits<double>::infinity();
        for (const auto& f : frontiers)
            for (const auto& c : f.cells) {
                const double d = res.dist[map.index(c)];
                if (d < best_cell_cost) {
                    best_cell_cost = d;
                    goal = c;
                }
            }
        if (!std::isfinite(best_cell_cost))
            return ExploreDecision{ExploreStatus::Complete, Action::Stop};
    }

    auto path = reconstruct(map, res, goal);
    if (path.size() < 2) {
        // Standing on the frontier: aim at its unknown neighbor.
        const GridCell n4[4] = {{agent.x + 1, agent.y},
                                {agent.x - 1, agent.y},
                                {agent.x, agent.y + 1},
                                {agent.x, agent.y - 1}};
        for (const auto& n : n4)
            if (map.state(n) == CellState::Unknown) {
                path = {agent, n};
                break;
            }
    }
    return ExploreDecision{ExploreStatus::Act, waypoint_action(map, est.pose, path, turn_angle)};
}

ExploreDecision FbePolicy::next_action(const TopDownMap& map, const PoseEstimate& est,
                                       std::mt19937_64&) {
    return fbe_next_action(map, est, turn_angle);
}

ExploreDecision RandomWalkPolicy::next_action(const TopDownMap&, const PoseEstimate&,
                                              std::mt19937_64& rng) {
    const uint64_t r = rng() % 5;
    Action a = r < 3 ? Action::MoveForward : (r == 3 ? Action::RotateLeft : Action::RotateRight);
    return ExploreDecision{ExploreStatus::Act, a};
}

double exploration_reward(const std::vector<Pose>& true_poses, double resolution) {
    if (true_poses.empty()) return 0.0;
    std::set<std::pair<long, long>> visited;
    auto quantize = [&](const Pose& p) {
        return std::make_pair(static_cast<long>(std::floor(p.x / resolution)),
                              static_cast<long>(std::floor(p.y / resolution)));
    };
    visited.insert(quantize(true_poses.front()));
    double reward = 0.0;
    for (size_t i = 1; i < true_poses.size(); ++i) {
        reward -= 0.01;
        if (visited.insert(quantize(true_poses[i])).second) reward += 0.1;
    }
    return reward;
}

}  // namespace cow
