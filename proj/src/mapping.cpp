#include "cow/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cow {

void TopDownMap::ensure_contains(const GridCell& c) {
    if (in_bounds(c)) return;
    constexpr int kMargin = 16;
    const int new_min_x = std::min(0, c.x - (c.x < 0 ? kMargin : 0));
    const int new_min_y = std::min(0, c.y - (c.y < 0 ? kMargin : 0));
    const int new_max_x = std::max(width, c.x + 1 + (c.x >= width ? kMargin : 0));
    const int new_max_y = std::max(height, c.y + 1 + (c.y >= height ? kMargin : 0));
    const int nw = new_max_x - new_min_x, nh = new_max_y - new_min_y;
    std::vector<CellState> ncells(static_cast<size_t>(nw) * nh, CellState::Unknown);
    std::vector<double> nrel(static_cast<size_t>(nw) * nh, 0.0);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const size_t src = static_cast<size_t>(y) * width + x;
            const size_t dst = static_cast<size_t>(y - new_min_y) * nw + (x - new_min_x);
            ncells[dst] = cells[src];
            nrel[dst] = relevance[src];
        }
    origin_x += new_min_x * resolution;
    origin_y += new_min_y * resolution;
    width = nw;
    height = nh;
    cells = std::move(ncells);
    relevance = std::move(nrel);
}

GridCell TopDownMap::ensure_contains_world(double wx, double wy) {
    ensure_contains(world_to_cell(wx, wy));
    return world_to_cell(wx, wy);
}

void TopDownMap::mark_free(const GridCell& c) {
    ensure_contains(c);
    auto& s = cells[index(c)];
    if (s != CellState::Occupied) s = CellState::Free;
}

void TopDownMap::mark_occupied(const GridCell& c) {
    ensure_contains(c);
    cells[index(c)] = CellState::Occupied;
}

void TopDownMap::set_relevance_max(const GridCell& c, double value) {
    ensure_contains(c);
    relevance[index(c)] = std::max(relevance[index(c)], value);
}

double TopDownMap::max_relevance(GridCell* argmax) const {
    double best = 0.0;
    GridCell best_cell{0, 0};
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double r = relevance[static_cast<size_t>(y) * width + x];
            if (r > best) {
                best = r;
                best_cell = GridCell{x, y};
            }
        }
    if (argmax) *argmax = best_cell;
    return best;
}

int TopDownMap::count(CellState s) const {
    return static_cast<int>(std::count(cells.begin(), cells.end(), s));
}

bool detect_action_failure(const DepthImage& prev, const DepthImage& cur,
                           const FailureDetectorConfig& cfg) {
    if (prev.width != cur.width || prev.height != cur.height)
        throw std::invalid_argument("depth frame dimension mismatch");
    const size_t n = prev.values.size();
    if (n == 0) throw std::invalid_argument("empty depth frame");
    double sum = 0.0, sum_sq = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = std::abs(prev.values[i] - cur.values[i]);
        sum += d;
        sum_sq += d * d;
    }
    const double mu = sum / static_cast<double>(n);
    const double var = std::max(0.0, sum_sq / static_cast<double>(n) - mu * mu);
    return mu < cfg.mu_threshold && std::sqrt(var) < cfg.sigma_threshold;
}

PoseEstimate update_pose_estimate(const PoseEstimate& est, Action action, bool failed,
                                  double step_size, double turn_angle) {
    if (action == Action::Stop) throw std::invalid_argument("Stop has no pose update");
    if (failed) return est;
    return PoseEstimate{compose(est.pose, action_delta(action, step_size, turn_angle))};
}

namespace {

// Carve free cells along the ground-plane projection of a ray, endpoint
// excluded. Exact grid walk (DDA) on the map lattice; the lattice is stable
// because the origin only ever shifts by whole cells.
void carve_ray(TopDownMap& map, double ax, double ay, double bx, double by) {
    const double res = map.resolution;
    const double dx = bx - ax, dy = by - ay;
    const double len = std::sqrt(dx * dx + dy * dy);
    if (len < 1e-12) return;
    int cx = static_cast<int>(std::floor(ax / res));
    int cy = static_cast<int>(std::floor(ay / res));
    const int ex = static_cast<int>(std::floor(bx / res));
    const int ey = static_cast<int>(std::floor(by / res));
    const int step_x = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
    const int step_y = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
    const double inf = std::numeric_limits<double>::infinity();
    double t_max_x = inf, t_max_y = inf, t_delta_x = inf, t_delta_y = inf;
    if (step_x != 0) {
        t_max_x = ((cx + (step_x > 0 ? 1 : 0)) * res - ax) / dx;
        t_delta_x = res / std::abs(dx);
    }
    if (step_y != 0) {
        t_max_y = ((cy + (step_y > 0 ? 1 : 0)) * res - ay) / dy;
        t_delta_y = res / std::abs(dy);
    }
    while (!(cx == ex && cy == ey)) {
        map.mark_free(map.ensure_contains_world((cx + 0.5) * res, (cy + 0.5) * res));
        if (t_max_x < t_max_y) {
            if (t_max_x > 1.0) break;
            t_max_x += t_delta_x;
            cx += step_x;
        } else if (t_max_y < inf) {
            if (t_max_y > 1.0) break;
            t_max_y += t_delta_y;
            cy += step_y;
        } else {
            break;
        }
    }
}

}  // namespace

void register_depth(TopDownMap& map, const DepthImage& depth, const PoseEstimate& est,
                    const CameraIntrinsics& k, double camera_height, double agent_height,
                    double free_height_epsilon) {
    if (depth.width != k.width || depth.height != k.height)
        throw std::invalid_argument("depth dimensions do not match intrinsics");
    const Pose& pose = est.pose;
    const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
    for (int v = 0; v < depth.height; ++v) {
        for (int u = 0; u < depth.width; ++u) {
            const double d = std::min(depth.at(u, v), depth.sentinel);
            const Vec3 r = k.ray_direction(u, v);
            const double wx = pose.x + d * (c * r.x - s * r.y);
            const double wy = pose.y + d * (s * r.x + c * r.y);
            carve_ray(map, pose.x, pose.y, wx, wy);
            if (depth.at(u, v) >= depth.sentinel) continue;  // no hit: carve only
            const double z = camera_height + d * r.z;
            if (z < free_height_epsilon) {
                map.mark_free(map.ensure_contains_world(wx, wy));
            } else if (z <= agent_height) {
                // The hit point sits exactly on the obstacle face; nudge it
                // forward along the ray so quantization lands the occupied
                // mark inside the obstacle rather than the free cell in front
                // of a face approached from the negative axis direction.
                constexpr double kHitNudge = 1e-4;
                const double hx = pose.x + (d + kHitNudge) * (c * r.x - s * r.y);
                const double hy = pose.y + (d + kHitNudge) * (s * r.x + c * r.y);
                map.mark_occupied(map.ensure_contains_world(hx, hy));
            }
        }
    }
}

bool reinitialize_if_stuck(TopDownMap& map, const PoseEstimate& est) {
    const GridCell agent = map.world_to_cell(est.pose.x, est.pose.y);
    if (!map.in_bounds(agent)) return false;

    auto is_frontier = [&](int x, int y) {
        if (map.cells[static_cast<size_t>(y) * map.width + x] != CellState::Free) return false;
        const GridCell n4[4] = {{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}};
        for (const auto& n : n4)
            if (map.state(n) == CellState::Unknown) return true;
        return false;
    };

    bool any_frontier = false;
    for (int y = 0; y < map.height && !any_frontier; ++y)
        for (int x = 0; x < map.width && !any_frontier; ++x)
            if (is_frontier(x, y)) any_frontier = true;
    if (!any_frontier) return false;

    // BFS over free cells from the agent.
    std::vector<uint8_t> seen(map.cells.size(), 0);
    std::vector<GridCell> queue{agent};
    seen[map.index(agent)] = 1;
    bool frontier_reachable = false;
    while (!queue.empty() && !frontier_reachable) {
        const GridCell c = queue.back();
        queue.pop_back();
        if (is_frontier(c.x, c.y)) {
            frontier_reachable = true;
            break;
        }
        const GridCell n4[4] = {{c.x + 1, c.y}, {c.x - 1, c.y}, {c.x, c.y + 1}, {c.x, c.y - 1}};
        for (const auto& n : n4) {
            if (!map.in_bounds(n) || seen[map.index(n)]) continue;
            if (map.cells[map.index(n)] != CellState::Free) continue;
            seen[map.index(n)] = 1;
            queue.push_back(n);
        }
    }
    if (frontier_reachable) return false;

    std::fill(map.cells.begin(), map.cells.end(), CellState::Unknown);
    std::fill(map.relevance.begin(), map.relevance.end(), 0.0);
    map.mark_free(agent);
    return true;
}

std::string render_map_ascii(const TopDownMap& map, const Pose* agent) {
    GridCell agent_cell{-1, -1};
    if (agent) agent_cell = map.world_to_cell(agent->x, agent->y);
    std::string out;
    out.reserve(static_cast<size_t>(map.height) * (map.width + 1));
    for (int y = map.height - 1; y >= 0; --y) {
        for (int x = 0; x < map.width; ++x) {
            if (agent && agent_cell == GridCell{x, y}) {
                out += '@';
                continue;
            }
            switch (map.cells[static_cast<size_t>(y) * map.width + x]) {
                case CellState::Unknown: out += '?'; break;
                case CellState::Free: out += '.'; break;
                case CellState::Occupied: out += '#'; break;
            }
        }
        out += '\n';
    }
    return out;
}

}  // namespace cow
