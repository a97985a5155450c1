#include "cow/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace cow {

AgentConfig with_noise_profile(AgentConfig cfg, const std::string& profile) {
    if (profile == "none") {
        cfg.translation_noise_sigma = 0.0;
        cfg.rotation_noise_sigma = 0.0;
        cfg.depth_noise_sigma = 0.0;
    } else if (profile == "robothor_like") {
        cfg.translation_noise_sigma = 0.005;
        cfg.rotation_noise_sigma = deg_to_rad(0.5);
        cfg.depth_noise_sigma = 0.0;
    } else if (profile == "habitat_like") {
        cfg.translation_noise_sigma = 0.0;
        cfg.rotation_noise_sigma = 0.0;
        cfg.depth_noise_sigma = 0.01;
    } else {
        throw std::invalid_argument("unknown noise profile: " + profile);
    }
    return cfg;
}

RenderGrid::RenderGrid(const Scene& scene) : scene_(&scene) {
    cells_.resize(static_cast<size_t>(scene.width) * scene.height);
    for (int y = 0; y < scene.height; ++y)
        for (int x = 0; x < scene.width; ++x) {
            const double h = scene.column(x, y);
            if (h > 0.0)
                cells_[static_cast<size_t>(y) * scene.width + x].push_back(Interval{0.0, h, -1});
        }
    for (size_t i = 0; i < scene.objects.size(); ++i) {
        const auto& o = scene.objects[i];
        if (o.hidden()) continue;
        for (const auto& c : o.footprint)
            if (scene.in_bounds(c))
                cells_[static_cast<size_t>(c.y) * scene.width + c.x].push_back(
                    Interval{o.base_z, o.top_z(), static_cast<int>(i)});
    }
}

const std::vector<uint8_t>& RenderGrid::blocked(double clearance_height) const {
    if (blocked_clearance_ != clearance_height) {
        blocked_cache_ = blocked_grid(*scene_, clearance_height);
        blocked_clearance_ = clearance_height;
    }
    return blocked_cache_;
}

std::optional<RenderGrid::Hit> RenderGrid::raycast(const Vec3& origin, const Vec3& dir,
                                                   double max_t) const {
    const Scene& sc = *scene_;
    const double cs = sc.cell_size;
    int cx = static_cast<int>(std::floor(origin.x / cs));
    int cy = static_cast<int>(std::floor(origin.y / cs));

    const int step_x = dir.x > 0 ? 1 : (dir.x < 0 ? -1 : 0);
    const int step_y = dir.y > 0 ? 1 : (dir.y < 0 ? -1 : 0);
    const double inf = std::numeric_limits<double>::infinity();
    double t_max_x = inf, t_max_y = inf, t_delta_x = inf, t_delta_y = inf;
    if (step_x != 0) {
        const double edge = (cx + (step_x > 0 ? 1 : 0)) * cs;
        t_max_x = (edge - origin.x) / dir.x;
        t_delta_x = cs / std::abs(dir.x);
    }
    if (step_y != 0) {
        const double edge = (cy + (step_y > 0 ? 1 : 0)) * cs;
        t_max_y = (edge - origin.y) / dir.y;
        t_delta_y = cs / std::abs(dir.y);
    }

    double t0 = 0.0;
    constexpr double kEps = 1e-9;
    while (t0 <= max_t) {
        const double t1 = std::min({t_max_x, t_max_y, max_t});
        if (cx >= 0 && cy >= 0 && cx < sc.width && cy < sc.height) {
            double best_t = inf;
            const std::string* best_inst = nullptr;
            for (const auto& iv : cells_[static_cast<size_t>(cy) * sc.width + cx]) {
                double lo = t0, hi = t1;
                if (dir.z == 0.0) {
                    if (origin.z < iv.z_lo || origin.z > iv.z_hi) continue;
                } else {
                    double ta = (iv.z_lo - origin.z) / dir.z;
                    double tb = (iv.z_hi - origin.z) / dir.z;
                    if (ta > tb) std::swap(ta, tb);
                    lo = std::max(lo, ta);
                    hi = std::min(hi, tb);
                    if (lo > hi) continue;
                }
                if (hi < kEps) continue;
                const double t = std::max(lo, kEps);
                if (t < best_t) {
                    best_t = t;
                    best_inst = iv.object_index >= 0
                                    ? &sc.objects[static_cast<size_t>(iv.object_index)].instance_id
                                    : nullptr;
                }
            }
            // Floor plane.
            if (dir.z < 0.0) {
                const double tf = (sc.floor_height - origin.z) / dir.z;
                if (tf >= std::max(t0, kEps) && tf <= t1 && tf < best_t) {
                    best_t = tf;
                    best_inst = nullptr;
                }
            }
            if (best_t <= t1 && best_t <= max_t) return Hit{best_t, best_inst};
        } else if (cx < -1 || cy < -1 || cx > sc.width || cy > sc.height) {
            break;
        }
        if (t_max_x < t_max_y) {
            t0 = t_max_x;
            t_max_x += t_delta_x;
            cx += step_x;
        } else if (t_max_y < inf) {
            t0 = t_max_y;
            t_max_y += t_delta_y;
            cy += step_y;
        } else {
            break;  // ray is vertical in the plane
        }
    }
    return std::nullopt;
}

Observation render(const RenderGrid& grid, const Pose& pose, const AgentConfig& cfg,
                   std::mt19937_64* depth_noise_rng) {
    const CameraIntrinsics& k = cfg.intrinsics;
    Observation obs;
    obs.true_pose = pose;
    obs.view.depth = DepthImage(k.width, k.height, cfg.max_depth);
    obs.view.semantic = SemanticImage(k.width, k.height);
    const Vec3 origin{pose.x, pose.y, cfg.camera_height};
    const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
    std::normal_distribution<double> noise(0.0, cfg.depth_noise_sigma);
    for (int v = 0; v < k.height; ++v) {
        for (int u = 0; u < k.width; ++u) {
            Vec3 r = k.ray_direction(u, v);
            const Vec3 dir{c * r.x - s * r.y, s * r.x + c * r.y, r.z};
            auto hit = grid.raycast(origin, dir, cfg.max_depth);
            if (!hit) continue;
            double d = hit->t;
            if (depth_noise_rng && cfg.depth_noise_sigma > 0.0) {
                d *= 1.0 + noise(*depth_noise_rng);
                d = std::clamp(d, 1e-3, cfg.max_depth * 0.999);
            }
            obs.view.depth.at(u, v) = d;
            if (hit->instance) obs.view.semantic.at(u, v) = *hit->instance;
        }
    }
    return obs;
}

namespace {

// Min distance between segment [a,b] and the axis-aligned cell box.
double segment_box_distance(double ax, double ay, double bx, double by, double x0, double y0,
                            double x1, double y1) {
    const int kSamples = 8;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= kSamples; ++i) {
        const double t = static_cast<double>(i) / kSamples;
        const double px = ax + t * (bx - ax), py = ay + t * (by - ay);
        const double dx = std::max({x0 - px, 0.0, px - x1});
        const double dy = std::max({y0 - py, 0.0, py - y1});
        best = std::min(best, std::sqrt(dx * dx + dy * dy));
    }
    return best;
}

bool move_blocked(const RenderGrid& grid, const Pose& from, double tx, double ty,
                  const AgentConfig& cfg) {
    const Scene& sc = grid.scene();
    const auto& blocked = grid.blocked(cfg.clearance_height);
    const double cs = sc.cell_size;
    const double r = cfg.agent_radius;
    if (tx < r || ty < r || tx > sc.width * cs - r || ty > sc.height * cs - r) return true;
    const int x_lo = static_cast<int>(std::floor((std::min(from.x, tx) - r) / cs));
    const int x_hi = static_cast<int>(std::floor((std::max(from.x, tx) + r) / cs));
    const int y_lo = static_cast<int>(std::floor((std::min(from.y, ty) - r) / cs));
    const int y_hi = static_cast<int>(std::floor((std::max(from.y, ty) + r) / cs));
    for (int cy = y_lo; cy <= y_hi; ++cy)
        for (int cx = x_lo; cx <= x_hi; ++cx) {
            if (cx < 0 || cy < 0 || cx >= sc.width || cy >= sc.height) continue;
            if (!blocked[static_cast<size_t>(cy) * sc.width + cx]) continue;
            if (segment_box_distance(from.x, from.y, tx, ty, cx * cs, cy * cs, (cx + 1) * cs,
                                     (cy + 1) * cs) < r)
                return true;
        }
    return false;
}

}  // namespace

StepResult step(const RenderGrid& grid, const SimulatorState& state, Action action,
                const AgentConfig& cfg, std::mt19937_64& rng) {
    StepResult result;
    result.state = state;
    std::normal_distribution<double> tnoise(0.0, cfg.translation_noise_sigma);
    std::normal_distribution<double> rnoise(0.0, cfg.rotation_noise_sigma);
    switch (action) {
        case Action::Stop:
            result.state.stopped = true;
            break;
        case Action::RotateLeft:
        case Action::RotateRight: {
            double turn = cfg.turn_angle * (action == Action::RotateLeft ? 1.0 : -1.0);
            if (cfg.rotation_noise_sigma > 0.0) turn += rnoise(rng);
            result.state.pose.yaw = normalize_angle(state.pose.yaw + turn);
            break;
        }
        case Action::MoveForward: {
            double dist = cfg.step_size;
            if (cfg.translation_noise_sigma > 0.0) dist += tnoise(rng);
            const double tx = state.pose.x + dist * std::cos(state.pose.yaw);
            const double ty = state.pose.y + dist * std::sin(state.pose.yaw);
            if (move_blocked(grid, state.pose, tx, ty, cfg)) {
                result.action_succeeded = false;
            } else {
                result.state.pose.x = tx;
                result.state.pose.y = ty;
            }
            break;
        }
    }
    std::mt19937_64* depth_rng = cfg.depth_noise_sigma > 0.0 ? &rng : nullptr;
    result.observation = render(grid, result.state.pose, cfg, depth_rng);
    return result;
}

namespace {

bool line_of_sight(const RenderGrid& grid, const Pose& pose, const ObjectSpec& target,
                   const AgentConfig& cfg) {
    const Scene& sc = grid.scene();
    const Vec3 origin{pose.x, pose.y, cfg.camera_height};
    // Sample several heights and lateral offsets per footprint cell: a
    // neighbor can occlude the center line of the object while an edge or the
    // top stays visible, and visibility should mirror what the camera renders.
    static constexpr double kHeightFractions[] = {0.25, 0.5, 0.75, 0.95};
    static constexpr double kLateralOffsets[][2] = {
        {0.0, 0.0}, {0.3, 0.0}, {-0.3, 0.0}, {0.0, 0.3}, {0.0, -0.3}};
    for (const auto& c : target.footprint) {
        for (const auto& off : kLateralOffsets) {
            for (double f : kHeightFractions) {
                const Vec3 p{sc.cell_center_x(c.x) + off[0] * sc.cell_size,
                             sc.cell_center_y(c.y) + off[1] * sc.cell_size,
                             target.base_z + f * target.height};
                Vec3 d{p.x - origin.x, p.y - origin.y, p.z - origin.z};
                const double len = std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
                if (len < 1e-9) return true;
                d.x /= len;
                d.y /= len;
                d.z /= len;
                auto hit = grid.raycast(origin, d, len + sc.cell_size);
                if (hit && hit->instance && *hit->instance == target.instance_id) return true;
            }
        }
    }
    return false;
}

}  // namespace

bool check_success(const RenderGrid& grid, const Task& task, const Pose& pose,
                   const AgentConfig& cfg) {
    const Scene& sc = grid.scene();
    for (const auto& goal_id : task.goal_instance_ids) {
        const ObjectSpec* goal = sc.find_object(goal_id);
        if (!goal) continue;
        const double dx = goal->x - pose.x, dy = goal->y - pose.y;
        if (std::sqrt(dx * dx + dy * dy) > cfg.success_radius) continue;
        const ObjectSpec* visible = goal;
        if (goal->hidden()) visible = sc.find_object(*goal->hidden_in_or_under);
        if (visible && line_of_sight(grid, pose, *visible, cfg)) return true;
    }
    return false;
}

std::optional<double> shortest_path_length(const RenderGrid& grid, const Pose& start,
                                           const Task& task, const AgentConfig& cfg) {
    const Scene& sc = grid.scene();
    if (check_success(grid, task, start, cfg)) return 0.0;

    const auto& blocked = grid.blocked(cfg.clearance_height);
    const int w = sc.width, h = sc.height;
    auto idx = [&](int x, int y) { return static_cast<size_t>(y) * w + x; };

    // Cells whose center satisfies the success predicate.
    std::vector<uint8_t> goal_cell(blocked.size(), 0);
    bool any_goal = false;
    for (const auto& goal_id : task.goal_instance_ids) {
        const ObjectSpec* goal = sc.find_object(goal_id);
        if (!goal) continue;
        const int reach = static_cast<int>(std::ceil(cfg.success_radius / sc.cell_size)) + 1;
        const GridCell gc = sc.cell_of(goal->x, goal->y);
        for (int y = gc.y - reach; y <= gc.y + reach; ++y)
            for (int x = gc.x - reach; x <= gc.x + reach; ++x) {
                if (x < 0 || y < 0 || x >= w || y >= h) continue;
                if (blocked[idx(x, y)] || goal_cell[idx(x, y)]) continue;
                Pose p{sc.cell_center_x(x), sc.cell_center_y(y), 0.0};
                if (check_success(grid, task, p, cfg)) {
                    goal_cell[idx(x, y)] = 1;
                    any_goal = true;
                }
            }
    }
    if (!any_goal) return std::nullopt;

    const GridCell sc_cell = sc.cell_of(start.x, start.y);
    if (!sc.in_bounds(sc_cell) || blocked[idx(sc_cell.x, sc_cell.y)]) return std::nullopt;

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(blocked.size(), inf);
    using QItem = std::pair<double, size_t>;
    std::priority_queue<QItem, std::vector<QItem>, std::greater<>> pq;
    dist[idx(sc_cell.x, sc_cell.y)] = 0.0;
    pq.push({0.0, idx(sc_cell.x, sc_cell.y)});
    const double straight = sc.cell_size, diag = sc.cell_size * std::sqrt(2.0);
    while (!pq.empty()) {
        auto [d, i] = pq.top();
        pq.pop();
        if (d > dist[i]) continue;
        if (goal_cell[i]) return d;
        const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0) continue;
                const int nx = x + dx, ny = y + dy;
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                if (blocked[idx(nx, ny)]) continue;
                if (dx != 0 && dy != 0 && (blocked[idx(x, ny)] || blocked[idx(nx, y)])) continue;
                const double nd = d + ((dx != 0 && dy != 0) ? diag : straight);
                if (nd < dist[idx(nx, ny)]) {
                    dist[idx(nx, ny)] = nd;
                    pq.push({nd, idx(nx, ny)});
                }
            }
    }
    return std::nullopt;
}

}  // namespace cow
