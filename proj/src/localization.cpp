#include "cow/localization.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>

namespace cow {

int BinaryMask::popcount() const {
    int n = 0;
    for (uint8_t v : values) n += v != 0;
    return n;
}

OracleLocalizer::OracleLocalizer(const Scene& scene, const Task& task,
                                 const OracleLocalizerConfig& cfg)
    : scene_(&scene), cfg_(cfg), rng_(cfg.seed) {
    std::set<std::string> exact, category;
    std::set<std::string> goal_categories;
    for (const auto& gid : task.goal_instance_ids) {
        const ObjectSpec* goal = scene.find_object(gid);
        if (!goal) continue;
        goal_categories.insert(goal->category);
        if (goal->hidden()) {
            if (goal->hidden_in_or_under) exact.insert(*goal->hidden_in_or_under);
        } else {
            exact.insert(gid);
        }
    }
    for (const auto& o : scene.objects) {
        if (!goal_categories.count(o.category)) continue;
        if (o.hidden()) {
            if (o.hidden_in_or_under) category.insert(*o.hidden_in_or_under);
        } else {
            category.insert(o.instance_id);
        }
    }
    match_ids_.assign(exact.begin(), exact.end());
    category_match_ids_.assign(category.begin(), category.end());
}

RelevanceMap OracleLocalizer::localize(const AgentObservation& obs, const std::string&) {
    const SemanticImage& sem = obs.semantic;
    RelevanceMap rel(sem.width, sem.height);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    // Fixed draw order keeps frames independent of branch outcomes.
    const double u_blind = uniform(rng_);
    const double u_fn = uniform(rng_);
    const double u_fp = uniform(rng_);

    const auto& ids = u_blind < cfg_.attribute_blindness ? category_match_ids_ : match_ids_;
    const bool drop = u_fn < cfg_.p_false_negative;
    if (!drop) {
        for (int v = 0; v < sem.height; ++v)
            for (int u = 0; u < sem.width; ++u) {
                const std::string& id = sem.at(u, v);
                if (id.empty()) continue;
                if (std::find(ids.begin(), ids.end(), id) != ids.end()) rel.at(u, v) = 1.0;
            }
    }

    if (u_fp < cfg_.p_false_positive && sem.width >= 3 && sem.height >= 3) {
        const int bu = 1 + static_cast<int>(rng_() % static_cast<uint64_t>(sem.width - 2));
        const int bv = 1 + static_cast<int>(rng_() % static_cast<uint64_t>(sem.height - 2));
        for (int dv = -1; dv <= 1; ++dv)
            for (int du = -1; du <= 1; ++du) rel.at(bu + du, bv + dv) = 1.0;
    }

    if (cfg_.dilate_mask_px > 0) {
        RelevanceMap dilated = rel;
        const int r = cfg_.dilate_mask_px;
        for (int v = 0; v < sem.height; ++v)
            for (int u = 0; u < sem.width; ++u) {
                if (rel.at(u, v) <= 0.0) continue;
                for (int dv = -r; dv <= r; ++dv)
                    for (int du = -r; du <= r; ++du) {
                        const int x = u + du, y = v + dv;
                        if (x >= 0 && y >= 0 && x < sem.width && y < sem.height)
                            dilated.at(x, y) = 1.0;
                    }
            }
        rel = std::move(dilated);
    }
    return rel;
}

BinaryMask threshold_mask(const RelevanceMap& rel, double tau) {
    BinaryMask mask(rel.width, rel.height);
    for (size_t i = 0; i < rel.values.size(); ++i) mask.values[i] = rel.values[i] >= tau ? 1 : 0;
    return mask;
}

BinaryMask center_pixel_postprocess(const BinaryMask& mask) {
    BinaryMask out(mask.width, mask.height);
    std::vector<uint8_t> seen(mask.values.size(), 0);
    for (int y0 = 0; y0 < mask.height; ++y0)
        for (int x0 = 0; x0 < mask.width; ++x0) {
            const size_t i0 = static_cast<size_t>(y0) * mask.width + x0;
            if (!mask.values[i0] || seen[i0]) continue;
            std::vector<GridCell> component;
            std::vector<GridCell> stack{GridCell{x0, y0}};
            seen[i0] = 1;
            while (!stack.empty()) {
                const GridCell c = stack.back();
                stack.pop_back();
                component.push_back(c);
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int x = c.x + dx, y = c.y + dy;
                        if ((dx == 0 && dy == 0) || x < 0 || y < 0 || x >= mask.width ||
                            y >= mask.height)
                            continue;
                        const size_t j = static_cast<size_t>(y) * mask.width + x;
                        if (mask.values[j] && !seen[j]) {
                            seen[j] = 1;
                            stack.push_back(GridCell{x, y});
                        }
                    }
            }
            double cx = 0.0, cy = 0.0;
            for (const auto& c : component) {
                cx += c.x;
                cy += c.y;
            }
            cx /= component.size();
            cy /= component.size();
            std::sort(component.begin(), component.end(),
                      [](const GridCell& a, const GridCell& b) {
                          return a.y != b.y ? a.y < b.y : a.x < b.x;
                      });
            const GridCell* best = nullptr;
            double best_d = std::numeric_limits<double>::infinity();
            for (const auto& c : component) {
                const double d = (c.x - cx) * (c.x - cx) + (c.y - cy) * (c.y - cy);
                if (d < best_d) {
                    best_d = d;
                    best = &c;
                }
            }
            out.set(best->x, best->y, true);
        }
    return out;
}

void project_relevance(TopDownMap& map, const BinaryMask& mask, const RelevanceMap& rel,
                       const DepthImage& depth, const PoseEstimate& est,
                       const CameraIntrinsics& k, double camera_height) {
    if (mask.width != depth.width || mask.height != depth.height || rel.width != depth.width ||
        rel.height != depth.height)
        throw std::invalid_argument("relevance projection dimension mismatch");
    const Pose& pose = est.pose;
    const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
    for (int v = 0; v < depth.height; ++v)
        for (int u = 0; u < depth.width; ++u) {
            if (!mask.at(u, v)) continue;
            const double d = depth.at(u, v);
            if (d >= depth.sentinel) continue;
            const Vec3 r = k.ray_direction(u, v);
            const double wx = pose.x + d * (c * r.x - s * r.y);
            const double wy = pose.y + d * (s * r.x + c * r.y);
            const GridCell cell = map.ensure_contains_world(wx, wy);
            if (map.cells[map.index(cell)] == CellState::Unknown) map.mark_occupied(cell);
            map.set_relevance_max(cell, rel.at(u, v));
        }
    (void)camera_height;
}

void save_relmap(const RelevanceMap& rel, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write relmap: " + path);
    out << "relmap v1 " << rel.width << " " << rel.height << "\n";
    for (int v = 0; v < rel.height; ++v) {
        for (int u = 0; u < rel.width; ++u) {
            const double clamped = std::clamp(rel.at(u, v), 0.0, 1.0);
            out << static_cast<int>(std::lround(clamped * 65535.0));
            out << (u + 1 < rel.width ? ' ' : '\n');
        }
    }
}

RelevanceMap load_relmap(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read relmap: " + path);
    std::string magic, version;
    int w = 0, h = 0;
    in >> magic >> version >> w >> h;
    if (magic != "relmap" || version != "v1" || w <= 0 || h <= 0)
        throw std::runtime_error("malformed relmap header: " + path);
    RelevanceMap rel(w, h);
    bool clamped = false;
    for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u) {
            long raw = 0;
            if (!(in >> raw)) throw std::runtime_error("truncated relmap: " + path);
            if (raw < 0 || raw > 65535) clamped = true;
            rel.at(u, v) = std::clamp(raw, 0L, 65535L) / 65535.0;
        }
    if (clamped) std::cerr << "warning: relmap values clamped to [0,1]: " << path << "\n";
    return rel;
}

RelevanceMap load_precomputed(const std::string& dir, const std::string& episode_id, int step,
                              int expect_width, int expect_height) {
    const std::string path = dir + "/" + episode_id + "/" + std::to_string(step) + ".relmap";
    std::ifstream probe(path);
    if (!probe)
        throw std::runtime_error("missing relevance map for episode '" + episode_id + "' step " +
                                 std::to_string(step) + " (" + path + ")");
    probe.close();
    RelevanceMap rel = load_relmap(path);
    if (rel.width != expect_width || rel.height != expect_height)
        throw std::runtime_error("relmap dimension mismatch for episode '" + episode_id +
                                 "' step " + std::to_string(step));
    return rel;
}

RelevanceMap PrecomputedLocalizer::localize(const AgentObservation& obs, const std::string&) {
    return load_precomputed(dir_, episode_id_, step_++, obs.depth.width, obs.depth.height);
}

}  // namespace cow
