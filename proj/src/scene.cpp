#include "cow/scene.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace cow {

const ObjectSpec* Scene::find_object(const std::string& instance_id) const {
    for (const auto& o : objects)
        if (o.instance_id == instance_id) return &o;
    return nullptr;
}

const char* split_name(Split s) {
    switch (s) {
        case Split::Uncommon: return "uncommon";
        case Split::Appearance: return "appearance";
        case Split::Spatial: return "spatial";
        case Split::AppearanceDistract: return "appearance_distract";
        case Split::SpatialDistract: return "spatial_distract";
        case Split::Hidden: return "hidden";
        case Split::HiddenDistract: return "hidden_distract";
        case Split::Plain: return "plain";
    }
    return "?";
}

Split split_from_name(const std::string& name) {
    for (Split s : {Split::Uncommon, Split::Appearance, Split::Spatial, Split::AppearanceDistract,
                    Split::SpatialDistract, Split::Hidden, Split::HiddenDistract, Split::Plain})
        if (name == split_name(s)) return s;
    throw std::invalid_argument("unknown split: " + name);
}

std::vector<Split> all_benchmark_splits() {
    return {Split::Uncommon,        Split::Appearance, Split::Spatial,
            Split::AppearanceDistract, Split::SpatialDistract,
            Split::Hidden,          Split::HiddenDistract};
}

namespace {

std::string article_phrase(const std::string& category) { return "a " + category; }

// Containers one looks inside rather than under.
bool container_is_enclosing(const std::string& category) {
    return category == "dresser" || category == "shelving unit" || category == "fridge" ||
           category == "cabinet";
}

std::string hidden_phrase(const std::string& container_category) {
    if (container_category == "dresser") return "in the dresser drawers";
    if (container_is_enclosing(container_category)) return "in the " + container_category;
    return "under the " + container_category;
}

}  // namespace

std::string render_description(const Scene& scene, const ObjectSpec& obj, Split mode) {
    switch (mode) {
        case Split::Plain:
        case Split::Uncommon:
            return obj.category;
        case Split::Appearance:
        case Split::AppearanceDistract: {
            std::vector<std::string> tokens;
            if (obj.size_class == SizeClass::Small) tokens.push_back("small");
            for (const auto& c : obj.colors) tokens.push_back(c);
            for (const auto& m : obj.materials) tokens.push_back(m);
            if (tokens.empty()) return obj.category;
            std::string out;
            for (size_t i = 0; i < tokens.size(); ++i) {
                if (i) out += ", ";
                out += tokens[i];
            }
            return out + " " + obj.category;
        }
        case Split::Spatial:
        case Split::SpatialDistract: {
            if (!obj.on_top_of)
                throw std::invalid_argument("spatial description requires a support relation: " +
                                            obj.instance_id);
            const ObjectSpec* support = scene.find_object(*obj.on_top_of);
            if (!support)
                throw std::invalid_argument("dangling support relation: " + *obj.on_top_of);
            std::string out = obj.category + " " + obj.support_preposition + " " +
                              article_phrase(support->category);
            std::vector<std::string> nears;
            for (const auto& id : obj.near_ids) {
                if (id == *obj.on_top_of) continue;
                const ObjectSpec* n = scene.find_object(id);
                if (n) nears.push_back(n->category);
            }
            for (size_t i = 0; i < nears.size(); ++i)
                out += (i == 0 ? " near " : ", ") + article_phrase(nears[i]);
            return out;
        }
        case Split::Hidden:
        case Split::HiddenDistract: {
            if (!obj.hidden_in_or_under)
                throw std::invalid_argument("hidden description requires a container: " +
                                            obj.instance_id);
            const ObjectSpec* container = scene.find_object(*obj.hidden_in_or_under);
            if (!container)
                throw std::invalid_argument("dangling container relation: " +
                                            *obj.hidden_in_or_under);
            return obj.category + " " + hidden_phrase(container->category);
        }
    }
    throw std::invalid_argument("unhandled description mode");
}

void compute_relations(Scene& scene, double near_threshold) {
    for (auto& o : scene.objects) o.near_ids.clear();
    for (size_t i = 0; i < scene.objects.size(); ++i) {
        for (size_t j = i + 1; j < scene.objects.size(); ++j) {
            auto& a = scene.objects[i];
            auto& b = scene.objects[j];
            if (a.hidden() || b.hidden()) continue;
            const double dx = a.x - b.x, dy = a.y - b.y;
            if (std::sqrt(dx * dx + dy * dy) <= near_threshold) {
                a.near_ids.push_back(b.instance_id);
                b.near_ids.push_back(a.instance_id);
            }
        }
    }
}

std::vector<uint8_t> blocked_grid(const Scene& scene, double clearance_height) {
    std::vector<uint8_t> blocked(static_cast<size_t>(scene.width) * scene.height, 0);
    for (int y = 0; y < scene.height; ++y)
        for (int x = 0; x < scene.width; ++x)
            if (scene.column(x, y) > clearance_height)
                blocked[static_cast<size_t>(y) * scene.width + x] = 1;
    for (const auto& o : scene.objects) {
        if (o.hidden()) continue;
        if (o.base_z > clearance_height || o.top_z() <= clearance_height) continue;
        for (const auto& c : o.footprint)
            if (scene.in_bounds(c)) blocked[static_cast<size_t>(c.y) * scene.width + c.x] = 1;
    }
    return blocked;
}

namespace {

constexpr double kClearance = 0.2;

uint64_t rand_below(std::mt19937_64& rng, uint64_t n) { return rng() % n; }

bool floor_connected(const std::vector<uint8_t>& blocked, int w, int h) {
    std::vector<uint8_t> seen(blocked.size(), 0);
    int start = -1, total_free = 0;
    for (size_t i = 0; i < blocked.size(); ++i) {
        if (!blocked[i]) {
            ++total_free;
            if (start < 0) start = static_cast<int>(i);
        }
    }
    if (total_free == 0) return false;
    std::vector<int> stack{start};
    seen[start] = 1;
    int reached = 0;
    while (!stack.empty()) {
        int i = stack.back();
        stack.pop_back();
        ++reached;
        int x = i % w, y = i / w;
        const int nx[4] = {x + 1, x - 1, x, x};
        const int ny[4] = {y, y, y + 1, y - 1};
        for (int k = 0; k < 4; ++k) {
            if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
            int j = ny[k] * w + nx[k];
            if (!blocked[j] && !seen[j]) {
                seen[j] = 1;
                stack.push_back(j);
            }
        }
    }
    return reached == total_free;
}

struct SupportInfo {
    std::string category;
    int fw, fh;       // footprint, cells
    double height;
};

const std::vector<SupportInfo>& support_catalog() {
    static const std::vector<SupportInfo> kSupports = {
        {"dresser", 2, 1, 0.9},      {"bed", 3, 2, 0.6},
        {"sofa", 3, 1, 0.7},         {"dining table", 2, 2, 0.75},
        {"shelving unit", 2, 1, 1.4}, {"side table", 1, 1, 0.55},
    };
    return kSupports;
}

const std::vector<std::string>& common_categories() {
    static const std::vector<std::string> kCats = {
        "alarm clock", "apple",       "baseball bat", "basketball",
        "bowl",        "garbage can", "house plant",  "laptop",
        "mug",         "spray bottle", "television",   "vase"};
    return kCats;
}

const std::vector<std::string>& uncommon_categories() {
    static const std::vector<std::string> kCats = {
        "llama wicker basket", "mate gourd",          "wooden toy airplane",
        "whiteboard saying cvpr", "gingerbread house", "espresso machine",
        "rice cooker",         "graphics card",        "tie dye surfboard",
        "green plastic crate", "white electric guitar", "red armchair"};
    return kCats;
}

const std::vector<std::string>& color_catalog() {
    static const std::vector<std::string> kColors = {
        "red",  "green",  "blue",  "orange", "yellow", "purple",
        "black", "white", "brown", "gray",   "pink",   "teal"};
    return kColors;
}

const std::vector<std::string>& material_catalog() {
    static const std::vector<std::string> kMats = {"metallic", "wooden", "plastic", "ceramic",
                                                   "glass"};
    return kMats;
}

SizeClass classify_size(double footprint_m, double height, double threshold) {
    const double diag =
        std::sqrt(footprint_m * footprint_m * 2.0 + height * height);
    return diag < threshold ? SizeClass::Small : SizeClass::Large;
}

}  // namespace

Scene generate_scene(const SceneGenConfig& cfg, const std::string& id, uint64_t seed) {
    std::mt19937_64 rng(seed);
    Scene scene;
    scene.id = id;
    scene.cell_size = cfg.cell_size;
    scene.width = cfg.width_cells;
    scene.height = cfg.height_cells;
    scene.heightmap.assign(static_cast<size_t>(scene.width) * scene.height, 0.0);

    for (int x = 0; x < scene.width; ++x) {
        scene.column(x, 0) = cfg.wall_height;
        scene.column(x, scene.height - 1) = cfg.wall_height;
    }
    for (int y = 0; y < scene.height; ++y) {
        scene.column(0, y) = cfg.wall_height;
        scene.column(scene.width - 1, y) = cfg.wall_height;
    }

    // Interior wall segments, kept only when the floor stays connected.
    int placed_walls = 0;
    for (int attempt = 0; attempt < 60 && placed_walls < cfg.interior_walls; ++attempt) {
        const bool horizontal = rand_below(rng, 2) == 0;
        const int len = 3 + static_cast<int>(rand_below(rng, 5));
        const int x0 = 2 + static_cast<int>(rand_below(rng, std::max(1, scene.width - len - 4)));
        const int y0 = 2 + static_cast<int>(rand_below(rng, std::max(1, scene.height - len - 4)));
        std::vector<GridCell> cells;
        for (int i = 0; i < len; ++i)
            cells.push_back(horizontal ? GridCell{x0 + i, y0} : GridCell{x0, y0 + i});
        bool free = true;
        for (const auto& c : cells)
            if (!scene.in_bounds(c) || scene.column(c.x, c.y) > 0.0) free = false;
        if (!free) continue;
        for (const auto& c : cells) scene.column(c.x, c.y) = cfg.wall_height;
        if (!floor_connected(blocked_grid(scene, kClearance), scene.width, scene.height)) {
            for (const auto& c : cells) scene.column(c.x, c.y) = 0.0;
            continue;
        }
        ++placed_walls;
    }

    int obj_counter = 0;
    auto next_id = [&]() { return id + ":obj" + std::to_string(obj_counter++); };

    // Supports (large furniture), spaced so goal objects stacked on them are
    // within the nearness threshold of each other.
    std::vector<size_t> support_indices;
    const auto& catalog = support_catalog();
    for (int s = 0; s < cfg.support_objects; ++s) {
        const SupportInfo& info = catalog[s % catalog.size()];
        bool done = false;
        for (int attempt = 0; attempt < 80 && !done; ++attempt) {
            const int x0 = 1 + static_cast<int>(rand_below(rng, std::max(1, scene.width - info.fw - 2)));
            const int y0 = 1 + static_cast<int>(rand_below(rng, std::max(1, scene.height - info.fh - 2)));
            std::vector<GridCell> cells;
            bool ok = true;
            auto blocked = blocked_grid(scene, kClearance);
            for (int dy = 0; dy < info.fh && ok; ++dy)
                for (int dx = 0; dx < info.fw && ok; ++dx) {
                    GridCell c{x0 + dx, y0 + dy};
                    cells.push_back(c);
                    if (!scene.in_bounds(c) || scene.column(c.x, c.y) > 0.0 ||
                        blocked[static_cast<size_t>(c.y) * scene.width + c.x])
                        ok = false;
                }
            if (!ok) continue;
            ObjectSpec obj;
            obj.instance_id = next_id();
            obj.category = info.category;
            obj.size_class = SizeClass::Large;
            obj.x = (x0 + info.fw / 2.0) * scene.cell_size;
            obj.y = (y0 + info.fh / 2.0) * scene.cell_size;
            obj.base_z = 0.0;
            obj.height = info.height;
            obj.footprint = cells;
            scene.objects.push_back(obj);
            if (!floor_connected(blocked_grid(scene, kClearance), scene.width, scene.height)) {
                scene.objects.pop_back();
                --obj_counter;
                continue;
            }
            support_indices.push_back(scene.objects.size() - 1);
            done = true;
        }
        if (!done) throw std::runtime_error("scene " + id + ": could not place support " + info.category);
    }

    // Goal-eligible common objects, two per support so each has a non-support
    // nearness relation for spatial descriptions.
    const auto& cats = common_categories();
    for (int i = 0; i < cfg.common_objects; ++i) {
        const size_t sup_idx = support_indices[(i / 2) % support_indices.size()];
        const ObjectSpec& sup = scene.objects[sup_idx];
        const GridCell cell = sup.footprint[rand_below(rng, sup.footprint.size())];
        ObjectSpec obj;
        obj.instance_id = next_id();
        obj.category = cats[i % cats.size()];
        obj.height = 0.1 + 0.025 * static_cast<double>(rand_below(rng, 7));
        obj.size_class = classify_size(scene.cell_size, obj.height, cfg.small_diag_threshold);
        obj.x = scene.cell_center_x(cell.x);
        obj.y = scene.cell_center_y(cell.y);
        obj.base_z = sup.top_z();
        obj.footprint = {cell};
        obj.on_top_of = sup.instance_id;
        obj.support_preposition = container_is_enclosing(sup.category) ? "in" : "on";
        const int ncolors = rand_below(rng, 5) == 0 ? 2 : 1;  // ~1.2 average
        std::set<std::string> chosen;
        while (static_cast<int>(chosen.size()) < ncolors)
            chosen.insert(color_catalog()[rand_below(rng, color_catalog().size())]);
        obj.colors.assign(chosen.begin(), chosen.end());
        if (rand_below(rng, 5) < 3)  // ~0.6 average
            obj.materials.push_back(material_catalog()[rand_below(rng, material_catalog().size())]);
        obj.goal_eligible = true;
        scene.objects.push_back(obj);
    }

    // Uncommon objects on the floor; tall enough to be obstacles, placement
    // must keep the floor connected.
    const auto& ucats = uncommon_categories();
    for (int i = 0; i < cfg.uncommon_objects; ++i) {
        bool done = false;
        for (int attempt = 0; attempt < 120 && !done; ++attempt) {
            auto blocked = blocked_grid(scene, kClearance);
            const int x0 = 1 + static_cast<int>(rand_below(rng, scene.width - 2));
            const int y0 = 1 + static_cast<int>(rand_below(rng, scene.height - 2));
            if (blocked[static_cast<size_t>(y0) * scene.width + x0]) continue;
            ObjectSpec obj;
            obj.instance_id = next_id();
            obj.category = ucats[i % ucats.size()];
            obj.x = scene.cell_center_x(x0);
            obj.y = scene.cell_center_y(y0);
            obj.base_z = 0.0;
            obj.height = 0.3 + 0.05 * static_cast<double>(rand_below(rng, 7));
            obj.size_class = classify_size(scene.cell_size, obj.height, cfg.small_diag_threshold);
            obj.footprint = {GridCell{x0, y0}};
            obj.is_uncommon = true;
            obj.goal_eligible = true;
            scene.objects.push_back(obj);
            if (!floor_connected(blocked_grid(scene, kClearance), scene.width, scene.height)) {
                scene.objects.pop_back();
                --obj_counter;
                continue;
            }
            done = true;
        }
        if (!done) throw std::runtime_error("scene " + id + ": could not place uncommon object");
    }

    compute_relations(scene, cfg.near_threshold);
    return scene;
}

namespace {

std::vector<const ObjectSpec*> eligible_goals(const Scene& scene, bool uncommon, int count) {
    std::vector<const ObjectSpec*> out;
    for (const auto& o : scene.objects)
        if (o.goal_eligible && o.is_uncommon == uncommon && !o.is_distractor) out.push_back(&o);
    if (static_cast<int>(out.size()) < count)
        throw std::runtime_error("scene " + scene.id + " has too few eligible " +
                                 (uncommon ? "uncommon" : "common") + " objects");
    out.resize(count);
    return out;
}

GridCell find_free_cell(const Scene& scene, const std::set<GridCell>& avoid,
                        std::mt19937_64& rng, bool clear_neighbors) {
    auto blocked = blocked_grid(scene, kClearance);
    auto is_blocked = [&](int x, int y) {
        if (x < 0 || y < 0 || x >= scene.width || y >= scene.height) return true;
        return blocked[static_cast<size_t>(y) * scene.width + x] != 0;
    };
    std::vector<GridCell> candidates;
    for (int y = 1; y < scene.height - 1; ++y)
        for (int x = 1; x < scene.width - 1; ++x) {
            GridCell c{x, y};
            if (is_blocked(x, y)) continue;
            if (avoid.count(c)) continue;
            if (clear_neighbors) {
                // An agent spawned here must be able to move: its collision
                // disc needs clearance beyond the cell itself.
                bool clear = true;
                for (int dy = -1; dy <= 1 && clear; ++dy)
                    for (int dx = -1; dx <= 1 && clear; ++dx)
                        if (is_blocked(x + dx, y + dy)) clear = false;
                if (!clear) continue;
            }
            bool occupied = false;
            for (const auto& o : scene.objects)
                for (const auto& f : o.footprint)
                    if (f == c) occupied = true;
            if (!occupied) candidates.push_back(c);
        }
    if (candidates.empty()) throw std::runtime_error("no free cell available in " + scene.id);
    return candidates[rng() % candidates.size()];
}

std::string pick_different_color(const ObjectSpec& obj, std::mt19937_64& rng) {
    const auto& colors = color_catalog();
    for (int attempt = 0; attempt < 64; ++attempt) {
        const std::string& c = colors[rng() % colors.size()];
        if (std::find(obj.colors.begin(), obj.colors.end(), c) == obj.colors.end()) return c;
    }
    throw std::runtime_error("could not pick distractor color");
}

}  // namespace

Suite generate_pasture_suite(const std::vector<Scene>& base_scenes, const SuiteConfig& cfg,
                             uint64_t seed) {
    Suite suite;
    suite.seed = seed;
    std::mt19937_64 rng(seed);

    for (const auto& base : base_scenes) {
        auto commons = eligible_goals(base, false, cfg.objects_per_scene);
        auto uncommons = eligible_goals(base, true, cfg.objects_per_scene);

        // Start poses, shared by all split variants of this scene.
        std::set<GridCell> start_cells;
        std::vector<Pose> starts;
        for (int k = 0; k < cfg.starts_per_scene; ++k) {
            GridCell c = find_free_cell(base, start_cells, rng, /*clear_neighbors=*/true);
            start_cells.insert(c);
            const double yaw =
                normalize_angle(deg_to_rad(30.0 * static_cast<double>(rng() % 12)));
            starts.push_back(Pose{base.cell_center_x(c.x), base.cell_center_y(c.y), yaw});
        }

        // Distractor variant: a second, attribute-differing instance per goal category.
        Scene distract = base;
        distract.id = base.id + "-distract";
        std::map<std::string, std::string> distractor_of;  // goal id -> distractor id
        int dcount = 0;
        for (const auto* goal : commons) {
            GridCell c;
            try {
                c = find_free_cell(distract, start_cells, rng, /*clear_neighbors=*/false);
            } catch (const std::runtime_error&) {
                throw std::runtime_error("infeasible distractor placement in scene " + base.id +
                                         " for category " + goal->category);
            }
            ObjectSpec d;
            d.instance_id = base.id + ":d" + std::to_string(dcount++);
            d.category = goal->category;
            d.colors = {pick_different_color(*goal, rng)};
            d.height = 0.15;
            d.size_class = SizeClass::Small;
            d.x = distract.cell_center_x(c.x);
            d.y = distract.cell_center_y(c.y);
            d.base_z = 0.0;
            d.footprint = {c};
            d.is_distractor = true;
            distract.objects.push_back(d);
            distractor_of[goal->instance_id] = d.instance_id;
        }
        compute_relations(distract, cfg.near_threshold);

        // Hidden variant: visible goal instances removed, hidden copies in containers.
        std::vector<std::string> containers;
        for (const auto& o : base.objects)
            if (o.size_class == SizeClass::Large && !o.goal_eligible && !o.hidden())
                containers.push_back(o.instance_id);
        if (containers.empty())
            throw std::runtime_error("scene " + base.id + " has no hidden-object containers");

        Scene hidden = base;
        hidden.id = base.id + "-hidden";
        std::map<std::string, std::string> hidden_of;  // goal id -> hidden copy id
        {
            std::set<std::string> goal_ids;
            for (const auto* g : commons) goal_ids.insert(g->instance_id);
            std::vector<ObjectSpec> kept;
            for (const auto& o : hidden.objects)
                if (!goal_ids.count(o.instance_id)) kept.push_back(o);
            hidden.objects = std::move(kept);
            int hidx = 0;
            for (const auto* goal : commons) {
                const std::string& container_id = containers[hidx % containers.size()];
                const ObjectSpec* container = base.find_object(container_id);
                ObjectSpec h = *goal;
                h.instance_id = goal->instance_id + "#hidden";
                h.footprint.clear();
                h.on_top_of.reset();
                h.near_ids.clear();
                h.hidden_in_or_under = container_id;
                h.x = container->x;
                h.y = container->y;
                h.base_z = 0.05;
                hidden.objects.push_back(h);
                hidden_of[goal->instance_id] = h.instance_id;
                ++hidx;
            }
        }
        compute_relations(hidden, cfg.near_threshold);

        // Hidden-distract variant: hidden copies plus the visible instances back.
        Scene hidden_distract = hidden;
        hidden_distract.id = base.id + "-hiddendistract";
        for (const auto* goal : commons) {
            ObjectSpec visible = *goal;
            visible.is_distractor = true;
            hidden_distract.objects.push_back(visible);
        }
        compute_relations(hidden_distract, cfg.near_threshold);

        auto scene_for = [&](Split s) -> const Scene& {
            switch (s) {
                case Split::AppearanceDistract:
                case Split::SpatialDistract: return distract;
                case Split::Hidden: return hidden;
                case Split::HiddenDistract: return hidden_distract;
                default: return base;
            }
        };

        for (Split s : cfg.splits) {
            const Scene& variant = scene_for(s);
            const auto& goals = (s == Split::Uncommon) ? uncommons : commons;
            for (const auto* goal : goals) {
                Task t;
                t.split = s;
                t.scene_id = variant.id;
                switch (s) {
                    case Split::Uncommon:
                    case Split::Appearance:
                    case Split::Spatial:
                        t.goal_description = render_description(base, *goal, s);
                        t.goal_instance_ids = {goal->instance_id};
                        break;
                    case Split::AppearanceDistract:
                    case Split::SpatialDistract:
                        t.goal_description = render_description(base, *goal, s);
                        t.goal_instance_ids = {goal->instance_id};
                        break;
                    case Split::Hidden:
                    case Split::HiddenDistract: {
                        const std::string& hid = hidden_of.at(goal->instance_id);
                        t.goal_description =
                            render_description(variant, *variant.find_object(hid), Split::Hidden);
                        t.goal_instance_ids = {hid};
                        break;
                    }
                    case Split::Plain:
                        t.goal_description = goal->category;
                        t.goal_instance_ids = {goal->instance_id};
                        break;
                }
                for (size_t k = 0; k < starts.size(); ++k) {
                    Task task = t;
                    task.start_pose = starts[k];
                    task.id = std::string(split_name(s)) + "/" + variant.id + "/" +
                              goal->instance_id + "/" + std::to_string(k);
                    suite.tasks.push_back(task);
                }
            }
        }

        suite.scenes.push_back(base);
        suite.scenes.push_back(distract);
        suite.scenes.push_back(hidden);
        suite.scenes.push_back(hidden_distract);
    }
    return suite;
}

}  // namespace cow
