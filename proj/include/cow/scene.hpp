#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cow/geometry.hpp"

namespace cow {

struct GridCell {
    int x = 0;
    int y = 0;
    friend bool operator==(const GridCell&, const GridCell&) = default;
    friend auto operator<=>(const GridCell&, const GridCell&) = default;
};

enum class SizeClass { Small, Large };

struct ObjectSpec {
    std::string instance_id;
    std::string category;
    SizeClass size_class = SizeClass::Small;
    std::vector<std::string> colors;
    std::vector<std::string> materials;
    double x = 0.0;  // center, meters
    double y = 0.0;
    double base_z = 0.0;   // bottom of the object column
    double height = 0.0;   // vertical extent
    std::vector<GridCell> footprint;  // empty for hidden objects
    std::optional<std::string> on_top_of;
    std::string support_preposition = "on";  // "on" or "in", used by descriptions
    std::vector<std::string> near_ids;
    std::optional<std::string> hidden_in_or_under;
    bool is_distractor = false;
    bool is_uncommon = false;
    bool goal_eligible = false;

    bool hidden() const { return hidden_in_or_under.has_value(); }
    double top_z() const { return base_z + height; }
};

// 2.5-D world: a heightmap of structural columns (walls, 0 = floor) plus
// attributed objects with their own columns.
struct Scene {
    std::string id;
    double cell_size = 0.25;
    int width = 0;   // cells
    int height = 0;  // cells
    double floor_height = 0.0;
    std::vector<double> heightmap;  // row-major, width*height
    std::vector<ObjectSpec> objects;

    double column(int cx, int cy) const { return heightmap[static_cast<size_t>(cy) * width + cx]; }
    double& column(int cx, int cy) { return heightmap[static_cast<size_t>(cy) * width + cx]; }
    bool in_bounds(const GridCell& c) const {
        return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height;
    }
    GridCell cell_of(double wx, double wy) const {
        return GridCell{static_cast<int>(std::floor(wx / cell_size)),
                        static_cast<int>(std::floor(wy / cell_size))};
    }
    double cell_center_x(int cx) const { return (cx + 0.5) * cell_size; }
    double cell_center_y(int cy) const { return (cy + 0.5) * cell_size; }
    const ObjectSpec* find_object(const std::string& instance_id) const;
};

enum class Split {
    Uncommon,
    Appearance,
    Spatial,
    AppearanceDistract,
    SpatialDistract,
    Hidden,
    HiddenDistract,
    Plain,
};

const char* split_name(Split s);
Split split_from_name(const std::string& name);

// The seven benchmark splits (Plain is a fixture-only extra).
std::vector<Split> all_benchmark_splits();

struct Task {
    std::string id;
    std::string scene_id;
    std::string goal_description;
    std::vector<std::string> goal_instance_ids;
    Pose start_pose;
    Split split = Split::Plain;
};

// Description grammar for one object under a given split mode. The scene
// resolves related instances to their category names.
std::string render_description(const Scene& scene, const ObjectSpec& obj, Split mode);

// Fill symmetric nearness relations from center distances (closed inequality).
void compute_relations(Scene& scene, double near_threshold);

// Cells an agent cannot traverse: structural columns or object columns that
// cross the clearance height band.
std::vector<uint8_t> blocked_grid(const Scene& scene, double clearance_height);

struct SceneGenConfig {
    int width_cells = 32;
    int height_cells = 32;
    double cell_size = 0.25;
    double wall_height = 2.0;
    int interior_walls = 3;
    int support_objects = 6;
    int common_objects = 12;
    int uncommon_objects = 12;
    double near_threshold = 1.0;
    double small_diag_threshold = 0.4;
};

// Procedural room: perimeter walls, interior obstacles that keep the floor
// fully connected, supports, and attributed goal objects.
Scene generate_scene(const SceneGenConfig& cfg, const std::string& id, uint64_t seed);

struct SuiteConfig {
    int objects_per_scene = 12;
    int starts_per_scene = 2;
    std::vector<Split> splits = all_benchmark_splits();
    double near_threshold = 1.0;
};

struct Suite {
    std::vector<Scene> scenes;  // base scenes plus derived split variants
    std::vector<Task> tasks;
    uint64_t seed = 0;
};

// Expand base scenes into split variants (distractor / hidden / hidden-distract)
// and emit one task per split x scene x goal object x start pose.
Suite generate_pasture_suite(const std::vector<Scene>& base_scenes, const SuiteConfig& cfg,
                             uint64_t seed);

}  // namespace cow
