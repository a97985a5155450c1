#include "cow/serialize.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cow {

using Json = nlohmann::ordered_json;

namespace {

Json pose_to_json(const Pose& p) { return Json{{"x", p.x}, {"y", p.y}, {"yaw", p.yaw}}; }

Pose pose_from_json(const Json& j) {
    return Pose{j.at("x").get<double>(), j.at("y").get<double>(), j.at("yaw").get<double>()};
}

Json object_to_json(const ObjectSpec& o) {
    Json j;
    j["instance_id"] = o.instance_id;
    j["category"] = o.category;
    j["size_class"] = o.size_class == SizeClass::Small ? "small" : "large";
    j["colors"] = o.colors;
    j["materials"] = o.materials;
    j["position"] = Json{{"x", o.x}, {"y", o.y}};
    j["base_z"] = o.base_z;
    j["height"] = o.height;
    Json fp = Json::array();
    for (const auto& c : o.footprint) fp.push_back(Json{{"x", c.x}, {"y", c.y}});
    j["footprint"] = fp;
    if (o.on_top_of) j["relation_on_top_of"] = *o.on_top_of;
    j["support_preposition"] = o.support_preposition;
    j["relations_near"] = o.near_ids;
    if (o.hidden_in_or_under) j["hidden_in_or_under"] = *o.hidden_in_or_under;
    j["is_distractor"] = o.is_distractor;
    j["is_uncommon"] = o.is_uncommon;
    j["goal_eligible"] = o.goal_eligible;
    return j;
}

ObjectSpec object_from_json(const Json& j) {
    ObjectSpec o;
    o.instance_id = j.at("instance_id").get<std::string>();
    o.category = j.at("category").get<std::string>();
    o.size_class = j.at("size_class").get<std::string>() == "small" ? SizeClass::Small
                                                                    : SizeClass::Large;
    o.colors = j.at("colors").get<std::vector<std::string>>();
    o.materials = j.at("materials").get<std::vector<std::string>>();
    o.x = j.at("position").at("x").get<double>();
    o.y = j.at("position").at("y").get<double>();
    o.base_z = j.at("base_z").get<double>();
    o.height = j.at("height").get<double>();
    for (const auto& c : j.at("footprint"))
        o.footprint.push_back(GridCell{c.at("x").get<int>(), c.at("y").get<int>()});
    if (j.contains("relation_on_top_of")) o.on_top_of = j.at("relation_on_top_of").get<std::string>();
    o.support_preposition = j.at("support_preposition").get<std::string>();
    o.near_ids = j.at("relations_near").get<std::vector<std::string>>();
    if (j.contains("hidden_in_or_under"))
        o.hidden_in_or_under = j.at("hidden_in_or_under").get<std::string>();
    o.is_distractor = j.at("is_distractor").get<bool>();
    o.is_uncommon = j.at("is_uncommon").get<bool>();
    o.goal_eligible = j.at("goal_eligible").get<bool>();
    return o;
}

Json scene_to_json(const Scene& s) {
    Json j;
    j["id"] = s.id;
    j["cell_size"] = s.cell_size;
    j["bounds"] = Json{{"width", s.width}, {"height", s.height}};
    j["floor_height"] = s.floor_height;
    j["heightmap"] = s.heightmap;
    Json objs = Json::array();
    for (const auto& o : s.objects) objs.push_back(object_to_json(o));
    j["objects"] = objs;
    return j;
}

Scene scene_from_json(const Json& j) {
    Scene s;
    s.id = j.at("id").get<std::string>();
    s.cell_size = j.at("cell_size").get<double>();
    s.width = j.at("bounds").at("width").get<int>();
    s.height = j.at("bounds").at("height").get<int>();
    s.floor_height = j.at("floor_height").get<double>();
    s.heightmap = j.at("heightmap").get<std::vector<double>>();
    for (const auto& o : j.at("objects")) s.objects.push_back(object_from_json(o));
    return s;
}

Json task_to_json(const Task& t) {
    Json j;
    j["id"] = t.id;
    j["scene_id"] = t.scene_id;
    j["goal_description"] = t.goal_description;
    j["goal_instance_ids"] = t.goal_instance_ids;
    j["start_pose"] = pose_to_json(t.start_pose);
    j["split"] = split_name(t.split);
    return j;
}

Task task_from_json(const Json& j) {
    Task t;
    t.id = j.at("id").get<std::string>();
    t.scene_id = j.at("scene_id").get<std::string>();
    t.goal_description = j.at("goal_description").get<std::string>();
    t.goal_instance_ids = j.at("goal_instance_ids").get<std::vector<std::string>>();
    t.start_pose = pose_from_json(j.at("start_pose"));
    t.split = split_from_name(j.at("split").get<std::string>());
    return t;
}

}  // namespace

std::string suite_to_json(const Suite& suite) {
    Json j;
    j["format"] = "cow-suite v1";
    j["seed"] = suite.seed;
    Json scenes = Json::array();
    for (const auto& s : suite.scenes) scenes.push_back(scene_to_json(s));
    j["scenes"] = scenes;
    Json tasks = Json::array();
    for (const auto& t : suite.tasks) tasks.push_back(task_to_json(t));
    j["tasks"] = tasks;
    return j.dump(2) + "\n";
}

Suite suite_from_json(const std::string& text) {
    const Json j = Json::parse(text);
    if (j.at("format").get<std::string>() != "cow-suite v1")
        throw std::runtime_error("unsupported suite format");
    Suite suite;
    suite.seed = j.at("seed").get<uint64_t>();
    for (const auto& s : j.at("scenes")) suite.scenes.push_back(scene_from_json(s));
    for (const auto& t : j.at("tasks")) suite.tasks.push_back(task_from_json(t));
    return suite;
}

void save_suite(const Suite& suite, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write suite: " + path);
    out << suite_to_json(suite);
}

Suite load_suite(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read suite: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return suite_from_json(buf.str());
}

std::string trajectory_to_jsonl(const Trajectory& traj) {
    std::ostringstream out;
    Json header;
    header["format"] = "cow-traj v1";
    header["task_id"] = traj.task_id;
    header["scene_id"] = traj.scene_id;
    header["seed"] = traj.seed;
    header["terminal"] = traj.terminal == TerminalStatus::Stopped ? "stopped" : "budget";
    header["final_true_pose"] = pose_to_json(traj.final_true_pose);
    header["final_est_pose"] = pose_to_json(traj.final_est_pose);
    out << header.dump() << "\n";
    for (const auto& r : traj.records) {
        Json j;
        j["step"] = r.step;
        j["action"] = action_name(r.action);
        j["succeeded"] = r.action_succeeded;
        j["est_pose"] = pose_to_json(r.est_pose);
        j["true_pose"] = pose_to_json(r.true_pose);
        j["localizer_fired"] = r.localizer_fired;
        j["target_in_view"] = r.target_in_view;
        j["fired_on_target"] = r.fired_on_target;
        out << j.dump() << "\n";
    }
    return out.str();
}

Trajectory trajectory_from_jsonl(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty trajectory document");
    const Json header = Json::parse(line);
    if (header.at("format").get<std::string>() != "cow-traj v1")
        throw std::runtime_error("unsupported trajectory format");
    Trajectory traj;
    traj.task_id = header.at("task_id").get<std::string>();
    traj.scene_id = header.at("scene_id").get<std::string>();
    traj.seed = header.at("seed").get<uint64_t>();
    traj.terminal = header.at("terminal").get<std::string>() == "stopped"
                        ? TerminalStatus::Stopped
                        : TerminalStatus::BudgetExhausted;
    traj.final_true_pose = pose_from_json(header.at("final_true_pose"));
    traj.final_est_pose = pose_from_json(header.at("final_est_pose"));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const Json j = Json::parse(line);
        StepRecord r;
        r.step = j.at("step").get<int>();
        r.action = action_from_name(j.at("action").get<std::string>());
        r.action_succeeded = j.at("succeeded").get<bool>();
        r.est_pose = pose_from_json(j.at("est_pose"));
        r.true_pose = pose_from_json(j.at("true_pose"));
        r.localizer_fired = j.at("localizer_fired").get<bool>();
        r.target_in_view = j.at("target_in_view").get<bool>();
        r.fired_on_target = j.at("fired_on_target").get<bool>();
        traj.records.push_back(r);
    }
    return traj;
}

void save_trajectory(const Trajectory& traj, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trajectory: " + path);
    out << trajectory_to_jsonl(traj);
}

Trajectory load_trajectory(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read trajectory: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return trajectory_from_jsonl(buf.str());
}

uint64_t config_hash(const std::string& canonical) {
    uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string config_hash_hex(const std::string& canonical) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(config_hash(canonical)));
    return std::string(buf);
}

std::string task_id_to_filename(const std::string& task_id) {
    std::string out = task_id;
    for (char& c : out)
        if (c == '/' || c == ':' || c == '#') c = '_';
    return out;
}

}  // namespace cow
