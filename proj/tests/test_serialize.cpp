#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "cow/serialize.hpp"

using namespace cow;

namespace {

Suite small_suite() {
    SceneGenConfig gcfg;
    gcfg.common_objects = 2;
    gcfg.uncommon_objects = 2;
    gcfg.support_objects = 2;
    Scene base = generate_scene(gcfg, "s0", 9);
    SuiteConfig cfg;
    cfg.objects_per_scene = 2;
    cfg.starts_per_scene = 1;
    return generate_pasture_suite({base}, cfg, 31);
}

Trajectory small_trajectory() {
    Trajectory t;
    t.task_id = "uncommon/s0/obj0/start1";
    t.scene_id = "s0";
    t.terminal = TerminalStatus::Stopped;
    t.seed = 0xdeadbeefULL;
    for (int i = 0; i < 4; ++i) {
        StepRecord r;
        r.step = i;
        r.action = i == 3 ? Action::Stop : Action::MoveForward;
        r.action_succeeded = i != 1;
        r.est_pose = Pose{0.25 * i, 0.03 * i, 0.1 * i};
        r.true_pose = Pose{0.25 * i + 0.001, 0.03 * i - 0.002, 0.1 * i + 0.0001};
        r.localizer_fired = i == 2;
        r.target_in_view = i >= 1;
        r.fired_on_target = i == 2;
        t.records.push_back(r);
    }
    t.final_true_pose = t.records.back().true_pose;
    t.final_est_pose = t.records.back().est_pose;
    return t;
}

}  // namespace

TEST_CASE("suite reserialization is byte identical") {
    Suite suite = small_suite();
    const std::string a = suite_to_json(suite);
    Suite loaded = suite_from_json(a);
    const std::string b = suite_to_json(loaded);
    CHECK(a == b);
    CHECK(a.find("cow-suite v1") != std::string::npos);
    CHECK(!a.empty());
    CHECK(a.back() == '\n');
}

TEST_CASE("suite round trip preserves every field") {
    Suite suite = small_suite();
    Suite back = suite_from_json(suite_to_json(suite));
    CHECK(back.seed == suite.seed);
    REQUIRE(back.scenes.size() == suite.scenes.size());
    REQUIRE(back.tasks.size() == suite.tasks.size());
    for (size_t i = 0; i < suite.scenes.size(); ++i) {
        const Scene& a = suite.scenes[i];
        const Scene& b = back.scenes[i];
        CHECK(a.id == b.id);
        CHECK(a.cell_size == b.cell_size);
        CHECK(a.heightmap == b.heightmap);
        REQUIRE(a.objects.size() == b.objects.size());
        for (size_t j = 0; j < a.objects.size(); ++j) {
            const ObjectSpec& x = a.objects[j];
            const ObjectSpec& y = b.objects[j];
            CHECK(x.instance_id == y.instance_id);
            CHECK(x.category == y.category);
            CHECK(x.size_class == y.size_class);
            CHECK(x.colors == y.colors);
            CHECK(x.materials == y.materials);
            CHECK(x.x == y.x);
            CHECK(x.y == y.y);
            CHECK(x.base_z == y.base_z);
            CHECK(x.height == y.height);
            CHECK(x.footprint == y.footprint);
            CHECK(x.on_top_of == y.on_top_of);
            CHECK(x.support_preposition == y.support_preposition);
            CHECK(x.near_ids == y.near_ids);
            CHECK(x.hidden_in_or_under == y.hidden_in_or_under);
            CHECK(x.is_distractor == y.is_distractor);
            CHECK(x.is_uncommon == y.is_uncommon);
            CHECK(x.goal_eligible == y.goal_eligible);
        }
    }
    for (size_t i = 0; i < suite.tasks.size(); ++i) {
        const Task& a = suite.tasks[i];
        const Task& b = back.tasks[i];
        CHECK(a.id == b.id);
        CHECK(a.scene_id == b.scene_id);
        CHECK(a.goal_description == b.goal_description);
        CHECK(a.goal_instance_ids == b.goal_instance_ids);
        CHECK(a.start_pose.x == b.start_pose.x);
        CHECK(a.start_pose.y == b.start_pose.y);
        CHECK(a.start_pose.yaw == b.start_pose.yaw);
        CHECK(a.split == b.split);
    }
}

TEST_CASE("suite file save and load") {
    Suite suite = small_suite();
    const std::string path = "test_suite.json";
    save_suite(suite, path);
    Suite back = load_suite(path);
    CHECK(suite_to_json(back) == suite_to_json(suite));
    std::remove(path.c_str());
    CHECK_THROWS(load_suite("no_such_suite.json"));
}

TEST_CASE("malformed suite documents are rejected") {
    CHECK_THROWS(suite_from_json("not json at all"));
    CHECK_THROWS(suite_from_json("{\"format\": \"something else\"}"));
    CHECK_THROWS(suite_from_json("{}"));
}

TEST_CASE("trajectory jsonl round trip") {
    Trajectory t = small_trajectory();
    const std::string text = trajectory_to_jsonl(t);
    // Header plus one line per record.
    int lines = 0;
    for (char c : text)
        if (c == '\n') ++lines;
    CHECK(lines == 1 + static_cast<int>(t.records.size()));
    CHECK(text.find("cow-traj v1") != std::string::npos);

    Trajectory back = trajectory_from_jsonl(text);
    CHECK(back.task_id == t.task_id);
    CHECK(back.scene_id == t.scene_id);
    CHECK(back.terminal == t.terminal);
    CHECK(back.seed == t.seed);
    REQUIRE(back.records.size() == t.records.size());
    for (size_t i = 0; i < t.records.size(); ++i) {
        const StepRecord& a = t.records[i];
        const StepRecord& b = back.records[i];
        CHECK(a.step == b.step);
        CHECK(a.action == b.action);
        CHECK(a.action_succeeded == b.action_succeeded);
        CHECK(a.est_pose.x == b.est_pose.x);
        CHECK(a.est_pose.y == b.est_pose.y);
        CHECK(a.est_pose.yaw == b.est_pose.yaw);
        CHECK(a.true_pose.x == b.true_pose.x);
        CHECK(a.localizer_fired == b.localizer_fired);
        CHECK(a.target_in_view == b.target_in_view);
        CHECK(a.fired_on_target == b.fired_on_target);
    }
    CHECK(back.final_true_pose.x == t.final_true_pose.x);
    CHECK(back.final_est_pose.yaw == t.final_est_pose.yaw);
    // Reserialization is stable.
    CHECK(trajectory_to_jsonl(back) == text);
}

TEST_CASE("trajectory file save and load") {
    Trajectory t = small_trajectory();
    const std::string path = "test_traj.jsonl";
    save_trajectory(t, path);
    Trajectory back = load_trajectory(path);
    CHECK(trajectory_to_jsonl(back) == trajectory_to_jsonl(t));
    std::remove(path.c_str());
    CHECK_THROWS(load_trajectory("no_such_traj.jsonl"));
    CHECK_THROWS(trajectory_from_jsonl("junk\n"));
}

TEST_CASE("config hash is stable and collision-sensitive") {
    // FNV-1a 64-bit frozen vectors.
    CHECK(config_hash("") == 0xcbf29ce484222325ULL);
    CHECK(config_hash("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(config_hash("foobar") == 0x85944171f73967e8ULL);
    CHECK(config_hash("x") != config_hash("y"));
    const std::string hex = config_hash_hex("foobar");
    CHECK(hex == "85944171f73967e8");
}

TEST_CASE("task id flattening produces filesystem-safe names") {
    CHECK(task_id_to_filename("uncommon/s0/obj1/start0") == "uncommon_s0_obj1_start0");
    const std::string flat = task_id_to_filename("a/b:c#d");
    CHECK(flat.find('/') == std::string::npos);
    CHECK(flat.find(':') == std::string::npos);
    CHECK(flat.find('#') == std::string::npos);
    // Distinct ids stay distinct for the id shapes the generator emits.
    CHECK(task_id_to_filename("a/b") != task_id_to_filename("a/c"));
}
