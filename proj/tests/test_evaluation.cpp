#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cow/evaluation.hpp"

using namespace cow;

namespace {

Scene eval_room(bool sealed_goal = false) {
    Scene s;
    s.id = "eval-room";
    s.cell_size = 0.25;
    s.width = 32;
    s.height = 32;
    s.heightmap.assign(32 * 32, 0.0);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            if (x == 0 || y == 0 || x == 31 || y == 31) s.column(x, y) = 2.0;
    if (sealed_goal)
        for (int y = 0; y < 32; ++y) s.column(20, y) = 2.0;
    ObjectSpec o;
    o.instance_id = "vase1";
    o.category = "vase";
    o.height = 0.8;
    o.footprint = {GridCell{26, 15}, GridCell{27, 15}};
    o.x = 27 * 0.25;
    o.y = 15.5 * 0.25;
    o.goal_eligible = true;
    s.objects.push_back(o);
    return s;
}

Task eval_task(const Scene& s) {
    Task t;
    t.id = "ep-eval";
    t.scene_id = s.id;
    t.goal_description = "vase";
    t.goal_instance_ids = {"vase1"};
    t.start_pose = Pose{1.0, 15.5 * 0.25, 0.0};
    t.split = Split::Appearance;
    return t;
}

StepRecord rec(int step, Action a, Pose true_pose, bool seen = false, bool fired = false) {
    StepRecord r;
    r.step = step;
    r.action = a;
    r.true_pose = true_pose;
    r.target_in_view = seen;
    r.fired_on_target = fired;
    return r;
}

EpisodeResult result(bool success, double spl_term, Split split = Split::Appearance,
                     const std::string& category = "vase", const std::string& scene = "s0",
                     bool unreachable = false) {
    EpisodeResult r;
    r.success = success;
    r.spl_term = spl_term;
    r.split = split;
    r.category = category;
    r.scene_id = scene;
    r.unreachable = unreachable;
    return r;
}

}  // namespace

TEST_CASE("evaluate_episode computes path length from true poses") {
    Scene s = eval_room();
    RenderGrid grid(s);
    Task task = eval_task(s);
    AgentConfig cfg;
    Trajectory traj;
    traj.task_id = task.id;
    traj.terminal = TerminalStatus::Stopped;
    // Move 4 x 0.25m east, one failed move (pose unchanged), then stop.
    Pose p = task.start_pose;
    int t = 0;
    for (int i = 0; i < 4; ++i) {
        p.x += 0.25;
        traj.records.push_back(rec(t++, Action::MoveForward, p, true, true));
    }
    traj.records.push_back(rec(t++, Action::MoveForward, p));  // failed: no displacement
    traj.records.push_back(rec(t++, Action::Stop, p));
    traj.final_true_pose = p;

    EpisodeResult res = evaluate_episode(grid, task, traj, cfg);
    CHECK(res.path_length == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(res.steps == 6);
    CHECK(res.category == "vase");
    CHECK(res.split == Split::Appearance);
    // 2m from the goal center: not a success even though we stopped.
    CHECK(!res.success);
    CHECK(res.spl_term == doctest::Approx(0.0));
}

TEST_CASE("successful stop near the goal yields the exact SPL term") {
    Scene s = eval_room();
    RenderGrid grid(s);
    Task task = eval_task(s);
    AgentConfig cfg;
    auto shortest = shortest_path_length(grid, task.start_pose, task, cfg);
    REQUIRE(shortest.has_value());

    // Wander far (actual > shortest), then stop within range of the goal.
    Trajectory traj;
    traj.terminal = TerminalStatus::Stopped;
    Pose p = task.start_pose;
    int t = 0;
    double actual = 0.0;
    // Detour north then come back while heading east.
    for (int i = 0; i < 8; ++i) {
        p.y += 0.25;
        actual += 0.25;
        traj.records.push_back(rec(t++, Action::MoveForward, p, true, true));
    }
    for (int i = 0; i < 8; ++i) {
        p.y -= 0.25;
        actual += 0.25;
        traj.records.push_back(rec(t++, Action::MoveForward, p, true, true));
    }
    while (p.x < 6.0) {
        p.x += 0.25;
        actual += 0.25;
        traj.records.push_back(rec(t++, Action::MoveForward, p, true, true));
    }
    traj.records.push_back(rec(t++, Action::Stop, p));
    traj.final_true_pose = p;
    REQUIRE(check_success(grid, task, p, cfg));

    EpisodeResult res = evaluate_episode(grid, task, traj, cfg);
    CHECK(res.success);
    CHECK(res.path_length == doctest::Approx(actual).epsilon(1e-12));
    CHECK(res.shortest_path == doctest::Approx(*shortest).epsilon(1e-12));
    CHECK(res.spl_term == doctest::Approx(*shortest / std::max(actual, *shortest)).epsilon(1e-12));
    CHECK(res.spl_term < 1.0);  // the detour cost something
    CHECK(res.failure_mode == FailureMode::None);
}

TEST_CASE("budget exhaustion near the goal is still a failure") {
    Scene s = eval_room();
    RenderGrid grid(s);
    Task task = eval_task(s);
    AgentConfig cfg;
    Trajectory traj;
    traj.terminal = TerminalStatus::BudgetExhausted;
    Pose near_goal{6.0, 15.5 * 0.25, 0.0};
    traj.records.push_back(rec(0, Action::MoveForward, near_goal, true, true));
    traj.final_true_pose = near_goal;
    REQUIRE(check_success(grid, task, near_goal, cfg));  // position alone would pass
    EpisodeResult res = evaluate_episode(grid, task, traj, cfg);
    CHECK(!res.success);  // no Stop, no credit
    CHECK(res.spl_term == doctest::Approx(0.0));
    CHECK(res.failure_mode == FailureMode::Planning);
}

TEST_CASE("failure taxonomy distinguishes the three modes") {
    Trajectory never_seen;
    never_seen.records.push_back(rec(0, Action::MoveForward, Pose{}, false, false));
    never_seen.records.push_back(rec(1, Action::Stop, Pose{}, false, false));
    CHECK(classify_failure(never_seen, false) == FailureMode::Exploration);

    Trajectory seen_not_fired;
    seen_not_fired.records.push_back(rec(0, Action::MoveForward, Pose{}, true, false));
    seen_not_fired.records.push_back(rec(1, Action::Stop, Pose{}, false, false));
    CHECK(classify_failure(seen_not_fired, false) == FailureMode::Localization);

    Trajectory fired_still_failed;
    fired_still_failed.records.push_back(rec(0, Action::MoveForward, Pose{}, true, true));
    fired_still_failed.records.push_back(rec(1, Action::Stop, Pose{}, false, false));
    CHECK(classify_failure(fired_still_failed, false) == FailureMode::Planning);

    CHECK(classify_failure(fired_still_failed, true) == FailureMode::None);
    // Firing without the goal in view on that frame still counts as fired-on
    // only when the flag says so; flags drive the call, frames are opaque here.
}

TEST_CASE("unreachable goals are flagged and excluded from aggregates") {
    Scene s = eval_room(/*sealed_goal=*/true);
    RenderGrid grid(s);
    Task task = eval_task(s);
    AgentConfig cfg;
    Trajectory traj;
    traj.terminal = TerminalStatus::Stopped;
    traj.records.push_back(rec(0, Action::Stop, task.start_pose));
    traj.final_true_pose = task.start_pose;
    EpisodeResult res = evaluate_episode(grid, task, traj, cfg);
    CHECK(res.unreachable);

    std::vector<EpisodeResult> mixed = {res, result(true, 1.0)};
    CHECK(success_rate(mixed) == doctest::Approx(1.0));
    CHECK(spl(mixed) == doctest::Approx(1.0));
    std::vector<EpisodeResult> only_unreachable = {res};
    CHECK_THROWS_AS(success_rate(only_unreachable), std::invalid_argument);
    CHECK_THROWS_AS(spl(only_unreachable), std::invalid_argument);
}

TEST_CASE("success rate and SPL are exact hand arithmetic") {
    std::vector<EpisodeResult> rs = {
        result(true, 1.0),  result(true, 0.5),   result(false, 0.0),
        result(true, 0.25), result(false, 0.0),
    };
    CHECK(success_rate(rs) == doctest::Approx(3.0 / 5.0).epsilon(1e-12));
    CHECK(spl(rs) == doctest::Approx((1.0 + 0.5 + 0.25) / 5.0).epsilon(1e-12));
    CHECK_THROWS_AS(success_rate({}), std::invalid_argument);
}

TEST_CASE("aggregate groups recombine to the global averages") {
    std::vector<EpisodeResult> rs = {
        result(true, 1.0, Split::Appearance, "vase", "s0"),
        result(false, 0.0, Split::Appearance, "mug", "s0"),
        result(true, 0.5, Split::Hidden, "vase", "s1"),
        result(true, 0.8, Split::Hidden, "mug", "s1"),
        result(false, 0.0, Split::Hidden, "vase", "s0", /*unreachable=*/true),
    };
    for (GroupBy gb : {GroupBy::SplitKey, GroupBy::Category, GroupBy::SceneKey}) {
        auto rows = aggregate(rs, gb);
        int n = 0;
        double suc = 0.0, s_sum = 0.0;
        for (const auto& row : rows) {
            n += row.n;
            suc += row.sr * row.n;
            s_sum += row.spl * row.n;
        }
        CHECK(n == 4);  // the unreachable row is not counted
        CHECK(suc / n == doctest::Approx(success_rate(rs)).epsilon(1e-12));
        CHECK(s_sum / n == doctest::Approx(spl(rs)).epsilon(1e-12));
    }
    auto by_split = aggregate(rs, GroupBy::SplitKey);
    REQUIRE(by_split.size() == 2);
    for (const auto& row : by_split) {
        if (row.group == std::string(split_name(Split::Appearance))) {
            CHECK(row.n == 2);
            CHECK(row.sr == doctest::Approx(0.5));
        } else {
            CHECK(row.n == 2);
            CHECK(row.sr == doctest::Approx(1.0));
            CHECK(row.spl == doctest::Approx(0.65));
        }
    }
}

TEST_CASE("aggregate csv formats six decimals") {
    std::vector<AggregateRow> rows = {{"appearance", 3, 1.0 / 3.0, 0.123456789}};
    const std::string csv = aggregate_csv(rows);
    CHECK(csv == "group,n,SR,SPL\nappearance,3,0.333333,0.123457\n");
}

TEST_CASE("spl term equals one on the optimal path and zero shortest path") {
    EpisodeResult a = result(true, 0.0);
    a.shortest_path = 2.0;
    a.path_length = 2.0;
    // evaluate_episode computes the term; here verify the formula boundary via
    // a real episode where the agent walks straight.
    Scene s = eval_room();
    RenderGrid grid(s);
    Task task = eval_task(s);
    AgentConfig cfg;
    auto shortest = shortest_path_length(grid, task.start_pose, task, cfg);
    REQUIRE(shortest.has_value());
    Trajectory traj;
    traj.terminal = TerminalStatus::Stopped;
    Pose p = task.start_pose;
    int t = 0;
    // Walk exactly along the row until within the success region, spending no
    // more than the oracle length (straight line, same lattice row).
    while (!check_success(grid, task, p, cfg)) {
        p.x += 0.25;
        traj.records.push_back(rec(t++, Action::MoveForward, p, true, true));
    }
    traj.records.push_back(rec(t++, Action::Stop, p));
    traj.final_true_pose = p;
    EpisodeResult res = evaluate_episode(grid, task, traj, cfg);
    CHECK(res.success);
    CHECK(res.spl_term >= res.shortest_path / std::max(res.path_length, res.shortest_path) - 1e-12);
    CHECK(res.spl_term <= 1.0);
}
