#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cow/tuning.hpp"

using namespace cow;

namespace {

BinaryMask mask_of(int w, int h, std::initializer_list<std::pair<int, int>> px) {
    BinaryMask m(w, h);
    for (auto [u, v] : px) m.set(u, v, true);
    return m;
}

LabeledFrame frame_with_gt(const std::string& category, const BinaryMask& gt) {
    LabeledFrame f;
    f.observation.depth = DepthImage(gt.width, gt.height, 10.0);
    f.gt_masks[category] = gt;
    return f;
}

}  // namespace

TEST_CASE("score_frame rule table") {
    const BinaryMask gt = mask_of(4, 4, {{1, 1}, {2, 1}, {1, 2}, {2, 2}});
    LabeledFrame frame = frame_with_gt("vase", gt);

    SUBCASE("empty prediction -> FN") {
        std::map<std::string, DetectionCounts> counts;
        score_frame({{"vase", BinaryMask(4, 4)}}, frame, counts);
        CHECK(counts["vase"].fn == 1);
        CHECK(counts["vase"].tp == 0);
        CHECK(counts["vase"].fp == 0);
        // Missing prediction entry also counts as FN.
        std::map<std::string, DetectionCounts> counts2;
        score_frame({}, frame, counts2);
        CHECK(counts2["vase"].fn == 1);
    }
    SUBCASE("score above half -> TP") {
        // 3 of 4 predicted pixels on target: 0.75 > 0.5.
        std::map<std::string, DetectionCounts> counts;
        score_frame({{"vase", mask_of(4, 4, {{1, 1}, {2, 1}, {1, 2}, {0, 0}})}}, frame, counts);
        CHECK(counts["vase"].tp == 1);
        CHECK(counts["vase"].fp == 0);
    }
    SUBCASE("score exactly half -> FP (strict inequality)") {
        std::map<std::string, DetectionCounts> counts;
        score_frame({{"vase", mask_of(4, 4, {{1, 1}, {0, 0}})}}, frame, counts);
        CHECK(counts["vase"].fp == 1);
        CHECK(counts["vase"].tp == 0);
    }
    SUBCASE("fully off-target -> FP") {
        std::map<std::string, DetectionCounts> counts;
        score_frame({{"vase", mask_of(4, 4, {{0, 0}})}}, frame, counts);
        CHECK(counts["vase"].fp == 1);
    }
    SUBCASE("absent-category predictions are FPs; silence is free") {
        LabeledFrame f;
        f.observation.depth = DepthImage(4, 4, 10.0);
        f.absent_categories = {"mug"};
        std::map<std::string, DetectionCounts> counts;
        score_frame({{"mug", mask_of(4, 4, {{3, 3}})}}, f, counts);
        CHECK(counts["mug"].fp == 1);
        CHECK(counts["mug"].fn == 0);
        std::map<std::string, DetectionCounts> quiet;
        score_frame({{"mug", BinaryMask(4, 4)}}, f, quiet);
        CHECK(quiet.find("mug") == quiet.end());
    }
    SUBCASE("dimension mismatch throws") {
        std::map<std::string, DetectionCounts> counts;
        std::map<std::string, BinaryMask> bad = {{"vase", BinaryMask(3, 3)}};
        CHECK_THROWS_AS(score_frame(bad, frame, counts), std::invalid_argument);
    }
    SUBCASE("counts accumulate across frames") {
        std::map<std::string, DetectionCounts> counts;
        score_frame({{"vase", mask_of(4, 4, {{1, 1}})}}, frame, counts);  // TP
        score_frame({{"vase", BinaryMask(4, 4)}}, frame, counts);         // FN
        score_frame({{"vase", mask_of(4, 4, {{0, 0}})}}, frame, counts);  // FP
        CHECK(counts["vase"].tp == 1);
        CHECK(counts["vase"].fn == 1);
        CHECK(counts["vase"].fp == 1);
    }
}

TEST_CASE("exhaustive rule-table enumeration against an independent oracle") {
    // All 2^4 predictions over a 2x2 frame with GT = {(0,0),(1,0)}.
    const BinaryMask gt = mask_of(2, 2, {{0, 0}, {1, 0}});
    LabeledFrame frame = frame_with_gt("x", gt);
    for (int bits = 0; bits < 16; ++bits) {
        BinaryMask pred(2, 2);
        for (int i = 0; i < 4; ++i) pred.values[i] = (bits >> i) & 1;
        std::map<std::string, DetectionCounts> counts;
        score_frame({{"x", pred}}, frame, counts);
        int on = 0, inter = 0;
        for (int i = 0; i < 4; ++i) {
            if (pred.values[i]) {
                ++on;
                if (gt.values[i]) ++inter;
            }
        }
        DetectionCounts expect;
        if (on == 0)
            expect.fn = 1;
        else if (static_cast<double>(inter) / on > 0.5)
            expect.tp = 1;
        else
            expect.fp = 1;
        CHECK(counts["x"].tp == expect.tp);
        CHECK(counts["x"].fp == expect.fp);
        CHECK(counts["x"].fn == expect.fn);
    }
}

TEST_CASE("macro F1 frozen fixture") {
    std::map<std::string, DetectionCounts> counts;
    counts["a"] = {2, 1, 1};  // F1 = 2 / (2 + 0.5*2) = 2/3
    counts["b"] = {1, 0, 0};  // F1 = 1
    counts["c"] = {0, 0, 0};  // no counts -> contributes 0
    CHECK(macro_f1(counts) == doctest::Approx((2.0 / 3.0 + 1.0 + 0.0) / 3.0).epsilon(1e-12));
    CHECK_THROWS_AS(macro_f1({}), std::invalid_argument);

    std::map<std::string, DetectionCounts> only_fn;
    only_fn["z"] = {0, 0, 5};  // F1 = 0 / 2.5 = 0
    CHECK(macro_f1(only_fn) == doctest::Approx(0.0));
}

TEST_CASE("grid search recovers a planted threshold") {
    // Relevance: goal pixels carry 0.7, a decoy pixel carries 0.4. Any tau in
    // (0.4, 0.7] gives a perfect TP; tau <= 0.4 adds the decoy (score 2/3,
    // still > 0.5 -> TP as well); tau > 0.7 gives FN. Make the decoy heavier so
    // low taus actually hurt: two decoy pixels -> score 0.5 -> FP.
    const int w = 4, h = 4;
    const BinaryMask gt = mask_of(w, h, {{1, 1}, {2, 1}});
    LabeledFrame frame = frame_with_gt("vase", gt);
    FrameScorer scorer = [&](const LabeledFrame&, const std::string&) {
        RelevanceMap rel(w, h);
        rel.at(1, 1) = 0.7;
        rel.at(2, 1) = 0.7;
        rel.at(0, 3) = 0.4;
        rel.at(3, 3) = 0.4;
        return rel;
    };
    GridSearchResult res = grid_search_threshold({frame}, scorer, default_tau_grid());
    CHECK(res.f1 == doctest::Approx(1.0));
    // Lowest winning tau: the grid points in (0.4, 0.7] are 0.5 and 0.625;
    // ties resolve to the lowest.
    CHECK(res.tau == doctest::Approx(0.5));
}

TEST_CASE("grid search penalizes absent-category firing at low taus") {
    const int w = 2, h = 2;
    LabeledFrame present = frame_with_gt("vase", mask_of(w, h, {{0, 0}}));
    LabeledFrame absent;
    absent.observation.depth = DepthImage(w, h, 10.0);
    absent.absent_categories = {"vase"};
    FrameScorer scorer = [&](const LabeledFrame& f, const std::string&) {
        RelevanceMap rel(w, h);
        // On the present frame the goal pixel is hot; on the absent frame a
        // ghost detection sits at 0.3.
        if (!f.gt_masks.empty())
            rel.at(0, 0) = 0.9;
        else
            rel.at(1, 1) = 0.3;
        return rel;
    };
    GridSearchResult res =
        grid_search_threshold({present, absent}, scorer, default_tau_grid());
    // tau = 0.125/0.25 fire the ghost (FP); tau in (0.3, 0.9] are clean.
    CHECK(res.f1 == doctest::Approx(1.0));
    CHECK(res.tau == doctest::Approx(0.375));
    CHECK_THROWS_AS(grid_search_threshold({present}, scorer, {}), std::invalid_argument);
}

TEST_CASE("default tau grid frozen values") {
    const std::vector<double> grid = default_tau_grid();
    REQUIRE(grid.size() == 8);
    for (int k = 1; k <= 7; ++k) CHECK(grid[k - 1] == doctest::Approx(0.125 * k).epsilon(1e-15));
    CHECK(grid.back() == doctest::Approx(0.95).epsilon(1e-15));
}
