// cow: batch entry points for the navigation engine.
//
// Subcommands:
//   gen     generate scenes and a task suite ("cow-suite v1")
//   run     run every task of a suite, writing trajectories and result tables
//   eval    re-evaluate logged trajectories into SR/SPL/failure aggregates
//   tune    build a labeled-frame bundle or grid-search the mask threshold
//   replay  re-simulate a logged trajectory, verify it, and dump map frames
//
// Every command validates its inputs before producing output, exits nonzero
// on any validation error, and stamps its outputs with a config hash.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cow/controller.hpp"
#include "cow/evaluation.hpp"
#include "cow/exploration.hpp"
#include "cow/harness.hpp"
#include "cow/localization.hpp"
#include "cow/mapping.hpp"
#include "cow/scene.hpp"
#include "cow/serialize.hpp"
#include "cow/simulator.hpp"
#include "cow/tuning.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cow;

namespace {

void require_writable(const fs::path& path, bool force) {
    if (fs::exists(path) && !force)
        throw std::runtime_error("refusing to overwrite " + path.string() +
                                 " (pass --force to allow)");
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Shared flag bundles
// ---------------------------------------------------------------------------

struct RunFlags {
    std::string suite_path;
    std::string out_dir;
    uint64_t seed = 0;
    int parallelism = 1;
    std::string localizer = "oracle";
    std::string precomputed_dir;
    std::string exploration = "fbe";
    std::string noise_profile = "none";
    double p_false_negative = 0.0;
    double p_false_positive = 0.0;
    double attribute_blindness = 0.0;
    int dilate_mask_px = 0;
    double tau = 0.5;
    double trigger = 0.5;
    std::string postprocess = "center";
    double stop_distance = 1.0;
    int max_steps = 500;
    double map_resolution = 0.125;
    bool force = false;
};

void add_pipeline_flags(CLI::App& cmd, RunFlags& f) {
    cmd.add_option("--localizer", f.localizer, "Localizer: oracle or precomputed")
        ->check(CLI::IsMember({"oracle", "precomputed"}));
    cmd.add_option("--precomputed-dir", f.precomputed_dir,
                   "Relevance directory for --localizer precomputed");
    cmd.add_option("--exploration", f.exploration, "Exploration policy: fbe or random")
        ->check(CLI::IsMember({"fbe", "random"}));
    cmd.add_option("--noise-profile", f.noise_profile,
                   "Noise profile: none, robothor_like, or habitat_like")
        ->check(CLI::IsMember({"none", "robothor_like", "habitat_like"}));
    cmd.add_option("--p-false-negative", f.p_false_negative,
                   "Oracle per-frame miss probability")->check(CLI::Range(0.0, 1.0));
    cmd.add_option("--p-false-positive", f.p_false_positive,
                   "Oracle per-frame spurious-blob probability")->check(CLI::Range(0.0, 1.0));
    cmd.add_option("--attribute-blindness", f.attribute_blindness,
                   "Oracle probability of category-only matching")->check(CLI::Range(0.0, 1.0));
    cmd.add_option("--dilate-mask-px", f.dilate_mask_px, "Oracle mask dilation radius, pixels")
        ->check(CLI::NonNegativeNumber);
    cmd.add_option("--tau", f.tau, "Mask threshold")->check(CLI::Range(0.0, 1.0));
    cmd.add_option("--trigger", f.trigger, "Map relevance that switches to target planning")
        ->check(CLI::Range(0.0, 1.0));
    cmd.add_option("--postprocess", f.postprocess, "Mask postprocess: center or full")
        ->check(CLI::IsMember({"center", "full"}));
    cmd.add_option("--stop-distance", f.stop_distance, "Target stop distance, meters")
        ->check(CLI::PositiveNumber);
    cmd.add_option("--max-steps", f.max_steps, "Step budget per episode")
        ->check(CLI::PositiveNumber);
    cmd.add_option("--map-resolution", f.map_resolution, "Belief-map cell size, meters")
        ->check(CLI::PositiveNumber);
}

RunOptions make_run_options(const RunFlags& f) {
    RunOptions opts;
    opts.cow.tau = f.tau;
    opts.cow.trigger = f.trigger;
    opts.cow.postprocess =
        f.postprocess == "center" ? Postprocess::CenterPixel : Postprocess::FullMask;
    opts.cow.stop_distance = f.stop_distance;
    opts.cow.max_steps = f.max_steps;
    opts.cow.map_resolution = f.map_resolution;
    opts.agent = with_noise_profile(AgentConfig{}, f.noise_profile);
    opts.localizer = f.localizer;
    opts.oracle.p_false_negative = f.p_false_negative;
    opts.oracle.p_false_positive = f.p_false_positive;
    opts.oracle.attribute_blindness = f.attribute_blindness;
    opts.oracle.dilate_mask_px = f.dilate_mask_px;
    opts.precomputed_dir = f.precomputed_dir;
    opts.exploration = f.exploration;
    opts.seed = f.seed;
    opts.parallelism = f.parallelism;
    if (opts.localizer == "precomputed" && opts.precomputed_dir.empty())
        throw std::runtime_error("--localizer precomputed requires --precomputed-dir");
    return opts;
}

std::string pipeline_canonical(const RunFlags& f) {
    std::ostringstream s;
    s << "seed=" << f.seed << "|localizer=" << f.localizer << "|exploration=" << f.exploration
      << "|noise=" << f.noise_profile << "|pfn=" << f.p_false_negative
      << "|pfp=" << f.p_false_positive << "|blind=" << f.attribute_blindness
      << "|dilate=" << f.dilate_mask_px << "|tau=" << f.tau << "|trigger=" << f.trigger
      << "|post=" << f.postprocess << "|stop=" << f.stop_distance << "|steps=" << f.max_steps
      << "|res=" << f.map_resolution;
    return s.str();
}

std::string episode_csv(const std::vector<EpisodeResult>& results, const std::string& hash) {
    std::ostringstream out;
    out << "# cow-results v1 config=" << hash << "\n";
    out << "task_id,split,category,scene_id,success,steps,path_length,shortest_path,"
           "spl_term,unreachable,failure_mode\n";
    out.setf(std::ios::fixed);
    out.precision(6);
    for (const auto& r : results)
        out << r.task_id << "," << split_name(r.split) << "," << r.category << "," << r.scene_id
            << "," << (r.success ? 1 : 0) << "," << r.steps << "," << r.path_length << ","
            << r.shortest_path << "," << r.spl_term << "," << (r.unreachable ? 1 : 0) << ","
            << failure_mode_name(r.failure_mode) << "\n";
    return out.str();
}

std::string failure_csv(const std::vector<EpisodeResult>& results, const std::string& hash) {
    std::map<std::string, int> counts;
    int failures = 0;
    for (const auto& r : results) {
        if (r.unreachable || r.success) continue;
        ++counts[failure_mode_name(r.failure_mode)];
        ++failures;
    }
    std::ostringstream out;
    out << "# cow-failures v1 config=" << hash << "\n";
    out << "failure_mode,n,fraction\n";
    out.setf(std::ios::fixed);
    out.precision(6);
    for (const auto& [mode, n] : counts)
        out << mode << "," << n << "," << (failures ? static_cast<double>(n) / failures : 0.0)
            << "\n";
    return out.str();
}

void print_summary(const std::vector<EpisodeResult>& results) {
    std::cout.setf(std::ios::fixed);
    std::cout.precision(4);
    std::cout << "episodes: " << results.size() << "  SR: " << success_rate(results)
              << "  SPL: " << spl(results) << "\n";
    for (const auto& row : aggregate(results, GroupBy::SplitKey))
        std::cout << "  " << row.group << ": n=" << row.n << " SR=" << row.sr
                  << " SPL=" << row.spl << "\n";
}

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

struct GenFlags {
    std::string out_path;
    int scenes = 15;
    int objects = 12;
    int starts = 2;
    uint64_t seed = 0;
    int width_cells = 32;
    int height_cells = 32;
    bool force = false;
};

int cmd_gen(const GenFlags& f) {
    std::ostringstream canon;
    canon << "gen|scenes=" << f.scenes << "|objects=" << f.objects << "|starts=" << f.starts
          << "|seed=" << f.seed << "|w=" << f.width_cells << "|h=" << f.height_cells;
    const std::string hash = config_hash_hex(canon.str());
    require_writable(f.out_path, f.force);

    SceneGenConfig scfg;
    scfg.width_cells = f.width_cells;
    scfg.height_cells = f.height_cells;
    std::vector<Scene> scenes;
    for (int i = 0; i < f.scenes; ++i) {
        std::ostringstream id;
        id << "scene" << std::setw(2) << std::setfill('0') << i;
        scenes.push_back(generate_scene(scfg, id.str(), f.seed + static_cast<uint64_t>(i)));
    }
    SuiteConfig sc;
    sc.objects_per_scene = f.objects;
    sc.starts_per_scene = f.starts;
    Suite suite = generate_pasture_suite(scenes, sc, f.seed);
    save_suite(suite, f.out_path);
    std::cout << "config: " << hash << "\n"
              << "scenes: " << suite.scenes.size() << " (" << f.scenes << " base)\n"
              << "tasks: " << suite.tasks.size() << "\n"
              << "wrote " << f.out_path << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

int cmd_run(const RunFlags& f) {
    const std::string hash = config_hash_hex("run|" + pipeline_canonical(f));
    Suite suite = load_suite(f.suite_path);
    if (suite.tasks.empty()) throw std::runtime_error("suite has no tasks: " + f.suite_path);
    RunOptions opts = make_run_options(f);

    const fs::path out(f.out_dir);
    require_writable(out / "results.csv", f.force);
    fs::create_directories(out / "trajectories");

    auto outcomes = run_suite(suite, opts);
    std::vector<EpisodeResult> results;
    results.reserve(outcomes.size());
    for (const auto& o : outcomes) {
        results.push_back(o.result);
        save_trajectory(o.trajectory,
                        (out / "trajectories" / (task_id_to_filename(o.trajectory.task_id) +
                                                 ".jsonl")).string());
    }
    write_text(out / "results.csv", episode_csv(results, hash));
    write_text(out / "summary_by_split.csv",
               "# cow-summary v1 config=" + hash + "\n" +
                   aggregate_csv(aggregate(results, GroupBy::SplitKey)));
    write_text(out / "failures.csv", failure_csv(results, hash));

    std::cout << "config: " << hash << "\n";
    print_summary(results);
    std::cout << "wrote " << (out / "results.csv").string() << ", summary_by_split.csv, "
              << "failures.csv, and " << outcomes.size() << " trajectories\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalFlags {
    std::string suite_path;
    std::string traj_dir;
    std::string group_by = "split";
    std::string out_path;
    std::string noise_profile = "none";
    bool force = false;
};

int cmd_eval(const EvalFlags& f) {
    const std::string hash =
        config_hash_hex("eval|group=" + f.group_by + "|noise=" + f.noise_profile);
    Suite suite = load_suite(f.suite_path);
    const AgentConfig agent = with_noise_profile(AgentConfig{}, f.noise_profile);

    std::map<std::string, std::unique_ptr<RenderGrid>> grids;
    std::vector<EpisodeResult> results;
    for (const auto& task : suite.tasks) {
        const fs::path path =
            fs::path(f.traj_dir) / (task_id_to_filename(task.id) + ".jsonl");
        if (!fs::exists(path))
            throw std::runtime_error("missing trajectory for task " + task.id + ": " +
                                     path.string());
        Trajectory traj = load_trajectory(path.string());
        if (traj.task_id != task.id)
            throw std::runtime_error("trajectory " + path.string() + " records task " +
                                     traj.task_id + ", expected " + task.id);
        auto& grid = grids[task.scene_id];
        if (!grid) grid = std::make_unique<RenderGrid>(scene_by_id(suite, task.scene_id));
        results.push_back(evaluate_episode(*grid, task, traj, agent));
    }

    GroupBy group = GroupBy::SplitKey;
    if (f.group_by == "category") group = GroupBy::Category;
    else if (f.group_by == "scene") group = GroupBy::SceneKey;

    const std::string table = "# cow-summary v1 config=" + hash + "\n" +
                              aggregate_csv(aggregate(results, group));
    std::cout << "config: " << hash << "\n";
    print_summary(results);
    std::cout << failure_csv(results, hash);
    if (!f.out_path.empty()) {
        require_writable(f.out_path, f.force);
        write_text(f.out_path, table);
        std::cout << "wrote " << f.out_path << "\n";
    } else {
        std::cout << table;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// tune
// ---------------------------------------------------------------------------

struct TuneFlags {
    std::string suite_path;
    int gen_frames = 0;
    std::string frames_dir;
    std::string out_dir;
    uint64_t seed = 0;
    double score_noise = 0.25;
    std::vector<double> grid;
    bool force = false;
};

// Labeled-frame bundle on disk: <dir>/manifest.json plus one relmap file per
// ground-truth mask ("cow-frames v1"). The depth image is stored normalized by
// max_depth so it fits the relmap value range.
void save_frame_bundle(const std::vector<LabeledFrame>& frames, const fs::path& dir,
                       double max_depth, const std::string& hash) {
    fs::create_directories(dir);
    json manifest;
    manifest["format"] = "cow-frames v1";
    manifest["config"] = hash;
    manifest["max_depth"] = max_depth;
    manifest["frames"] = json::array();
    for (size_t i = 0; i < frames.size(); ++i) {
        const auto& f = frames[i];
        std::ostringstream stem;
        stem << "frame" << std::setw(4) << std::setfill('0') << i;
        json entry;
        entry["width"] = f.observation.depth.width;
        entry["height"] = f.observation.depth.height;
        entry["depth"] = stem.str() + ".depth.relmap";
        entry["absent"] = f.absent_categories;

        RelevanceMap depth_norm(f.observation.depth.width, f.observation.depth.height);
        for (size_t p = 0; p < depth_norm.values.size(); ++p)
            depth_norm.values[p] =
                std::min(1.0, std::max(0.0, f.observation.depth.values[p] / max_depth));
        save_relmap(depth_norm, (dir / (stem.str() + ".depth.relmap")).string());

        json masks = json::object();
        for (const auto& [category, mask] : f.gt_masks) {
            const std::string file = stem.str() + "." + category + ".mask.relmap";
            RelevanceMap m(mask.width, mask.height);
            for (size_t p = 0; p < m.values.size(); ++p) m.values[p] = mask.values[p] ? 1.0 : 0.0;
            save_relmap(m, (dir / file).string());
            masks[category] = file;
        }
        entry["masks"] = masks;
        manifest["frames"].push_back(entry);
    }
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<LabeledFrame> load_frame_bundle(const fs::path& dir, double* max_depth_out) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw std::runtime_error("cannot read " + (dir / "manifest.json").string());
    json manifest = json::parse(in);
    if (manifest.value("format", "") != "cow-frames v1")
        throw std::runtime_error("not a cow-frames v1 bundle: " + dir.string());
    const double max_depth = manifest.at("max_depth").get<double>();
    if (max_depth_out) *max_depth_out = max_depth;

    std::vector<LabeledFrame> frames;
    for (const auto& entry : manifest.at("frames")) {
        LabeledFrame f;
        const int w = entry.at("width").get<int>();
        const int h = entry.at("height").get<int>();
        RelevanceMap depth_norm = load_relmap((dir / entry.at("depth").get<std::string>()).string());
        f.observation.depth = DepthImage(w, h, max_depth);
        for (size_t p = 0; p < f.observation.depth.values.size(); ++p)
            f.observation.depth.values[p] = depth_norm.values[p] * max_depth;
        f.observation.semantic = SemanticImage(w, h);
        for (const auto& [category, file] : entry.at("masks").items()) {
            RelevanceMap m = load_relmap((dir / file.get<std::string>()).string());
            BinaryMask mask(m.width, m.height);
            for (size_t p = 0; p < m.values.size(); ++p) mask.values[p] = m.values[p] >= 0.5;
            f.gt_masks[category] = mask;
        }
        f.absent_categories = entry.at("absent").get<std::vector<std::string>>();
        frames.push_back(std::move(f));
    }
    return frames;
}

std::vector<LabeledFrame> sample_frames(const Suite& suite, int count, uint64_t seed,
                                        const AgentConfig& agent) {
    std::vector<const Scene*> scenes;
    for (const auto& s : suite.scenes) scenes.push_back(&s);
    if (scenes.empty()) throw std::runtime_error("suite has no scenes");

    std::map<std::string, std::unique_ptr<RenderGrid>> grids;
    std::mt19937_64 rng(seed);
    std::vector<LabeledFrame> frames;
    int attempts = 0;
    while (static_cast<int>(frames.size()) < count) {
        if (++attempts > count * 100)
            throw std::runtime_error("could not sample enough labeled frames");
        const Scene& scene = *scenes[rng() % scenes.size()];
        auto& grid = grids[scene.id];
        if (!grid) grid = std::make_unique<RenderGrid>(scene);

        const auto& blocked = grid->blocked(agent.clearance_height);
        const int cx = static_cast<int>(rng() % static_cast<uint64_t>(scene.width));
        const int cy = static_cast<int>(rng() % static_cast<uint64_t>(scene.height));
        if (blocked[static_cast<size_t>(cy) * scene.width + cx]) continue;
        Pose pose{scene.cell_center_x(cx), scene.cell_center_y(cy),
                  normalize_angle(static_cast<double>(rng() % 12) * agent.turn_angle)};
        Observation obs = render(*grid, pose, agent, nullptr);

        // Present categories: goal-eligible objects with rendered pixels.
        std::map<std::string, std::string> category_of;  // instance -> category
        std::set<std::string> eligible;
        for (const auto& o : scene.objects)
            if (o.goal_eligible && !o.hidden()) {
                category_of[o.instance_id] = o.category;
                eligible.insert(o.category);
            }
        LabeledFrame f;
        f.observation = obs.view;
        for (int v = 0; v < obs.view.semantic.height; ++v)
            for (int u = 0; u < obs.view.semantic.width; ++u) {
                const auto it = category_of.find(obs.view.semantic.at(u, v));
                if (it == category_of.end()) continue;
                auto& mask = f.gt_masks[it->second];
                if (mask.width == 0)
                    mask = BinaryMask(obs.view.semantic.width, obs.view.semantic.height);
                mask.set(u, v, true);
            }
        if (f.gt_masks.empty()) continue;  // want at least one present category
        for (const auto& category : eligible)
            if (!f.gt_masks.count(category)) f.absent_categories.push_back(category);
        frames.push_back(std::move(f));
    }
    return frames;
}

// Deterministic synthetic scorer: ground-truth pixels score near 1 minus
// |N(0, sigma)| noise; a sparse 1% of background pixels score |N(0, sigma)|,
// mimicking a detector with occasional spurious responses so the threshold
// sweep is informative. Seeded per (frame, category) for order independence.
FrameScorer make_noisy_scorer(const std::vector<LabeledFrame>* frames, double sigma,
                              uint64_t seed) {
    return [frames, sigma, seed](const LabeledFrame& frame,
                                 const std::string& category) -> RelevanceMap {
        size_t index = 0;
        for (size_t i = 0; i < frames->size(); ++i)
            if (&(*frames)[i] == &frame) index = i;
        std::ostringstream key;
        key << seed << "|" << index << "|" << category;
        std::mt19937_64 rng(config_hash(key.str()));
        std::normal_distribution<double> noise(0.0, sigma);
        std::uniform_real_distribution<double> uniform(0.0, 1.0);

        const int w = frame.observation.depth.width, h = frame.observation.depth.height;
        RelevanceMap rel(w, h);
        const auto it = frame.gt_masks.find(category);
        for (int v = 0; v < h; ++v)
            for (int u = 0; u < w; ++u) {
                const bool on = it != frame.gt_masks.end() && it->second.at(u, v);
                double base = 0.0;
                if (on) base = 1.0 - std::abs(noise(rng));
                else if (uniform(rng) < 0.01) base = std::abs(noise(rng));
                rel.at(u, v) = std::min(1.0, std::max(0.0, base));
            }
        return rel;
    };
}

int cmd_tune(const TuneFlags& f) {
    if ((f.gen_frames > 0) == !f.frames_dir.empty())
        throw std::runtime_error("pass exactly one of --gen-frames (with --suite) or --frames");
    if (f.gen_frames > 0) {
        if (f.suite_path.empty()) throw std::runtime_error("--gen-frames requires --suite");
        if (f.out_dir.empty()) throw std::runtime_error("--gen-frames requires --out");
        std::ostringstream canon;
        canon << "tune-gen|n=" << f.gen_frames << "|seed=" << f.seed;
        const std::string hash = config_hash_hex(canon.str());
        require_writable(fs::path(f.out_dir) / "manifest.json", f.force);
        const AgentConfig agent;
        Suite suite = load_suite(f.suite_path);
        auto frames = sample_frames(suite, f.gen_frames, f.seed, agent);
        save_frame_bundle(frames, f.out_dir, agent.max_depth, hash);
        std::cout << "config: " << hash << "\n"
                  << "wrote " << frames.size() << " labeled frames to " << f.out_dir << "\n";
        return 0;
    }

    std::ostringstream canon;
    canon << "tune|sigma=" << f.score_noise << "|seed=" << f.seed;
    const std::string hash = config_hash_hex(canon.str());
    auto frames = load_frame_bundle(f.frames_dir, nullptr);
    if (frames.empty()) throw std::runtime_error("frame bundle is empty: " + f.frames_dir);
    const std::vector<double> grid = f.grid.empty() ? default_tau_grid() : f.grid;
    FrameScorer scorer = make_noisy_scorer(&frames, f.score_noise, f.seed);

    std::cout << "config: " << hash << "\n";
    std::cout << "frames: " << frames.size() << "\n";
    std::cout.setf(std::ios::fixed);
    std::cout.precision(4);
    for (double tau : grid) {
        GridSearchResult point = grid_search_threshold(frames, scorer, {tau});
        std::cout << "  tau=" << tau << "  macro_f1=" << point.f1 << "\n";
    }
    GridSearchResult best = grid_search_threshold(frames, scorer, grid);
    std::cout << "best: tau=" << best.tau << " macro_f1=" << best.f1 << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// replay
// ---------------------------------------------------------------------------

struct ReplayFlags {
    std::string suite_path;
    std::string traj_path;
    int every = 25;
    std::string out_path;
    RunFlags pipeline;  // localizer/mask settings used to rebuild relevance
    bool force = false;
};

bool pose_equal(const Pose& a, const Pose& b) {
    return a.x == b.x && a.y == b.y && a.yaw == b.yaw;
}

std::string pose_str(const Pose& p) {
    std::ostringstream s;
    s.precision(6);
    s << "(" << p.x << ", " << p.y << ", " << p.yaw << ")";
    return s.str();
}

const Task& task_by_id(const Suite& suite, const std::string& task_id) {
    for (const auto& t : suite.tasks)
        if (t.id == task_id) return t;
    throw std::runtime_error("suite has no task: " + task_id);
}

// Re-run the mapping pipeline along the logged actions, mirroring the episode
// loop: localize, detect failure, update the estimate, register depth, plug
// failed moves, and re-simulate the true state. Verifies that the logged true
// poses reproduce exactly.
int cmd_replay(const ReplayFlags& f) {
    Trajectory traj = load_trajectory(f.traj_path);
    Suite suite = load_suite(f.suite_path);
    const Task& task = task_by_id(suite, traj.task_id);
    if (task.scene_id != traj.scene_id)
        throw std::runtime_error("scene mismatch: trajectory records " + traj.scene_id +
                                 " but task " + task.id + " lives in " + task.scene_id);
    const Scene& scene = scene_by_id(suite, traj.scene_id);
    RenderGrid grid(scene);

    RunOptions opts = make_run_options(f.pipeline);
    const CowConfig& ccfg = opts.cow;
    const AgentConfig& agent = opts.agent;
    std::unique_ptr<Localizer> localizer;
    if (opts.localizer == "oracle") {
        OracleLocalizerConfig ocfg = opts.oracle;
        ocfg.seed = traj.seed ^ 0x9e3779b97f4a7c15ULL;  // matches the run harness
        localizer = std::make_unique<OracleLocalizer>(scene, task, ocfg);
    } else {
        localizer = std::make_unique<PrecomputedLocalizer>(opts.precomputed_dir, task.id);
    }

    std::ostringstream out;
    std::mt19937_64 rng(traj.seed);
    SimulatorState state{task.start_pose, false};
    TopDownMap map;
    map.resolution = ccfg.map_resolution;
    PoseEstimate est;
    std::mt19937_64* depth_rng = agent.depth_noise_sigma > 0.0 ? &rng : nullptr;
    Observation obs = render(grid, state.pose, agent, depth_rng);
    DepthImage prev_depth;
    Action last_action = Action::Stop;
    bool have_last = false;
    int mismatches = 0;

    auto emit = [&](int step_idx, const char* label, const Pose& pose) {
        out << "-- step " << step_idx << " action=" << label << " est=" << pose_str(pose) << "\n";
        out << render_map_ascii(map, &pose);
    };

    for (size_t i = 0; i < traj.records.size(); ++i) {
        const StepRecord& rec = traj.records[i];
        RelevanceMap rel = localizer->localize(obs.view, task.goal_description);
        BinaryMask mask = threshold_mask(rel, ccfg.tau);
        if (ccfg.postprocess == Postprocess::CenterPixel) mask = center_pixel_postprocess(mask);

        bool failed = false;
        if (have_last && last_action == Action::MoveForward)
            failed = detect_action_failure(prev_depth, obs.view.depth, ccfg.failure_detector);
        if (have_last)
            est = update_pose_estimate(est, last_action, failed, agent.step_size,
                                       agent.turn_angle);
        if (failed)
            for (double fwd : {map.resolution, agent.step_size})
                for (int lat = -1; lat <= 1; ++lat) {
                    const Pose p = compose(est.pose, Pose{fwd, lat * map.resolution, 0.0});
                    map.mark_occupied(map.ensure_contains_world(p.x, p.y));
                }
        register_depth(map, obs.view.depth, est, agent.intrinsics, agent.camera_height,
                       agent.camera_height);
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
                map.mark_free(map.ensure_contains_world(est.pose.x + dx * map.resolution,
                                                        est.pose.y + dy * map.resolution));
        project_relevance(map, mask, rel, obs.view.depth, est, agent.intrinsics,
                          agent.camera_height);

        if (i % static_cast<size_t>(std::max(1, f.every)) == 0)
            emit(rec.step, action_name(rec.action), est.pose);

        if (rec.action == Action::Stop) {
            if (!pose_equal(state.pose, rec.true_pose)) {
                std::cerr << "true-pose mismatch at step " << rec.step << ": logged "
                          << pose_str(rec.true_pose) << " resimulated " << pose_str(state.pose)
                          << "\n";
                ++mismatches;
            }
            break;
        }
        StepResult result = step(grid, state, rec.action, agent, rng);
        state = result.state;
        if (!pose_equal(state.pose, rec.true_pose)) {
            std::cerr << "true-pose mismatch at step " << rec.step << ": logged "
                      << pose_str(rec.true_pose) << " resimulated " << pose_str(state.pose)
                      << "\n";
            ++mismatches;
        }
        prev_depth = std::move(obs.view.depth);
        obs = std::move(result.observation);
        last_action = rec.action;
        have_last = true;
    }

    if (traj.records.empty()) {
        register_depth(map, obs.view.depth, est, agent.intrinsics, agent.camera_height,
                       agent.camera_height);
        emit(0, "-", est.pose);
    } else {
        emit(traj.records.back().step, "final", est.pose);
    }

    // Relevance sidecar: one row per cell that accumulated any relevance.
    out << "-- relevance sidecar: cell_x cell_y world_x world_y value\n";
    out.setf(std::ios::fixed);
    out.precision(4);
    int heat_cells = 0;
    for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x) {
            const double v = map.relevance[static_cast<size_t>(y) * map.width + x];
            if (v <= 0.0) continue;
            out << x << " " << y << " " << map.cell_center_x(x) << " " << map.cell_center_y(y)
                << " " << v << "\n";
            ++heat_cells;
        }
    out << "-- " << heat_cells << " relevance cells, " << traj.records.size() << " steps, "
        << (mismatches == 0 ? "poses reproduced exactly" : "POSE MISMATCH") << "\n";

    if (!f.out_path.empty()) {
        require_writable(f.out_path, f.force);
        write_text(f.out_path, out.str());
        std::cout << "wrote " << f.out_path << "\n";
    } else {
        std::cout << out.str();
    }
    if (mismatches > 0) {
        std::cerr << "replay failed: " << mismatches << " pose mismatches\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cow: language-driven object navigation engine"};
    app.require_subcommand(1);

    GenFlags gen;
    auto* cmd_g = app.add_subcommand("gen", "Generate scenes and a task suite");
    cmd_g->add_option("--out", gen.out_path, "Suite output file")->required();
    cmd_g->add_option("--scenes", gen.scenes, "Base scene count")->check(CLI::PositiveNumber);
    cmd_g->add_option("--objects", gen.objects, "Goal objects per scene")
        ->check(CLI::PositiveNumber);
    cmd_g->add_option("--starts", gen.starts, "Start poses per scene")
        ->check(CLI::PositiveNumber);
    cmd_g->add_option("--seed", gen.seed, "Generation seed");
    cmd_g->add_option("--width", gen.width_cells, "Scene width, cells")
        ->check(CLI::PositiveNumber);
    cmd_g->add_option("--height", gen.height_cells, "Scene height, cells")
        ->check(CLI::PositiveNumber);
    cmd_g->add_flag("--force", gen.force, "Overwrite existing output");

    RunFlags run;
    auto* cmd_r = app.add_subcommand("run", "Run every task of a suite");
    cmd_r->add_option("--suite", run.suite_path, "Suite file")->required();
    const char* env_out = std::getenv("COW_OUT_DIR");
    auto* out_opt = cmd_r->add_option("--out", run.out_dir,
                                      "Output directory (default: $COW_OUT_DIR)");
    if (env_out) run.out_dir = env_out;
    else out_opt->required();
    cmd_r->add_option("--seed", run.seed, "Run seed");
    cmd_r->add_option("--parallelism", run.parallelism, "Worker threads")
        ->check(CLI::PositiveNumber);
    add_pipeline_flags(*cmd_r, run);
    cmd_r->add_flag("--force", run.force, "Overwrite existing results");

    EvalFlags eval;
    auto* cmd_e = app.add_subcommand("eval", "Aggregate logged trajectories");
    cmd_e->add_option("--suite", eval.suite_path, "Suite file")->required();
    cmd_e->add_option("--traj-dir", eval.traj_dir, "Directory of trajectory files")->required();
    cmd_e->add_option("--group-by", eval.group_by, "Aggregate key: split, category, or scene")
        ->check(CLI::IsMember({"split", "category", "scene"}));
    cmd_e->add_option("--out", eval.out_path, "Write the aggregate CSV here");
    cmd_e->add_option("--noise-profile", eval.noise_profile,
                      "Noise profile the trajectories were run with")
        ->check(CLI::IsMember({"none", "robothor_like", "habitat_like"}));
    cmd_e->add_flag("--force", eval.force, "Overwrite existing output");

    TuneFlags tune;
    auto* cmd_t = app.add_subcommand("tune", "Labeled frames and threshold search");
    cmd_t->add_option("--suite", tune.suite_path, "Suite to sample frames from");
    cmd_t->add_option("--gen-frames", tune.gen_frames, "Generate this many labeled frames")
        ->check(CLI::PositiveNumber);
    cmd_t->add_option("--frames", tune.frames_dir, "Existing labeled-frame bundle directory");
    cmd_t->add_option("--out", tune.out_dir, "Bundle output directory for --gen-frames");
    cmd_t->add_option("--seed", tune.seed, "Sampling / scorer seed");
    cmd_t->add_option("--score-noise", tune.score_noise, "Scorer noise sigma")
        ->check(CLI::NonNegativeNumber);
    cmd_t->add_option("--grid", tune.grid, "Explicit tau grid (default 0.125..0.875, 0.95)");
    cmd_t->add_flag("--force", tune.force, "Overwrite existing bundle");

    ReplayFlags replay;
    auto* cmd_p = app.add_subcommand("replay", "Re-simulate and verify a trajectory");
    cmd_p->add_option("--suite", replay.suite_path, "Suite file")->required();
    cmd_p->add_option("--traj", replay.traj_path, "Trajectory file")->required();
    cmd_p->add_option("--every", replay.every, "Emit a map frame every N steps")
        ->check(CLI::PositiveNumber);
    cmd_p->add_option("--out", replay.out_path, "Write frames here instead of stdout");
    add_pipeline_flags(*cmd_p, replay.pipeline);
    cmd_p->add_flag("--force", replay.force, "Overwrite existing output");

    CLI11_PARSE(app, argc, argv);
    try {
        if (cmd_g->parsed()) return cmd_gen(gen);
        if (cmd_r->parsed()) return cmd_run(run);
        if (cmd_e->parsed()) return cmd_eval(eval);
        if (cmd_t->parsed()) return cmd_tune(tune);
        if (cmd_p->parsed()) return cmd_replay(replay);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
