#pragma once

#include <string>

#include "cow/controller.hpp"
#include "cow/scene.hpp"

namespace cow {

// Suite document ("cow-suite v1"): scenes, tasks, seed. Re-serialization of a
// loaded suite is byte-identical.
std::string suite_to_json(const Suite& suite);
Suite suite_from_json(const std::string& text);
void save_suite(const Suite& suite, const std::string& path);
Suite load_suite(const std::string& path);

// Trajectory trace: a one-line JSON header followed by one JSON record per step.
std::string trajectory_to_jsonl(const Trajectory& traj);
Trajectory trajectory_from_jsonl(const std::string& text);
void save_trajectory(const Trajectory& traj, const std::string& path);
Trajectory load_trajectory(const std::string& path);

// FNV-1a over a canonical config string, for provenance headers.
uint64_t config_hash(const std::string& canonical);
std::string config_hash_hex(const std::string& canonical);

// Task ids contain '/'; flatten for filenames.
std::string task_id_to_filename(const std::string& task_id);

}  // namespace cow
