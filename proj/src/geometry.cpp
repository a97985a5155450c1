#include "cow/geometry.hpp"

#include <string>

namespace cow {

const char* action_name(Action a) {
    switch (a) {
        case Action::MoveForward: return "MoveForward";
        case Action::RotateLeft: return "RotateLeft";
        case Action::RotateRight: return "RotateRight";
        case Action::Stop: return "Stop";
    }
    return "?";
}

Action action_from_name(const std::string& name) {
    if (name == "MoveForward") return Action::MoveForward;
    if (name == "RotateLeft") return Action::RotateLeft;
    if (name == "RotateRight") return Action::RotateRight;
    if (name == "Stop") return Action::Stop;
    throw std::invalid_argument("unknown action: " + name);
}

Pose action_delta(Action action, double step_size, double turn_angle) {
    switch (action) {
        case Action::MoveForward: return Pose{step_size, 0.0, 0.0};
        case Action::RotateLeft: return Pose{0.0, 0.0, turn_angle};
        case Action::RotateRight: return Pose{0.0, 0.0, -turn_angle};
        case Action::Stop: break;
    }
    throw std::invalid_argument("Stop has no motion delta");
}

std::vector<Vec3> backproject(const DepthImage& depth, const CameraIntrinsics& k,
                              const Pose& world_pose, double camera_height) {
    if (depth.width != k.width || depth.height != k.height)
        throw std::invalid_argument("depth dimensions do not match intrinsics");
    std::vector<Vec3> points;
    points.reserve(depth.values.size());
    const double c = std::cos(world_pose.yaw), s = std::sin(world_pose.yaw);
    for (int v = 0; v < depth.height; ++v) {
        for (int u = 0; u < depth.width; ++u) {
            const double d = depth.at(u, v);
            if (d >= depth.sentinel) continue;
            const Vec3 r = k.ray_direction(u, v);
            const double wx = c * r.x - s * r.y;
            const double wy = s * r.x + c * r.y;
            points.push_back(Vec3{world_pose.x + d * wx, world_pose.y + d * wy,
                                  camera_height + d * r.z});
        }
    }
    return points;
}

}  // namespace cow
