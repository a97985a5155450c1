#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace cow {

constexpr double kPi = 3.14159265358979323846;

// Normalize an angle to (-pi, pi].
inline double normalize_angle(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    if (a > kPi) a -= 2.0 * kPi;
    return a;
}

inline double deg_to_rad(double d) { return d * kPi / 180.0; }

// Planar pose (x, y, yaw). Doubles as an SE(2) transform.
struct Pose {
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;
};

// Apply b in a's frame.
inline Pose compose(const Pose& a, const Pose& b) {
    const double c = std::cos(a.yaw), s = std::sin(a.yaw);
    return Pose{a.x + c * b.x - s * b.y,
                a.y + s * b.x + c * b.y,
                normalize_angle(a.yaw + b.yaw)};
}

inline Pose inverse(const Pose& p) {
    const double c = std::cos(p.yaw), s = std::sin(p.yaw);
    return Pose{-(c * p.x + s * p.y), -(-s * p.x + c * p.y), normalize_angle(-p.yaw)};
}

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

// Pinhole camera. Square pixels; vertical FOV follows from the aspect ratio.
struct CameraIntrinsics {
    int width = 80;
    int height = 60;
    double horizontal_fov = deg_to_rad(79.0);

    double fx() const { return (width / 2.0) / std::tan(horizontal_fov / 2.0); }
    double fy() const { return fx(); }
    double cx() const { return (width - 1) / 2.0; }
    double cy() const { return (height - 1) / 2.0; }

    // Unit ray direction in the agent frame (x forward, y left, z up) for pixel (u, v).
    Vec3 ray_direction(double u, double v) const {
        const double yl = (cx() - u) / fx();
        const double zu = (cy() - v) / fy();
        const double n = std::sqrt(1.0 + yl * yl + zu * zu);
        return Vec3{1.0 / n, yl / n, zu / n};
    }
};

// Depth along the ray, in meters. Sentinel marks no-return past max range.
struct DepthImage {
    int width = 0;
    int height = 0;
    double sentinel = 0.0;
    std::vector<double> values;

    DepthImage() = default;
    DepthImage(int w, int h, double sent)
        : width(w), height(h), sentinel(sent), values(static_cast<size_t>(w) * h, sent) {}

    double at(int u, int v) const { return values[static_cast<size_t>(v) * width + u]; }
    double& at(int u, int v) { return values[static_cast<size_t>(v) * width + u]; }
};

enum class Action { MoveForward, RotateLeft, RotateRight, Stop };

const char* action_name(Action a);
Action action_from_name(const std::string& name);

// Motion delta for an action under the given step/turn magnitudes.
// Stop has no delta and throws.
Pose action_delta(Action action, double step_size, double turn_angle);

// Back-project a depth image into world-frame 3-D points. Sentinel pixels are skipped.
std::vector<Vec3> backproject(const DepthImage& depth, const CameraIntrinsics& k,
                              const Pose& world_pose, double camera_height);

}  // namespace cow
