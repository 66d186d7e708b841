#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>

namespace farpoint {

// Microseconds since session start. Producer clock; never wall time.
using TimeUs = std::int64_t;

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Vec3&, const Vec3&) = default;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const
    {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const { return *this * (1.0 / norm()); }
};

// 4x4 homogeneous transform, row-major.
struct Mat4 {
    std::array<double, 16> m{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

    friend bool operator==(const Mat4&, const Mat4&) = default;

    double operator()(int row, int col) const { return m[static_cast<std::size_t>(row * 4 + col)]; }
    double& operator()(int row, int col) { return m[static_cast<std::size_t>(row * 4 + col)]; }

    Mat4 operator*(const Mat4& o) const;

    // Homogeneous application; w = 1 for points, w = 0 for directions.
    Vec3 apply(const Vec3& v, double w) const;

    static Mat4 identity() { return {}; }
    static Mat4 translation(const Vec3& t);
    static Mat4 rotation_x(double radians);
    static Mat4 rotation_y(double radians);
    static Mat4 rotation_z(double radians);
};

// Device-to-room transform reported by the tracker, metres.
struct DevicePose {
    Mat4 matrix;
    TimeUs t_us = 0;

    friend bool operator==(const DevicePose&, const DevicePose&) = default;

    // Rotation block orthonormal within 1e-6 and bottom row (0, 0, 0, 1).
    bool is_valid() const;
};

struct PointingRay {
    Vec3 origin;
    Vec3 direction; // unit length
};

// Pixel coordinates: origin top-left of the display, y grows downward.
struct PixelPoint {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const PixelPoint&, const PixelPoint&) = default;

    PixelPoint operator+(const PixelPoint& o) const { return {x + o.x, y + o.y}; }
    PixelPoint operator-(const PixelPoint& o) const { return {x - o.x, y - o.y}; }
    PixelPoint operator*(double s) const { return {x * s, y * s}; }
    double norm() const { return std::hypot(x, y); }
};

// Planar wall display located in room coordinates.
struct DisplayPlane {
    Vec3 top_left;
    Vec3 u_axis{1.0, 0.0, 0.0};  // screen right
    Vec3 v_axis{0.0, -1.0, 0.0}; // screen down
    double width_m = 0.0;
    double height_m = 0.0;
    int width_px = 0;
    int height_px = 0;

    friend bool operator==(const DisplayPlane&, const DisplayPlane&) = default;

    // The 4x4 tiled wall: 4.1 m x 2.31 m, 7710 x 4350 px. The room origin
    // sits on the floor below the display centre; x right, y up, viewer at +z.
    static DisplayPlane tiled_wall();

    // Throws DomainError when the geometry is unusable.
    void validate() const;

    Vec3 normal() const { return u_axis.cross(v_axis); }
    double px_per_m_x() const { return width_px / width_m; }
    double px_per_m_y() const { return height_px / height_m; }
    PixelPoint center_px() const { return {width_px / 2.0, height_px / 2.0}; }
    Vec3 center() const { return point_at(center_px()); }

    // Room-frame location of a pixel on the display surface.
    Vec3 point_at(const PixelPoint& p) const;
    PixelPoint clamp(const PixelPoint& p) const;
    bool contains(const PixelPoint& p) const;
};

// Location and aim of the device: m * (0,0,0,1) and m * (0,0,-1,0).
// Throws InvalidPose for a non-rigid matrix.
PointingRay extract_pose(const DevicePose& pose);

// Where the ray meets the display plane, in (unclamped) pixels. Empty when
// the ray is parallel to the plane or the hit lies behind the origin.
std::optional<PixelPoint> intersect(const PointingRay& ray, const DisplayPlane& display);

// Visual angle, in degrees, subtended by a horizontal extent of the display
// seen from distance_m.
double angular_width(double width_px, double distance_m, const DisplayPlane& display);

// Pose at `origin` whose aim is rotated yaw_right radians to the right and
// pitch_up radians upward from the room's -z axis.
DevicePose aim_pose(const Vec3& origin, double yaw_right, double pitch_up, TimeUs t_us);

// Yaw/pitch (radians, same convention as aim_pose) that aims from `origin` at `target`.
std::array<double, 2> aim_angles(const Vec3& origin, const Vec3& target);

constexpr double kPi = 3.14159265358979323846;
constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

} // namespace farpoint
