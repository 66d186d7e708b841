#include "farpoint/geometry.hpp"

#include "farpoint/error.hpp"

#include <algorithm>

namespace farpoint {

namespace {

constexpr double kOrthoTol = 1e-6;
constexpr double kParallelTol = 1e-9;

} // namespace

Mat4 Mat4::operator*(const Mat4& o) const
{
    Mat4 r;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            double s = 0.0;
            for (int k = 0; k < 4; ++k)
                s += (*this)(i, k) * o(k, j);
            r(i, j) = s;
        }
    }
    return r;
}

Vec3 Mat4::apply(const Vec3& v, double w) const
{
    const Mat4& a = *this;
    return {a(0, 0) * v.x + a(0, 1) * v.y + a(0, 2) * v.z + a(0, 3) * w,
            a(1, 0) * v.x + a(1, 1) * v.y + a(1, 2) * v.z + a(1, 3) * w,
            a(2, 0) * v.x + a(2, 1) * v.y + a(2, 2) * v.z + a(2, 3) * w};
}

Mat4 Mat4::translation(const Vec3& t)
{
    Mat4 r;
    r(0, 3) = t.x;
    r(1, 3) = t.y;
    r(2, 3) = t.z;
    return r;
}

Mat4 Mat4::rotation_x(double a)
{
    Mat4 r;
    const double c = std::cos(a), s = std::sin(a);
    r(1, 1) = c;
    r(1, 2) = -s;
    r(2, 1) = s;
    r(2, 2) = c;
    return r;
}

Mat4 Mat4::rotation_y(double a)
{
    Mat4 r;
    const double c = std::cos(a), s = std::sin(a);
    r(0, 0) = c;
    r(0, 2) = s;
    r(2, 0) = -s;
    r(2, 2) = c;
    return r;
}

Mat4 Mat4::rotation_z(double a)
{
    Mat4 r;
    const double c = std::cos(a), s = std::sin(a);
    r(0, 0) = c;
    r(0, 1) = -s;
    r(1, 0) = s;
    r(1, 1) = c;
    return r;
}

bool DevicePose::is_valid() const
{
    for (double v : matrix.m)
        if (!std::isfinite(v))
            return false;
    if (matrix(3, 0) != 0.0 || matrix(3, 1) != 0.0 || matrix(3, 2) != 0.0 || matrix(3, 3) != 1.0)
        return false;
    for (int i = 0; i < 3; ++i) {
        for (int j = i; j < 3; ++j) {
            double rows = 0.0, cols = 0.0;
            for (int k = 0; k < 3; ++k) {
                rows += matrix(i, k) * matrix(j, k);
                cols += matrix(k, i) * matrix(k, j);
            }
            const double expected = i == j ? 1.0 : 0.0;
            if (std::abs(rows - expected) > kOrthoTol || std::abs(cols - expected) > kOrthoTol)
                return false;
        }
    }
    return true;
}

DisplayPlane DisplayPlane::tiled_wall()
{
    DisplayPlane d;
    d.width_m = 4.1;
    d.height_m = 2.31;
    d.width_px = 7710;
    d.height_px = 4350;
    d.top_left = {-d.width_m / 2.0, d.height_m, 0.0};
    return d;
}

void DisplayPlane::validate() const
{
    if (!(width_m > 0.0) || !(height_m > 0.0) || width_px <= 0 || height_px <= 0)
        throw DomainError("display dimensions must be positive");
    if (std::abs(u_axis.norm() - 1.0) > kParallelTol || std::abs(v_axis.norm() - 1.0) > kParallelTol)
        throw DomainError("display axes must be unit vectors");
    if (std::abs(u_axis.dot(v_axis)) > kParallelTol)
        throw DomainError("display axes must be perpendicular");
}

Vec3 DisplayPlane::point_at(const PixelPoint& p) const
{
    return top_left + u_axis * (p.x / width_px * width_m) + v_axis * (p.y / height_px * height_m);
}

PixelPoint DisplayPlane::clamp(const PixelPoint& p) const
{
    return {std::clamp(p.x, 0.0, static_cast<double>(width_px)),
            std::clamp(p.y, 0.0, static_cast<double>(height_px))};
}

bool DisplayPlane::contains(const PixelPoint& p) const
{
    return p.x >= 0.0 && p.x <= width_px && p.y >= 0.0 && p.y <= height_px;
}

PointingRay extract_pose(const DevicePose& pose)
{
    if (!pose.is_valid())
        throw InvalidPose("device pose is not a rigid transform");
    const Vec3 location = pose.matrix.apply({0.0, 0.0, 0.0}, 1.0);
    const Vec3 aim = pose.matrix.apply({0.0, 0.0, -1.0}, 0.0);
    return {location, aim.normalized()};
}

std::optional<PixelPoint> intersect(const PointingRay& ray, const DisplayPlane& display)
{
    const Vec3 n = display.normal();
    const double denom = ray.direction.dot(n);
    if (std::abs(denom) < kParallelTol)
        return std::nullopt;
    const double t = (display.top_left - ray.origin).dot(n) / denom;
    if (!(t > 0.0))
        return std::nullopt;
    const Vec3 rel = ray.origin + ray.direction * t - display.top_left;
    // Fraction of the extent first, then pixels: exact for the centre ray.
    return PixelPoint{rel.dot(display.u_axis) / display.width_m * display.width_px,
                      rel.dot(display.v_axis) / display.height_m * display.height_px};
}

double angular_width(double width_px, double distance_m, const DisplayPlane& display)
{
    if (width_px < 0.0 || !(distance_m > 0.0))
        throw DomainError("angular_width needs width >= 0 and distance > 0");
    const double half_m = width_px / display.px_per_m_x() / 2.0;
    return rad_to_deg(2.0 * std::atan(half_m / distance_m));
}

DevicePose aim_pose(const Vec3& origin, double yaw_right, double pitch_up, TimeUs t_us)
{
    return {Mat4::translation(origin) * Mat4::rotation_y(-yaw_right) * Mat4::rotation_x(pitch_up), t_us};
}

std::array<double, 2> aim_angles(const Vec3& origin, const Vec3& target)
{
    const Vec3 d = target - origin;
    const double yaw = std::atan2(d.x, -d.z);
    const double pitch = std::atan2(d.y, std::hypot(d.x, d.z));
    return {yaw, pitch};
}

} // namespace farpoint
