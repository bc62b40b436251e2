#pragma once

#include <cmath>

namespace rallypose {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Point2 operator*(Point2 a, double s) { return {a.x * s, a.y * s}; }
    friend Point2 operator*(double s, Point2 a) { return {a.x * s, a.y * s}; }
    friend bool operator==(Point2 a, Point2 b) = default;
};

inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

// z-component of (b - a) x (c - a)
inline double cross(Point2 a, Point2 b, Point2 c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

struct BBox {
    double x1 = 0.0;
    double y1 = 0.0;
    double x2 = 0.0;
    double y2 = 0.0;

    Point2 center() const { return {(x1 + x2) / 2.0, (y1 + y2) / 2.0}; }
    // Feet position; the reference point for court and tracking geometry.
    Point2 bottom_center() const { return {(x1 + x2) / 2.0, y2}; }
    BBox shifted(Point2 d) const { return {x1 + d.x, y1 + d.y, x2 + d.x, y2 + d.y}; }
    friend bool operator==(const BBox&, const BBox&) = default;
};

enum class Side { Front, Back };

inline const char* to_string(Side s) { return s == Side::Front ? "front" : "back"; }

} // namespace rallypose
