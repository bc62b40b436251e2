#include "rallypose/court.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "rallypose/error.hpp"

namespace rallypose {

namespace {

double signed_area(const std::array<Point2, 4>& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        const Point2& p = q[i];
        const Point2& n = q[(i + 1) % 4];
        s += p.x * n.y - n.x * p.y;
    }
    return s / 2.0;
}

bool on_segment(Point2 a, Point2 b, Point2 p) {
    const double len = distance(a, b);
    const double tol = 1e-9 * std::max(1.0, len);
    if (std::abs(cross(a, b, p)) > tol * std::max(1.0, len)) {
        return false;
    }
    return p.x >= std::min(a.x, b.x) - tol && p.x <= std::max(a.x, b.x) + tol &&
           p.y >= std::min(a.y, b.y) - tol && p.y <= std::max(a.y, b.y) + tol;
}

Point2 midpoint(Point2 a, Point2 b) { return {(a.x + b.x) / 2.0, (a.y + b.y) / 2.0}; }

} // namespace

double CourtROI::area() const { return std::abs(signed_area(quad)); }

CourtROI roi_from_points(std::array<Point2, 4> points, double min_area) {
    Point2 c{};
    for (const auto& p : points) {
        c = c + p * 0.25;
    }
    std::sort(points.begin(), points.end(), [&](Point2 a, Point2 b) {
        const double ta = std::atan2(a.y - c.y, a.x - c.x);
        const double tb = std::atan2(b.y - c.y, b.x - c.x);
        if (ta != tb) {
            return ta < tb;
        }
        return distance(a, c) < distance(b, c);
    });
    CourtROI roi;
    roi.quad = points;
    const double area = signed_area(points);
    if (!(std::abs(area) >= min_area)) {
        throw GeometryError("court corners are degenerate (area " + std::to_string(area) + ")");
    }
    // Angle ordering around the centroid makes a star-shaped polygon; a
    // non-positive area would mean a reflex configuration we cannot use.
    if (area < 0.0) {
        throw GeometryError("court corners do not form a simple polygon");
    }

    // Side edges are the opposite pair with the larger vertical extent.
    const auto& q = roi.quad;
    const double vert_a = std::abs(q[1].y - q[2].y) + std::abs(q[3].y - q[0].y);
    const double vert_b = std::abs(q[0].y - q[1].y) + std::abs(q[2].y - q[3].y);
    Point2 m1;
    Point2 m2;
    if (vert_a >= vert_b) {
        m1 = midpoint(q[1], q[2]);
        m2 = midpoint(q[3], q[0]);
    } else {
        m1 = midpoint(q[0], q[1]);
        m2 = midpoint(q[2], q[3]);
    }
    if (m1.x > m2.x) {
        std::swap(m1, m2);
    }
    roi.net_line = {m1, m2};
    return roi;
}

CourtROI build_roi(const CornerBoxSet& corners, double min_area) {
    Point2 centroid{};
    for (const auto& b : corners.boxes) {
        centroid = centroid + b.center() * 0.25;
    }
    std::array<Point2, 4> picks{};
    for (std::size_t i = 0; i < 4; ++i) {
        const BBox& b = corners.boxes[i];
        const std::array<Point2, 4> verts{Point2{b.x1, b.y1}, Point2{b.x2, b.y1}, Point2{b.x2, b.y2},
                                          Point2{b.x1, b.y2}};
        Point2 best = verts[0];
        double best_d = distance(best, centroid);
        for (std::size_t v = 1; v < 4; ++v) {
            const double d = distance(verts[v], centroid);
            if (d > best_d) {
                best = verts[v];
                best_d = d;
            }
        }
        picks[i] = best;
    }
    return roi_from_points(picks, min_area);
}

bool contains(const CourtROI& roi, Point2 p) {
    const auto& q = roi.quad;
    for (std::size_t i = 0; i < 4; ++i) {
        if (on_segment(q[i], q[(i + 1) % 4], p)) {
            return true;
        }
    }
    bool inside = false;
    for (std::size_t i = 0, j = 3; i < 4; j = i++) {
        const Point2& a = q[i];
        const Point2& b = q[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x_at = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x_at) {
                inside = !inside;
            }
        }
    }
    return inside;
}

Side side_of(const CourtROI& roi, Point2 p) {
    if (!contains(roi, p)) {
        throw PreconditionError("side_of: point lies outside the court ROI");
    }
    return cross(roi.net_line.a, roi.net_line.b, p) < 0.0 ? Side::Back : Side::Front;
}

} // namespace rallypose
