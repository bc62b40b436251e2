#pragma once

#include <array>

#include "rallypose/geometry.hpp"
#include "rallypose/ingest.hpp"

namespace rallypose {

struct Segment2 {
    Point2 a;
    Point2 b;
};

// Court region of interest. `quad` has positive signed area under the
// standard shoelace formula (counter-clockwise with y pointing up). The net
// line joins the midpoints of the two side edges, oriented left to right.
struct CourtROI {
    std::array<Point2, 4> quad{};
    Segment2 net_line;

    double area() const;
};

inline constexpr double kDefaultMinRoiArea = 1.0;

// Picks, in each corner box, the vertex farthest from the centroid of the
// four box centers, then orders the picks by angle around their centroid.
CourtROI build_roi(const CornerBoxSet& corners, double min_area = kDefaultMinRoiArea);

// Builds an ROI directly from four court vertices in any order.
CourtROI roi_from_points(std::array<Point2, 4> points, double min_area = kDefaultMinRoiArea);

// Inside or on the boundary.
bool contains(const CourtROI& roi, Point2 p);

// Back when p is on the smaller-y side of the net line; on the line counts as
// Front. Throws PreconditionError when p is outside the ROI.
Side side_of(const CourtROI& roi, Point2 p);

} // namespace rallypose
