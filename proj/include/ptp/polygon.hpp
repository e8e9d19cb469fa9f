#pragma once

#include "ptp/mask.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ptp {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

// Even-odd scanline fill; a pixel is set when its center (x+0.5, y+0.5) is inside.
BinaryMask rasterize_polygon(const std::vector<Point>& vertices, int width, int height);

// True when no two non-adjacent edges touch and adjacent edges do not fold back.
bool is_simple_polygon(const std::vector<Point>& vertices);

// Reason the polygon is unacceptable as an annotation of a width x height image, if any.
std::optional<std::string> polygon_problem(const std::vector<Point>& vertices, int width, int height);

} // namespace ptp
