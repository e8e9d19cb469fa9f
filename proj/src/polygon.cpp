#include "ptp/polygon.hpp"

#include <algorithm>
#include <cmath>

namespace ptp {

namespace {

double orient(const Point& a, const Point& b, const Point& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

bool on_segment(const Point& a, const Point& b, const Point& p) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
           p.y <= std::max(a.y, b.y);
}

int sign(double v) {
    return (v > 0.0) - (v < 0.0);
}

bool segments_touch(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
    const int d1 = sign(orient(q1, q2, p1)), d2 = sign(orient(q1, q2, p2));
    const int d3 = sign(orient(p1, p2, q1)), d4 = sign(orient(p1, p2, q2));
    if (d1 * d2 < 0 && d3 * d4 < 0)
        return true;
    return (d1 == 0 && on_segment(q1, q2, p1)) || (d2 == 0 && on_segment(q1, q2, p2)) ||
           (d3 == 0 && on_segment(p1, p2, q1)) || (d4 == 0 && on_segment(p1, p2, q2));
}

} // namespace

BinaryMask rasterize_polygon(const std::vector<Point>& v, int width, int height) {
    BinaryMask m(width, height);
    const std::size_t n = v.size();
    if (n < 3)
        return m;
    std::vector<double> xs;
    for (int y = 0; y < height; ++y) {
        const double yc = y + 0.5;
        xs.clear();
        for (std::size_t i = 0; i < n; ++i) {
            const Point& a = v[i];
            const Point& b = v[(i + 1) % n];
            // half-open in y so a vertex on the scanline is counted once
            if ((a.y <= yc && yc < b.y) || (b.y <= yc && yc < a.y))
                xs.push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
            // centers x+0.5 in [xs[k], xs[k+1])
            const int x0 = std::max(0, static_cast<int>(std::ceil(xs[k] - 0.5)));
            const int x1 = std::min(width, static_cast<int>(std::ceil(xs[k + 1] - 0.5)));
            for (int x = x0; x < x1; ++x)
                m.set(x, y);
        }
    }
    return m;
}

bool is_simple_polygon(const std::vector<Point>& v) {
    const std::size_t n = v.size();
    if (n < 3)
        return false;
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = v[i];
        const Point& b = v[(i + 1) % n];
        if (a.x == b.x && a.y == b.y)
            return false; // zero-length edge
        for (std::size_t j = i + 1; j < n; ++j) {
            const Point& c = v[j];
            const Point& d = v[(j + 1) % n];
            const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if (adjacent) {
                // shared vertex is fine; collinear overlap (edge doubling back) is not
                const Point& shared = (j == i + 1) ? b : a;
                const Point& p = (j == i + 1) ? a : b;
                const Point& q = (j == i + 1) ? d : c;
                const double dot = (p.x - shared.x) * (q.x - shared.x) + (p.y - shared.y) * (q.y - shared.y);
                if (orient(p, shared, q) == 0.0 && dot > 0.0)
                    return false;
                continue;
            }
            if (segments_touch(a, b, c, d))
                return false;
        }
    }
    return true;
}

std::optional<std::string> polygon_problem(const std::vector<Point>& v, int width, int height) {
    if (v.size() < 3)
        return "polygon needs at least 3 vertices";
    for (const auto& p : v)
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || p.x < 0.0 || p.y < 0.0 || p.x > width || p.y > height)
            return "vertex outside image bounds";
    if (!is_simple_polygon(v))
        return "polygon is self-intersecting";
    return std::nullopt;
}

} // namespace ptp
