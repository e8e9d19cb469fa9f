#include "ptp/serial.hpp"

#include "ptp/candidates.hpp"

#include <algorithm>
#include <limits>

namespace ptp::serial {

namespace {

std::vector<Pixel> disk_offsets(int radius) {
    std::vector<Pixel> offs;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dx * dx + dy * dy <= radius * radius)
                offs.push_back({dx, dy});
    return offs;
}

} // namespace

BinaryMask dilate(const BinaryMask& m, int radius) {
    const auto offs = disk_offsets(radius);
    BinaryMask out(m.width(), m.height());
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            for (const auto& o : offs) {
                const int nx = x + o.x, ny = y + o.y;
                if (m.in_bounds(nx, ny) && m.at(nx, ny)) {
                    out.set(x, y);
                    break;
                }
            }
    return out;
}

BinaryMask erode(const BinaryMask& m, int radius) {
    const auto offs = disk_offsets(radius);
    BinaryMask out(m.width(), m.height());
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
            bool all = true;
            for (const auto& o : offs) {
                const int nx = x + o.x, ny = y + o.y;
                if (!m.in_bounds(nx, ny) || !m.at(nx, ny)) {
                    all = false;
                    break;
                }
            }
            if (all)
                out.set(x, y);
        }
    return out;
}

std::vector<double> squared_distance(const BinaryMask& feature) {
    std::vector<Pixel> pts;
    for (int y = 0; y < feature.height(); ++y)
        for (int x = 0; x < feature.width(); ++x)
            if (feature.at(x, y))
                pts.push_back({x, y});
    std::vector<double> out(feature.size(), std::numeric_limits<double>::infinity());
    for (int y = 0; y < feature.height(); ++y)
        for (int x = 0; x < feature.width(); ++x) {
            double& d = out[feature.index(x, y)];
            for (const auto& p : pts) {
                const double dx = x - p.x, dy = y - p.y;
                d = std::min(d, dx * dx + dy * dy);
            }
        }
    return out;
}

std::vector<double> laplacian(const GrayImage& img) {
    const int w = img.width(), h = img.height();
    auto px = [&](int x, int y) {
        return double(img.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1)));
    };
    std::vector<double> out(img.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out[img.index(x, y)] = px(x - 1, y) + px(x + 1, y) + px(x, y - 1) + px(x, y + 1) - 4.0 * px(x, y);
    return out;
}

std::vector<int> hough_accumulate(const BinaryMask& edges, int radius) {
    const int w = edges.width(), h = edges.height();
    const auto offs = circle_offsets(radius);
    std::vector<int> acc(edges.size(), 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!edges.at(x, y))
                continue;
            for (const auto& o : offs) {
                const int cx = x + o.x, cy = y + o.y;
                if (cx >= radius && cx < w - radius && cy >= radius && cy < h - radius)
                    ++acc[edges.index(cx, cy)];
            }
        }
    return acc;
}

} // namespace ptp::serial
