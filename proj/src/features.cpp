#include "ptp/features.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

namespace ptp {

const std::array<std::string_view, kNumFeatures>& feature_names() {
    static const std::array<std::string_view, kNumFeatures> names{
        "boundary_dist_mean", "boundary_dist_std", "extent",     "solidity",      "shape_factor",
        "centroid_x_norm",    "centroid_y_norm",   "fg_fraction", "bbox_fraction",
    };
    return names;
}

double perimeter_length(const BinaryMask& m) {
    // crack-edge count scaled by pi/4, the mean ratio of Euclidean to city-block length
    std::size_t cracks = 0;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
            if (!m.at(x, y))
                continue;
            cracks += (x == 0 || !m.at(x - 1, y)) + (x + 1 == m.width() || !m.at(x + 1, y)) +
                      (y == 0 || !m.at(x, y - 1)) + (y + 1 == m.height() || !m.at(x, y + 1));
        }
    return std::numbers::pi / 4.0 * double(cracks);
}

FeatureVector extract_features(const BinaryMask& m) {
    FeatureVector f;
    const std::size_t area = m.count();
    if (area == 0) {
        f.degenerate = true;
        return f;
    }
    const double image_area = double(m.width()) * m.height();
    const Centroid c = centroid(m);
    const Rect box = bounding_box(m);
    const auto boundary = boundary_pixels(m);

    // Offsets are measured from the bounding-box corner in integers so that a
    // translated mask yields bit-identical distances.
    long long sx = 0, sy = 0;
    for (int y = box.y0; y < box.y1; ++y)
        for (int x = box.x0; x < box.x1; ++x)
            if (m.at(x, y)) {
                sx += x - box.x0;
                sy += y - box.y0;
            }
    const double mx = double(sx) / double(area), my = double(sy) / double(area);
    std::vector<double> dist;
    dist.reserve(boundary.size());
    for (const auto& p : boundary)
        dist.push_back(std::hypot(double(p.x - box.x0) - mx, double(p.y - box.y0) - my));
    double sum = 0.0;
    for (double d : dist)
        sum += d;
    const double mean = sum / double(dist.size());
    double ss = 0.0;
    for (double d : dist)
        ss += (d - mean) * (d - mean);

    const double perimeter = perimeter_length(m);
    f[FeatureVector::boundary_dist_mean] = mean;
    f[FeatureVector::boundary_dist_std] = std::sqrt(ss / double(boundary.size()));
    f[FeatureVector::extent] = double(area) / double(box.area());
    f[FeatureVector::solidity] = double(area) / double(convex_hull_mask(m).count());
    f[FeatureVector::shape_factor] = 4.0 * std::numbers::pi * double(area) / (perimeter * perimeter);
    f[FeatureVector::centroid_x_norm] = c.x / m.width();
    f[FeatureVector::centroid_y_norm] = c.y / m.height();
    f[FeatureVector::fg_fraction] = double(area) / image_area;
    f[FeatureVector::bbox_fraction] = double(box.area()) / image_area;
    return f;
}

std::string features_csv_header() {
    std::string out;
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
        if (i)
            out += ',';
        out += feature_names()[i];
    }
    return out;
}

std::string features_csv_row(const FeatureVector& f) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
        if (i)
            os << ',';
        os << f[i];
    }
    return os.str();
}

} // namespace ptp
