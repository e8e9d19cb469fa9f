#pragma once

#include "ptp/mask.hpp"

#include <array>
#include <string>
#include <string_view>

namespace ptp {

// Tag written into model files; bump when the feature layout changes.
inline constexpr std::string_view kFeatureSchema = "mask9-v1";
inline constexpr std::size_t kNumFeatures = 9;

// Nine shape descriptors of a binary segmentation, in the fixed column order
// used by CSV dumps and model files.
struct FeatureVector {
    enum Index : std::size_t {
        boundary_dist_mean,
        boundary_dist_std,
        extent,
        solidity,
        shape_factor,
        centroid_x_norm,
        centroid_y_norm,
        fg_fraction,
        bbox_fraction,
    };

    std::array<double, kNumFeatures> values{};
    // Set for the all-zero vector produced from an empty mask.
    bool degenerate = false;

    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }
    bool operator==(const FeatureVector&) const = default;
};

const std::array<std::string_view, kNumFeatures>& feature_names();

// Perimeter estimate: (pi/4) x number of foreground/background 4-adjacent pixel
// edges, image border counting as background. Unbiased for isotropic shapes.
double perimeter_length(const BinaryMask& m);

FeatureVector extract_features(const BinaryMask& m);

std::string features_csv_header();
std::string features_csv_row(const FeatureVector& f);

} // namespace ptp
