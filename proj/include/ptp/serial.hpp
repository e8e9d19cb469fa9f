#pragma once

// Serial reference implementations of the data-parallel kernels. They follow the
// textbook definition of each operation directly and exist so the OpenMP paths
// can be checked for bit-identical output (tests) and timed against (bench).

#include "ptp/mask.hpp"

#include <vector>

namespace ptp::serial {

// Brute-force disk morphology: scan every offset with dx*dx + dy*dy <= r*r.
BinaryMask dilate(const BinaryMask& m, int radius);
BinaryMask erode(const BinaryMask& m, int radius);

// Squared Euclidean distance from every pixel to the nearest pixel where
// `feature` is true, by exhaustive search. Infinity when there is none.
std::vector<double> squared_distance(const BinaryMask& feature);

std::vector<double> laplacian(const GrayImage& img);

// Hough accumulator filled by scattering each edge pixel's votes.
std::vector<int> hough_accumulate(const BinaryMask& edges, int radius);

} // namespace ptp::serial
