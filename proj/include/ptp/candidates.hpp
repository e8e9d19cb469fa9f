#pragma once

#include "ptp/mask.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace ptp {

struct Candidate {
    std::string generator_id;
    BinaryMask mask;
};

// Candidates for one image, in registry order. Order is the tie-break authority
// wherever a choice among candidates is made.
struct CandidateSet {
    std::string image_id;
    std::vector<Candidate> candidates;
};

// Built-in generator ids in registry order.
const std::vector<std::string>& builtin_generators();

// Threshold maximizing between-class variance (lowest t on ties).
int otsu_level(const GrayImage& img);
BinaryMask otsu_threshold(const GrayImage& img);

// Odd window side used by adaptive_threshold: largest odd <= min(w,h)/8, at least 3.
int adaptive_window(int width, int height);
BinaryMask adaptive_threshold(const GrayImage& img);

// Midpoint (Bresenham) circle offsets of the given radius, deduplicated.
std::vector<Pixel> circle_offsets(int radius);

// Sobel edge pixels strictly above the 90th-percentile gradient magnitude.
BinaryMask hough_edges(const GrayImage& img);

// Votes per center; centers are restricted to positions where the whole disk fits,
// i.e. x in [r, w-r) and y in [r, h-r). Layout is row-major over the full image.
// Each center gathers votes from the edge pixels on its circle (OpenMP over rows).
std::vector<int> hough_accumulate(const BinaryMask& edges, int radius);
BinaryMask hough_circles(const GrayImage& img, int radius);

// fill_holes followed by largest_component.
BinaryMask postprocess(const BinaryMask& m);

BinaryMask run_generator(const std::string& generator_id, const GrayImage& img);

// External proposal masks for `image_id`: files named <image_id>.<slot>.png in
// `dir`, returned in lexicographic slot order.
std::vector<std::filesystem::path> find_imports(const std::filesystem::path& dir, const std::string& image_id);

CandidateSet generate_candidates(const std::string& image_id, const GrayImage& img,
                                 const std::vector<std::filesystem::path>& imports = {});

} // namespace ptp
