#pragma once

#include "ptp/mask.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ptp {

struct ManifestEntry {
    std::string image_id;
    std::filesystem::path image_file;
    std::filesystem::path gt_file;
};

// Directory layout: <root>/images/<id>.png and <root>/gt/<id>.png.
struct DatasetManifest {
    std::filesystem::path root;
    std::vector<ManifestEntry> entries; // sorted by image_id
    std::string modality;
};

struct DatasetImage {
    std::string image_id;
    GrayImage image;
    BinaryMask gt;
};

// Validates pairing, dimensions and nonempty ground truth; the error lists every offender.
DatasetManifest ingest(const std::filesystem::path& root);
std::vector<DatasetImage> load_images(const DatasetManifest& manifest);

struct SynthParams {
    int min_size = 96;
    int max_size = 128;
    double min_fg_fraction = 0.02;
    double max_fg_fraction = 0.48;
    double min_noise = 4.0;
    double max_noise = 22.0;
    int max_distractors = 2;
    double max_gradient = 40.0; // peak-to-peak background ramp
    double min_contrast = 25.0;
    double max_contrast = 110.0;
    bool allow_polygons = true;
    bool allow_annuli = true;
    bool allow_dark_objects = true;
};

// Procedural images with one primary object (ellipse, star polygon or annulus) plus
// optional distractor blobs, background ramp and Gaussian noise. Fully determined by seed.
std::vector<DatasetImage> synth_corpus(int n, std::uint64_t seed, const SynthParams& params = {});

// Writes images/ and gt/ PNGs under root and returns the ingested manifest.
DatasetManifest write_dataset(const std::filesystem::path& root, const std::vector<DatasetImage>& images,
                              const std::string& modality = "synthetic");

} // namespace ptp
