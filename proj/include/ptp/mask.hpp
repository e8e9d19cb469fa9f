#pragma once

#include "ptp/error.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ptp {

struct Pixel {
    int x = 0;
    int y = 0;
    bool operator==(const Pixel&) const = default;
};

// Row-major 8-bit grayscale image.
class GrayImage {
  public:
    GrayImage() = default;
    GrayImage(int width, int height, std::uint8_t fill = 0);
    GrayImage(int width, int height, std::vector<std::uint8_t> intensities);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }

    std::uint8_t at(int x, int y) const { return data_[index(x, y)]; }
    std::uint8_t& at(int x, int y) { return data_[index(x, y)]; }
    std::span<const std::uint8_t> data() const { return data_; }
    std::span<std::uint8_t> data() { return data_; }

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }
    bool operator==(const GrayImage&) const = default;

  private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

// Row-major boolean grid, one byte per pixel (0 = background, 1 = foreground).
class BinaryMask {
  public:
    BinaryMask() = default;
    BinaryMask(int width, int height, bool fill = false);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }

    bool at(int x, int y) const { return data_[index(x, y)] != 0; }
    void set(int x, int y, bool v = true) { data_[index(x, y)] = v ? 1 : 0; }
    bool operator[](std::size_t i) const { return data_[i] != 0; }

    bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
    bool same_shape(const BinaryMask& o) const { return width_ == o.width_ && height_ == o.height_; }
    bool same_shape(const GrayImage& o) const { return width_ == o.width() && height_ == o.height(); }

    std::span<const std::uint8_t> data() const { return data_; }
    std::span<std::uint8_t> data() { return data_; }

    std::size_t count() const;
    bool empty() const { return count() == 0; }
    // True when every foreground pixel of *this is also foreground in `other`.
    bool subset_of(const BinaryMask& other) const;

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }
    bool operator==(const BinaryMask&) const = default;

  private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

// Half-open pixel rectangle [x0,x1) x [y0,y1).
struct Rect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    long area() const { return static_cast<long>(width()) * height(); }
    bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
    bool operator==(const Rect&) const = default;
};

// Center of mass in sub-pixel coordinates; pixel (x,y) has center (x+0.5, y+0.5).
struct Centroid {
    double x = 0.0;
    double y = 0.0;
};

BinaryMask rect_mask(int width, int height, const Rect& r);
BinaryMask disk_mask(int width, int height, double cx, double cy, double radius);

// |a ∩ b| / |a ∪ b|; two empty masks score 1.
double jaccard(const BinaryMask& a, const BinaryMask& b);

// Euclidean-disk morphology. Pixels outside the image are background.
BinaryMask dilate(const BinaryMask& m, int radius);
BinaryMask erode(const BinaryMask& m, int radius);

BinaryMask fill_holes(const BinaryMask& m);
BinaryMask largest_component(const BinaryMask& m);
BinaryMask complement(const BinaryMask& m);

std::vector<Pixel> boundary_pixels(const BinaryMask& m);
Centroid centroid(const BinaryMask& m);
Rect bounding_box(const BinaryMask& m);
BinaryMask convex_hull_mask(const BinaryMask& m);

// Number of 8-connected foreground components.
int count_components(const BinaryMask& m);

// 4-neighbour Laplacian with replicated border.
std::vector<double> laplacian(const GrayImage& img);
double laplacian_variance(const GrayImage& img, const BinaryMask& m);

} // namespace ptp
