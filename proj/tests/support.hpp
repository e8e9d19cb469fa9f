#pragma once

#include "ptp/mask.hpp"
#include "ptp/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace ptp::test {

// Blobby random mask: a few random disks and rectangles, optionally kept `margin` pixels from the border.
inline BinaryMask random_mask(Rng& rng, int w, int h, int margin = 0) {
    BinaryMask m(w, h);
    const int shapes = 1 + static_cast<int>(rng.index(4));
    for (int s = 0; s < shapes; ++s) {
        const bool disk = rng.uniform() < 0.5;
        const int x0 = margin + static_cast<int>(rng.index(std::uint64_t(w - 2 * margin)));
        const int y0 = margin + static_cast<int>(rng.index(std::uint64_t(h - 2 * margin)));
        if (disk) {
            const double r = 1.0 + rng.uniform() * std::min(w, h) / 4.0;
            const auto d = disk_mask(w, h, x0 + 0.5, y0 + 0.5, r);
            for (int y = margin; y < h - margin; ++y)
                for (int x = margin; x < w - margin; ++x)
                    if (d.at(x, y))
                        m.set(x, y);
        } else {
            const int x1 = std::min(w - margin, x0 + 1 + static_cast<int>(rng.index(std::uint64_t(w / 2))));
            const int y1 = std::min(h - margin, y0 + 1 + static_cast<int>(rng.index(std::uint64_t(h / 2))));
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x)
                    m.set(x, y);
        }
    }
    return m;
}

// Independent per-pixel noise mask with foreground probability p.
inline BinaryMask noise_mask(Rng& rng, int w, int h, double p) {
    BinaryMask m(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            m.set(x, y, rng.uniform() < p);
    return m;
}

inline GrayImage random_image(Rng& rng, int w, int h) {
    GrayImage img(w, h);
    for (auto& v : img.data())
        v = static_cast<std::uint8_t>(rng.index(256));
    return img;
}

inline BinaryMask translate(const BinaryMask& m, int dx, int dy, int w, int h) {
    BinaryMask out(w, h);
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (m.at(x, y))
                out.set(x + dx, y + dy);
    return out;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("ptp_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace ptp::test
