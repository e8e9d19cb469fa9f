#include "ptp/candidates.hpp"

#include "ptp/image_io.hpp"

#include <algorithm>
#include <cstdint>
#include <set>

namespace ptp {

const std::vector<std::string>& builtin_generators() {
    static const std::vector<std::string> ids{
        "otsu", "otsu-complement", "adaptive", "adaptive-complement", "hough-3", "hough-5", "hough-10",
    };
    return ids;
}

namespace {

// Nonnegative fraction compared exactly: quotient first, then remainders cross-multiplied.
struct Ratio {
    unsigned __int128 num;
    std::uint64_t den;

    bool operator>(const Ratio& o) const {
        const auto qa = num / den, qb = o.num / o.den;
        if (qa != qb)
            return qa > qb;
        const auto ra = num % den, rb = o.num % o.den;
        return ra * o.den > rb * den;
    }
};

} // namespace

int otsu_level(const GrayImage& img) {
    std::int64_t hist[256] = {};
    for (auto v : img.data())
        ++hist[v];
    const std::int64_t n = static_cast<std::int64_t>(img.size());
    std::int64_t total = 0;
    for (int v = 0; v < 256; ++v)
        total += hist[v] * v;

    // between-class variance times N^2 is (N*s0 - n0*S)^2 / (n0*n1)
    int best_t = -1;
    Ratio best{0, 1};
    std::int64_t n0 = 0, s0 = 0;
    for (int t = 0; t < 256; ++t) {
        n0 += hist[t];
        s0 += hist[t] * t;
        const std::int64_t n1 = n - n0;
        if (n0 == 0 || n1 == 0)
            continue;
        const __int128 diff = __int128(n) * s0 - __int128(n0) * total;
        const auto mag = static_cast<unsigned __int128>(diff < 0 ? -diff : diff);
        const Ratio var{mag * mag, static_cast<std::uint64_t>(n0) * static_cast<std::uint64_t>(n1)};
        if (var > best) {
            best = var;
            best_t = t;
        }
    }
    if (best_t < 0) {
        // no threshold separates anything: place it at the top so nothing exceeds it
        return *std::max_element(img.data().begin(), img.data().end());
    }
    return best_t;
}

BinaryMask otsu_threshold(const GrayImage& img) {
    const int t = otsu_level(img);
    BinaryMask m(img.width(), img.height());
    auto md = m.data();
    const auto id = img.data();
    for (std::size_t i = 0; i < md.size(); ++i)
        md[i] = id[i] > t ? 1 : 0;
    return m;
}

int adaptive_window(int width, int height) {
    int side = std::min(width, height) / 8;
    if (side % 2 == 0)
        --side;
    return std::max(side, 3);
}

BinaryMask adaptive_threshold(const GrayImage& img) {
    const int w = img.width(), h = img.height();
    const int side = adaptive_window(w, h);
    const int half = side / 2;
    // separable box sum with replicated border, exact in integers
    std::vector<std::int64_t> rows(img.size()), box(img.size());
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            std::int64_t s = 0;
            for (int d = -half; d <= half; ++d)
                s += img.at(std::clamp(x + d, 0, w - 1), y);
            rows[img.index(x, y)] = s;
        }
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            std::int64_t s = 0;
            for (int d = -half; d <= half; ++d)
                s += rows[img.index(x, std::clamp(y + d, 0, h - 1))];
            box[img.index(x, y)] = s;
        }
    BinaryMask m(w, h);
    const std::int64_t area = std::int64_t(side) * side;
    auto md = m.data();
    for (std::size_t i = 0; i < md.size(); ++i)
        md[i] = std::int64_t(img.data()[i]) * area > box[i] ? 1 : 0;
    return m;
}

std::vector<Pixel> circle_offsets(int radius) {
    if (radius < 1)
        throw Error("circle_offsets: radius must be >= 1");
    auto key = [](const Pixel& p) { return std::pair{p.y, p.x}; };
    std::set<std::pair<int, int>> seen;
    int x = radius, y = 0, err = 1 - radius;
    while (x >= y) {
        for (const Pixel p : {Pixel{x, y}, Pixel{y, x}, Pixel{-y, x}, Pixel{-x, y}, Pixel{-x, -y}, Pixel{-y, -x},
                              Pixel{y, -x}, Pixel{x, -y}})
            seen.insert(key(p));
        ++y;
        if (err < 0) {
            err += 2 * y + 1;
        } else {
            --x;
            err += 2 * (y - x) + 1;
        }
    }
    std::vector<Pixel> out;
    out.reserve(seen.size());
    for (const auto& [py, px] : seen)
        out.push_back({px, py});
    return out;
}

BinaryMask hough_edges(const GrayImage& img) {
    const int w = img.width(), h = img.height();
    auto px = [&](int x, int y) { return int(img.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1))); };
    std::vector<std::int64_t> mag(img.size());
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int gx = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1)) -
                           (px(x - 1, y - 1) + 2 * px(x - 1, y) + px(x - 1, y + 1));
            const int gy = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1)) -
                           (px(x - 1, y - 1) + 2 * px(x, y - 1) + px(x + 1, y - 1));
            mag[img.index(x, y)] = std::int64_t(gx) * gx + std::int64_t(gy) * gy;
        }
    auto sorted = mag;
    const std::size_t k = (sorted.size() - 1) * 9 / 10;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
    const std::int64_t gate = sorted[k];
    BinaryMask edges(w, h);
    auto ed = edges.data();
    for (std::size_t i = 0; i < ed.size(); ++i)
        ed[i] = mag[i] > gate ? 1 : 0;
    return edges;
}

std::vector<int> hough_accumulate(const BinaryMask& edges, int radius) {
    const int w = edges.width(), h = edges.height();
    const auto offs = circle_offsets(radius);
    std::vector<int> acc(edges.size(), 0);
#pragma omp parallel for schedule(static)
    for (int cy = radius; cy < h - radius; ++cy)
        for (int cx = radius; cx < w - radius; ++cx) {
            int votes = 0;
            for (const auto& o : offs)
                votes += edges.at(cx - o.x, cy - o.y) ? 1 : 0;
            acc[edges.index(cx, cy)] = votes;
        }
    return acc;
}

BinaryMask hough_circles(const GrayImage& img, int radius) {
    if (radius < 1)
        throw Error("hough_circles: radius must be >= 1");
    const int w = img.width(), h = img.height();
    if (w < 2 * radius + 1 || h < 2 * radius + 1)
        throw Error("hough_circles: image smaller than circle of radius " + std::to_string(radius));
    const auto acc = hough_accumulate(hough_edges(img), radius);
    int bx = radius, by = radius, best = -1;
    for (int y = radius; y < h - radius; ++y)
        for (int x = radius; x < w - radius; ++x) {
            const int v = acc[static_cast<std::size_t>(y) * w + x];
            if (v > best) {
                best = v;
                bx = x;
                by = y;
            }
        }
    BinaryMask m(w, h);
    for (int y = by - radius; y <= by + radius; ++y)
        for (int x = bx - radius; x <= bx + radius; ++x)
            if ((x - bx) * (x - bx) + (y - by) * (y - by) <= radius * radius)
                m.set(x, y);
    return m;
}

BinaryMask postprocess(const BinaryMask& m) {
    return largest_component(fill_holes(m));
}

BinaryMask run_generator(const std::string& id, const GrayImage& img) {
    if (id == "otsu")
        return otsu_threshold(img);
    if (id == "otsu-complement")
        return complement(otsu_threshold(img));
    if (id == "adaptive")
        return adaptive_threshold(img);
    if (id == "adaptive-complement")
        return complement(adaptive_threshold(img));
    if (id.starts_with("hough-")) {
        const int r = std::stoi(id.substr(6));
        // images too small for the circle yield an empty proposal rather than aborting the set
        if (img.width() < 2 * r + 1 || img.height() < 2 * r + 1)
            return BinaryMask(img.width(), img.height());
        return hough_circles(img, r);
    }
    throw Error("unknown generator: " + id);
}

std::vector<std::filesystem::path> find_imports(const std::filesystem::path& dir, const std::string& image_id) {
    std::vector<std::filesystem::path> out;
    if (dir.empty() || !std::filesystem::is_directory(dir))
        return out;
    const std::string prefix = image_id + ".";
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && name.starts_with(prefix) && name.ends_with(".png") &&
            name.size() > prefix.size() + 4) {
            const std::string slot = name.substr(prefix.size(), name.size() - prefix.size() - 4);
            if (slot.find('.') == std::string::npos)
                out.push_back(entry.path());
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.filename() < b.filename(); });
    return out;
}

CandidateSet generate_candidates(const std::string& image_id, const GrayImage& img,
                                 const std::vector<std::filesystem::path>& imports) {
    CandidateSet cs{image_id, {}};
    for (const auto& id : builtin_generators())
        cs.candidates.push_back({id, postprocess(run_generator(id, img))});
    const std::string prefix = image_id + ".";
    for (const auto& path : imports) {
        BinaryMask m;
        try {
            m = read_mask_png(path);
        } catch (const Error& e) {
            throw Error("unreadable import " + path.string() + ": " + e.what());
        }
        if (!m.same_shape(img))
            throw Error("import " + path.string() + " does not match image dimensions");
        std::string slot = path.stem().string();
        if (slot.starts_with(prefix))
            slot = slot.substr(prefix.size());
        cs.candidates.push_back({"import:" + slot, postprocess(m)});
    }
    return cs;
}

} // namespace ptp
