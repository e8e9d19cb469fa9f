#include "ptp/mask.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <string>

namespace ptp {

namespace {

void check_dims(int w, int h) {
    if (w < 1 || h < 1)
        throw Error("image dimensions must be positive, got " + std::to_string(w) + "x" + std::to_string(h));
}

void require_nonempty(const BinaryMask& m, const char* what) {
    if (m.empty())
        throw Error(std::string(what) + ": mask is empty");
}

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D squared distance transform of a sampled function (lower envelope of parabolas).
void edt_1d(const double* f, double* d, int n, int* v, double* z) {
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    for (int q = 1; q < n; ++q) {
        if (f[q] == kInf)
            continue;
        if (f[v[k]] == kInf) {
            v[k] = q;
            continue;
        }
        double s;
        while (true) {
            const int p = v[k];
            s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
            if (s <= z[k] && k > 0) {
                --k;
                continue;
            }
            break;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q)
            ++k;
        const double diff = q - v[k];
        d[q] = f[v[k]] == kInf ? kInf : diff * diff + f[v[k]];
    }
}

// Exact squared Euclidean distance to the nearest pixel equal to `target`.
std::vector<double> squared_edt(const BinaryMask& m, bool target) {
    const int w = m.width(), h = m.height();
    std::vector<double> g(m.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = (m[i] == target) ? 0.0 : kInf;

#pragma omp parallel
    {
        std::vector<double> f(h), d(h), z(h + 1);
        std::vector<int> v(h);
#pragma omp for schedule(static)
        for (int x = 0; x < w; ++x) {
            for (int y = 0; y < h; ++y)
                f[y] = g[static_cast<std::size_t>(y) * w + x];
            edt_1d(f.data(), d.data(), h, v.data(), z.data());
            for (int y = 0; y < h; ++y)
                g[static_cast<std::size_t>(y) * w + x] = d[y];
        }
    }
#pragma omp parallel
    {
        std::vector<double> d(w), z(w + 1);
        std::vector<int> v(w);
#pragma omp for schedule(static)
        for (int y = 0; y < h; ++y) {
            double* row = g.data() + static_cast<std::size_t>(y) * w;
            edt_1d(row, d.data(), w, v.data(), z.data());
            std::copy(d.begin(), d.end(), row);
        }
    }
    return g;
}

} // namespace

GrayImage::GrayImage(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
    check_dims(width, height);
    data_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> intensities)
    : width_(width), height_(height), data_(std::move(intensities)) {
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * height)
        throw Error("intensity count does not match image dimensions");
}

BinaryMask::BinaryMask(int width, int height, bool fill) : width_(width), height_(height) {
    check_dims(width, height);
    data_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

std::size_t BinaryMask::count() const {
    std::size_t n = 0;
    for (auto v : data_)
        n += v;
    return n;
}

bool BinaryMask::subset_of(const BinaryMask& other) const {
    if (!same_shape(other))
        return false;
    for (std::size_t i = 0; i < data_.size(); ++i)
        if (data_[i] && !other.data_[i])
            return false;
    return true;
}

BinaryMask rect_mask(int width, int height, const Rect& r) {
    BinaryMask m(width, height);
    for (int y = std::max(0, r.y0); y < std::min(height, r.y1); ++y)
        for (int x = std::max(0, r.x0); x < std::min(width, r.x1); ++x)
            m.set(x, y);
    return m;
}

BinaryMask disk_mask(int width, int height, double cx, double cy, double radius) {
    BinaryMask m(width, height);
    const double r2 = radius * radius;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
            if (dx * dx + dy * dy <= r2)
                m.set(x, y);
        }
    return m;
}

double jaccard(const BinaryMask& a, const BinaryMask& b) {
    if (!a.same_shape(b))
        throw Error("jaccard: mask dimensions differ");
    std::size_t inter = 0, uni = 0;
    const auto da = a.data(), db = b.data();
    for (std::size_t i = 0; i < da.size(); ++i) {
        inter += da[i] & db[i];
        uni += da[i] | db[i];
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

BinaryMask dilate(const BinaryMask& m, int radius) {
    if (radius < 0)
        throw Error("dilate: negative radius");
    if (radius == 0 || m.empty())
        return m;
    const auto d2 = squared_edt(m, true);
    const double r2 = double(radius) * radius;
    BinaryMask out(m.width(), m.height());
    auto od = out.data();
    for (std::size_t i = 0; i < d2.size(); ++i)
        od[i] = d2[i] <= r2 ? 1 : 0;
    return out;
}

BinaryMask erode(const BinaryMask& m, int radius) {
    if (radius < 0)
        throw Error("erode: negative radius");
    if (radius == 0)
        return m;
    const int w = m.width(), h = m.height();
    const auto d2 = squared_edt(m, false);
    const double r2 = double(radius) * radius;
    BinaryMask out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            // nearest out-of-image pixel lies straight across the closest border
            const int border = std::min({x + 1, y + 1, w - x, h - y});
            const std::size_t i = m.index(x, y);
            if (m[i] && border > radius && d2[i] > r2)
                out.set(x, y);
        }
    return out;
}

BinaryMask fill_holes(const BinaryMask& m) {
    const int w = m.width(), h = m.height();
    std::vector<std::uint8_t> outside(m.size(), 0);
    std::deque<Pixel> queue;
    auto seed = [&](int x, int y) {
        const auto i = m.index(x, y);
        if (!m[i] && !outside[i]) {
            outside[i] = 1;
            queue.push_back({x, y});
        }
    };
    for (int x = 0; x < w; ++x) {
        seed(x, 0);
        seed(x, h - 1);
    }
    for (int y = 0; y < h; ++y) {
        seed(0, y);
        seed(w - 1, y);
    }
    constexpr int dx4[] = {1, -1, 0, 0};
    constexpr int dy4[] = {0, 0, 1, -1};
    while (!queue.empty()) {
        const Pixel p = queue.front();
        queue.pop_front();
        for (int k = 0; k < 4; ++k) {
            const int nx = p.x + dx4[k], ny = p.y + dy4[k];
            if (m.in_bounds(nx, ny))
                seed(nx, ny);
        }
    }
    BinaryMask out(w, h);
    auto od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i)
        od[i] = outside[i] ? 0 : 1;
    return out;
}

namespace {

// Labels 8-connected foreground components in row-major discovery order.
// Returns component sizes; labels[i] is 0 for background, else 1-based id.
std::vector<std::size_t> label_components(const BinaryMask& m, std::vector<int>& labels) {
    labels.assign(m.size(), 0);
    std::vector<std::size_t> sizes;
    std::vector<Pixel> stack;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
            const auto i = m.index(x, y);
            if (!m[i] || labels[i])
                continue;
            const int id = static_cast<int>(sizes.size()) + 1;
            std::size_t n = 0;
            labels[i] = id;
            stack.push_back({x, y});
            while (!stack.empty()) {
                const Pixel p = stack.back();
                stack.pop_back();
                ++n;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = p.x + dx, ny = p.y + dy;
                        if (!m.in_bounds(nx, ny))
                            continue;
                        const auto j = m.index(nx, ny);
                        if (m[j] && !labels[j]) {
                            labels[j] = id;
                            stack.push_back({nx, ny});
                        }
                    }
            }
            sizes.push_back(n);
        }
    return sizes;
}

} // namespace

BinaryMask largest_component(const BinaryMask& m) {
    std::vector<int> labels;
    const auto sizes = label_components(m, labels);
    BinaryMask out(m.width(), m.height());
    if (sizes.empty())
        return out;
    // strict > keeps the earliest component on ties
    std::size_t best = 0;
    for (std::size_t c = 1; c < sizes.size(); ++c)
        if (sizes[c] > sizes[best])
            best = c;
    const int keep = static_cast<int>(best) + 1;
    auto od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i)
        od[i] = labels[i] == keep ? 1 : 0;
    return out;
}

int count_components(const BinaryMask& m) {
    std::vector<int> labels;
    return static_cast<int>(label_components(m, labels).size());
}

BinaryMask complement(const BinaryMask& m) {
    BinaryMask out = m;
    for (auto& v : out.data())
        v = v ? 0 : 1;
    return out;
}

std::vector<Pixel> boundary_pixels(const BinaryMask& m) {
    require_nonempty(m, "boundary_pixels");
    std::vector<Pixel> out;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
            if (!m.at(x, y))
                continue;
            bool edge = false;
            for (int dy = -1; dy <= 1 && !edge; ++dy)
                for (int dx = -1; dx <= 1 && !edge; ++dx) {
                    if (dx == 0 && dy == 0)
                        continue;
                    const int nx = x + dx, ny = y + dy;
                    edge = !m.in_bounds(nx, ny) || !m.at(nx, ny);
                }
            if (edge)
                out.push_back({x, y});
        }
    return out;
}

Centroid centroid(const BinaryMask& m) {
    require_nonempty(m, "centroid");
    double sx = 0.0, sy = 0.0;
    std::size_t n = 0;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (m.at(x, y)) {
                sx += x + 0.5;
                sy += y + 0.5;
                ++n;
            }
    return {sx / double(n), sy / double(n)};
}

Rect bounding_box(const BinaryMask& m) {
    require_nonempty(m, "bounding_box");
    Rect r{m.width(), m.height(), 0, 0};
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (m.at(x, y)) {
                r.x0 = std::min(r.x0, x);
                r.y0 = std::min(r.y0, y);
                r.x1 = std::max(r.x1, x + 1);
                r.y1 = std::max(r.y1, y + 1);
            }
    return r;
}

namespace {

std::int64_t cross(const Pixel& o, const Pixel& a, const Pixel& b) {
    return std::int64_t(a.x - o.x) * (b.y - o.y) - std::int64_t(a.y - o.y) * (b.x - o.x);
}

} // namespace

BinaryMask convex_hull_mask(const BinaryMask& m) {
    require_nonempty(m, "convex_hull_mask");
    // Row extremes are the only possible hull vertices.
    std::vector<Pixel> pts;
    for (int y = 0; y < m.height(); ++y) {
        int lo = -1, hi = -1;
        for (int x = 0; x < m.width(); ++x)
            if (m.at(x, y)) {
                if (lo < 0)
                    lo = x;
                hi = x;
            }
        if (lo >= 0) {
            pts.push_back({lo, y});
            if (hi != lo)
                pts.push_back({hi, y});
        }
    }
    std::sort(pts.begin(), pts.end(), [](const Pixel& a, const Pixel& b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    });

    // Andrew's monotone chain, counter-clockwise, collinear points dropped.
    std::vector<Pixel> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0)
            --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0)
            --k;
        hull[k++] = pts[i];
    }
    hull.resize(pts.size() == 1 ? 1 : k - 1);

    const Rect box = bounding_box(m);
    BinaryMask out(m.width(), m.height());
    for (int y = box.y0; y < box.y1; ++y)
        for (int x = box.x0; x < box.x1; ++x) {
            const Pixel p{x, y};
            bool inside;
            if (hull.size() == 1) {
                inside = p == hull[0];
            } else if (hull.size() == 2) {
                inside = cross(hull[0], hull[1], p) == 0; // bounding box already limits the extent
            } else {
                inside = true;
                for (std::size_t i = 0; i < hull.size() && inside; ++i)
                    inside = cross(hull[i], hull[(i + 1) % hull.size()], p) >= 0;
            }
            if (inside)
                out.set(x, y);
        }
    return out;
}

std::vector<double> laplacian(const GrayImage& img) {
    const int w = img.width(), h = img.height();
    std::vector<double> out(img.size());
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        const int yu = std::max(0, y - 1), yd = std::min(h - 1, y + 1);
        for (int x = 0; x < w; ++x) {
            const int xl = std::max(0, x - 1), xr = std::min(w - 1, x + 1);
            out[img.index(x, y)] = double(img.at(xl, y)) + img.at(xr, y) + img.at(x, yu) + img.at(x, yd) -
                                   4.0 * img.at(x, y);
        }
    }
    return out;
}

double laplacian_variance(const GrayImage& img, const BinaryMask& m) {
    if (!m.same_shape(img))
        throw Error("laplacian_variance: image and mask dimensions differ");
    require_nonempty(m, "laplacian_variance");
    const auto lap = laplacian(img);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < lap.size(); ++i)
        if (m[i]) {
            sum += lap[i];
            ++n;
        }
    const double mean = sum / double(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < lap.size(); ++i)
        if (m[i])
            ss += (lap[i] - mean) * (lap[i] - mean);
    return ss / double(n);
}

} // namespace ptp
