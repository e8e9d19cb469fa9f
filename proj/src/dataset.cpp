#include "ptp/dataset.hpp"

#include "ptp/image_io.hpp"
#include "ptp/polygon.hpp"
#include "ptp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

namespace fs = std::filesystem;

namespace ptp {

namespace {

std::map<std::string, fs::path> pngs_by_stem(const fs::path& dir) {
    std::map<std::string, fs::path> out;
    if (!fs::is_directory(dir))
        return out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".png")
            out[e.path().stem().string()] = e.path();
    return out;
}

BinaryMask ellipse_mask(int w, int h, double cx, double cy, double a, double b, double angle) {
    BinaryMask m(w, h);
    const double ca = std::cos(angle), sa = std::sin(angle);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
            const double u = (dx * ca + dy * sa) / a, v = (-dx * sa + dy * ca) / b;
            if (u * u + v * v <= 1.0)
                m.set(x, y);
        }
    return m;
}

BinaryMask star_polygon(int w, int h, double cx, double cy, double radius, Rng& rng) {
    const int k = 5 + static_cast<int>(rng.index(5));
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    std::vector<Point> pts;
    for (int i = 0; i < k; ++i) {
        const double t = phase + 2.0 * std::numbers::pi * i / k;
        const double r = radius * rng.uniform(0.55, 1.0);
        pts.push_back({cx + r * std::cos(t), cy + r * std::sin(t)});
    }
    return rasterize_polygon(pts, w, h);
}

} // namespace

DatasetManifest ingest(const fs::path& root) {
    DatasetManifest man;
    man.root = root;
    const auto images = pngs_by_stem(root / "images");
    const auto gts = pngs_by_stem(root / "gt");
    std::vector<std::string> problems;
    std::set<std::string> ids;
    for (const auto& [id, _] : images)
        ids.insert(id);
    for (const auto& [id, _] : gts)
        ids.insert(id);
    for (const auto& id : ids) {
        const auto ii = images.find(id);
        const auto gi = gts.find(id);
        if (ii == images.end()) {
            problems.push_back(id + ": missing image");
            continue;
        }
        if (gi == gts.end()) {
            problems.push_back(id + ": missing ground truth");
            continue;
        }
        try {
            const GrayImage img = read_gray_png(ii->second);
            const BinaryMask gt = read_mask_png(gi->second);
            if (!gt.same_shape(img))
                problems.push_back(id + ": ground truth size differs from image");
            else if (gt.empty())
                problems.push_back(id + ": ground truth is empty");
            else
                man.entries.push_back({id, ii->second, gi->second});
        } catch (const Error& e) {
            problems.push_back(id + ": " + e.what());
        }
    }
    if (!problems.empty()) {
        std::string msg = "invalid dataset at " + root.string() + ":";
        for (const auto& p : problems)
            msg += "\n  " + p;
        throw Error(msg);
    }
    if (man.entries.empty())
        throw Error("no images found under " + root.string());
    return man;
}

std::vector<DatasetImage> load_images(const DatasetManifest& manifest) {
    std::vector<DatasetImage> out;
    out.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries)
        out.push_back({e.image_id, read_gray_png(e.image_file), read_mask_png(e.gt_file)});
    return out;
}

std::vector<DatasetImage> synth_corpus(int n, std::uint64_t seed, const SynthParams& p) {
    if (n < 1)
        throw Error("synth_corpus: n must be >= 1");
    std::vector<DatasetImage> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        const int w = p.min_size + static_cast<int>(rng.index(p.max_size - p.min_size + 1));
        const int h = p.min_size + static_cast<int>(rng.index(p.max_size - p.min_size + 1));
        const double frac = rng.uniform(p.min_fg_fraction, p.max_fg_fraction);
        const double area = frac * w * h;

        double kind = rng.uniform();
        if (!p.allow_polygons && kind >= 0.45 && kind < 0.8)
            kind = 0.0;
        if (!p.allow_annuli && kind >= 0.8)
            kind = 0.0;

        const double aspect = rng.uniform(0.55, 1.8);
        const double angle = rng.uniform(0.0, std::numbers::pi);
        double extent_r; // half-extent used to keep the object inside the frame
        BinaryMask gt;
        auto place = [&](double r) {
            const double margin = std::min(r + 2.0, std::min(w, h) / 2.0);
            return std::pair{rng.uniform(margin, w - margin), rng.uniform(margin, h - margin)};
        };
        if (kind < 0.45) {
            const double a = std::sqrt(area * aspect / std::numbers::pi), b = area / (std::numbers::pi * a);
            extent_r = std::max(a, b);
            const auto [cx, cy] = place(extent_r);
            gt = ellipse_mask(w, h, cx, cy, a, b, angle);
        } else if (kind < 0.8) {
            // star polygons cover roughly 0.6 of their circumscribed disk
            extent_r = std::sqrt(area / (0.6 * std::numbers::pi));
            const auto [cx, cy] = place(extent_r);
            gt = star_polygon(w, h, cx, cy, extent_r, rng);
        } else {
            const double inner = rng.uniform(0.3, 0.6);
            extent_r = std::sqrt(area / (std::numbers::pi * (1.0 - inner * inner)));
            const auto [cx, cy] = place(extent_r);
            gt = disk_mask(w, h, cx, cy, extent_r);
            const auto hole = disk_mask(w, h, cx, cy, extent_r * inner);
            for (std::size_t k = 0; k < gt.size(); ++k)
                if (hole[k])
                    gt.data()[k] = 0;
        }
        if (gt.empty())
            gt.set(w / 2, h / 2);

        const double bg = rng.uniform(40.0, 215.0);
        double contrast = rng.uniform(p.min_contrast, p.max_contrast);
        if (p.allow_dark_objects && rng.uniform() < 0.35)
            contrast = -contrast;
        const double fg = std::clamp(bg + contrast, 0.0, 255.0);
        const double grad = rng.uniform(0.0, p.max_gradient);
        const double grad_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double noise = rng.uniform(p.min_noise, p.max_noise);

        std::vector<double> field(static_cast<std::size_t>(w) * h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double t = ((x + 0.5) / w - 0.5) * std::cos(grad_angle) + ((y + 0.5) / h - 0.5) * std::sin(grad_angle);
                field[static_cast<std::size_t>(y) * w + x] = bg + grad * t;
            }

        const int distractors = p.max_distractors > 0 ? static_cast<int>(rng.index(p.max_distractors + 1)) : 0;
        for (int d = 0; d < distractors; ++d) {
            const double darea = rng.uniform(0.005, 0.03) * w * h;
            const double da = std::sqrt(darea * rng.uniform(0.6, 1.6) / std::numbers::pi);
            const double db = darea / (std::numbers::pi * da);
            const double dx = rng.uniform(da, w - da), dy = rng.uniform(da, h - da);
            const double dv = rng.uniform(0.0, 255.0);
            const auto blob = ellipse_mask(w, h, dx, dy, da, db, rng.uniform(0.0, std::numbers::pi));
            for (std::size_t k = 0; k < field.size(); ++k)
                if (blob[k] && !gt[k])
                    field[k] = dv;
        }
        // the object carries half of the background ramp
        for (std::size_t k = 0; k < field.size(); ++k)
            if (gt[k])
                field[k] = fg + 0.5 * (field[k] - bg);

        GrayImage img(w, h);
        for (std::size_t k = 0; k < field.size(); ++k) {
            const double v = field[k] + (noise > 0.0 ? noise * rng.normal() : 0.0);
            img.data()[k] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
        char id[32];
        std::snprintf(id, sizeof id, "synth_%04d", i);
        out.push_back({id, std::move(img), std::move(gt)});
    }
    return out;
}

DatasetManifest write_dataset(const fs::path& root, const std::vector<DatasetImage>& images,
                              const std::string& modality) {
    fs::create_directories(root / "images");
    fs::create_directories(root / "gt");
    for (const auto& im : images) {
        write_png(root / "images" / (im.image_id + ".png"), im.image);
        write_png(root / "gt" / (im.image_id + ".png"), im.gt);
    }
    auto man = ingest(root);
    man.modality = modality;
    return man;
}

} // namespace ptp
