#include "ptp/simhuman.hpp"

#include "ptp/candidates.hpp"
#include "ptp/rng.hpp"

#include <cmath>
#include <numbers>

namespace ptp {

void validate(const SimAnnotatorParams& p) {
    if (!(p.target_mean_quality > 0.0 && p.target_mean_quality <= 1.0))
        throw Error("annotator target quality must lie in (0,1]");
    if (!(p.jitter >= 0.0))
        throw Error("annotator jitter must be >= 0");
}

BinaryMask simulate_human(const BinaryMask& gt, const SimAnnotatorParams& p, double severity, const std::string& key) {
    if (gt.empty())
        throw Error("simulate_human: ground truth is empty");
    if (p.mode == AnnotatorMode::exact || severity <= 0.0)
        return gt;

    Rng rng(derive_seed(p.seed, hash_string(key)));
    const double scale = rng.uniform(0.5, 1.5);
    const bool grow = rng.uniform() < 0.5;
    const bool notch = rng.uniform() < 0.6;
    const double notch_scale = rng.uniform(0.3, 1.0);
    const double notch_pick = rng.uniform();

    const double req = std::sqrt(double(gt.count()) / std::numbers::pi);
    int radius = static_cast<int>(std::lround(severity * scale * req));
    int notch_radius = static_cast<int>(std::lround(severity * notch_scale * req));

    for (int attempt = 0; attempt <= 5; ++attempt) {
        BinaryMask m = grow ? dilate(gt, radius) : erode(gt, radius);
        if (notch && notch_radius > 0 && !m.empty()) {
            const auto boundary = boundary_pixels(m);
            const auto& c = boundary[static_cast<std::size_t>(notch_pick * double(boundary.size())) % boundary.size()];
            const auto bite = disk_mask(m.width(), m.height(), c.x + 0.5, c.y + 0.5, notch_radius);
            for (std::size_t i = 0; i < m.size(); ++i)
                if (bite[i])
                    m.data()[i] = 0;
        }
        m = postprocess(m);
        if (!m.empty())
            return m;
        radius /= 2;
        notch_radius /= 2;
    }
    return gt;
}

namespace {

double corpus_mean(const SimAnnotatorParams& p, double severity, const std::vector<const BinaryMask*>& gts,
                   const std::vector<std::string>& keys) {
    std::vector<double> scores(gts.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < gts.size(); ++i)
        scores[i] = jaccard(simulate_human(*gts[i], p, severity, keys[i]), *gts[i]);
    double sum = 0.0;
    for (double s : scores)
        sum += s;
    return sum / double(scores.size());
}

} // namespace

SimAnnotator::SimAnnotator(SimAnnotatorParams params, const std::vector<const BinaryMask*>& gts,
                           const std::vector<std::string>& keys)
    : params_(params) {
    validate(params_);
    if (gts.size() != keys.size())
        throw Error("SimAnnotator: one key per calibration mask required");
    if (params_.mode == AnnotatorMode::exact || params_.jitter == 0.0 || params_.target_mean_quality >= 1.0 ||
        gts.empty())
        return;

    double lo = 0.0, hi = params_.jitter;
    double hi_mean = corpus_mean(params_, hi, gts, keys);
    if (hi_mean >= params_.target_mean_quality) {
        severity_ = hi;
        calibrated_mean_ = hi_mean;
        return;
    }
    // mean quality decreases with severity; keep the bracket [lo, hi] around the target
    double best = hi, best_gap = std::abs(hi_mean - params_.target_mean_quality), best_mean = hi_mean;
    for (int it = 0; it < 30; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double m = corpus_mean(params_, mid, gts, keys);
        const double gap = std::abs(m - params_.target_mean_quality);
        if (gap < best_gap) {
            best = mid;
            best_gap = gap;
            best_mean = m;
        }
        if (m > params_.target_mean_quality)
            lo = mid;
        else
            hi = mid;
    }
    severity_ = best;
    calibrated_mean_ = best_mean;
}

BinaryMask SimAnnotator::annotate(const BinaryMask& gt, const std::string& key) const {
    return simulate_human(gt, params_, severity_, key);
}

} // namespace ptp
