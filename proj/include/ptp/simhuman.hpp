#pragma once

#include "ptp/mask.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ptp {

// coarse: rough initialisations (crowd quality ~0.58 Jaccard)
// fine:   from-scratch annotations (0.90)
// exact:  returns ground truth; an oracle annotator for bound checks
enum class AnnotatorMode { coarse, fine, exact };

struct SimAnnotatorParams {
    AnnotatorMode mode = AnnotatorMode::coarse;
    double target_mean_quality = 0.58;
    // Upper bound of the perturbation severity, as a multiple of the object's
    // equivalent-disk radius. Zero disables perturbation.
    double jitter = 1.5;
    std::uint64_t seed = 0;

    static SimAnnotatorParams coarse(std::uint64_t seed = 0) { return {AnnotatorMode::coarse, 0.58, 1.5, seed}; }
    static SimAnnotatorParams fine(std::uint64_t seed = 0) { return {AnnotatorMode::fine, 0.90, 1.5, seed}; }
    static SimAnnotatorParams exact() { return {AnnotatorMode::exact, 1.0, 0.0, 0}; }
};

void validate(const SimAnnotatorParams& p);

// One perturbation of gt at a given severity. Random draws depend only on
// (seed, key), so the same key sees the same noise at every severity.
BinaryMask simulate_human(const BinaryMask& gt, const SimAnnotatorParams& p, double severity, const std::string& key);

// Simulated annotator whose severity is calibrated by bisection so that the mean
// Jaccard over the calibration corpus lands on the target quality.
class SimAnnotator {
  public:
    SimAnnotator(SimAnnotatorParams params, const std::vector<const BinaryMask*>& calibration_gts,
                 const std::vector<std::string>& keys);

    BinaryMask annotate(const BinaryMask& gt, const std::string& key) const;
    double severity() const { return severity_; }
    double calibrated_mean() const { return calibrated_mean_; }
    const SimAnnotatorParams& params() const { return params_; }

  private:
    SimAnnotatorParams params_;
    double severity_ = 0.0;
    double calibrated_mean_ = 1.0;
};

} // namespace ptp
