#pragma once

#include "ptp/candidates.hpp"
#include "ptp/forest.hpp"

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ptp {

// Radius of the ground-truth dilation/erosion used to synthesise near-perfect examples.
inline constexpr int kGtMorphRadius = 3;

struct LabelledImage {
    std::string image_id;
    BinaryMask gt;
    CandidateSet candidates;
};

// Per image: gt (label 1), gt dilated and eroded by three pixels, then every candidate.
std::vector<TrainingExample> build_training_set(const std::vector<LabelledImage>& images);

std::string training_csv_header();
std::string training_csv_row(const TrainingExample& e);

// Ordinary least squares on the nine features plus intercept (Linear baseline).
struct LinearModel {
    double intercept = 0.0;
    std::array<double, kNumFeatures> weights{};
};

inline constexpr double kLinearRidge = 1e-6;

LinearModel train_linear(const std::vector<TrainingExample>& examples);
double predict_linear(const LinearModel& model, const FeatureVector& f);

struct EvalReport {
    std::optional<double> cc; // unset when either series has zero variance
    double mae = 0.0;
    std::size_t n = 0;
};

EvalReport evaluate(std::span<const double> preds, std::span<const double> labels);

struct CrossvalResult {
    EvalReport report;
    std::vector<double> predictions; // held-out prediction per input example, input order
    std::map<std::string, int> fold_of; // image_id -> fold
};

enum class Learner { forest, linear };

// Seeded shuffle of the distinct image ids dealt round-robin into k folds.
std::map<std::string, int> assign_folds(const std::vector<TrainingExample>& examples, int k, std::uint64_t seed);

// One forest per fold, each trained on the examples of all other folds.
struct FoldModels {
    std::map<std::string, int> fold_of;
    std::vector<ForestModel> models;

    // Model that never saw `image_id` during training.
    const ForestModel& for_image(const std::string& image_id) const;
};

FoldModels train_fold_models(const std::vector<TrainingExample>& examples, int k, const ForestParams& params);

// Folds are formed over image ids so every example of an image shares a fold.
CrossvalResult crossval(const std::vector<TrainingExample>& examples, int k, const ForestParams& params,
                        Learner learner = Learner::forest);

} // namespace ptp
