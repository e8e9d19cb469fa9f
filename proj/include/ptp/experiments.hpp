#pragma once

#include "ptp/allocator.hpp"
#include "ptp/chanvese.hpp"
#include "ptp/dataset.hpp"
#include "ptp/quality.hpp"
#include "ptp/simhuman.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ptp {

// Candidate sets for a batch, generated in parallel. `generators` restricts the
// built-in registry (empty = all); imports come from `import_dir` when given.
std::vector<CandidateSet> generate_all(const std::vector<DatasetImage>& images,
                                       const std::filesystem::path& import_dir = {},
                                       const std::vector<std::string>& generators = {});

std::vector<LabelledImage> label_images(const std::vector<DatasetImage>& images,
                                        const std::vector<CandidateSet>& candidates);

struct PredictionEvalConfig {
    ForestParams forest;
    int folds = 10;
    std::filesystem::path import_dir;
};

struct PredictionEvalResult {
    EvalReport forest;
    EvalReport linear;
    std::vector<TrainingExample> examples; // test examples
    std::vector<double> forest_predictions;
    std::vector<double> linear_predictions;
};

// Grouped k-fold on one dataset.
PredictionEvalResult run_prediction_eval(const std::vector<DatasetImage>& images, const PredictionEvalConfig& cfg);
// Train on one dataset, test on another.
PredictionEvalResult run_cross_eval(const std::vector<DatasetImage>& train, const std::vector<DatasetImage>& test,
                                    const PredictionEvalConfig& cfg);

std::string predictions_csv(const PredictionEvalResult& r);

enum class AllocationSystem { coarse, fine };

const std::vector<std::string>& sweep_strategies();

struct SweepConfig {
    std::vector<std::string> strategies = sweep_strategies();
    std::vector<double> budgets; // fractions, ascending
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
    AllocationSystem system = AllocationSystem::coarse;
    ChanVeseParams chanvese;
    std::string refiner = "chanvese"; // chanvese | none
    // Human simulator; mode exact makes humans return ground truth.
    AnnotatorMode human = AnnotatorMode::coarse;
    ForestParams forest;
    int folds = 10;
    std::filesystem::path import_dir;
    std::vector<std::string> generators; // empty = full registry
    // Scores candidates with this model instead of out-of-fold forests.
    std::optional<ForestModel> model;
};

// Default grid 0, 0.05, ..., 1.
std::vector<double> default_budget_grid();

struct SweepRow {
    std::string strategy;
    double budget_fraction = 0.0;
    std::size_t human_count = 0;
    double mean_jaccard = 0.0;
    double total_human_seconds = 0.0;
    std::uint64_t seed = 0;
};

struct SweepDetail {
    std::string strategy;
    double budget_fraction = 0.0;
    std::uint64_t seed = 0;
    std::string image_id;
    Source source = Source::automatic;
    std::string generator_id;
    double rank_score = 0.0;
    double jaccard = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<SweepDetail> details;
    std::vector<double> human_mean_quality; // per seed, unrefined simulated-human masks
};

SweepResult run_sweep(const std::vector<DatasetImage>& images, const SweepConfig& cfg);

std::string sweep_csv(const SweepResult& r);
std::string sweep_details_csv(const SweepResult& r);

struct StatRow {
    std::string name;
    double mean = 0.0;
    double sigma = 0.0; // population standard deviation
};

// Area, X Loc, Y Loc, Shape, FG/Image, FG Var, BG Var of the ground-truth objects.
std::vector<StatRow> dataset_stats(const std::vector<DatasetImage>& images);
std::string stats_csv(const std::vector<StatRow>& rows);

} // namespace ptp
