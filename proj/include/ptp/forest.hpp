#pragma once

#include "ptp/exec.hpp"
#include "ptp/features.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ptp {

struct TrainingExample {
    FeatureVector features;
    double label = 0.0; // Jaccard vs ground truth
    std::string provenance; // gt, gt-dilated, gt-eroded or a generator id
    std::string image_id;
};

struct ForestParams {
    int n_trees = 25;
    int mtry = 3; // ceil(9 / 3)
    int min_leaf = 5;
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

// Flat binary regression tree. feature < 0 marks a leaf; x[feature] <= threshold goes left.
struct RegressionTree {
    std::vector<int> feature;
    std::vector<double> threshold;
    std::vector<int> left;
    std::vector<int> right;
    std::vector<double> value;

    std::size_t size() const { return feature.size(); }
    double predict(const FeatureVector& f) const;
    bool operator==(const RegressionTree&) const = default;
};

struct ForestModel {
    ForestParams params;
    std::vector<RegressionTree> trees;
    std::string feature_schema{kFeatureSchema};
};

void validate(const ForestParams& p);

// Bootstrap and feature draws come from streams derived from (seed, tree, node) over
// examples put into a canonical order first, so the model does not depend on the
// order in which examples are supplied.
ForestModel train_forest(const std::vector<TrainingExample>& examples, const ForestParams& params,
                         Exec exec = Exec::parallel);

// Mean of tree outputs clamped to [0,1].
double predict(const ForestModel& model, const FeatureVector& f);

std::string model_to_json(const ForestModel& model);
ForestModel model_from_json(const std::string& text);
void save_model(const ForestModel& model, const std::filesystem::path& path);
ForestModel load_model(const std::filesystem::path& path);

} // namespace ptp
