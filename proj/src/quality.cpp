#include "ptp/quality.hpp"

#include "ptp/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace ptp {

std::vector<TrainingExample> build_training_set(const std::vector<LabelledImage>& images) {
    std::vector<TrainingExample> out;
    for (const auto& im : images) {
        if (im.gt.empty())
            throw Error("ground truth for image '" + im.image_id + "' is empty");
        auto add = [&](const BinaryMask& m, std::string provenance) {
            out.push_back({extract_features(m), jaccard(m, im.gt), std::move(provenance), im.image_id});
        };
        add(im.gt, "gt");
        add(dilate(im.gt, kGtMorphRadius), "gt-dilated");
        add(erode(im.gt, kGtMorphRadius), "gt-eroded");
        for (const auto& c : im.candidates.candidates) {
            if (!c.mask.same_shape(im.gt))
                throw Error("candidate '" + c.generator_id + "' of image '" + im.image_id +
                            "' does not match ground-truth dimensions");
            add(c.mask, c.generator_id);
        }
    }
    return out;
}

std::string training_csv_header() {
    return features_csv_header() + ",label,provenance,image_id";
}

std::string training_csv_row(const TrainingExample& e) {
    std::ostringstream os;
    os.precision(17);
    os << features_csv_row(e.features) << ',' << e.label << ',' << e.provenance << ',' << e.image_id;
    return os.str();
}

LinearModel train_linear(const std::vector<TrainingExample>& examples) {
    const std::size_t n = examples.size();
    if (n < 10)
        throw Error("linear model needs at least 10 examples, got " + std::to_string(n));
    constexpr int d = int(kNumFeatures);
    Eigen::VectorXd xmean = Eigen::VectorXd::Zero(d);
    double ymean = 0.0;
    for (const auto& e : examples) {
        for (int j = 0; j < d; ++j)
            xmean[j] += e.features[j];
        ymean += e.label;
    }
    xmean /= double(n);
    ymean /= double(n);

    // Centred normal equations; the intercept is recovered afterwards and left unpenalised.
    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd xty = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd row(d);
    for (const auto& e : examples) {
        for (int j = 0; j < d; ++j)
            row[j] = e.features[j] - xmean[j];
        xtx.noalias() += row * row.transpose();
        xty.noalias() += row * (e.label - ymean);
    }
    xtx.diagonal().array() += kLinearRidge;
    const Eigen::VectorXd w = xtx.ldlt().solve(xty);

    LinearModel m;
    m.intercept = ymean;
    for (int j = 0; j < d; ++j) {
        m.weights[j] = w[j];
        m.intercept -= w[j] * xmean[j];
    }
    return m;
}

double predict_linear(const LinearModel& model, const FeatureVector& f) {
    double y = model.intercept;
    for (std::size_t j = 0; j < kNumFeatures; ++j)
        y += model.weights[j] * f[j];
    return std::clamp(y, 0.0, 1.0);
}

EvalReport evaluate(std::span<const double> preds, std::span<const double> labels) {
    if (preds.size() != labels.size() || preds.empty())
        throw Error("evaluate: predictions and labels must have equal nonzero length");
    const double n = double(preds.size());
    double mp = 0.0, ml = 0.0, mae = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        mp += preds[i];
        ml += labels[i];
        mae += std::abs(preds[i] - labels[i]);
    }
    mp /= n;
    ml /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double a = preds[i] - mp, b = labels[i] - ml;
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    EvalReport r;
    r.n = preds.size();
    r.mae = mae / n;
    if (sxx > 0.0 && syy > 0.0)
        r.cc = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    return r;
}

std::map<std::string, int> assign_folds(const std::vector<TrainingExample>& examples, int k, std::uint64_t seed) {
    if (k < 2)
        throw Error("crossval: k must be >= 2");
    std::set<std::string> unique;
    for (const auto& e : examples)
        unique.insert(e.image_id);
    if (unique.size() < std::size_t(k))
        throw Error("crossval: " + std::to_string(unique.size()) + " distinct images is fewer than k = " +
                    std::to_string(k));
    std::vector<std::string> ids(unique.begin(), unique.end());
    Rng rng(derive_seed(seed, hash_string("folds")));
    for (std::size_t i = ids.size(); i > 1; --i)
        std::swap(ids[i - 1], ids[rng.index(i)]);
    std::map<std::string, int> fold_of;
    for (std::size_t i = 0; i < ids.size(); ++i)
        fold_of[ids[i]] = int(i % std::size_t(k));
    return fold_of;
}

namespace {

std::vector<TrainingExample> training_part(const std::vector<TrainingExample>& examples,
                                           const std::map<std::string, int>& fold_of, int fold) {
    std::vector<TrainingExample> train;
    for (const auto& e : examples)
        if (fold_of.at(e.image_id) != fold)
            train.push_back(e);
    return train;
}

} // namespace

const ForestModel& FoldModels::for_image(const std::string& image_id) const {
    const auto it = fold_of.find(image_id);
    if (it == fold_of.end())
        throw Error("no fold assigned to image '" + image_id + "'");
    return models.at(static_cast<std::size_t>(it->second));
}

FoldModels train_fold_models(const std::vector<TrainingExample>& examples, int k, const ForestParams& params) {
    FoldModels fm;
    fm.fold_of = assign_folds(examples, k, params.seed);
    for (int fold = 0; fold < k; ++fold)
        fm.models.push_back(train_forest(training_part(examples, fm.fold_of, fold), params));
    return fm;
}

CrossvalResult crossval(const std::vector<TrainingExample>& examples, int k, const ForestParams& params,
                        Learner learner) {
    CrossvalResult res;
    res.fold_of = assign_folds(examples, k, params.seed);
    res.predictions.assign(examples.size(), 0.0);
    for (int fold = 0; fold < k; ++fold) {
        const auto train = training_part(examples, res.fold_of, fold);
        if (learner == Learner::forest) {
            const auto model = train_forest(train, params);
            for (std::size_t i = 0; i < examples.size(); ++i)
                if (res.fold_of.at(examples[i].image_id) == fold)
                    res.predictions[i] = predict(model, examples[i].features);
        } else {
            const auto model = train_linear(train);
            for (std::size_t i = 0; i < examples.size(); ++i)
                if (res.fold_of.at(examples[i].image_id) == fold)
                    res.predictions[i] = predict_linear(model, examples[i].features);
        }
    }
    std::vector<double> labels;
    labels.reserve(examples.size());
    for (const auto& e : examples)
        labels.push_back(e.label);
    res.report = evaluate(res.predictions, labels);
    return res;
}

} // namespace ptp
