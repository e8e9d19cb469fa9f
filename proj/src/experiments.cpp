#include "ptp/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace ptp {

std::vector<CandidateSet> generate_all(const std::vector<DatasetImage>& images,
                                       const std::filesystem::path& import_dir,
                                       const std::vector<std::string>& generators) {
    for (const auto& g : generators)
        if (std::find(builtin_generators().begin(), builtin_generators().end(), g) == builtin_generators().end())
            throw Error("unknown generator '" + g + "'");
    std::vector<CandidateSet> out(images.size());
    std::vector<std::string> errors(images.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < images.size(); ++i) {
        try {
            const auto& im = images[i];
            const auto imports = import_dir.empty() ? std::vector<std::filesystem::path>{}
                                                    : find_imports(import_dir, im.image_id);
            if (generators.empty()) {
                out[i] = generate_candidates(im.image_id, im.image, imports);
            } else {
                CandidateSet cs = generate_candidates(im.image_id, im.image, imports);
                std::erase_if(cs.candidates, [&](const Candidate& c) {
                    return !c.generator_id.starts_with("import:") &&
                           std::find(generators.begin(), generators.end(), c.generator_id) == generators.end();
                });
                out[i] = std::move(cs);
            }
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
    for (const auto& e : errors)
        if (!e.empty())
            throw Error(e);
    return out;
}

std::vector<LabelledImage> label_images(const std::vector<DatasetImage>& images,
                                        const std::vector<CandidateSet>& candidates) {
    if (images.size() != candidates.size())
        throw Error("label_images: one candidate set per image required");
    std::vector<LabelledImage> out;
    out.reserve(images.size());
    for (std::size_t i = 0; i < images.size(); ++i)
        out.push_back({images[i].image_id, images[i].gt, candidates[i]});
    return out;
}

namespace {

std::vector<double> labels_of(const std::vector<TrainingExample>& ex) {
    std::vector<double> y;
    y.reserve(ex.size());
    for (const auto& e : ex)
        y.push_back(e.label);
    return y;
}

std::vector<TrainingExample> examples_for(const std::vector<DatasetImage>& images,
                                          const std::filesystem::path& import_dir) {
    if (images.size() < 10)
        throw Error("prediction evaluation needs at least 10 images, got " + std::to_string(images.size()));
    return build_training_set(label_images(images, generate_all(images, import_dir)));
}

} // namespace

PredictionEvalResult run_prediction_eval(const std::vector<DatasetImage>& images, const PredictionEvalConfig& cfg) {
    PredictionEvalResult r;
    r.examples = examples_for(images, cfg.import_dir);
    const auto forest = crossval(r.examples, cfg.folds, cfg.forest, Learner::forest);
    const auto linear = crossval(r.examples, cfg.folds, cfg.forest, Learner::linear);
    r.forest = forest.report;
    r.linear = linear.report;
    r.forest_predictions = forest.predictions;
    r.linear_predictions = linear.predictions;
    return r;
}

PredictionEvalResult run_cross_eval(const std::vector<DatasetImage>& train, const std::vector<DatasetImage>& test,
                                    const PredictionEvalConfig& cfg) {
    const auto train_ex = examples_for(train, cfg.import_dir);
    PredictionEvalResult r;
    r.examples = examples_for(test, cfg.import_dir);
    const auto forest = train_forest(train_ex, cfg.forest);
    const auto linear = train_linear(train_ex);
    for (const auto& e : r.examples) {
        r.forest_predictions.push_back(predict(forest, e.features));
        r.linear_predictions.push_back(predict_linear(linear, e.features));
    }
    const auto y = labels_of(r.examples);
    r.forest = evaluate(r.forest_predictions, y);
    r.linear = evaluate(r.linear_predictions, y);
    return r;
}

std::string predictions_csv(const PredictionEvalResult& r) {
    std::ostringstream os;
    os.precision(17);
    os << "image_id,provenance,label,forest_prediction,linear_prediction\n";
    for (std::size_t i = 0; i < r.examples.size(); ++i)
        os << r.examples[i].image_id << ',' << r.examples[i].provenance << ',' << r.examples[i].label << ','
           << r.forest_predictions[i] << ',' << r.linear_predictions[i] << '\n';
    return os.str();
}

const std::vector<std::string>& sweep_strategies() {
    static const std::vector<std::string> names = {"ours", "perfect", "chance", "rectangle", "no_refinement"};
    return names;
}

std::vector<double> default_budget_grid() {
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i)
        grid.push_back(i / 20.0);
    return grid;
}

namespace {

// Per-image, per-strategy outcome before the budget is applied.
struct Outcome {
    std::string generator_id;
    double rank_score = 0.0; // only meaningful for ranked strategies
    double auto_jaccard = 0.0;
    double human_jaccard = 0.0;
};

bool is_ranked(const std::string& strategy) {
    return strategy == "ours" || strategy == "perfect" || strategy == "no_refinement";
}

class RefineCache {
  public:
    RefineCache(const GrayImage& img, const Refiner& refiner) : img_(img), refiner_(refiner) {}

    const BinaryMask& get(const std::string& key, const BinaryMask& init) {
        auto it = cache_.find(key);
        if (it == cache_.end())
            it = cache_.emplace(key, refiner_(img_, init)).first;
        return it->second;
    }

  private:
    const GrayImage& img_;
    const Refiner& refiner_;
    std::map<std::string, BinaryMask> cache_;
};

} // namespace

SweepResult run_sweep(const std::vector<DatasetImage>& images, const SweepConfig& cfg) {
    if (images.empty())
        throw Error("sweep: no images");
    for (const auto& s : cfg.strategies)
        if (std::find(sweep_strategies().begin(), sweep_strategies().end(), s) == sweep_strategies().end())
            throw Error("sweep: unknown strategy '" + s + "'");
    if (cfg.budgets.empty() || !std::is_sorted(cfg.budgets.begin(), cfg.budgets.end()))
        throw Error("sweep: budgets must be nonempty and ascending");
    for (double b : cfg.budgets)
        validate(BudgetSpec::fraction(b));
    if (cfg.seeds.empty())
        throw Error("sweep: at least one seed required");
    if (cfg.refiner != "chanvese" && cfg.refiner != "none")
        throw Error("sweep: unknown refiner '" + cfg.refiner + "'");
    const Refiner refiner = cfg.refiner == "chanvese" ? chanvese_refiner(cfg.chanvese) : identity_refiner();
    const bool fine = cfg.system == AllocationSystem::fine;
    const double unit_cost = fine ? kCostFromScratch : kCostCoarse;

    const std::size_t n = images.size();
    const auto candidates = generate_all(images, cfg.import_dir, cfg.generators);
    for (const auto& cs : candidates)
        if (cs.candidates.empty())
            throw Error("sweep: no candidates for image '" + cs.image_id + "'");

    std::optional<FoldModels> folds;
    if (!cfg.model)
        folds = train_fold_models(build_training_set(label_images(images, candidates)), cfg.folds, cfg.forest);
    auto model_for = [&](const std::string& id) -> const ForestModel& {
        return cfg.model ? *cfg.model : folds->for_image(id);
    };

    // Predicted and actual quality of every candidate.
    std::vector<std::vector<double>> predicted(n), actual(n);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < n; ++i) {
        const auto& model = model_for(images[i].image_id);
        for (const auto& c : candidates[i].candidates) {
            predicted[i].push_back(predict(model, extract_features(c.mask)));
            actual[i].push_back(jaccard(c.mask, images[i].gt));
        }
    }
    auto argmax = [](const std::vector<double>& v) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < v.size(); ++j)
            if (v[j] > v[best])
                best = j;
        return best;
    };

    std::vector<const BinaryMask*> gts;
    std::vector<std::string> keys;
    for (const auto& im : images) {
        gts.push_back(&im.gt);
        keys.push_back(im.image_id);
    }

    SweepResult result;
    const std::size_t ns = cfg.strategies.size();
    // outcomes[seed][strategy][image]
    std::vector<std::vector<std::vector<Outcome>>> outcomes(cfg.seeds.size(),
                                                            std::vector<std::vector<Outcome>>(ns, std::vector<Outcome>(n)));
    std::vector<std::vector<BinaryMask>> human_masks(cfg.seeds.size());
    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
        SimAnnotatorParams hp = cfg.human == AnnotatorMode::exact ? SimAnnotatorParams::exact()
                                : cfg.human == AnnotatorMode::fine ? SimAnnotatorParams::fine(cfg.seeds[si])
                                                                   : SimAnnotatorParams::coarse(cfg.seeds[si]);
        const SimAnnotator annotator(hp, gts, keys);
        human_masks[si].resize(n);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            human_masks[si][i] = annotator.annotate(images[i].gt, images[i].image_id);
            sum += jaccard(human_masks[si][i], images[i].gt);
        }
        result.human_mean_quality.push_back(sum / double(n));
    }
    // Coarse human input is refined like any other initialisation; fine and exact input is final.
    const bool refine_humans = !fine && cfg.human == AnnotatorMode::coarse;

    std::vector<std::string> errors(n);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < n; ++i) {
        try {
            const auto& im = images[i];
            const auto& cs = candidates[i];
            const auto& model = model_for(im.image_id);
            RefineCache cache(im.image, refiner);
            const std::size_t ours = argmax(predicted[i]);
            const std::size_t perfect = argmax(actual[i]);
            for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
                const std::uint64_t seed = cfg.seeds[si];
                const BinaryMask& hm = human_masks[si][i];
                const double human_raw = jaccard(hm, im.gt);
                const double human_refined =
                    refine_humans ? jaccard(cache.get("human:" + std::to_string(seed), hm), im.gt) : human_raw;
                for (std::size_t k = 0; k < ns; ++k) {
                    const std::string& st = cfg.strategies[k];
                    Outcome& o = outcomes[si][k][i];
                    o.human_jaccard = st == "no_refinement" ? human_raw : human_refined;
                    if (st == "rectangle") {
                        o.generator_id = "rectangle";
                        o.auto_jaccard =
                            jaccard(cache.get("rectangle", baseline_rectangle(im.image.width(), im.image.height())),
                                    im.gt);
                        continue;
                    }
                    std::size_t pick = ours;
                    if (st == "perfect")
                        pick = perfect;
                    if (st == "chance") {
                        Rng rng(derive_seed(seed, hash_string("chance-candidate"), hash_string(im.image_id)));
                        pick = baseline_chance(cs, rng).index;
                    }
                    const auto& cand = cs.candidates[pick];
                    o.generator_id = cand.generator_id;
                    if (st == "no_refinement") {
                        o.auto_jaccard = actual[i][pick];
                        o.rank_score = predicted[i][pick];
                        continue;
                    }
                    const BinaryMask& refined = cache.get("candidate:" + std::to_string(pick), cand.mask);
                    o.auto_jaccard = jaccard(refined, im.gt);
                    if (st == "ours")
                        o.rank_score = fine ? predict(model, extract_features(refined)) : predicted[i][pick];
                    else if (st == "perfect")
                        o.rank_score = fine ? o.auto_jaccard : actual[i][pick];
                }
            }
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
    for (const auto& e : errors)
        if (!e.empty())
            throw Error(e);

    for (std::size_t k = 0; k < ns; ++k) {
        const std::string& st = cfg.strategies[k];
        for (double budget : cfg.budgets) {
            for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
                const auto& out = outcomes[si][k];
                std::vector<ScoredImage> batch;
                batch.reserve(n);
                for (std::size_t i = 0; i < n; ++i)
                    batch.push_back({images[i].image_id, out[i].rank_score, out[i].generator_id});
                BudgetSpec spec = BudgetSpec::fraction(budget);
                AllocationPlan plan;
                if (is_ranked(st)) {
                    plan = st == "perfect" ? perfect_plan(batch, spec, unit_cost)
                           : fine          ? plan_fine(batch, spec)
                                           : plan_coarse(batch, spec);
                } else {
                    // fresh stream per budget, so human sets are nested across budgets
                    Rng rng(derive_seed(cfg.seeds[si], hash_string("chance-human:" + st)));
                    plan = chance_plan(batch, spec, unit_cost, rng);
                }
                double sum = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const bool human = plan.entries[i].source == Source::human;
                    const double j = human ? out[i].human_jaccard : out[i].auto_jaccard;
                    sum += j;
                    result.details.push_back({st, budget, cfg.seeds[si], images[i].image_id, plan.entries[i].source,
                                              out[i].generator_id, out[i].rank_score, j});
                }
                result.rows.push_back({st, budget, plan.human_entries(), std::clamp(sum / double(n), 0.0, 1.0),
                                       plan_cost(plan), cfg.seeds[si]});
            }
        }
    }
    return result;
}

std::string sweep_csv(const SweepResult& r) {
    std::ostringstream os;
    os.precision(17);
    os << "strategy,budget_fraction,human_count,mean_jaccard,total_human_seconds,seed\n";
    for (const auto& row : r.rows)
        os << row.strategy << ',' << row.budget_fraction << ',' << row.human_count << ',' << row.mean_jaccard << ','
           << row.total_human_seconds << ',' << row.seed << '\n';
    return os.str();
}

std::string sweep_details_csv(const SweepResult& r) {
    std::ostringstream os;
    os.precision(17);
    os << "strategy,budget_fraction,seed,image_id,source,generator_id,rank_score,jaccard\n";
    for (const auto& d : r.details)
        os << d.strategy << ',' << d.budget_fraction << ',' << d.seed << ',' << d.image_id << ','
           << to_string(d.source) << ',' << d.generator_id << ',' << d.rank_score << ',' << d.jaccard << '\n';
    return os.str();
}

std::vector<StatRow> dataset_stats(const std::vector<DatasetImage>& images) {
    if (images.empty())
        throw Error("dataset_stats: no images");
    const std::vector<std::string> names = {"Area", "X Loc", "Y Loc", "Shape", "FG/Image", "FG Var", "BG Var"};
    std::vector<std::vector<double>> cols(names.size());
    for (const auto& im : images) {
        if (im.gt.empty())
            throw Error("dataset_stats: ground truth for image '" + im.image_id + "' is empty");
        const auto c = centroid(im.gt);
        const auto f = extract_features(im.gt);
        cols[0].push_back(double(im.gt.count()));
        cols[1].push_back(c.x);
        cols[2].push_back(c.y);
        cols[3].push_back(f[FeatureVector::shape_factor]);
        cols[4].push_back(f[FeatureVector::fg_fraction]);
        cols[5].push_back(laplacian_variance(im.image, im.gt));
        const BinaryMask bg = complement(im.gt);
        if (!bg.empty())
            cols[6].push_back(laplacian_variance(im.image, bg));
    }
    std::vector<StatRow> rows;
    for (std::size_t k = 0; k < names.size(); ++k) {
        StatRow r{names[k], 0.0, 0.0};
        const auto& v = cols[k];
        if (!v.empty()) {
            for (double x : v)
                r.mean += x;
            r.mean /= double(v.size());
            double ss = 0.0;
            for (double x : v)
                ss += (x - r.mean) * (x - r.mean);
            r.sigma = std::sqrt(ss / double(v.size()));
        }
        rows.push_back(r);
    }
    return rows;
}

std::string stats_csv(const std::vector<StatRow>& rows) {
    std::ostringstream os;
    os.precision(17);
    os << "statistic,mean,sigma\n";
    for (const auto& r : rows)
        os << r.name << ',' << r.mean << ',' << r.sigma << '\n';
    return os.str();
}

} // namespace ptp
