#include "ptp/forest.hpp"

#include "ptp/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <tuple>

namespace ptp {

namespace {

constexpr int kFormatVersion = 1;
constexpr const char* kPrng = "mt19937_64 seeded by splitmix64(seed, tree, node)";

struct Sample {
    const double* x; // feature row
    double y;
};

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double sse = 0.0;
    std::size_t n_left = 0;
};

double sse_of(std::span<const Sample* const> rows) {
    double s = 0.0, s2 = 0.0;
    for (const auto* r : rows) {
        s += r->y;
        s2 += r->y * r->y;
    }
    return s2 - s * s / double(rows.size());
}

// Best variance-reduction split among `features`; feature == -1 when none is admissible.
Split best_split(std::vector<const Sample*>& rows, std::span<const int> features, int min_leaf) {
    Split best;
    bool found = false;
    const std::size_t n = rows.size();
    std::vector<const Sample*> order(rows);
    for (const int f : features) {
        std::stable_sort(order.begin(), order.end(),
                         [f](const Sample* a, const Sample* b) { return a->x[f] < b->x[f]; });
        double total = 0.0, total2 = 0.0;
        for (const auto* r : order) {
            total += r->y;
            total2 += r->y * r->y;
        }
        double ls = 0.0, ls2 = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            ls += order[i]->y;
            ls2 += order[i]->y * order[i]->y;
            const std::size_t nl = i + 1, nr = n - nl;
            if (nl < std::size_t(min_leaf))
                continue;
            if (nr < std::size_t(min_leaf))
                break;
            const double a = order[i]->x[f], b = order[i + 1]->x[f];
            if (!(a < b))
                continue;
            const double rs = total - ls, rs2 = total2 - ls2;
            const double sse = (ls2 - ls * ls / double(nl)) + (rs2 - rs * rs / double(nr));
            if (!found || sse < best.sse) {
                found = true;
                double t = a + (b - a) / 2.0;
                if (!(t < b))
                    t = a;
                best = {f, t, sse, nl};
            }
        }
    }
    if (!found)
        best.feature = -1;
    return best;
}

RegressionTree grow_tree(const std::vector<Sample>& canon, const ForestParams& p, std::size_t tree_index) {
    Rng boot(derive_seed(p.seed, tree_index, 0));
    std::vector<const Sample*> rows;
    rows.reserve(canon.size());
    if (p.bootstrap) {
        for (std::size_t i = 0; i < canon.size(); ++i)
            rows.push_back(&canon[boot.index(canon.size())]);
    } else {
        for (const auto& s : canon)
            rows.push_back(&s);
    }

    RegressionTree tree;
    struct Pending {
        int node;
        std::vector<const Sample*> rows;
    };
    auto add_node = [&tree]() {
        tree.feature.push_back(-1);
        tree.threshold.push_back(0.0);
        tree.left.push_back(-1);
        tree.right.push_back(-1);
        tree.value.push_back(0.0);
        return static_cast<int>(tree.feature.size()) - 1;
    };

    // depth-first, left child first; node ids follow creation order
    std::vector<Pending> stack;
    stack.push_back({add_node(), std::move(rows)});
    while (!stack.empty()) {
        Pending cur = std::move(stack.back());
        stack.pop_back();
        double sum = 0.0;
        for (const auto* r : cur.rows)
            sum += r->y;
        tree.value[cur.node] = sum / double(cur.rows.size());

        const bool pure = std::all_of(cur.rows.begin(), cur.rows.end(),
                                      [&](const Sample* r) { return r->y == cur.rows.front()->y; });
        if (pure || cur.rows.size() < std::size_t(2 * p.min_leaf))
            continue;

        Rng node_rng(derive_seed(p.seed, tree_index, std::uint64_t(cur.node) + 1));
        std::array<int, kNumFeatures> feats;
        std::iota(feats.begin(), feats.end(), 0);
        for (int i = 0; i < p.mtry; ++i) {
            const auto j = i + static_cast<int>(node_rng.index(kNumFeatures - i));
            std::swap(feats[i], feats[j]);
        }
        const Split split = best_split(cur.rows, std::span<const int>(feats.data(), p.mtry), p.min_leaf);
        if (split.feature < 0 || !(split.sse < sse_of(cur.rows)))
            continue;

        std::vector<const Sample*> lrows, rrows;
        for (const auto* r : cur.rows)
            (r->x[split.feature] <= split.threshold ? lrows : rrows).push_back(r);
        tree.feature[cur.node] = split.feature;
        tree.threshold[cur.node] = split.threshold;
        const int l = add_node();
        const int r = add_node();
        tree.left[cur.node] = l;
        tree.right[cur.node] = r;
        stack.push_back({r, std::move(rrows)});
        stack.push_back({l, std::move(lrows)});
    }
    return tree;
}

} // namespace

double RegressionTree::predict(const FeatureVector& f) const {
    int node = 0;
    while (feature[node] >= 0)
        node = f[feature[node]] <= threshold[node] ? left[node] : right[node];
    return value[node];
}

void validate(const ForestParams& p) {
    if (p.n_trees < 1)
        throw Error("forest: n_trees must be >= 1");
    if (p.mtry < 1 || p.mtry > int(kNumFeatures))
        throw Error("forest: mtry must lie in [1, 9]");
    if (p.min_leaf < 1)
        throw Error("forest: min_leaf must be >= 1");
}

ForestModel train_forest(const std::vector<TrainingExample>& examples, const ForestParams& params, Exec exec) {
    validate(params);
    if (examples.size() < std::size_t(2 * params.min_leaf))
        throw Error("forest: need at least " + std::to_string(2 * params.min_leaf) + " examples, got " +
                    std::to_string(examples.size()));

    std::vector<std::size_t> idx(examples.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const auto& ea = examples[a];
        const auto& eb = examples[b];
        return std::tie(ea.image_id, ea.provenance, ea.features.values, ea.label) <
               std::tie(eb.image_id, eb.provenance, eb.features.values, eb.label);
    });
    std::vector<Sample> canon;
    canon.reserve(idx.size());
    for (auto i : idx)
        canon.push_back({examples[i].features.values.data(), examples[i].label});

    ForestModel model;
    model.params = params;
    model.trees.resize(params.n_trees);
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int t = 0; t < params.n_trees; ++t)
            model.trees[t] = grow_tree(canon, params, std::size_t(t));
    } else {
        for (int t = 0; t < params.n_trees; ++t)
            model.trees[t] = grow_tree(canon, params, std::size_t(t));
    }
    return model;
}

double predict(const ForestModel& model, const FeatureVector& f) {
    if (model.feature_schema != kFeatureSchema)
        throw Error("model feature schema '" + model.feature_schema + "' does not match '" +
                    std::string(kFeatureSchema) + "'");
    double sum = 0.0;
    for (const auto& t : model.trees)
        sum += t.predict(f);
    return std::clamp(sum / double(model.trees.size()), 0.0, 1.0);
}

std::string model_to_json(const ForestModel& model) {
    nlohmann::ordered_json j;
    j["format"] = "ptp-forest";
    j["version"] = kFormatVersion;
    j["feature_schema"] = model.feature_schema;
    j["feature_names"] = feature_names();
    j["prng"] = kPrng;
    j["params"] = {{"n_trees", model.params.n_trees},
                   {"mtry", model.params.mtry},
                   {"min_leaf", model.params.min_leaf},
                   {"bootstrap", model.params.bootstrap},
                   {"seed", model.params.seed}};
    auto trees = nlohmann::ordered_json::array();
    for (const auto& t : model.trees)
        trees.push_back({{"feature", t.feature},
                         {"threshold", t.threshold},
                         {"left", t.left},
                         {"right", t.right},
                         {"value", t.value}});
    j["trees"] = std::move(trees);
    return j.dump(1) + "\n";
}

ForestModel model_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed model file: ") + e.what());
    }
    try {
        if (j.at("format") != "ptp-forest")
            throw Error("not a forest model file");
        if (j.at("version").get<int>() != kFormatVersion)
            throw Error("unsupported model file version " + j.at("version").dump());
        ForestModel m;
        m.feature_schema = j.at("feature_schema").get<std::string>();
        if (m.feature_schema != kFeatureSchema)
            throw Error("model feature schema '" + m.feature_schema + "' is not supported");
        const auto& p = j.at("params");
        m.params.n_trees = p.at("n_trees").get<int>();
        m.params.mtry = p.at("mtry").get<int>();
        m.params.min_leaf = p.at("min_leaf").get<int>();
        m.params.bootstrap = p.at("bootstrap").get<bool>();
        m.params.seed = p.at("seed").get<std::uint64_t>();
        validate(m.params);
        for (const auto& jt : j.at("trees")) {
            RegressionTree t;
            jt.at("feature").get_to(t.feature);
            jt.at("threshold").get_to(t.threshold);
            jt.at("left").get_to(t.left);
            jt.at("right").get_to(t.right);
            jt.at("value").get_to(t.value);
            const auto n = t.feature.size();
            if (n == 0 || t.threshold.size() != n || t.left.size() != n || t.right.size() != n || t.value.size() != n)
                throw Error("malformed tree arrays");
            for (std::size_t i = 0; i < n; ++i) {
                if (t.feature[i] >= int(kNumFeatures))
                    throw Error("tree feature index out of range");
                if (t.feature[i] >= 0 && (t.left[i] <= int(i) || t.right[i] <= int(i) || t.left[i] >= int(n) ||
                                          t.right[i] >= int(n)))
                    throw Error("tree child index out of range");
            }
            m.trees.push_back(std::move(t));
        }
        if (m.trees.size() != std::size_t(m.params.n_trees))
            throw Error("tree count does not match params");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed model file: ") + e.what());
    }
}

void save_model(const ForestModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    out << model_to_json(model);
}

ForestModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

} // namespace ptp
