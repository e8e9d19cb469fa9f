#include "ptp/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ptp {

namespace {

std::vector<std::size_t> ranked(const std::vector<ScoredImage>& batch) {
    for (const auto& b : batch)
        if (!std::isfinite(b.score))
            throw Error("non-finite score for image '" + b.image_id + "'");
    std::vector<std::size_t> order(batch.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (batch[a].score != batch[b].score)
            return batch[a].score < batch[b].score;
        return batch[a].image_id < batch[b].image_id;
    });
    return order;
}

AllocationPlan assemble(const std::vector<ScoredImage>& batch, const std::vector<bool>& human, double unit_cost) {
    AllocationPlan plan;
    plan.entries.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        PlanEntry e;
        e.image_id = batch[i].image_id;
        e.predicted_score = batch[i].score;
        if (human[i]) {
            e.source = Source::human;
            e.human_cost_seconds = unit_cost;
        } else {
            e.generator_id = batch[i].generator_id;
        }
        plan.entries.push_back(std::move(e));
    }
    return plan;
}

AllocationPlan plan_lowest(const std::vector<ScoredImage>& batch, const BudgetSpec& budget, double unit_cost) {
    validate(budget);
    const auto order = ranked(batch);
    const std::size_t k = human_count(budget, batch.size(), unit_cost);
    std::vector<bool> human(batch.size(), false);
    for (std::size_t r = 0; r < k; ++r)
        human[order[r]] = true;
    return assemble(batch, human, unit_cost);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, ','))
        out.push_back(cur);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

} // namespace

void validate(const BudgetSpec& b) {
    if (b.mode == BudgetSpec::Mode::fraction && !(b.value >= 0.0 && b.value <= 1.0))
        throw Error("budget fraction must lie in [0,1]");
    if (b.mode == BudgetSpec::Mode::seconds && !(b.value >= 0.0))
        throw Error("budget seconds must be >= 0");
    if (!(b.cost_from_scratch > 0.0 && b.cost_coarse > 0.0 && b.cost_rectangle > 0.0))
        throw Error("human costs must be positive");
}

std::size_t human_count(const BudgetSpec& b, std::size_t n, double unit_cost) {
    double k;
    if (b.mode == BudgetSpec::Mode::fraction)
        k = std::floor(b.value * double(n) + 1e-9); // 0.05 * 20 must give 1, not 0
    else
        k = std::floor(b.value / unit_cost + 1e-9);
    return std::min(n, static_cast<std::size_t>(std::max(0.0, k)));
}

const char* to_string(Source s) {
    return s == Source::human ? "HUMAN" : "AUTO";
}

std::size_t AllocationPlan::human_entries() const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [](const PlanEntry& e) { return e.source == Source::human; }));
}

Choice select_best_candidate(const CandidateSet& cs, const ForestModel& model) {
    if (cs.candidates.empty())
        throw Error("select_best_candidate: empty candidate set for image '" + cs.image_id + "'");
    Choice best;
    for (std::size_t i = 0; i < cs.candidates.size(); ++i) {
        const double s = predict(model, extract_features(cs.candidates[i].mask));
        if (i == 0 || s > best.score)
            best = {i, cs.candidates[i].generator_id, s};
    }
    return best;
}

std::vector<std::string> lowest_k(const std::vector<ScoredImage>& batch, std::size_t k) {
    const auto order = ranked(batch);
    std::vector<std::string> ids;
    for (std::size_t r = 0; r < std::min(k, order.size()); ++r)
        ids.push_back(batch[order[r]].image_id);
    return ids;
}

AllocationPlan plan_coarse(const std::vector<ScoredImage>& batch, const BudgetSpec& budget) {
    return plan_lowest(batch, budget, budget.cost_coarse);
}

AllocationPlan plan_fine(const std::vector<ScoredImage>& batch, const BudgetSpec& budget) {
    return plan_lowest(batch, budget, budget.cost_from_scratch);
}

BinaryMask baseline_rectangle(int width, int height) {
    if (width < 20 || height < 20)
        throw Error("baseline_rectangle: image must be at least 20x20");
    const int margin = static_cast<int>(std::floor(0.05 * std::min(width, height) + 0.5));
    if (2 * margin >= width || 2 * margin >= height)
        throw Error("baseline_rectangle: margin consumes the image");
    return rect_mask(width, height, Rect{margin, margin, width - margin, height - margin});
}

Choice baseline_chance(const CandidateSet& cs, Rng& rng) {
    if (cs.candidates.empty())
        throw Error("baseline_chance: empty candidate set for image '" + cs.image_id + "'");
    const auto i = static_cast<std::size_t>(rng.index(cs.candidates.size()));
    return {i, cs.candidates[i].generator_id, 0.0};
}

AllocationPlan chance_plan(const std::vector<ScoredImage>& batch, const BudgetSpec& budget, double unit_cost,
                           Rng& rng) {
    validate(budget);
    const std::size_t k = human_count(budget, batch.size(), unit_cost);
    std::vector<std::size_t> idx(batch.size());
    std::iota(idx.begin(), idx.end(), 0);
    // partial Fisher-Yates: the first k positions form a uniform k-subset
    for (std::size_t i = 0; i < k; ++i)
        std::swap(idx[i], idx[i + rng.index(idx.size() - i)]);
    std::vector<bool> human(batch.size(), false);
    for (std::size_t i = 0; i < k; ++i)
        human[idx[i]] = true;
    return assemble(batch, human, unit_cost);
}

Choice oracle_perfect(const CandidateSet& cs, const BinaryMask& gt) {
    if (cs.candidates.empty())
        throw Error("oracle_perfect: empty candidate set for image '" + cs.image_id + "'");
    Choice best;
    for (std::size_t i = 0; i < cs.candidates.size(); ++i) {
        const double s = jaccard(cs.candidates[i].mask, gt);
        if (i == 0 || s > best.score)
            best = {i, cs.candidates[i].generator_id, s};
    }
    return best;
}

AllocationPlan perfect_plan(const std::vector<ScoredImage>& batch_with_actual, const BudgetSpec& budget,
                            double unit_cost) {
    return plan_lowest(batch_with_actual, budget, unit_cost);
}

double plan_cost(const AllocationPlan& plan) {
    double total = 0.0;
    for (const auto& e : plan.entries)
        if (e.source == Source::human)
            total += e.human_cost_seconds;
    return total;
}

std::string plan_csv_header() {
    return "image_id,source,generator_id,predicted_score,cost_seconds";
}

std::string plan_to_csv(const AllocationPlan& plan) {
    std::ostringstream os;
    os.precision(17);
    os << plan_csv_header() << '\n';
    for (const auto& e : plan.entries)
        os << e.image_id << ',' << to_string(e.source) << ',' << e.generator_id << ',' << e.predicted_score << ','
           << (e.source == Source::human ? e.human_cost_seconds : 0.0) << '\n';
    return os.str();
}

AllocationPlan plan_from_csv(const std::string& text, std::string plan_id) {
    AllocationPlan plan;
    plan.plan_id = std::move(plan_id);
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != plan_csv_header())
        throw Error("plan CSV: missing or unexpected header");
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty())
            continue;
        const auto f = split_csv(line);
        if (f.size() != 5)
            throw Error("plan CSV line " + std::to_string(lineno) + ": expected 5 fields");
        PlanEntry e;
        e.image_id = f[0];
        if (f[1] == "HUMAN")
            e.source = Source::human;
        else if (f[1] != "AUTO")
            throw Error("plan CSV line " + std::to_string(lineno) + ": unknown source '" + f[1] + "'");
        e.generator_id = f[2];
        try {
            e.predicted_score = std::stod(f[3]);
            e.human_cost_seconds = std::stod(f[4]);
        } catch (const std::exception&) {
            throw Error("plan CSV line " + std::to_string(lineno) + ": bad number");
        }
        plan.entries.push_back(std::move(e));
    }
    return plan;
}

} // namespace ptp
