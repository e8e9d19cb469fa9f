#pragma once

#include "ptp/candidates.hpp"
#include "ptp/forest.hpp"
#include "ptp/rng.hpp"

#include <string>
#include <vector>

namespace ptp {

// Human time costs in seconds.
inline constexpr double kCostFromScratch = 54.0;
inline constexpr double kCostCoarse = 20.0;
inline constexpr double kCostRectangle = 7.0;

struct BudgetSpec {
    enum class Mode { fraction, seconds };
    Mode mode = Mode::fraction;
    double value = 0.0;
    double cost_from_scratch = kCostFromScratch;
    double cost_coarse = kCostCoarse;
    double cost_rectangle = kCostRectangle;

    static BudgetSpec fraction(double f) { return {Mode::fraction, f}; }
    static BudgetSpec seconds(double s) { return {Mode::seconds, s}; }
};

void validate(const BudgetSpec& b);

// Number of images a budget buys when each costs `unit_cost` seconds:
// floor(fraction * n) or floor(seconds / unit_cost), capped at n.
std::size_t human_count(const BudgetSpec& b, std::size_t n, double unit_cost);

enum class Source { automatic, human };
const char* to_string(Source s);

struct PlanEntry {
    std::string image_id;
    Source source = Source::automatic;
    std::string generator_id;    // AUTO entries
    double predicted_score = 0.0;
    double human_cost_seconds = 0.0; // HUMAN entries
};

struct AllocationPlan {
    std::string plan_id;
    std::vector<PlanEntry> entries;

    std::size_t human_entries() const;
};

// One image of a batch to be planned: its score and the automatic choice it would get.
struct ScoredImage {
    std::string image_id;
    double score = 0.0;
    std::string generator_id;
};

struct Choice {
    std::size_t index = 0;
    std::string generator_id;
    double score = 0.0;
};

// Highest predicted score; the earliest candidate wins ties.
Choice select_best_candidate(const CandidateSet& cs, const ForestModel& model);

// Images ranked ascending by score (ties by image id); the k lowest become HUMAN.
AllocationPlan plan_coarse(const std::vector<ScoredImage>& batch, const BudgetSpec& budget);
AllocationPlan plan_fine(const std::vector<ScoredImage>& batch, const BudgetSpec& budget);

// Ranking rule shared by the planners, exposed for tests: ids of the k lowest.
std::vector<std::string> lowest_k(const std::vector<ScoredImage>& batch, std::size_t k);

// Centred rectangle after cropping round(5% of the smaller side) from every side.
BinaryMask baseline_rectangle(int width, int height);

Choice baseline_chance(const CandidateSet& cs, Rng& rng);
AllocationPlan chance_plan(const std::vector<ScoredImage>& batch, const BudgetSpec& budget, double unit_cost,
                           Rng& rng);

// Highest actual Jaccard against gt; earliest wins ties.
Choice oracle_perfect(const CandidateSet& cs, const BinaryMask& gt);
AllocationPlan perfect_plan(const std::vector<ScoredImage>& batch_with_actual, const BudgetSpec& budget,
                            double unit_cost);

double plan_cost(const AllocationPlan& plan);

std::string plan_csv_header();
std::string plan_to_csv(const AllocationPlan& plan);
AllocationPlan plan_from_csv(const std::string& text, std::string plan_id = {});

} // namespace ptp
