#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "polca/domains.hpp"
#include "polca/executor.hpp"
#include "polca/hierarchy.hpp"

namespace polca {

enum class Algorithm { Flat, Polca, PolcaPlus, Qmdp };

/// "flat", "polca", "polca+", "qmdp". Throws InvalidInput otherwise.
Algorithm parse_algorithm(std::string_view name);
std::string algorithm_name(Algorithm algorithm);

/// Throws InvalidInput when the algorithm cannot run on the model kind
/// (polca+ needs observations).
void check_applicable(Algorithm algorithm, const DecisionModel& model);

/// flat: every primitive under one root, value iteration (QMDP on a POMDP).
/// polca: the domain hierarchy planned as fully observed. polca+: the domain
/// hierarchy with observation-aware clustering. qmdp: flat QMDP. The top
/// solver and solver tolerances come from `base`.
HierarchicalPolicy plan_algorithm(const Domain& domain, Algorithm algorithm, const PlanOptions& base = {});

/// Flat optimal values by value iteration over singleton clusters. MDP only.
std::vector<double> optimal_values(const DecisionModel& model, double tolerance = 1e-12);

/// Paired two-sided t-test on per-episode differences a[i] - b[i].
struct PairedComparison {
    std::size_t n = 0;
    double mean_difference = 0.0;
    double standard_error = 0.0;
    double t_statistic = 0.0;
    double p_value = 1.0;
};
PairedComparison paired_comparison(std::span<const double> a, std::span<const double> b);

struct CompareOptions {
    std::vector<Algorithm> algorithms;
    std::vector<std::uint64_t> seeds{42};
    std::size_t episodes = 100;
    EpisodeOptions episode;
    PlanOptions plan;
    std::vector<std::size_t> checkpoints;  // steps (from 1); defaults to quarters of max_steps
};

/// Explicit checkpoints, or quarters of max_steps. Throws InvalidInput for
/// checkpoints outside 1..max_steps.
std::vector<std::size_t> resolved_checkpoints(const CompareOptions& options);

struct CompareRow {
    std::string domain;
    std::string algorithm;
    std::uint64_t seed = 0;
    std::size_t parameters = 0;
    std::size_t q_values = 0;
    double solve_seconds = 0.0;
    double mean_total_reward = 0.0;
    std::vector<double> checkpoint_rewards;  // mean cumulative reward at each checkpoint
    std::optional<double> optimality_gap;    // expected V* - V^pi under the initial distribution
    EvaluationMetrics metrics;
};

/// Plans each algorithm once, then evaluates it on every seed with common
/// random numbers. Rows are ordered by algorithm (as listed), then seed.
std::vector<CompareRow> run_comparison(const Domain& domain, const CompareOptions& options);

inline constexpr const char* kCompareCountingRule =
    "# n_params: per subtask |clusters|*|children| reward entries plus nonzero projected transitions; "
    "n_qvalues: per subtask |clusters|*|children|";

void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows, std::span<const std::size_t> checkpoints);

} // namespace polca
