#pragma once

#include <cstddef>
#include <functional>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "polca/abstraction.hpp"
#include "polca/model.hpp"

namespace polca {

// Two action values closer than this (relative to max(1, |value|)) are a tie;
// ties go to the lowest action index.
inline constexpr double kTieTolerance = 1e-9;

/// Index of the largest entry; near-ties resolve to the lowest index.
std::size_t argmax_lowest(std::span<const double> values);

struct ValueIterationOptions {
    double tolerance = 1e-6;
    std::size_t max_iterations = 100000;
    bool record_iterates = false;
};

struct ValueFunction {
    std::vector<double> values;  // per cluster
    std::size_t iterations = 0;
    double residual = 0.0;       // sup-norm Bellman residual of `values`
    bool converged = false;
    std::vector<std::vector<double>> iterates;  // V_0, V_1, ... when recorded
};

/// Q[c][a] = R(c,a) + gamma * sum_j T(c,a,j) V(j); terminal clusters get no
/// continuation.
using QTable = std::vector<std::vector<double>>;

/// Synchronous Bellman iteration over clusters from V = 0. Stops when
/// successive iterates differ by at most `tolerance` in sup norm, or flags a
/// non-converged result after max_iterations.
ValueFunction value_iterate(const ClusteredModel& model, const ValueIterationOptions& options = {});

QTable q_values(const ClusteredModel& model, std::span<const double> values);
double bellman_residual(const ClusteredModel& model, std::span<const double> values);

/// Greedy action per cluster.
std::vector<ActionId> extract_policy(const ClusteredModel& model, const ValueFunction& vf);

QTable qmdp_solve(const ClusteredModel& model, const ValueIterationOptions& options = {});
/// argmax_a sum_c b(c) Q(c,a).
ActionId qmdp_action(const QTable& q, std::span<const double> cluster_belief);

struct AlphaVector {
    std::vector<double> values;
    ActionId action = 0;
};

class AlphaVectorSet {
public:
    AlphaVectorSet() = default;
    explicit AlphaVectorSet(std::vector<AlphaVector> vectors) : vectors_(std::move(vectors)) {}

    std::size_t size() const noexcept { return vectors_.size(); }
    bool empty() const noexcept { return vectors_.empty(); }
    const std::vector<AlphaVector>& vectors() const noexcept { return vectors_; }

    double value(std::span<const double> b) const;
    // Vector maximizing b . alpha; among value ties the lowest action wins.
    std::size_t best(std::span<const double> b) const;
    ActionId action(std::span<const double> b) const { return vectors_[best(b)].action; }

private:
    std::vector<AlphaVector> vectors_;
};

enum class PruneMethod {
    LinearProgram,  // exact dominance test
    Sampling,       // pointwise dominance plus witness search over random beliefs
};

struct PruneOptions {
    PruneMethod method = PruneMethod::LinearProgram;
    double epsilon = 1e-10;
    std::size_t sample_beliefs = 10000;
    std::uint64_t seed = 7;
};

/// Removes every vector that is not strictly best (by more than epsilon) at
/// some belief. Value at any belief changes by at most epsilon under LP pruning.
std::vector<AlphaVector> prune(std::vector<AlphaVector> vectors, std::size_t dimension,
                               const PruneOptions& options = {});

struct PomdpOptions {
    double tolerance = 1e-6;
    std::size_t max_iterations = 2000;
    std::optional<std::size_t> horizon;  // exact finite-horizon solve when set
    std::size_t max_clusters = 40;
    std::size_t test_beliefs = 500;
    PruneOptions prune;
    // Called after every backup with (iteration, vector count, value change).
    std::function<void(std::size_t, std::size_t, double)> on_iteration;
};

struct PomdpSolution {
    AlphaVectorSet alphas;
    std::size_t iterations = 0;
    double residual = 0.0;  // largest value change at the test beliefs in the last backup
    bool converged = false;
};

/// One exact dynamic-programming backup by incremental pruning.
AlphaVectorSet pomdp_backup(const ClusteredModel& model, const AlphaVectorSet& current,
                            const PruneOptions& options = {});

/// Incremental pruning from V = 0 until the value at every test belief moves
/// by less than the tolerance, or exactly `horizon` backups. Throws
/// ProblemTooLarge when the model exceeds max_clusters.
PomdpSolution solve_pomdp_exact(const ClusteredModel& model, const PomdpOptions& options = {});

/// Vertices, the centroid and seeded uniform samples of the belief simplex.
std::vector<std::vector<double>> test_beliefs(std::size_t dimension, std::size_t random_count, std::uint64_t seed);

/// Largest change in value at the given beliefs caused by one more backup.
double pomdp_bellman_residual(const ClusteredModel& model, const AlphaVectorSet& alphas,
                              const std::vector<std::vector<double>>& beliefs, const PruneOptions& options = {});

/// Exact evaluation of a stationary flat policy on a model (iterative, to
/// `tolerance` in sup norm).
std::vector<double> evaluate_policy(const DecisionModel& model, std::span<const ActionId> policy,
                                    double tolerance = 1e-12, std::size_t max_iterations = 1000000);

} // namespace polca
