#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "polca/model.hpp"

namespace polca {

using ClusterId = std::size_t;

// Equality tolerance for reward, block-sum and observation-weighted
// comparisons during clustering.
inline constexpr double kStabilityEpsilon = 1e-9;

enum class StabilityMode { Mdp, Pomdp };

// Per-state flag; an empty mask means no state is terminal.
using TerminalMask = std::vector<char>;

/// Partition of the state space. Cluster ids are dense and member lists are
/// sorted ascending.
class ClusterMap {
public:
    ClusterMap() = default;
    // Throws InvalidInput unless ids are dense 0..k-1 with no empty cluster.
    explicit ClusterMap(std::vector<ClusterId> assignment);

    static ClusterMap singletons(std::size_t n);
    static ClusterMap single(std::size_t n);

    std::size_t num_states() const noexcept { return z_.size(); }
    std::size_t num_clusters() const noexcept { return members_.size(); }
    ClusterId cluster_of(StateId s) const { return z_[s]; }
    std::span<const StateId> members(ClusterId c) const { return members_[c]; }
    const std::vector<ClusterId>& assignment() const noexcept { return z_; }

    // Same partition with ids ordered by each cluster's smallest member.
    ClusterMap canonical() const;
    bool same_partition(const ClusterMap& other) const;
    // True when every cluster here lies inside a single cluster of `coarser`.
    bool refines(const ClusterMap& coarser) const;

    // Projects a distribution over states onto clusters by summing mass.
    std::vector<double> project(std::span<const double> state_distribution) const;

private:
    std::vector<ClusterId> z_;
    std::vector<std::vector<StateId>> members_;
};

/// Initial partition: states share a cluster iff their reward vectors over all model
/// actions agree within epsilon and their terminal flags match. With
/// `feature_hint`, states must also agree on the listed features.
ClusterMap init_clusters(const DecisionModel& model, const TerminalMask& terminal = {},
                         std::span<const std::size_t> feature_hint = {});

struct StabilityWitness {
    StateId reference;
    StateId violator;
    ClusterId target;
    ActionId action;
    std::optional<ObsId> observation;
};

struct StabilityResult {
    bool stable = true;
    std::optional<StabilityWitness> witness;
};

/// Stability check. Compares every member against the smallest member of the cluster;
/// the witness is the first mismatch in (member, action, target, observation)
/// order. Terminal clusters are stable by definition. Throws InvalidInput for
/// POMDP mode on a model without observations.
StabilityResult is_stable(const DecisionModel& model, const ClusterMap& clusters, ClusterId cluster,
                          StabilityMode mode, const TerminalMask& terminal = {});

struct SplitResult {
    ClusterMap clusters;
    bool split = false;
};

/// Splits a cluster. Groups the members by their full block-sum signature. The group
/// holding the smallest member keeps the cluster id; the others are appended
/// in order of their smallest member. A stable cluster yields an unchanged
/// map with split == false.
SplitResult split_cluster(const DecisionModel& model, const ClusterMap& clusters, ClusterId cluster,
                          StabilityMode mode, const TerminalMask& terminal = {});

struct MinimizeStats {
    std::size_t initial_clusters = 0;
    std::size_t rounds = 0;
    std::size_t splits = 0;
};

/// Alternates stability checks and splits from `initial` (or from init_clusters) until every
/// cluster is stable. Result ids are canonical.
ClusterMap minimize(const DecisionModel& model, StabilityMode mode, const TerminalMask& terminal = {},
                    const ClusterMap* initial = nullptr, MinimizeStats* stats = nullptr);

struct ObsTransition {
    ClusterId to;
    ObsId observation;
    double prob;
};

/// Model re-expressed over clusters. POMDP projections carry the joint
/// quantity sum_{s' in C_j} T(s,a,s') O(o,a,s'), which is what stability under
/// the observation-aware criterion makes well defined. Terminal clusters are
/// projected as self-loops; solvers give them no continuation value.
struct ClusteredModel {
    ClusterMap clusters;
    std::vector<std::string> actions;
    std::vector<SparseMatrix> transitions;            // [a], rows = clusters
    std::vector<std::vector<double>> rewards;         // [a][c]
    std::vector<std::string> observations;            // empty unless POMDP projection
    std::vector<std::vector<std::vector<ObsTransition>>> joint;  // [a][c] -> (c', o, p)
    std::vector<char> terminal;                       // per cluster
    double discount = 0.95;

    std::size_t num_clusters() const noexcept { return clusters.num_clusters(); }
    std::size_t num_actions() const noexcept { return actions.size(); }
    bool has_observations() const noexcept { return !joint.empty(); }
    bool is_terminal(ClusterId c) const { return !terminal.empty() && terminal[c] != 0; }

    // |C| * |A| reward entries plus nonzero projected transitions.
    std::size_t parameter_count() const;
    std::size_t q_value_count() const { return num_clusters() * num_actions(); }
};

/// Cluster-level rewards and block sums read off a representative; certifies every member state agrees.
/// Throws UnstablePartition when the certificate fails.
ClusteredModel project_model(const DecisionModel& model, const ClusterMap& clusters, StabilityMode mode,
                             const TerminalMask& terminal = {});

/// Bayes update over clusters using the joint projected parameters.
std::vector<double> clustered_belief_update(const ClusteredModel& model, std::span<const double> b, ActionId a,
                                            ObsId o);

/// {"clusters": [[...], ...], "summary": {n_states, n_clusters, n_params}}.
nlohmann::json cluster_report(const ClusterMap& clusters, const ClusteredModel* projected = nullptr);

} // namespace polca
