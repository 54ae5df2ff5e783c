#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "polca/abstraction.hpp"
#include "polca/model.hpp"
#include "polca/solvers.hpp"

namespace polca {

// A feature value named by label or by index.
using ValueRef = std::variant<std::size_t, std::string>;

/// Predicate over feature values: every clause must hold, and when any_of is
/// non-empty at least one alternative must hold too. The empty condition is
/// always true.
struct Condition {
    struct Clause {
        std::string feature;
        std::vector<ValueRef> values;  // allowed values
    };
    std::vector<Clause> clauses;
    std::vector<Condition> any_of;

    bool always_true() const noexcept { return clauses.empty() && any_of.empty(); }
};

/// Per-state truth table of a condition. Throws InvalidInput on unknown
/// features or values.
std::vector<char> condition_mask(const Condition& condition, const FeatureSpace& space);

struct PseudoReward {
    Condition condition;
    std::optional<std::string> action;  // primitive; all primitives when absent
    double value = 1.0;
};

struct TaskNode {
    std::string id;
    // Subtask ids or primitive action names, in action order for this subtask.
    std::vector<std::string> children;
    std::vector<PseudoReward> pseudo_rewards;
    std::optional<Condition> terminal;
    std::vector<std::string> relevant_features;
};

struct TaskGraph {
    std::string root;
    std::vector<TaskNode> nodes;

    const TaskNode* find(std::string_view id) const;
    // Throws InvalidInput for unknown ids.
    const TaskNode& node(std::string_view id) const;
};

struct GraphViolation {
    enum class Kind {
        UnknownRoot,
        DuplicateNode,
        UnknownChild,
        AmbiguousChild,
        NoChildren,
        Cycle,
        UnreachablePrimitive,
        UnreachableNode,
        BadCondition,
        UniformReward,
    };
    Kind kind;
    std::string node;
    std::string message;
};

/// Every structural problem of the graph against the model's action set;
/// empty means valid.
std::vector<GraphViolation> validate_task_graph(const TaskGraph& graph, const DecisionModel& model);

/// Children before parents; among ready subtasks the smallest id goes first.
std::vector<std::string> bottom_up_order(const TaskGraph& graph);

/// Depth of the longest root-to-primitive path, counting the primitive.
std::size_t graph_depth(const TaskGraph& graph);

/// Primitive actions reachable from subtask `id`, ascending.
std::vector<ActionId> primitive_descendants(const TaskGraph& graph, const DecisionModel& model, std::string_view id);

/// True reward plus the subtask's pseudo-rewards, over all primitive actions
/// ([action][state]). Throws UnsolvableSubtask when the table is uniform over
/// the subtask's reachable primitives.
RewardTable effective_local_reward(const DecisionModel& model, const TaskGraph& graph, std::string_view id);

TerminalMask terminal_mask(const TaskNode& node, const FeatureSpace& space);

enum class PlanMode { Mdp, Pomdp };
enum class TopSolver { Exact, Qmdp };
enum class SubtaskSolver { ValueIteration, ExactPomdp, Qmdp };

struct SubtaskPolicy {
    std::string id;
    std::vector<std::string> children;
    // Per child: the primitive it names, or nullopt for a subtask.
    std::vector<std::optional<ActionId>> primitive;
    ClusterMap clusters;
    TerminalMask terminal;  // per state
    SubtaskSolver solver = SubtaskSolver::ValueIteration;
    std::vector<double> values;  // value iteration
    QTable q;                    // value iteration and QMDP
    AlphaVectorSet alphas;       // exact POMDP
    std::vector<ActionId> greedy;             // child index per cluster
    std::vector<ActionId> resolved_primitive; // primitive per state, polled through descendants
    std::size_t iterations = 0;
    double residual = 0.0;
    bool converged = false;
    MinimizeStats minimize_stats;
    std::size_t parameter_count = 0;
    // Present after planning; not restored from files.
    std::optional<ClusteredModel> model;

    std::size_t num_states() const noexcept { return clusters.num_states(); }
    std::size_t q_value_count() const noexcept { return clusters.num_clusters() * children.size(); }

    // Child index chosen for a fully observed state.
    ActionId choose(StateId s) const { return greedy[clusters.cluster_of(s)]; }
    // Child index chosen for a belief over this subtask's clusters.
    ActionId choose(std::span<const double> cluster_belief) const;
};

class HierarchicalPolicy {
public:
    std::string root;
    PlanMode mode = PlanMode::Mdp;
    std::vector<std::string> primitive_actions;
    std::vector<SubtaskPolicy> subtasks;  // solve order
    TerminalMask root_terminal;           // per state

    const SubtaskPolicy* find(std::string_view id) const;
    const SubtaskPolicy& subtask(std::string_view id) const;
    bool is_root_terminal(StateId s) const { return !root_terminal.empty() && root_terminal[s] != 0; }

    // Sum over subtasks of |C| * |A_h|.
    std::size_t q_value_count() const;
    // Sum over subtasks of reward entries plus nonzero projected transitions.
    std::size_t parameter_count() const;
};

/// The subtask re-expressed over the full state space with its
/// children as actions.
struct SubtaskProblem {
    std::string id;
    std::vector<std::string> children;
    std::vector<std::optional<ActionId>> primitive;
    // Primitive executed per (child, state); rows of the model below copy it.
    std::vector<std::vector<ActionId>> executed;
    DecisionModel model;
    TerminalMask terminal;
};

/// Primitive children copy their own rows; a subtask child copies the
/// row of the primitive its solved policy resolves to at each state, with the
/// same substitution for rewards and observations. Throws OrderingViolation
/// when a child subtask has no entry in `solved`.
SubtaskProblem parameterize_subtask(const DecisionModel& model, const TaskGraph& graph, std::string_view id,
                                    const HierarchicalPolicy& solved);

struct PlanOptions {
    PlanMode mode = PlanMode::Mdp;
    TopSolver top_solver = TopSolver::Exact;
    ValueIterationOptions value_iteration{1e-6, 100000, false};
    PomdpOptions pomdp;
    bool use_feature_hints = false;
    // Called after each subtask is solved, with its wall-clock seconds.
    std::function<void(const SubtaskPolicy&, double)> on_subtask_solved;
};

/// Parameterizes, clusters and solves every subtask in bottom-up order. Errors are rethrown as
/// SubtaskFailure naming the subtask.
HierarchicalPolicy polca_plan(const DecisionModel& model, const TaskGraph& graph, const PlanOptions& options = {});

/// Root whose children are every primitive action, in model order.
TaskGraph flat_graph(const DecisionModel& model, std::string root = "root");

} // namespace polca
