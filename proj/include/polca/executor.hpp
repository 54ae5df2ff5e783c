#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "polca/hierarchy.hpp"
#include "polca/model.hpp"

namespace polca {

struct PollResult {
    ActionId action = 0;            // primitive
    std::vector<std::string> path;  // subtasks visited, root first
    std::vector<ActionId> choices;  // child index chosen at each visited subtask
};

/// Top-down polling from the root on a fully observed state.
PollResult poll_action(const HierarchicalPolicy& policy, StateId state);
/// Top-down polling on a belief over states. Belief-aware subtasks (exact
/// POMDP, QMDP) see the belief summed onto their own clusters; value-iteration
/// subtasks all act on the single most likely state.
PollResult poll_action(const HierarchicalPolicy& policy, const Belief& belief);

/// Primitive chosen by polling at every state.
std::vector<ActionId> polled_policy(const HierarchicalPolicy& policy);

struct TrajectoryStep {
    std::size_t step = 0;
    std::optional<ObsId> observation;  // received before acting; none at the first step
    ActionId action = 0;
    double reward = 0.0;
    StateId state = 0;                 // hidden state the action was taken in
    std::optional<std::vector<double>> belief;  // belief the action was chosen from
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;
    StateId initial_state = 0;
    double total_reward = 0.0;
    double discounted_reward = 0.0;
    bool reached_terminal = false;
    std::optional<std::string> aborted;  // diagnostic when the episode stopped early on an error
};

// Starting point of an episode: a known state, or a belief the hidden state is
// drawn from.
using InitialCondition = std::variant<StateId, Belief>;

struct EpisodeOptions {
    std::size_t max_steps = 200;
    bool record_beliefs = false;
    // Replaces observation sampling; receives (action, next hidden state).
    std::function<ObsId(ActionId, StateId)> observation_source;
};

/// One episode. POMDP models are controlled from the tracked belief, MDP
/// models from the state. Stops at max_steps or when the hidden state
/// satisfies the root's terminal condition. Random streams for the initial
/// state, transitions and observations derive from (seed, episode), so two
/// policies run on the same seeds share their random numbers.
Trajectory run_episode(const HierarchicalPolicy& policy, const DecisionModel& model, const InitialCondition& initial,
                       const EpisodeOptions& options, std::uint64_t seed, std::uint64_t episode = 0);

struct EvaluationMetrics {
    std::size_t episodes = 0;
    std::size_t aborted = 0;
    double mean_total_reward = 0.0;
    double mean_discounted_reward = 0.0;
    // Mean cumulative reward after each step; finished episodes hold their total.
    std::vector<double> reward_curve;
    std::vector<std::size_t> action_histogram;  // per primitive action
    std::vector<double> episode_totals;
};

EvaluationMetrics evaluate(const HierarchicalPolicy& policy, const DecisionModel& model,
                           const InitialCondition& initial, std::size_t episodes, const EpisodeOptions& options,
                           std::uint64_t seed);

/// One JSON object per line: step, observation, action, reward.
void write_trajectory_jsonl(std::ostream& out, const Trajectory& trajectory, const DecisionModel& model);
/// Three-column Observation | Action | Reward table.
std::string transcript_table(const Trajectory& trajectory, const DecisionModel& model);

inline constexpr const char* kMetricsCsvHeader = "step,mean_cum_reward,algo,domain,seed";
/// Reward-curve rows (no header), step counted from 1.
void write_metrics_csv_rows(std::ostream& out, const EvaluationMetrics& metrics, const std::string& algo,
                            const std::string& domain, std::uint64_t seed);

} // namespace polca
