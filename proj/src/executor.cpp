#include "polca/executor.hpp"

#include <algorithm>
#include <iomanip>
#include <random>
#include <sstream>

#include <json.hpp>

#include "polca/errors.hpp"

namespace polca {

namespace {

template <typename Choose>
PollResult descend(const HierarchicalPolicy& policy, Choose&& choose)
{
    PollResult out;
    std::string current = policy.root;
    for (;;) {
        if (out.path.size() > policy.subtasks.size())
            throw std::logic_error("polling revisited a subtask; the hierarchy is cyclic");
        const auto& sub = policy.subtask(current);
        const ActionId k = choose(sub);
        out.path.push_back(current);
        out.choices.push_back(k);
        if (sub.primitive[k]) {
            out.action = *sub.primitive[k];
            return out;
        }
        current = sub.children[k];
    }
}

enum Stream : std::uint64_t { kInitialStream = 1, kTransitionStream = 2, kObservationStream = 3 };

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t episode, Stream stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(episode), static_cast<std::uint32_t>(episode >> 32),
                      static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

double uniform01(std::mt19937_64& rng)
{
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// Inverse-CDF draw; the last positive entry absorbs rounding slack.
template <typename Weights>
std::size_t sample_index(const Weights& weights, std::size_t count, std::mt19937_64& rng)
{
    const double u = uniform01(rng);
    double acc = 0.0;
    std::size_t last = count;
    for (std::size_t i = 0; i < count; ++i) {
        const double w = weights(i);
        if (w <= 0.0)
            continue;
        last = i;
        acc += w;
        if (u < acc)
            return i;
    }
    if (last == count)
        throw InvalidInput("cannot sample from an all-zero distribution");
    return last;
}

} // namespace

PollResult poll_action(const HierarchicalPolicy& policy, StateId state)
{
    return descend(policy, [&](const SubtaskPolicy& sub) {
        if (state >= sub.num_states())
            throw InvalidInput("state index out of range for the policy");
        return sub.choose(state);
    });
}

PollResult poll_action(const HierarchicalPolicy& policy, const Belief& belief)
{
    const StateId likely = belief.most_likely();
    return descend(policy, [&](const SubtaskPolicy& sub) {
        if (belief.size() != sub.num_states())
            throw InvalidInput("belief dimension does not match the policy");
        if (sub.solver == SubtaskSolver::ValueIteration)
            return sub.choose(likely);
        return sub.choose(sub.clusters.project(belief.probabilities()));
    });
}

std::vector<ActionId> polled_policy(const HierarchicalPolicy& policy)
{
    const auto n = policy.subtask(policy.root).num_states();
    std::vector<ActionId> out(n);
    for (StateId s = 0; s < n; ++s)
        out[s] = poll_action(policy, s).action;
    return out;
}

Trajectory run_episode(const HierarchicalPolicy& policy, const DecisionModel& model, const InitialCondition& initial,
                       const EpisodeOptions& options, std::uint64_t seed, std::uint64_t episode)
{
    if (policy.primitive_actions != model.actions)
        throw InvalidInput("policy and model disagree on the primitive actions");
    const auto n = model.num_states();
    const bool observed = model.kind() == ModelKind::Pomdp;
    auto init_rng = make_stream(seed, episode, kInitialStream);
    auto step_rng = make_stream(seed, episode, kTransitionStream);
    auto obs_rng = make_stream(seed, episode, kObservationStream);

    Trajectory traj;
    Belief belief;
    if (const auto* s = std::get_if<StateId>(&initial)) {
        if (*s >= n)
            throw InvalidInput("initial state out of range");
        traj.initial_state = *s;
        if (observed)
            belief = Belief::point(n, *s);
    } else {
        const auto& b = std::get<Belief>(initial);
        if (b.size() != n)
            throw InvalidInput("initial belief dimension does not match the model");
        traj.initial_state = sample_index([&](std::size_t i) { return b[i]; }, n, init_rng);
        belief = b;
    }

    StateId state = traj.initial_state;
    std::optional<ObsId> last_observation;
    double discount = 1.0;
    for (std::size_t t = 0; t < options.max_steps; ++t) {
        if (policy.is_root_terminal(state)) {
            traj.reached_terminal = true;
            break;
        }
        TrajectoryStep step;
        step.step = t;
        step.observation = last_observation;
        step.state = state;
        step.action = observed ? poll_action(policy, belief).action : poll_action(policy, state).action;
        if (options.record_beliefs && observed)
            step.belief = belief.probabilities();
        step.reward = model.reward(state, step.action);

        const auto row = model.transitions[step.action].row(state);
        const StateId next = row[sample_index([&](std::size_t i) { return row[i].prob; }, row.size(), step_rng)].to;
        traj.total_reward += step.reward;
        traj.discounted_reward += discount * step.reward;
        discount *= model.discount;
        traj.steps.push_back(std::move(step));

        if (observed) {
            const auto a = traj.steps.back().action;
            ObsId o;
            if (options.observation_source) {
                o = options.observation_source(a, next);
            } else {
                const auto orow = model.observation_row(a, state, next);
                o = sample_index([&](std::size_t i) { return orow[i]; }, orow.size(), obs_rng);
            }
            try {
                belief = belief_update(model, belief, a, o);
            } catch (const ImpossibleObservation& e) {
                traj.aborted = e.what();
                state = next;
                break;
            }
            last_observation = o;
        }
        state = next;
    }
    if (!traj.aborted && policy.is_root_terminal(state))
        traj.reached_terminal = true;
    return traj;
}

EvaluationMetrics evaluate(const HierarchicalPolicy& policy, const DecisionModel& model,
                           const InitialCondition& initial, std::size_t episodes, const EpisodeOptions& options,
                           std::uint64_t seed)
{
    if (episodes == 0)
        throw InvalidInput("evaluation needs at least one episode");
    EvaluationMetrics m;
    m.episodes = episodes;
    m.reward_curve.assign(options.max_steps, 0.0);
    m.action_histogram.assign(model.num_actions(), 0);
    for (std::size_t e = 0; e < episodes; ++e) {
        auto traj = run_episode(policy, model, initial, options, seed, e);
        if (traj.aborted)
            ++m.aborted;
        double cum = 0.0;
        for (std::size_t t = 0; t < options.max_steps; ++t) {
            if (t < traj.steps.size()) {
                cum += traj.steps[t].reward;
                ++m.action_histogram[traj.steps[t].action];
            }
            m.reward_curve[t] += cum;
        }
        m.mean_total_reward += traj.total_reward;
        m.mean_discounted_reward += traj.discounted_reward;
        m.episode_totals.push_back(traj.total_reward);
    }
    const double k = static_cast<double>(episodes);
    m.mean_total_reward /= k;
    m.mean_discounted_reward /= k;
    for (double& v : m.reward_curve)
        v /= k;
    return m;
}

void write_trajectory_jsonl(std::ostream& out, const Trajectory& trajectory, const DecisionModel& model)
{
    for (const auto& s : trajectory.steps) {
        nlohmann::json line{{"step", s.step},
                            {"observation", s.observation ? nlohmann::json(model.observations[*s.observation])
                                                          : nlohmann::json(nullptr)},
                            {"action", model.actions[s.action]},
                            {"reward", s.reward}};
        if (s.belief)
            line["belief"] = *s.belief;
        out << line.dump() << '\n';
    }
}

std::string transcript_table(const Trajectory& trajectory, const DecisionModel& model)
{
    std::size_t obs_width = std::string("Observation").size();
    std::size_t act_width = std::string("Action").size();
    for (const auto& s : trajectory.steps) {
        if (s.observation)
            obs_width = std::max(obs_width, model.observations[*s.observation].size());
        act_width = std::max(act_width, model.actions[s.action].size());
    }
    std::ostringstream os;
    os << std::left << std::setw(static_cast<int>(obs_width)) << "Observation" << " | " << std::setw(static_cast<int>(act_width))
       << "Action" << " | Reward\n";
    os << std::string(obs_width, '-') << "-+-" << std::string(act_width, '-') << "-+-------\n";
    for (const auto& s : trajectory.steps) {
        os << std::setw(static_cast<int>(obs_width)) << (s.observation ? model.observations[*s.observation] : "(none)")
           << " | " << std::setw(static_cast<int>(act_width)) << model.actions[s.action] << " | " << s.reward << '\n';
    }
    return os.str();
}

void write_metrics_csv_rows(std::ostream& out, const EvaluationMetrics& metrics, const std::string& algo,
                            const std::string& domain, std::uint64_t seed)
{
    for (std::size_t t = 0; t < metrics.reward_curve.size(); ++t)
        out << (t + 1) << ',' << metrics.reward_curve[t] << ',' << algo << ',' << domain << ',' << seed << '\n';
}

} // namespace polca
