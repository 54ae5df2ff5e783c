#include "polca/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>

#include "polca/errors.hpp"

namespace polca {

FeatureSpace::FeatureSpace(std::vector<Feature> features) : features_(std::move(features))
{
    strides_.assign(features_.size(), 1);
    num_states_ = 1;
    for (std::size_t i = features_.size(); i-- > 0;) {
        strides_[i] = num_states_;
        num_states_ *= std::max<std::size_t>(features_[i].cardinality, 1);
    }
}

std::optional<std::size_t> FeatureSpace::find_feature(std::string_view name) const
{
    for (std::size_t i = 0; i < features_.size(); ++i)
        if (features_[i].name == name)
            return i;
    return std::nullopt;
}

std::size_t FeatureSpace::feature_index(std::string_view name) const
{
    auto idx = find_feature(name);
    if (!idx)
        throw InvalidInput("unknown feature '" + std::string(name) + "'");
    return *idx;
}

std::optional<std::size_t> FeatureSpace::find_value(std::size_t feature, std::string_view label) const
{
    const auto& f = features_.at(feature);
    for (std::size_t v = 0; v < f.labels.size(); ++v)
        if (f.labels[v] == label)
            return v;
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(label.data(), label.data() + label.size(), value);
    if (ec == std::errc() && ptr == label.data() + label.size() && value < f.cardinality)
        return value;
    return std::nullopt;
}

std::string FeatureSpace::value_label(std::size_t feature, std::size_t value) const
{
    const auto& f = features_.at(feature);
    if (value < f.labels.size())
        return f.labels[value];
    return std::to_string(value);
}

StateId FeatureSpace::encode(std::span<const std::size_t> assignment) const
{
    if (assignment.size() != features_.size())
        throw InvalidInput("assignment has " + std::to_string(assignment.size()) + " values, expected " +
                           std::to_string(features_.size()));
    StateId s = 0;
    for (std::size_t i = 0; i < features_.size(); ++i) {
        if (assignment[i] >= features_[i].cardinality)
            throw InvalidInput("value " + std::to_string(assignment[i]) + " out of range for feature '" +
                               features_[i].name + "'");
        s += assignment[i] * strides_[i];
    }
    return s;
}

std::vector<std::size_t> FeatureSpace::decode(StateId state) const
{
    if (state >= num_states_)
        throw InvalidInput("state " + std::to_string(state) + " out of range");
    std::vector<std::size_t> out(features_.size());
    for (std::size_t i = 0; i < features_.size(); ++i) {
        out[i] = state / strides_[i];
        state %= strides_[i];
    }
    return out;
}

std::size_t FeatureSpace::value_of(StateId state, std::size_t feature) const
{
    return (state / strides_[feature]) % features_[feature].cardinality;
}

std::vector<std::string> FeatureSpace::problems() const
{
    std::vector<std::string> out;
    std::set<std::string> names;
    for (const auto& f : features_) {
        if (f.cardinality == 0)
            out.push_back("feature '" + f.name + "' has cardinality 0");
        if (!names.insert(f.name).second)
            out.push_back("duplicate feature name '" + f.name + "'");
        if (!f.labels.empty() && f.labels.size() != f.cardinality)
            out.push_back("feature '" + f.name + "' has " + std::to_string(f.labels.size()) + " labels for cardinality " +
                          std::to_string(f.cardinality));
        std::set<std::string> seen(f.labels.begin(), f.labels.end());
        if (seen.size() != f.labels.size())
            out.push_back("feature '" + f.name + "' has duplicate value labels");
    }
    return out;
}

SparseMatrix::SparseMatrix(std::vector<std::vector<Transition>> rows)
{
    offsets_.reserve(rows.size() + 1);
    offsets_.push_back(0);
    for (auto& row : rows) {
        std::sort(row.begin(), row.end(), [](const Transition& a, const Transition& b) { return a.to < b.to; });
        for (const auto& t : row) {
            if (!entries_.empty() && entries_.size() > offsets_.back() && entries_.back().to == t.to)
                entries_.back().prob += t.prob;
            else
                entries_.push_back(t);
        }
        offsets_.push_back(entries_.size());
    }
}

std::span<const Transition> SparseMatrix::row(std::size_t r) const
{
    return {entries_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
}

double SparseMatrix::at(std::size_t r, std::size_t c) const
{
    auto row_entries = row(r);
    auto it = std::lower_bound(row_entries.begin(), row_entries.end(), c,
                               [](const Transition& t, std::size_t col) { return t.to < col; });
    return (it != row_entries.end() && it->to == c) ? it->prob : 0.0;
}

std::optional<ActionId> DecisionModel::find_action(std::string_view name) const
{
    auto it = std::find(actions.begin(), actions.end(), name);
    if (it == actions.end())
        return std::nullopt;
    return static_cast<ActionId>(it - actions.begin());
}

std::optional<ObsId> DecisionModel::find_observation(std::string_view name) const
{
    auto it = std::find(observations.begin(), observations.end(), name);
    if (it == observations.end())
        return std::nullopt;
    return static_cast<ObsId>(it - observations.begin());
}

std::span<const double> DecisionModel::observation_row(ActionId a, StateId next) const
{
    const auto n_obs = observations.size();
    return {observation_probs[a].data() + next * n_obs, n_obs};
}

std::span<const double> DecisionModel::observation_row(ActionId a, StateId from, StateId next) const
{
    return observation_row(observation_table(a, from), next);
}

double DecisionModel::observation(ActionId a, StateId next, ObsId o) const
{
    return observation_probs[a][next * observations.size() + o];
}

std::vector<ModelViolation> validate_model(const DecisionModel& model)
{
    using Kind = ModelViolation::Kind;
    std::vector<ModelViolation> out;
    auto structural = [&](std::string msg) { out.push_back({Kind::Structure, std::move(msg), {}, {}, {}, {}}); };

    for (auto& p : model.space.problems())
        structural(p);
    const auto n = model.num_states();
    const auto n_actions = model.num_actions();
    if (n_actions == 0)
        structural("model declares no actions");
    {
        std::set<std::string> names(model.actions.begin(), model.actions.end());
        if (names.size() != model.actions.size())
            structural("duplicate action names");
    }
    if (!(model.discount > 0.0 && model.discount < 1.0))
        out.push_back({Kind::Discount, "discount must lie in (0,1), got " + std::to_string(model.discount), {}, {}, {}, {}});
    if (model.transitions.size() != n_actions || model.rewards.size() != n_actions) {
        structural("transition/reward tables do not match the action count");
        return out;
    }

    for (ActionId a = 0; a < n_actions; ++a) {
        const auto& t = model.transitions[a];
        if (t.rows() != n) {
            structural("transition table for action '" + model.actions[a] + "' has " + std::to_string(t.rows()) +
                       " rows, expected " + std::to_string(n));
            continue;
        }
        if (model.rewards[a].size() != n) {
            structural("reward table for action '" + model.actions[a] + "' has wrong length");
            continue;
        }
        for (StateId s = 0; s < n; ++s) {
            double sum = 0.0;
            for (const auto& e : t.row(s)) {
                if (e.to >= n) {
                    out.push_back({Kind::Structure, "transition target out of range", s, a, e.to, {}});
                    continue;
                }
                if (e.prob < 0.0)
                    out.push_back({Kind::NegativeTransition,
                                   "T(" + std::to_string(s) + "," + model.actions[a] + "," + std::to_string(e.to) +
                                       ") = " + std::to_string(e.prob) + " is negative",
                                   s, a, e.to, {}});
                sum += e.prob;
            }
            if (std::abs(sum - 1.0) > kProbabilityTolerance)
                out.push_back({Kind::TransitionSum,
                               "T(" + std::to_string(s) + "," + model.actions[a] + ",.) sums to " + std::to_string(sum),
                               s, a, {}, {}});
            if (!std::isfinite(model.rewards[a][s]))
                out.push_back({Kind::NonFiniteReward,
                               "R(" + std::to_string(s) + "," + model.actions[a] + ") is not finite", s, a, {}, {}});
        }
    }

    if (model.kind() == ModelKind::Pomdp) {
        const auto n_obs = model.num_observations();
        const auto n_tables = model.observation_probs.size();
        if (model.observation_source.empty()) {
            if (n_tables != n_actions) {
                structural("observation table does not match the action count");
                return out;
            }
        } else {
            bool ok = model.observation_source.size() == n_actions;
            for (const auto& row : model.observation_source) {
                ok = ok && row.size() == n;
                for (auto t : row)
                    ok = ok && t < n_tables;
            }
            if (!ok) {
                structural("observation source map is malformed");
                return out;
            }
        }
        for (std::size_t a = 0; a < n_tables; ++a) {
            const std::string label = model.observation_source.empty() ? model.actions[a] : "table " + std::to_string(a);
            if (model.observation_probs[a].size() != n * n_obs) {
                structural("observation table for '" + label + "' has wrong size");
                continue;
            }
            for (StateId sp = 0; sp < n; ++sp) {
                double sum = 0.0;
                for (ObsId o = 0; o < n_obs; ++o) {
                    const double p = model.observation(a, sp, o);
                    if (p < 0.0)
                        out.push_back({Kind::NegativeObservation,
                                       "O(" + model.observations[o] + "," + label + "," + std::to_string(sp) +
                                           ") is negative",
                                       {}, a, sp, o});
                    sum += p;
                }
                if (std::abs(sum - 1.0) > kProbabilityTolerance)
                    out.push_back({Kind::ObservationSum,
                                   "O(.," + label + "," + std::to_string(sp) + ") sums to " + std::to_string(sum),
                                   {}, a, sp, {}});
            }
        }
    }
    return out;
}

std::span<const Transition> next_state_distribution(const DecisionModel& model, StateId s, ActionId a)
{
    if (a >= model.num_actions())
        throw InvalidInput("action index " + std::to_string(a) + " out of range");
    if (s >= model.num_states())
        throw InvalidInput("state index " + std::to_string(s) + " out of range");
    return model.transitions[a].row(s);
}

DecisionModel restrict_actions(const DecisionModel& model, std::span<const ActionId> actions,
                               const RewardTable* local_reward)
{
    DecisionModel out;
    out.space = model.space;
    out.discount = model.discount;
    out.observations = model.observations;
    for (ActionId a : actions) {
        if (a >= model.num_actions())
            throw InvalidInput("action index " + std::to_string(a) + " out of range");
        out.actions.push_back(model.actions[a]);
        out.transitions.push_back(model.transitions[a]);
        out.rewards.push_back(local_reward ? local_reward->at(a) : model.rewards[a]);
        if (model.kind() == ModelKind::Pomdp) {
            if (model.observation_source.empty())
                out.observation_probs.push_back(model.observation_probs[a]);
            else
                out.observation_source.push_back(model.observation_source[a]);
        }
    }
    if (!model.observation_source.empty())
        out.observation_probs = model.observation_probs;
    return out;
}

Belief::Belief(std::vector<double> probabilities) : p_(std::move(probabilities))
{
    double sum = 0.0;
    for (double v : p_) {
        if (!(v >= 0.0))
            throw InvalidInput("belief entries must be nonnegative");
        sum += v;
    }
    if (p_.empty() || std::abs(sum - 1.0) > kProbabilityTolerance)
        throw InvalidInput("belief must sum to 1, got " + std::to_string(sum));
}

Belief Belief::point(std::size_t n, StateId s)
{
    if (s >= n)
        throw InvalidInput("point belief state out of range");
    std::vector<double> p(n, 0.0);
    p[s] = 1.0;
    return Belief(std::move(p));
}

Belief Belief::uniform(std::size_t n)
{
    if (n == 0)
        throw InvalidInput("uniform belief over zero states");
    return Belief(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

StateId Belief::most_likely() const
{
    return static_cast<StateId>(std::max_element(p_.begin(), p_.end()) - p_.begin());
}

std::vector<double> predict(const DecisionModel& model, std::span<const double> b, ActionId a)
{
    std::vector<double> next(model.num_states(), 0.0);
    const auto& t = model.transitions[a];
    for (StateId s = 0; s < b.size(); ++s) {
        if (b[s] == 0.0)
            continue;
        for (const auto& e : t.row(s))
            next[e.to] += e.prob * b[s];
    }
    return next;
}

Belief belief_update(const DecisionModel& model, const Belief& b, ActionId a, ObsId o)
{
    if (model.kind() != ModelKind::Pomdp)
        throw InvalidInput("belief update requires a POMDP model");
    if (a >= model.num_actions() || o >= model.num_observations())
        throw InvalidInput("action or observation index out of range");
    if (b.size() != model.num_states())
        throw InvalidInput("belief dimension does not match the model");

    std::vector<double> next(model.num_states(), 0.0);
    const auto& p = b.probabilities();
    for (StateId s = 0; s < p.size(); ++s) {
        if (p[s] == 0.0)
            continue;
        for (const auto& e : model.transitions[a].row(s))
            next[e.to] += p[s] * e.prob * model.observation_row(a, s, e.to)[o];
    }
    double norm = 0.0;
    for (double v : next)
        norm += v;
    if (!(norm > 0.0))
        throw ImpossibleObservation("observation '" + model.observations[o] + "' has zero probability after action '" +
                                    model.actions[a] + "'");
    for (double& v : next)
        v /= norm;
    return Belief(std::move(next));
}

} // namespace polca
