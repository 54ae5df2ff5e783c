#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace polca {

using StateId = std::size_t;
using ActionId = std::size_t;
using ObsId = std::size_t;

inline constexpr double kProbabilityTolerance = 1e-9;

struct Feature {
    std::string name;
    std::size_t cardinality = 1;
    // Optional value labels; when present there is exactly one per value.
    std::vector<std::string> labels;

    bool operator==(const Feature&) const = default;
};

/// Ordered set of discrete features. States are the mixed-radix encoding of a
/// full assignment with the first declared feature most significant.
class FeatureSpace {
public:
    FeatureSpace() = default;
    explicit FeatureSpace(std::vector<Feature> features);

    std::size_t num_features() const noexcept { return features_.size(); }
    std::size_t num_states() const noexcept { return num_states_; }
    const std::vector<Feature>& features() const noexcept { return features_; }
    const Feature& feature(std::size_t i) const { return features_.at(i); }

    std::optional<std::size_t> find_feature(std::string_view name) const;
    std::size_t feature_index(std::string_view name) const;
    // Resolves a value label (or a decimal index when the feature is unlabeled).
    std::optional<std::size_t> find_value(std::size_t feature, std::string_view label) const;
    std::string value_label(std::size_t feature, std::size_t value) const;

    StateId encode(std::span<const std::size_t> assignment) const;
    std::vector<std::size_t> decode(StateId state) const;
    std::size_t value_of(StateId state, std::size_t feature) const;

    // Structural problems (zero cardinality, duplicate names, bad labels).
    std::vector<std::string> problems() const;

    bool operator==(const FeatureSpace&) const = default;

private:
    std::vector<Feature> features_;
    std::vector<std::size_t> strides_;
    std::size_t num_states_ = 1;
};

struct Transition {
    StateId to;
    double prob;

    bool operator==(const Transition&) const = default;
};

/// Row-compressed sparse matrix of transition probabilities. Rows are sorted
/// by destination with duplicate destinations merged.
class SparseMatrix {
public:
    SparseMatrix() = default;
    explicit SparseMatrix(std::vector<std::vector<Transition>> rows);

    std::size_t rows() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    std::size_t nonzeros() const noexcept { return entries_.size(); }
    std::span<const Transition> row(std::size_t r) const;
    double at(std::size_t r, std::size_t c) const;

    bool operator==(const SparseMatrix&) const = default;

private:
    std::vector<std::size_t> offsets_;
    std::vector<Transition> entries_;
};

enum class ModelKind { Mdp, Pomdp };

/// Factored MDP or POMDP. T and R are indexed [action][state]; the observation
/// model, when present, is O(o | a, s') stored per action as a row-major
/// |S| x |Omega| table. When observation_source is set, taking action a from
/// state s emits observations from table observation_source[a][s] instead, so
/// observation_probs may hold more tables than there are actions.
struct DecisionModel {
    FeatureSpace space;
    std::vector<std::string> actions;
    std::vector<SparseMatrix> transitions;
    std::vector<std::vector<double>> rewards;
    double discount = 0.95;
    std::vector<std::string> observations;
    std::vector<std::vector<double>> observation_probs;
    std::vector<std::vector<std::size_t>> observation_source;

    ModelKind kind() const noexcept { return observations.empty() ? ModelKind::Mdp : ModelKind::Pomdp; }
    std::size_t num_states() const noexcept { return space.num_states(); }
    std::size_t num_actions() const noexcept { return actions.size(); }
    std::size_t num_observations() const noexcept { return observations.size(); }

    std::optional<ActionId> find_action(std::string_view name) const;
    std::optional<ObsId> find_observation(std::string_view name) const;
    double reward(StateId s, ActionId a) const { return rewards[a][s]; }
    std::size_t observation_table(ActionId a, StateId from) const
    {
        return observation_source.empty() ? a : observation_source[a][from];
    }
    std::span<const double> observation_row(ActionId a, StateId next) const;
    std::span<const double> observation_row(ActionId a, StateId from, StateId next) const;
    double observation(ActionId a, StateId next, ObsId o) const;
};

using RewardTable = std::vector<std::vector<double>>;

struct ModelViolation {
    enum class Kind {
        Structure,
        TransitionSum,
        NegativeTransition,
        ObservationSum,
        NegativeObservation,
        NonFiniteReward,
        Discount,
    };
    Kind kind;
    std::string message;
    std::optional<StateId> state;
    std::optional<ActionId> action;
    std::optional<StateId> next_state;
    std::optional<ObsId> observation;
};

/// Every invariant violation in the model; empty means valid.
std::vector<ModelViolation> validate_model(const DecisionModel& model);

/// Row T(s, a, .). Throws InvalidInput for out-of-range indices.
std::span<const Transition> next_state_distribution(const DecisionModel& model, StateId s, ActionId a);

/// New model with only the listed actions (in that order) and, optionally, a
/// replacement reward table indexed like the source ([source action][state]).
DecisionModel restrict_actions(const DecisionModel& model, std::span<const ActionId> actions,
                               const RewardTable* local_reward = nullptr);

/// Dense probability vector over states.
class Belief {
public:
    Belief() = default;
    // Throws InvalidInput unless entries are nonnegative and sum to one.
    explicit Belief(std::vector<double> probabilities);

    static Belief point(std::size_t n, StateId s);
    static Belief uniform(std::size_t n);

    std::size_t size() const noexcept { return p_.size(); }
    double operator[](std::size_t i) const { return p_[i]; }
    const std::vector<double>& probabilities() const noexcept { return p_; }
    StateId most_likely() const;

private:
    std::vector<double> p_;
};

/// Bayes filter b'(s') ~ O(o|a,s') sum_s T(s,a,s') b(s). Throws
/// ImpossibleObservation when the normalizer is zero.
Belief belief_update(const DecisionModel& model, const Belief& b, ActionId a, ObsId o);

/// One-step predicted distribution sum_s T(s,a,s') b(s), unnormalized by O.
std::vector<double> predict(const DecisionModel& model, std::span<const double> b, ActionId a);

} // namespace polca
