#include "polca/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "lp.hpp"
#include "polca/errors.hpp"

namespace polca {

std::size_t argmax_lowest(std::span<const double> values)
{
    if (values.empty())
        throw InvalidInput("argmax over an empty set");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        double margin = kTieTolerance * std::max(1.0, std::abs(values[best]));
        if (values[i] > values[best] + margin)
            best = i;
    }
    return best;
}

namespace {

void require_solvable(const ClusteredModel& model)
{
    if (model.num_actions() == 0)
        throw InvalidInput("model has no actions");
    if (model.num_clusters() == 0)
        throw InvalidInput("model has no clusters");
    if (!(model.discount > 0.0 && model.discount < 1.0))
        throw InvalidInput("discount must lie in (0, 1)");
}

double q_entry(const ClusteredModel& model, ClusterId c, ActionId a, std::span<const double> values)
{
    double q = model.rewards[a][c];
    if (model.is_terminal(c))
        return q;
    double next = 0.0;
    for (const auto& e : model.transitions[a].row(c))
        next += e.prob * values[e.to];
    return q + model.discount * next;
}

std::vector<double> bellman_update(const ClusteredModel& model, std::span<const double> values)
{
    std::vector<double> out(model.num_clusters());
    for (ClusterId c = 0; c < model.num_clusters(); ++c) {
        double best = q_entry(model, c, 0, values);
        for (ActionId a = 1; a < model.num_actions(); ++a)
            best = std::max(best, q_entry(model, c, a, values));
        out[c] = best;
    }
    return out;
}

double sup_distance(std::span<const double> x, std::span<const double> y)
{
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        d = std::max(d, std::abs(x[i] - y[i]));
    return d;
}

double dot(std::span<const double> x, std::span<const double> y)
{
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        s += x[i] * y[i];
    return s;
}

} // namespace

ValueFunction value_iterate(const ClusteredModel& model, const ValueIterationOptions& options)
{
    require_solvable(model);
    if (!(options.tolerance > 0.0))
        throw InvalidInput("value iteration tolerance must be positive");
    ValueFunction vf;
    vf.values.assign(model.num_clusters(), 0.0);
    if (options.record_iterates)
        vf.iterates.push_back(vf.values);
    while (vf.iterations < options.max_iterations) {
        auto next = bellman_update(model, vf.values);
        double change = sup_distance(next, vf.values);
        vf.values = std::move(next);
        ++vf.iterations;
        if (options.record_iterates)
            vf.iterates.push_back(vf.values);
        if (change <= options.tolerance) {
            vf.converged = true;
            break;
        }
    }
    vf.residual = bellman_residual(model, vf.values);
    return vf;
}

QTable q_values(const ClusteredModel& model, std::span<const double> values)
{
    if (values.size() != model.num_clusters())
        throw InvalidInput("value vector length does not match cluster count");
    QTable q(model.num_clusters(), std::vector<double>(model.num_actions()));
    for (ClusterId c = 0; c < model.num_clusters(); ++c)
        for (ActionId a = 0; a < model.num_actions(); ++a)
            q[c][a] = q_entry(model, c, a, values);
    return q;
}

double bellman_residual(const ClusteredModel& model, std::span<const double> values)
{
    require_solvable(model);
    if (values.size() != model.num_clusters())
        throw InvalidInput("value vector length does not match cluster count");
    return sup_distance(bellman_update(model, values), values);
}

std::vector<ActionId> extract_policy(const ClusteredModel& model, const ValueFunction& vf)
{
    auto q = q_values(model, vf.values);
    std::vector<ActionId> policy(q.size());
    for (std::size_t c = 0; c < q.size(); ++c)
        policy[c] = argmax_lowest(q[c]);
    return policy;
}

QTable qmdp_solve(const ClusteredModel& model, const ValueIterationOptions& options)
{
    auto vf = value_iterate(model, options);
    return q_values(model, vf.values);
}

ActionId qmdp_action(const QTable& q, std::span<const double> cluster_belief)
{
    if (q.empty() || cluster_belief.size() != q.size())
        throw InvalidInput("belief length does not match Q-table");
    std::vector<double> score(q.front().size(), 0.0);
    for (std::size_t c = 0; c < q.size(); ++c) {
        if (cluster_belief[c] == 0.0)
            continue;
        for (std::size_t a = 0; a < score.size(); ++a)
            score[a] += cluster_belief[c] * q[c][a];
    }
    return argmax_lowest(score);
}

double AlphaVectorSet::value(std::span<const double> b) const
{
    return dot(vectors_[best(b)].values, b);
}

std::size_t AlphaVectorSet::best(std::span<const double> b) const
{
    if (vectors_.empty())
        throw InvalidInput("empty alpha-vector set");
    std::size_t best = 0;
    double best_value = dot(vectors_[0].values, b);
    for (std::size_t i = 1; i < vectors_.size(); ++i) {
        double v = dot(vectors_[i].values, b);
        double margin = kTieTolerance * std::max(1.0, std::abs(best_value));
        if (v > best_value + margin ||
            (v >= best_value - margin && vectors_[i].action < vectors_[best].action)) {
            best = i;
            best_value = std::max(v, best_value);
        }
    }
    return best;
}

namespace {

constexpr double kDominanceTolerance = 1e-12;

// u makes w redundant: u >= w everywhere, and either strictly better somewhere
// or an equal copy that sorts first.
bool makes_redundant(const AlphaVector& u, std::size_t iu, const AlphaVector& w, std::size_t iw)
{
    bool strictly = false;
    for (std::size_t i = 0; i < w.values.size(); ++i) {
        if (u.values[i] < w.values[i] - kDominanceTolerance)
            return false;
        if (u.values[i] > w.values[i] + kDominanceTolerance)
            strictly = true;
    }
    if (strictly)
        return true;
    return u.action < w.action || (u.action == w.action && iu < iw);
}

std::vector<AlphaVector> pointwise_prune(std::vector<AlphaVector> vectors)
{
    std::vector<char> removed(vectors.size(), 0);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        for (std::size_t j = 0; j < vectors.size() && !removed[i]; ++j) {
            if (i == j || removed[j])
                continue;
            if (makes_redundant(vectors[j], j, vectors[i], i))
                removed[i] = 1;
        }
    }
    std::vector<AlphaVector> kept;
    kept.reserve(vectors.size());
    for (std::size_t i = 0; i < vectors.size(); ++i)
        if (!removed[i])
            kept.push_back(std::move(vectors[i]));
    return kept;
}

// Best vector at b; value ties go to the lexicographically larger vector,
// then to the lower action, so the winner lies on the upper surface.
std::size_t best_lexicographic(const std::vector<AlphaVector>& vectors, std::span<const double> b)
{
    std::size_t best = 0;
    double best_value = dot(vectors[0].values, b);
    for (std::size_t i = 1; i < vectors.size(); ++i) {
        double v = dot(vectors[i].values, b);
        if (v > best_value + kDominanceTolerance) {
            best = i;
            best_value = v;
            continue;
        }
        if (v < best_value - kDominanceTolerance)
            continue;
        const auto& x = vectors[i].values;
        const auto& y = vectors[best].values;
        bool better = false, decided = false;
        for (std::size_t k = 0; k < x.size() && !decided; ++k) {
            if (x[k] > y[k] + kDominanceTolerance) {
                better = true;
                decided = true;
            } else if (x[k] < y[k] - kDominanceTolerance) {
                decided = true;
            }
        }
        if (!decided)
            better = vectors[i].action < vectors[best].action;
        if (better) {
            best = i;
            best_value = std::max(v, best_value);
        }
    }
    return best;
}

std::vector<double> random_simplex_point(std::size_t dimension, std::mt19937_64& rng)
{
    std::exponential_distribution<double> draw(1.0);
    std::vector<double> b(dimension);
    double total = 0.0;
    for (double& x : b) {
        x = draw(rng);
        total += x;
    }
    for (double& x : b)
        x /= total;
    return b;
}

std::vector<AlphaVector> lp_prune(std::vector<AlphaVector> pending, std::size_t dimension, double epsilon)
{
    std::vector<AlphaVector> kept;
    std::vector<std::span<const double>> kept_views;
    while (!pending.empty()) {
        std::optional<std::vector<double>> witness;
        if (kept.empty()) {
            witness = std::vector<double>(dimension, 1.0 / static_cast<double>(dimension));
        } else {
            witness = detail::dominance_witness(pending.back().values, kept_views, epsilon);
            if (!witness) {
                pending.pop_back();
                continue;
            }
        }
        auto idx = best_lexicographic(pending, *witness);
        kept.push_back(std::move(pending[idx]));
        pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(idx));
        kept_views.clear();
        for (const auto& k : kept)
            kept_views.emplace_back(k.values);
    }
    return kept;
}

std::vector<AlphaVector> sampling_prune(std::vector<AlphaVector> vectors, std::size_t dimension,
                                        const PruneOptions& options)
{
    std::vector<char> useful(vectors.size(), 0);
    std::vector<double> b(dimension, 0.0);
    for (std::size_t i = 0; i < dimension; ++i) {
        std::fill(b.begin(), b.end(), 0.0);
        b[i] = 1.0;
        useful[best_lexicographic(vectors, b)] = 1;
    }
    std::mt19937_64 rng(options.seed);
    for (std::size_t k = 0; k < options.sample_beliefs; ++k)
        useful[best_lexicographic(vectors, random_simplex_point(dimension, rng))] = 1;
    std::vector<AlphaVector> kept;
    for (std::size_t i = 0; i < vectors.size(); ++i)
        if (useful[i])
            kept.push_back(std::move(vectors[i]));
    return kept;
}

} // namespace

std::vector<AlphaVector> prune(std::vector<AlphaVector> vectors, std::size_t dimension, const PruneOptions& options)
{
    for (const auto& v : vectors)
        if (v.values.size() != dimension)
            throw InvalidInput("alpha vector has wrong dimension");
    if (vectors.size() <= 1)
        return vectors;
    vectors = pointwise_prune(std::move(vectors));
    if (vectors.size() <= 1)
        return vectors;
    if (options.method == PruneMethod::LinearProgram)
        return lp_prune(std::move(vectors), dimension, options.epsilon);
    return sampling_prune(std::move(vectors), dimension, options);
}

namespace {

struct ObservationBlock {
    ObsId observation;
    // rows[c] lists (c', probability) for this (action, observation).
    std::vector<std::vector<std::pair<ClusterId, double>>> rows;
};

std::vector<std::vector<ObservationBlock>> observation_blocks(const ClusteredModel& model)
{
    const auto n = model.num_clusters();
    std::vector<std::vector<ObservationBlock>> blocks(model.num_actions());
    for (ActionId a = 0; a < model.num_actions(); ++a) {
        std::vector<std::ptrdiff_t> slot(model.observations.size(), -1);
        for (ClusterId c = 0; c < n; ++c) {
            for (const auto& e : model.joint[a][c]) {
                if (e.prob == 0.0)
                    continue;
                if (slot[e.observation] < 0) {
                    slot[e.observation] = static_cast<std::ptrdiff_t>(blocks[a].size());
                    blocks[a].push_back({e.observation, std::vector<std::vector<std::pair<ClusterId, double>>>(n)});
                }
                blocks[a][static_cast<std::size_t>(slot[e.observation])].rows[c].emplace_back(e.to, e.prob);
            }
        }
        std::sort(blocks[a].begin(), blocks[a].end(),
                  [](const ObservationBlock& x, const ObservationBlock& y) { return x.observation < y.observation; });
    }
    return blocks;
}

AlphaVectorSet backup_with(const ClusteredModel& model, const std::vector<std::vector<ObservationBlock>>& blocks,
                           const AlphaVectorSet& current, const PruneOptions& options)
{
    const auto n = model.num_clusters();
    std::vector<AlphaVector> all;
    for (ActionId a = 0; a < model.num_actions(); ++a) {
        const auto& per_obs = blocks[a];
        if (per_obs.empty()) {
            all.push_back({model.rewards[a], a});
            continue;
        }
        const double share = 1.0 / static_cast<double>(per_obs.size());
        std::vector<AlphaVector> sum;
        for (const auto& block : per_obs) {
            std::vector<AlphaVector> projected;
            projected.reserve(current.size());
            for (const auto& alpha : current.vectors()) {
                AlphaVector g{std::vector<double>(n), a};
                for (ClusterId c = 0; c < n; ++c) {
                    double next = 0.0;
                    for (const auto& [to, p] : block.rows[c])
                        next += p * alpha.values[to];
                    g.values[c] = model.rewards[a][c] * share + model.discount * next;
                }
                projected.push_back(std::move(g));
            }
            projected = prune(std::move(projected), n, options);
            if (sum.empty()) {
                sum = std::move(projected);
                continue;
            }
            std::vector<AlphaVector> cross;
            cross.reserve(sum.size() * projected.size());
            for (const auto& x : sum) {
                for (const auto& y : projected) {
                    AlphaVector z{x.values, a};
                    for (std::size_t c = 0; c < n; ++c)
                        z.values[c] += y.values[c];
                    cross.push_back(std::move(z));
                }
            }
            sum = prune(std::move(cross), n, options);
        }
        for (auto& v : sum)
            all.push_back(std::move(v));
    }
    return AlphaVectorSet(prune(std::move(all), n, options));
}

void require_pomdp(const ClusteredModel& model)
{
    require_solvable(model);
    if (!model.has_observations())
        throw InvalidInput("exact POMDP solving needs a model with projected observations");
}

} // namespace

AlphaVectorSet pomdp_backup(const ClusteredModel& model, const AlphaVectorSet& current, const PruneOptions& options)
{
    require_pomdp(model);
    return backup_with(model, observation_blocks(model), current, options);
}

std::vector<std::vector<double>> test_beliefs(std::size_t dimension, std::size_t random_count, std::uint64_t seed)
{
    std::vector<std::vector<double>> beliefs;
    beliefs.reserve(dimension + 1 + random_count);
    for (std::size_t i = 0; i < dimension; ++i) {
        std::vector<double> vertex(dimension, 0.0);
        vertex[i] = 1.0;
        beliefs.push_back(std::move(vertex));
    }
    beliefs.emplace_back(dimension, 1.0 / static_cast<double>(dimension));
    std::mt19937_64 rng(seed);
    for (std::size_t k = 0; k < random_count; ++k)
        beliefs.push_back(random_simplex_point(dimension, rng));
    return beliefs;
}

namespace {

double largest_change(const AlphaVectorSet& before, const AlphaVectorSet& after,
                      const std::vector<std::vector<double>>& beliefs)
{
    double change = 0.0;
    for (const auto& b : beliefs)
        change = std::max(change, std::abs(after.value(b) - before.value(b)));
    return change;
}

} // namespace

double pomdp_bellman_residual(const ClusteredModel& model, const AlphaVectorSet& alphas,
                              const std::vector<std::vector<double>>& beliefs, const PruneOptions& options)
{
    return largest_change(alphas, pomdp_backup(model, alphas, options), beliefs);
}

PomdpSolution solve_pomdp_exact(const ClusteredModel& model, const PomdpOptions& options)
{
    require_pomdp(model);
    if (model.num_clusters() > options.max_clusters)
        throw ProblemTooLarge("exact POMDP solving is capped at " + std::to_string(options.max_clusters) +
                              " clusters but the model has " + std::to_string(model.num_clusters()) +
                              "; use the qmdp solver instead");
    const auto n = model.num_clusters();
    const auto blocks = observation_blocks(model);
    const auto beliefs = test_beliefs(n, options.test_beliefs, options.prune.seed);

    PomdpSolution solution;
    solution.alphas = AlphaVectorSet({AlphaVector{std::vector<double>(n, 0.0), 0}});
    const std::size_t limit = options.horizon ? *options.horizon : options.max_iterations;
    while (solution.iterations < limit) {
        auto next = backup_with(model, blocks, solution.alphas, options.prune);
        double change = largest_change(solution.alphas, next, beliefs);
        solution.alphas = std::move(next);
        ++solution.iterations;
        if (options.on_iteration)
            options.on_iteration(solution.iterations, solution.alphas.size(), change);
        if (!options.horizon && change < options.tolerance) {
            solution.converged = true;
            break;
        }
    }
    if (options.horizon) {
        solution.converged = true;
        solution.residual = 0.0;
    } else {
        auto one_more = backup_with(model, blocks, solution.alphas, options.prune);
        solution.residual = largest_change(solution.alphas, one_more, beliefs);
    }
    return solution;
}

std::vector<double> evaluate_policy(const DecisionModel& model, std::span<const ActionId> policy, double tolerance,
                                    std::size_t max_iterations)
{
    const auto n = model.num_states();
    if (policy.size() != n)
        throw InvalidInput("policy length does not match state count");
    for (auto a : policy)
        if (a >= model.num_actions())
            throw InvalidInput("policy names an unknown action");
    std::vector<double> v(n, 0.0), next(n);
    for (std::size_t it = 0; it < max_iterations; ++it) {
        for (StateId s = 0; s < n; ++s) {
            double acc = 0.0;
            for (const auto& e : model.transitions[policy[s]].row(s))
                acc += e.prob * v[e.to];
            next[s] = model.rewards[policy[s]][s] + model.discount * acc;
        }
        double change = sup_distance(next, v);
        v.swap(next);
        if (change <= tolerance)
            break;
    }
    return v;
}

} // namespace polca
