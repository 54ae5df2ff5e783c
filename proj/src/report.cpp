#include "polca/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "polca/abstraction.hpp"
#include "polca/errors.hpp"
#include "polca/solvers.hpp"

namespace polca {

Algorithm parse_algorithm(std::string_view name)
{
    if (name == "flat")
        return Algorithm::Flat;
    if (name == "polca")
        return Algorithm::Polca;
    if (name == "polca+")
        return Algorithm::PolcaPlus;
    if (name == "qmdp")
        return Algorithm::Qmdp;
    throw InvalidInput("unknown algorithm '" + std::string(name) + "' (expected flat, polca, polca+ or qmdp)");
}

std::string algorithm_name(Algorithm algorithm)
{
    switch (algorithm) {
    case Algorithm::Flat:
        return "flat";
    case Algorithm::Polca:
        return "polca";
    case Algorithm::PolcaPlus:
        return "polca+";
    case Algorithm::Qmdp:
        break;
    }
    return "qmdp";
}

void check_applicable(Algorithm algorithm, const DecisionModel& model)
{
    if (algorithm == Algorithm::PolcaPlus && model.kind() != ModelKind::Pomdp)
        throw InvalidInput("polca+ needs a model with observations");
}

HierarchicalPolicy plan_algorithm(const Domain& domain, Algorithm algorithm, const PlanOptions& base)
{
    check_applicable(algorithm, domain.model);
    PlanOptions options = base;
    options.mode = PlanMode::Mdp;
    switch (algorithm) {
    case Algorithm::Flat:
        options.top_solver = domain.model.kind() == ModelKind::Pomdp ? TopSolver::Qmdp : TopSolver::Exact;
        return polca_plan(domain.model, flat_graph(domain.model), options);
    case Algorithm::Qmdp:
        options.top_solver = TopSolver::Qmdp;
        return polca_plan(domain.model, flat_graph(domain.model), options);
    case Algorithm::Polca:
        return polca_plan(domain.model, domain.hierarchy, options);
    case Algorithm::PolcaPlus:
        options.mode = PlanMode::Pomdp;
        return polca_plan(domain.model, domain.hierarchy, options);
    }
    throw std::logic_error("unhandled algorithm");
}

std::vector<double> optimal_values(const DecisionModel& model, double tolerance)
{
    const auto flat = project_model(model, ClusterMap::singletons(model.num_states()), StabilityMode::Mdp);
    return value_iterate(flat, {tolerance, 10000000, false}).values;
}

PairedComparison paired_comparison(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size())
        throw InvalidInput("paired comparison needs equally many samples on both sides");
    if (a.size() < 2)
        throw InvalidInput("paired comparison needs at least two pairs");
    PairedComparison out;
    out.n = a.size();
    const double n = static_cast<double>(out.n);
    for (std::size_t i = 0; i < out.n; ++i)
        out.mean_difference += a[i] - b[i];
    out.mean_difference /= n;
    double ss = 0.0;
    for (std::size_t i = 0; i < out.n; ++i) {
        const double d = a[i] - b[i] - out.mean_difference;
        ss += d * d;
    }
    out.standard_error = std::sqrt(ss / (n - 1.0) / n);
    if (out.standard_error == 0.0) {
        out.t_statistic = out.mean_difference == 0.0 ? 0.0 : std::copysign(INFINITY, out.mean_difference);
        out.p_value = out.mean_difference == 0.0 ? 1.0 : 0.0;
        return out;
    }
    out.t_statistic = out.mean_difference / out.standard_error;
    const boost::math::students_t dist(n - 1.0);
    out.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(out.t_statistic)));
    return out;
}

std::vector<std::size_t> resolved_checkpoints(const CompareOptions& options)
{
    std::vector<std::size_t> checkpoints = options.checkpoints;
    if (checkpoints.empty())
        for (std::size_t q = 1; q <= 4; ++q)
            checkpoints.push_back(std::max<std::size_t>(1, options.episode.max_steps * q / 4));
    for (auto c : checkpoints)
        if (c == 0 || c > options.episode.max_steps)
            throw InvalidInput("checkpoints must lie in 1..max_steps");
    return checkpoints;
}

std::vector<CompareRow> run_comparison(const Domain& domain, const CompareOptions& options)
{
    if (options.algorithms.empty())
        throw InvalidInput("no algorithms to compare");
    if (options.seeds.empty())
        throw InvalidInput("no seeds to evaluate");
    for (auto a : options.algorithms)
        check_applicable(a, domain.model);

    const auto checkpoints = resolved_checkpoints(options);

    const bool observed = domain.model.kind() == ModelKind::Pomdp;
    std::optional<double> optimum;
    if (!observed) {
        const auto v = optimal_values(domain.model);
        optimum = 0.0;
        for (StateId s = 0; s < v.size(); ++s)
            *optimum += domain.initial[s] * v[s];
    }

    std::vector<CompareRow> rows;
    for (auto algorithm : options.algorithms) {
        const auto start = std::chrono::steady_clock::now();
        const auto policy = plan_algorithm(domain, algorithm, options.plan);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        std::optional<double> gap;
        if (optimum) {
            const auto v = evaluate_policy(domain.model, polled_policy(policy));
            double achieved = 0.0;
            for (StateId s = 0; s < v.size(); ++s)
                achieved += domain.initial[s] * v[s];
            gap = *optimum - achieved;
        }

        std::string label = algorithm_name(algorithm);
        if (algorithm == Algorithm::Flat && observed)
            label += "(qmdp)";
        for (auto seed : options.seeds) {
            CompareRow row;
            row.domain = domain.name;
            row.algorithm = label;
            row.seed = seed;
            row.parameters = policy.parameter_count();
            row.q_values = policy.q_value_count();
            row.solve_seconds = seconds;
            row.optimality_gap = gap;
            row.metrics = evaluate(policy, domain.model, domain.initial, options.episodes, options.episode, seed);
            row.mean_total_reward = row.metrics.mean_total_reward;
            for (auto c : checkpoints)
                row.checkpoint_rewards.push_back(row.metrics.reward_curve[c - 1]);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows, std::span<const std::size_t> checkpoints)
{
    out << kCompareCountingRule << '\n';
    out << "domain,algo,seed,n_params,n_qvalues,solve_seconds,mean_total_reward";
    for (auto c : checkpoints)
        out << ",reward_at_" << c;
    out << ",optimality_gap\n";
    for (const auto& r : rows) {
        out << r.domain << ',' << r.algorithm << ',' << r.seed << ',' << r.parameters << ',' << r.q_values << ','
            << r.solve_seconds << ',' << r.mean_total_reward;
        for (double v : r.checkpoint_rewards)
            out << ',' << v;
        out << ',';
        if (r.optimality_gap)
            out << *r.optimality_gap;
        out << '\n';
    }
}

} // namespace polca
