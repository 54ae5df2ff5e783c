// One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "polca/abstraction.hpp"
#include "polca/domains.hpp"
#include "polca/executor.hpp"
#include "polca/hierarchy.hpp"
#include "polca/report.hpp"
#include "polca/solvers.hpp"

using namespace polca;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// 1. Clustered values equal flat values on random MDPs.
Outcome value_equivalence()
{
    const auto start = Clock::now();
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    std::size_t clustered = 0;
    const std::size_t trials = 120;
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t n = 10 + rng() % 21, actions = 2 + rng() % 3;
        // Half the models carry planted equivalences, half are unstructured.
        const std::size_t blocks = t % 2 ? n : 2 + rng() % (n / 2);
        const auto p = oracle::planted_mdp(rng, n, actions, blocks, 0.95);
        const auto flat = oracle::value_iteration(p.model, 1e-10);
        const auto c = minimize(p.model, StabilityMode::Mdp);
        clustered += c.num_clusters() < n;
        const auto cm = project_model(p.model, c, StabilityMode::Mdp);
        const auto vf = value_iterate(cm, {1e-10, 10000000, false});
        for (StateId s = 0; s < n; ++s)
            worst = std::max(worst, std::abs(flat[s] - vf.values[c.cluster_of(s)]));
    }
    const double secs = seconds_since(start);
    return {worst <= 1e-8 && secs < 30.0,
            fmt("%zu MDPs (%zu compressed), max |V_flat - V_cluster| = %.2e, %.2f s", trials, clustered, worst, secs)};
}

// 2. Polled PolCA policy is flat-optimal on Taxi and Taxi2.
Outcome taxi_optimality()
{
    std::string detail;
    bool pass = true;
    for (const char* name : {"taxi", "taxi2"}) {
        const auto d = build_domain(name);
        PlanOptions o;
        o.value_iteration.tolerance = 1e-10;
        const auto p = plan_algorithm(d, Algorithm::Polca, o);
        const auto v = evaluate_policy(d.model, polled_policy(p));
        const auto best = optimal_values(d.model);
        double gap = 0.0;
        for (StateId s = 0; s < v.size(); ++s)
            gap = std::max(gap, std::abs(best[s] - v[s]));
        pass &= gap <= 1e-6;
        detail += fmt("%s max |V* - V_polca| = %.2e; ", name, gap);
    }
    return {pass, detail};
}

// 3. Q-value counts: Taxi below flat, Taxi2 compresses better than Taxi.
Outcome taxi_compression()
{
    double ratio[2];
    std::size_t counts[2], flat[2];
    int i = 0;
    for (const char* name : {"taxi", "taxi2"}) {
        const auto d = build_domain(name);
        const auto p = plan_algorithm(d, Algorithm::Polca);
        counts[i] = p.q_value_count();
        flat[i] = d.model.num_states() * d.model.num_actions();
        ratio[i] = double(counts[i]) / double(flat[i]);
        ++i;
    }
    return {counts[0] < flat[0] && ratio[1] < ratio[0],
            fmt("taxi %zu/%zu (%.3f), taxi2 %zu/%zu (%.3f)", counts[0], flat[0], ratio[0], counts[1], flat[1],
                ratio[1])};
}

// 4. Projected flat belief equals the clustered belief.
Outcome belief_projection()
{
    std::mt19937_64 rng(77);
    double worst = 0.0;
    const std::size_t trials = 60;
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t n = 6 + rng() % 15;
        const auto p = oracle::planted_pomdp(rng, n, 2 + rng() % 3, 2 + rng() % 3, 2 + rng() % 4);
        const auto& m = p.model;
        const auto c = minimize(m, StabilityMode::Pomdp);
        const auto cm = project_model(m, c, StabilityMode::Pomdp);
        Belief b = Belief::uniform(n);
        auto bc = c.project(b.probabilities());
        for (int step = 0; step < 10; ++step) {
            const ActionId a = rng() % m.num_actions();
            const auto pred = predict(m, b.probabilities(), a);
            std::vector<double> w(m.num_observations(), 0.0);
            for (StateId s = 0; s < n; ++s)
                for (ObsId o = 0; o < w.size(); ++o)
                    w[o] += pred[s] * m.observation(a, s, o);
            const ObsId o = std::discrete_distribution<ObsId>(w.begin(), w.end())(rng);
            b = belief_update(m, b, a, o);
            bc = clustered_belief_update(cm, bc, a, o);
            const auto projected = c.project(b.probabilities());
            for (ClusterId k = 0; k < bc.size(); ++k)
                worst = std::max(worst, std::abs(projected[k] - bc[k]));
        }
    }
    return {worst <= 1e-8, fmt("%zu POMDPs x 10 steps, max deviation %.2e", trials, worst)};
}

struct NursebotRun {
    std::vector<CompareRow> rows;  // polca+, polca, qmdp
    Domain domain;
};

const NursebotRun& nursebot_small_run()
{
    static const NursebotRun run = [] {
        NursebotRun r{{}, build_nursebot(NursebotScale::Small)};
        CompareOptions o;
        o.algorithms = {Algorithm::PolcaPlus, Algorithm::Polca, Algorithm::Qmdp};
        o.seeds = {42};
        o.episodes = 100;
        o.episode.max_steps = 200;
        r.rows = run_comparison(r.domain, o);
        return r;
    }();
    return run;
}

// 5. Reward ordering PolCA+ > PolCA > QMDP with a significant paired gap.
Outcome nursebot_reward()
{
    const auto& rows = nursebot_small_run().rows;
    const double plus = rows[0].mean_total_reward, polca = rows[1].mean_total_reward, qmdp = rows[2].mean_total_reward;
    const auto cmp = paired_comparison(rows[0].metrics.episode_totals, rows[2].metrics.episode_totals);
    return {plus > polca && polca > qmdp && cmp.mean_difference > 0.0 && cmp.p_value < 0.05,
            fmt("mean reward polca+ %.2f, polca %.2f, qmdp %.2f; polca+ - qmdp = %.2f (t = %.2f, p = %.2g)", plus,
                polca, qmdp, cmp.mean_difference, cmp.t_statistic, cmp.p_value)};
}

// 6. Clarification before commitment.
Outcome nursebot_clarification()
{
    const auto& run = nursebot_small_run();
    const auto& m = run.domain.model;
    std::vector<char> clarify(m.num_actions()), commit(m.num_actions());
    for (ActionId a = 0; a < m.num_actions(); ++a) {
        const auto& n = m.actions[a];
        clarify[a] = n.rfind("Confirm", 0) == 0 || n.rfind("Verify", 0) == 0;
        commit[a] = *std::max_element(m.rewards[a].begin(), m.rewards[a].end()) >= 50.0;
    }
    const auto plus = plan_algorithm(run.domain, Algorithm::PolcaPlus);
    const auto polca = plan_algorithm(run.domain, Algorithm::Polca);
    EpisodeOptions eo;
    eo.max_steps = 200;
    auto tally = [&](const HierarchicalPolicy& p, std::size_t& guarded) {
        double clarifications = 0.0;
        guarded = 0;
        for (std::uint64_t e = 0; e < 100; ++e) {
            const auto t = run_episode(p, m, run.domain.initial, eo, 42, e);
            bool ok = true;
            std::size_t since = 0;
            for (const auto& s : t.steps) {
                if (clarify[s.action]) {
                    ++clarifications;
                    ++since;
                }
                if (commit[s.action]) {
                    ok &= since > 0;
                    since = 0;
                }
            }
            guarded += ok;
        }
        return clarifications / 100.0;
    };
    std::size_t plus_guarded = 0, polca_guarded = 0;
    const double plus_rate = tally(plus, plus_guarded);
    const double polca_rate = tally(polca, polca_guarded);
    return {plus_guarded >= 90 && polca_rate < plus_rate,
            fmt("polca+ clarified before every commitment in %zu/100 episodes (%.2f clarifications/episode); "
                "polca %.2f clarifications/episode",
                plus_guarded, plus_rate, polca_rate)};
}

double subtask_residual(const SubtaskPolicy& s, const PlanOptions& o)
{
    const auto& cm = *s.model;
    if (s.solver == SubtaskSolver::ExactPomdp)
        return pomdp_bellman_residual(cm, s.alphas,
                                      test_beliefs(cm.num_clusters(), o.pomdp.test_beliefs, o.pomdp.prune.seed),
                                      o.pomdp.prune);
    return bellman_residual(cm, s.values);
}

// 7. Every subtask is Bellman-optimal on its own clustered model.
Outcome subtask_certificates()
{
    bool pass = true;
    std::size_t checked = 0;
    double worst_ratio = 0.0;
    std::string failures;
    auto check = [&](const Domain& d, const PlanOptions& o) {
        const auto p = polca_plan(d.model, d.hierarchy, o);
        for (const auto& s : p.subtasks) {
            const double tol = s.solver == SubtaskSolver::ExactPomdp ? o.pomdp.tolerance : o.value_iteration.tolerance;
            const double r = subtask_residual(s, o);
            worst_ratio = std::max(worst_ratio, r / tol);
            ++checked;
            if (!(r <= tol)) {
                pass = false;
                failures += fmt(" %s/%s residual %.2e > %.0e;", d.name.c_str(), s.id.c_str(), r, tol);
            }
        }
    };
    for (const auto& name : domain_names()) {
        const auto d = build_domain(name);
        check(d, {});
        if (d.model.kind() == ModelKind::Pomdp) {
            PlanOptions o;
            o.mode = PlanMode::Pomdp;
            if (name == "nursebot")
                o.top_solver = TopSolver::Qmdp;
            check(d, o);
        }
    }
    return {pass, fmt("%zu subtasks, worst residual/tolerance %.3f", checked, worst_ratio) + failures};
}

// 8. Observation-aware partitions refine the fully observed ones; both are
// smaller than no abstraction.
Outcome refinement_dominance()
{
    bool pass = true;
    std::string detail;
    for (const char* name : {"nursebot-small", "nursebot"}) {
        const auto d = build_domain(name);
        PlanOptions o;
        o.top_solver = TopSolver::Qmdp;
        const auto plus = plan_algorithm(d, Algorithm::PolcaPlus, o);
        const auto polca = plan_algorithm(d, Algorithm::Polca);
        std::size_t noabs = 0, plus_count = 0, polca_count = 0;
        for (const auto& s : polca.subtasks) {
            const auto& t = plus.subtask(s.id);
            if (!t.clusters.refines(s.clusters)) {
                pass = false;
                detail += fmt("%s/%s does not refine; ", name, s.id.c_str());
            }
            noabs += d.model.num_states() * s.children.size();
            plus_count += t.q_value_count();
            polca_count += s.q_value_count();
        }
        pass &= plus_count < noabs && polca_count < noabs;
        detail += fmt("%s entries polca %zu, polca+ %zu, none %zu; ", name, polca_count, plus_count, noabs);
    }
    return {pass, detail};
}

// 9. Planning time.
Outcome planning_time()
{
    const auto nb = build_nursebot(NursebotScale::Full);
    PlanOptions o;
    o.top_solver = TopSolver::Qmdp;
    auto start = Clock::now();
    plan_algorithm(nb, Algorithm::PolcaPlus, o);
    const double nb_secs = seconds_since(start);
    const auto taxi = build_taxi();
    start = Clock::now();
    plan_algorithm(taxi, Algorithm::Polca);
    const double taxi_secs = seconds_since(start);
    return {nb_secs < 300.0 && taxi_secs < 10.0,
            fmt("nursebot polca+ (qmdp top) %.2f s, taxi polca %.3f s", nb_secs, taxi_secs)};
}

} // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"clustered value equivalence", value_equivalence},
        {"taxi policy optimality", taxi_optimality},
        {"taxi abstraction yield", taxi_compression},
        {"belief projection consistency", belief_projection},
        {"nursebot reward ordering", nursebot_reward},
        {"nursebot clarification behaviour", nursebot_clarification},
        {"per-subtask bellman certificate", subtask_certificates},
        {"observation-aware refinement", refinement_dominance},
        {"planning time", planning_time},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome r;
        try {
            r = criteria[i].second();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        failed += !r.pass;
        std::cout << (r.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << r.detail
                  << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
