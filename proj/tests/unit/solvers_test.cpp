#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "polca/abstraction.hpp"
#include "polca/errors.hpp"
#include "polca/solvers.hpp"

using namespace polca;

namespace {

ClusteredModel flat(const DecisionModel& m, StabilityMode mode = StabilityMode::Mdp)
{
    return project_model(m, ClusterMap::singletons(m.num_states()), mode);
}

double value_at(const AlphaVectorSet& set, std::vector<double> b)
{
    return set.value(b);
}

} // namespace

TEST(ArgmaxLowest, NearTiesGoToTheLowestIndex)
{
    const std::vector<double> v{1.0, 3.0, 3.0 + 1e-12, 2.0};
    EXPECT_EQ(argmax_lowest(v), 1u);
    const std::vector<double> w{1.0, 3.0, 3.1};
    EXPECT_EQ(argmax_lowest(w), 2u);
    const std::vector<double> big{1e9, 1e9 + 0.5};
    EXPECT_EQ(argmax_lowest(big), 0u);
}

TEST(ValueIteration, MatchesDenseOracle)
{
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        const auto p = oracle::planted_mdp(rng, 5 + rng() % 20, 2 + rng() % 3, 5);
        const auto expect = oracle::value_iteration(p.model, 1e-12);
        const auto vf = value_iterate(flat(p.model), {1e-10, 1000000, false});
        ASSERT_TRUE(vf.converged);
        for (std::size_t s = 0; s < expect.size(); ++s)
            ASSERT_NEAR(vf.values[s], expect[s], 1e-8);
    }
}

TEST(ValueIteration, ResidualWithinToleranceAndIteratesRecorded)
{
    std::mt19937_64 rng(43);
    const auto p = oracle::planted_mdp(rng, 12, 3, 4);
    const auto cm = flat(p.model);
    const auto vf = value_iterate(cm, {1e-6, 100000, true});
    EXPECT_TRUE(vf.converged);
    EXPECT_LE(vf.residual, 1e-6);
    EXPECT_NEAR(bellman_residual(cm, vf.values), vf.residual, 1e-12);
    ASSERT_EQ(vf.iterates.size(), vf.iterations + 1);
    for (double v : vf.iterates.front())
        EXPECT_EQ(v, 0.0);
}

TEST(ValueIteration, FlagsNonConvergence)
{
    std::mt19937_64 rng(47);
    const auto p = oracle::planted_mdp(rng, 6, 2, 3);
    const auto vf = value_iterate(flat(p.model), {1e-12, 3, false});
    EXPECT_FALSE(vf.converged);
    EXPECT_EQ(vf.iterations, 3u);
}

TEST(ValueIteration, DiscountedChainHasClosedForm)
{
    // Single absorbing state with reward 1: V = 1 / (1 - gamma).
    DecisionModel m;
    m.space = FeatureSpace({{"s", 1, {}}});
    m.actions = {"stay"};
    m.discount = 0.9;
    m.transitions.emplace_back(std::vector<std::vector<Transition>>{{{0, 1.0}}});
    m.rewards = {{1.0}};
    const auto vf = value_iterate(flat(m), {1e-12, 100000, false});
    EXPECT_NEAR(vf.values[0], 10.0, 1e-10);
}

TEST(ValueIteration, TerminalClustersGetNoContinuation)
{
    DecisionModel m;
    m.space = FeatureSpace({{"s", 2, {}}});
    m.actions = {"go"};
    m.transitions.emplace_back(std::vector<std::vector<Transition>>{{{1, 1.0}}, {{1, 1.0}}});
    m.rewards = {{0.0, 4.0}};
    const TerminalMask terminal{0, 1};
    const auto cm = project_model(m, ClusterMap::singletons(2), StabilityMode::Mdp, terminal);
    const auto vf = value_iterate(cm, {1e-12, 1000, false});
    EXPECT_DOUBLE_EQ(vf.values[1], 4.0);
    EXPECT_NEAR(vf.values[0], 0.95 * 4.0, 1e-12);
}

TEST(EvaluatePolicy, MatchesLinearSolve)
{
    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 10; ++trial) {
        const auto p = oracle::planted_mdp(rng, 15, 3, 6);
        std::vector<ActionId> policy(15);
        for (auto& a : policy)
            a = rng() % 3;
        const auto v = evaluate_policy(p.model, policy);
        const auto expect = oracle::policy_value(p.model, policy);
        for (std::size_t s = 0; s < 15; ++s)
            ASSERT_NEAR(v[s], expect[s], 1e-8);
    }
}

TEST(Qmdp, ActionMaximizesBeliefWeightedQ)
{
    const QTable q{{1.0, 0.0}, {0.0, 3.0}};
    EXPECT_EQ(qmdp_action(q, std::vector<double>{0.9, 0.1}), 0u);
    EXPECT_EQ(qmdp_action(q, std::vector<double>{0.5, 0.5}), 1u);
    EXPECT_EQ(qmdp_action(q, std::vector<double>{0.75, 0.25}), 0u);  // tie -> lowest
}

TEST(Qmdp, EqualsValueIterationQValues)
{
    const auto cm = flat(oracle::tiger(), StabilityMode::Pomdp);
    const auto q = qmdp_solve(cm, {1e-10, 100000, false});
    const auto vf = value_iterate(cm, {1e-10, 100000, false});
    const auto expect = q_values(cm, vf.values);
    for (std::size_t c = 0; c < q.size(); ++c)
        for (std::size_t a = 0; a < q[c].size(); ++a)
            EXPECT_NEAR(q[c][a], expect[c][a], 1e-9);
}

TEST(Prune, RemovesDominatedAndDuplicateVectors)
{
    std::vector<AlphaVector> v{{{0.0, 0.0}, 0}, {{1.0, 1.0}, 1}, {{2.0, -1.0}, 2}, {{1.0, 1.0}, 3}, {{-1.0, 2.0}, 4}};
    for (auto method : {PruneMethod::LinearProgram, PruneMethod::Sampling}) {
        PruneOptions o;
        o.method = method;
        const auto kept = prune(v, 2, o);
        EXPECT_EQ(kept.size(), 3u);
        for (const auto& a : kept)
            EXPECT_NE(a.action, 0u);
    }
}

TEST(Prune, DropsVectorsBestOnlyAtNoBelief)
{
    // (0.9, 0.9) lies under the upper surface of (2, 0) and (0, 2) everywhere.
    std::vector<AlphaVector> v{{{2.0, 0.0}, 0}, {{0.0, 2.0}, 1}, {{0.9, 0.9}, 2}};
    const auto kept = prune(v, 2);
    EXPECT_EQ(kept.size(), 2u);
}

TEST(Prune, PreservesUpperSurface)
{
    std::mt19937_64 rng(59);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    std::vector<AlphaVector> v;
    for (int i = 0; i < 60; ++i)
        v.push_back({{u(rng), u(rng), u(rng)}, static_cast<ActionId>(i % 3)});
    const AlphaVectorSet all(v);
    const AlphaVectorSet kept(prune(v, 3));
    EXPECT_LT(kept.size(), v.size());
    for (const auto& b : test_beliefs(3, 200, 1))
        EXPECT_NEAR(kept.value(b), all.value(b), 1e-9);
}

TEST(TestBeliefs, IncludeVerticesAndCentroid)
{
    const auto b = test_beliefs(3, 5, 2);
    ASSERT_EQ(b.size(), 3u + 1u + 5u);
    EXPECT_EQ(b[0], (std::vector<double>{1.0, 0.0, 0.0}));
    EXPECT_NEAR(b[3][1], 1.0 / 3.0, 1e-15);
    for (const auto& x : b) {
        double sum = 0.0;
        for (double p : x)
            sum += p;
        EXPECT_NEAR(sum, 1.0, 1e-12);
    }
}

TEST(PomdpBackup, FirstBackupKeepsTheImmediateRewardVectors)
{
    const auto cm = flat(oracle::tiger(), StabilityMode::Pomdp);
    const auto one = pomdp_backup(cm, AlphaVectorSet({{{0.0, 0.0}, 0}}));
    EXPECT_EQ(one.size(), 3u);
    EXPECT_NEAR(value_at(one, {0.5, 0.5}), -1.0, 1e-12);
    EXPECT_NEAR(value_at(one, {0.0, 1.0}), 10.0, 1e-12);
}

class TigerHorizon : public ::testing::TestWithParam<int> {};

TEST_P(TigerHorizon, FiniteHorizonValueMatchesExpectimax)
{
    const auto m = oracle::tiger();
    const auto cm = flat(m, StabilityMode::Pomdp);
    PomdpOptions o;
    o.horizon = static_cast<std::size_t>(GetParam());
    const auto sol = solve_pomdp_exact(cm, o);
    EXPECT_EQ(sol.iterations, *o.horizon);
    for (double p : {0.0, 0.1, 0.3, 0.5, 0.62, 0.85, 0.97, 1.0}) {
        const std::vector<double> b{p, 1.0 - p};
        EXPECT_NEAR(sol.alphas.value(b), oracle::expectimax(m, b, GetParam()), 1e-8) << "p=" << p;
    }
}

INSTANTIATE_TEST_SUITE_P(Horizons, TigerHorizon, ::testing::Values(1, 2, 3, 4, 5));

TEST(SolvePomdpExact, TigerConvergesToListenThenOpen)
{
    const auto cm = flat(oracle::tiger(), StabilityMode::Pomdp);
    const auto sol = solve_pomdp_exact(cm);
    ASSERT_TRUE(sol.converged);
    EXPECT_LE(sol.residual, 1e-6);
    EXPECT_EQ(sol.alphas.action(std::vector<double>{0.5, 0.5}), 0u);
    EXPECT_EQ(sol.alphas.action(std::vector<double>{0.995, 0.005}), 2u);
    EXPECT_EQ(sol.alphas.action(std::vector<double>{0.005, 0.995}), 1u);
    const auto beliefs = test_beliefs(2, 100, 9);
    EXPECT_LE(pomdp_bellman_residual(cm, sol.alphas, beliefs), 1e-6);
}

TEST(SolvePomdpExact, ValueDominatesEveryFixedHorizonLowerBound)
{
    // Rewards can be negative, so compare against the horizon-h value plus the
    // worst-case tail bound.
    const auto m = oracle::tiger();
    const auto cm = flat(m, StabilityMode::Pomdp);
    const auto sol = solve_pomdp_exact(cm);
    const double tail = std::pow(0.95, 4) * 100.0 / (1.0 - 0.95);
    for (double p : {0.2, 0.5, 0.8}) {
        const std::vector<double> b{p, 1.0 - p};
        EXPECT_GE(sol.alphas.value(b), oracle::expectimax(m, b, 4) - tail);
    }
}

TEST(SolvePomdpExact, RefusesLargeModels)
{
    std::mt19937_64 rng(61);
    const auto p = oracle::planted_pomdp(rng, 45, 2, 2, 45);
    const auto cm = flat(p.model, StabilityMode::Pomdp);
    EXPECT_THROW(solve_pomdp_exact(cm), ProblemTooLarge);
}

TEST(SolvePomdpExact, ReportsProgress)
{
    const auto cm = flat(oracle::tiger(), StabilityMode::Pomdp);
    PomdpOptions o;
    o.horizon = 3;
    std::vector<std::size_t> seen;
    o.on_iteration = [&](std::size_t it, std::size_t, double) { seen.push_back(it); };
    solve_pomdp_exact(cm, o);
    EXPECT_EQ(seen, (std::vector<std::size_t>{1, 2, 3}));
}
