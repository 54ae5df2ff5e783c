#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "polca/domains.hpp"
#include "polca/errors.hpp"
#include "polca/model.hpp"
#include "polca/model_io.hpp"

using namespace polca;

namespace {

DecisionModel two_state_chain()
{
    DecisionModel m;
    m.space = FeatureSpace({{"s", 2, {"a", "b"}}});
    m.actions = {"go"};
    m.transitions.emplace_back(std::vector<std::vector<Transition>>{{{1, 1.0}}, {{1, 1.0}}});
    m.rewards = {{1.0, 0.0}};
    return m;
}

} // namespace

TEST(FeatureSpace, FirstFeatureIsMostSignificant)
{
    FeatureSpace space({{"x", 3, {}}, {"y", 4, {}}});
    EXPECT_EQ(space.num_states(), 12u);
    const std::vector<std::size_t> a{2, 1};
    EXPECT_EQ(space.encode(a), 2u * 4u + 1u);
    EXPECT_EQ(space.decode(9), (std::vector<std::size_t>{2, 1}));
    EXPECT_EQ(space.value_of(9, 0), 2u);
}

TEST(FeatureSpace, EncodeDecodeRoundTripsEveryState)
{
    FeatureSpace space({{"a", 2, {}}, {"b", 3, {}}, {"c", 5, {}}});
    for (StateId s = 0; s < space.num_states(); ++s)
        EXPECT_EQ(space.encode(space.decode(s)), s);
}

TEST(FeatureSpace, ReportsStructuralProblems)
{
    EXPECT_FALSE(FeatureSpace({{"a", 0, {}}}).problems().empty());
    EXPECT_FALSE(FeatureSpace({{"a", 2, {}}, {"a", 2, {}}}).problems().empty());
    EXPECT_FALSE(FeatureSpace({{"a", 2, {"only-one"}}}).problems().empty());
    EXPECT_TRUE(FeatureSpace({{"a", 2, {"p", "q"}}}).problems().empty());
}

TEST(FeatureSpace, ResolvesLabels)
{
    FeatureSpace space({{"door", 2, {"open", "shut"}}, {"n", 3, {}}});
    EXPECT_EQ(space.find_value(0, "shut"), 1u);
    EXPECT_EQ(space.find_value(1, "2"), 2u);
    EXPECT_FALSE(space.find_value(0, "ajar").has_value());
    EXPECT_EQ(space.value_label(0, 0), "open");
}

TEST(SparseMatrix, MergesDuplicateDestinationsAndSorts)
{
    SparseMatrix m({{{2, 0.25}, {0, 0.5}, {2, 0.25}}});
    ASSERT_EQ(m.row(0).size(), 2u);
    EXPECT_EQ(m.row(0)[0].to, 0u);
    EXPECT_DOUBLE_EQ(m.row(0)[1].prob, 0.5);
    EXPECT_DOUBLE_EQ(m.at(0, 1), 0.0);
    EXPECT_EQ(m.nonzeros(), 2u);
}

TEST(ValidateModel, AcceptsWellFormedModel)
{
    EXPECT_TRUE(validate_model(two_state_chain()).empty());
}

TEST(ValidateModel, FlagsTransitionRowNotSummingToOne)
{
    auto m = two_state_chain();
    m.transitions[0] = SparseMatrix({{{1, 0.7}}, {{1, 1.0}}});
    const auto v = validate_model(m);
    ASSERT_FALSE(v.empty());
    EXPECT_EQ(v.front().kind, ModelViolation::Kind::TransitionSum);
    EXPECT_EQ(v.front().state, 0u);
    EXPECT_EQ(v.front().action, 0u);
}

TEST(ValidateModel, FlagsNegativeProbabilityAndBadDiscount)
{
    auto m = two_state_chain();
    m.transitions[0] = SparseMatrix({{{0, -0.5}, {1, 1.5}}, {{1, 1.0}}});
    m.discount = 1.5;
    bool negative = false, discount = false;
    for (const auto& v : validate_model(m)) {
        negative |= v.kind == ModelViolation::Kind::NegativeTransition;
        discount |= v.kind == ModelViolation::Kind::Discount;
    }
    EXPECT_TRUE(negative);
    EXPECT_TRUE(discount);
}

TEST(ValidateModel, FlagsObservationRowsAndNonFiniteRewards)
{
    auto m = oracle::tiger();
    m.observation_probs[0][0] = 0.5;
    m.rewards[1][0] = std::numeric_limits<double>::infinity();
    bool obs = false, reward = false;
    for (const auto& v : validate_model(m)) {
        obs |= v.kind == ModelViolation::Kind::ObservationSum;
        reward |= v.kind == ModelViolation::Kind::NonFiniteReward;
    }
    EXPECT_TRUE(obs);
    EXPECT_TRUE(reward);
}

TEST(NextStateDistribution, RejectsOutOfRangeIndices)
{
    const auto m = two_state_chain();
    EXPECT_EQ(next_state_distribution(m, 0, 0).size(), 1u);
    EXPECT_THROW(next_state_distribution(m, 2, 0), InvalidInput);
    EXPECT_THROW(next_state_distribution(m, 0, 1), InvalidInput);
}

TEST(RestrictActions, KeepsListedActionsWithOptionalRewards)
{
    const auto m = oracle::tiger();
    const std::vector<ActionId> keep{2, 0};
    RewardTable local = m.rewards;
    local[2][0] = 7.0;
    const auto r = restrict_actions(m, keep, &local);
    EXPECT_EQ(r.actions, (std::vector<std::string>{"open-right", "listen"}));
    EXPECT_DOUBLE_EQ(r.rewards[0][0], 7.0);
    EXPECT_EQ(r.transitions[1], m.transitions[0]);
    EXPECT_DOUBLE_EQ(r.observation(1, 0, 0), 0.85);
}

TEST(Belief, EnforcesSimplex)
{
    EXPECT_THROW(Belief({0.5, 0.6}), InvalidInput);
    EXPECT_THROW(Belief({-0.1, 1.1}), InvalidInput);
    EXPECT_NO_THROW(Belief({0.25, 0.75}));
    EXPECT_EQ(Belief::point(3, 2).most_likely(), 2u);
    EXPECT_DOUBLE_EQ(Belief::uniform(4)[3], 0.25);
}

TEST(BeliefUpdate, TigerListenMatchesHandComputation)
{
    const auto m = oracle::tiger();
    const auto b = belief_update(m, Belief::uniform(2), 0, 0);
    EXPECT_NEAR(b[0], 0.85, 1e-12);
    const auto b2 = belief_update(m, b, 0, 0);
    EXPECT_NEAR(b2[0], 0.85 * 0.85 / (0.85 * 0.85 + 0.15 * 0.15), 1e-12);
}

TEST(BeliefUpdate, MatchesBruteForceBayesOnRandomPomdps)
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = oracle::planted_pomdp(rng, 8, 3, 3, 4).model;
        std::vector<double> b(8, 1.0 / 8.0);
        Belief belief(b);
        for (int step = 0; step < 6; ++step) {
            const std::size_t a = rng() % 3, o = rng() % 3;
            const auto expect = oracle::bayes(m, b, a, o);
            belief = belief_update(m, belief, a, o);
            for (std::size_t s = 0; s < 8; ++s)
                ASSERT_NEAR(belief[s], expect[s], 1e-12);
            b = expect;
        }
    }
}

TEST(BeliefUpdate, ImpossibleObservationThrows)
{
    auto m = oracle::tiger();
    m.observation_probs[0] = {1.0, 0.0, 1.0, 0.0};
    EXPECT_THROW(belief_update(m, Belief::uniform(2), 0, 1), ImpossibleObservation);
}

TEST(ModelJson, ParsesFeatureAssignmentsAndNames)
{
    const auto doc = nlohmann::json::parse(R"({
      "features": [{"name": "door", "cardinality": 2, "values": ["open", "shut"]}],
      "actions": ["toggle"],
      "transitions": [[{"door": "open"}, "toggle", {"door": "shut"}, 1.0],
                      [1, 0, 0, 1.0]],
      "rewards": [[{"door": "shut"}, "toggle", 2.5]],
      "observations": ["click"],
      "obs_model": [["toggle", 0, "click", 1.0], [0, 1, 0, 1.0]]
    })");
    const auto m = model_from_json(doc);
    EXPECT_EQ(m.num_states(), 2u);
    EXPECT_DOUBLE_EQ(m.discount, 0.95);
    EXPECT_DOUBLE_EQ(m.transitions[0].at(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(m.reward(1, 0), 2.5);
    EXPECT_TRUE(validate_model(m).empty());
}

TEST(ModelJson, DenseTransitionMatrices)
{
    const auto doc = nlohmann::json::parse(R"({
      "features": [{"name": "s", "cardinality": 2}],
      "actions": ["a"],
      "discount": 0.9,
      "transitions": {"a": [[0.5, 0.5], [0, 1]]}
    })");
    const auto m = model_from_json(doc);
    EXPECT_DOUBLE_EQ(m.transitions[0].at(0, 1), 0.5);
    EXPECT_DOUBLE_EQ(m.discount, 0.9);
}

TEST(ModelJson, RejectsMalformedDocuments)
{
    EXPECT_THROW(model_from_json(nlohmann::json::parse(R"([1,2])")), InvalidInput);
    EXPECT_THROW(model_from_json(nlohmann::json::parse(R"({
      "features": [{"name": "s", "cardinality": 2}], "actions": ["a"],
      "transitions": [[0, "b", 1, 1.0]]})")),
                 InvalidInput);
    EXPECT_THROW(model_from_json(nlohmann::json::parse(R"({
      "features": [{"name": "s", "cardinality": 2}], "actions": ["a"],
      "transitions": [[0, 0, 1, 0.5], [0, 0, 1, 0.5]]})")),
                 InvalidInput);
    EXPECT_THROW(model_from_json(nlohmann::json::parse(R"({
      "features": [{"name": "s", "cardinality": 2}], "actions": ["a"],
      "transitions": [[0, 0, 5, 1.0]]})")),
                 InvalidInput);
}

class BuiltinRoundTrip : public ::testing::TestWithParam<std::string> {};

TEST_P(BuiltinRoundTrip, EmitParseEmitIsByteIdentical)
{
    const auto d = build_domain(GetParam());
    const auto first = model_to_json(d.model).dump(1);
    const auto parsed = model_from_json(nlohmann::json::parse(first));
    EXPECT_EQ(model_to_json(parsed).dump(1), first);
    EXPECT_EQ(parsed.space, d.model.space);
    EXPECT_EQ(parsed.transitions, d.model.transitions);
    EXPECT_EQ(parsed.rewards, d.model.rewards);
    EXPECT_EQ(parsed.observation_probs, d.model.observation_probs);
}

INSTANTIATE_TEST_SUITE_P(Domains, BuiltinRoundTrip,
                         ::testing::Values("taxi", "taxi2", "nursebot", "nursebot-small", "micro"),
                         [](const auto& info) {
                             std::string s = info.param;
                             for (auto& c : s)
                                 if (c == '-')
                                     c = '_';
                             return s;
                         });
