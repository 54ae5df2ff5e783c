#include "polca/abstraction.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "polca/errors.hpp"

namespace polca {

ClusterMap::ClusterMap(std::vector<ClusterId> assignment) : z_(std::move(assignment))
{
    ClusterId max_id = 0;
    for (auto c : z_)
        max_id = std::max(max_id, c);
    members_.assign(z_.empty() ? 0 : max_id + 1, {});
    for (StateId s = 0; s < z_.size(); ++s)
        members_[z_[s]].push_back(s);
    for (ClusterId c = 0; c < members_.size(); ++c)
        if (members_[c].empty())
            throw InvalidInput("cluster ids must be dense; cluster " + std::to_string(c) + " is empty");
}

ClusterMap ClusterMap::singletons(std::size_t n)
{
    std::vector<ClusterId> z(n);
    for (std::size_t i = 0; i < n; ++i)
        z[i] = i;
    return ClusterMap(std::move(z));
}

ClusterMap ClusterMap::single(std::size_t n)
{
    return ClusterMap(std::vector<ClusterId>(n, 0));
}

ClusterMap ClusterMap::canonical() const
{
    std::vector<ClusterId> relabel(members_.size(), 0);
    std::vector<ClusterId> order(members_.size());
    for (ClusterId c = 0; c < order.size(); ++c)
        order[c] = c;
    std::sort(order.begin(), order.end(),
              [&](ClusterId a, ClusterId b) { return members_[a].front() < members_[b].front(); });
    for (ClusterId i = 0; i < order.size(); ++i)
        relabel[order[i]] = i;
    std::vector<ClusterId> z(z_.size());
    for (StateId s = 0; s < z_.size(); ++s)
        z[s] = relabel[z_[s]];
    return ClusterMap(std::move(z));
}

bool ClusterMap::same_partition(const ClusterMap& other) const
{
    return num_states() == other.num_states() && num_clusters() == other.num_clusters() && refines(other);
}

bool ClusterMap::refines(const ClusterMap& coarser) const
{
    if (num_states() != coarser.num_states())
        return false;
    for (const auto& m : members_)
        for (StateId s : m)
            if (coarser.cluster_of(s) != coarser.cluster_of(m.front()))
                return false;
    return true;
}

std::vector<double> ClusterMap::project(std::span<const double> state_distribution) const
{
    std::vector<double> out(num_clusters(), 0.0);
    for (StateId s = 0; s < state_distribution.size(); ++s)
        out[z_[s]] += state_distribution[s];
    return out;
}

namespace {

struct SigEntry {
    ActionId action;
    ClusterId target;
    ObsId observation;
    double value;
};

struct QuantEntry {
    ActionId action;
    ClusterId target;
    ObsId observation;
    long long q;

    auto key() const { return std::tie(action, target, observation); }
    bool operator==(const QuantEntry&) const = default;
    auto operator<=>(const QuantEntry&) const = default;
};

using Signature = std::vector<QuantEntry>;

long long quantize(double v)
{
    return std::llround(v / kStabilityEpsilon);
}

bool is_terminal(const TerminalMask& terminal, StateId s)
{
    return !terminal.empty() && terminal[s] != 0;
}

void require_observations(const DecisionModel& model, StabilityMode mode)
{
    if (mode == StabilityMode::Pomdp && model.kind() != ModelKind::Pomdp)
        throw InvalidInput("observation-aware stability requested on a model without observations");
}

// Block sums of state s into every cluster, per action (and per observation in
// POMDP mode), merged and quantized. Zero entries are dropped.
Signature signature(const DecisionModel& model, const ClusterMap& clusters, StateId s, StabilityMode mode,
                    std::vector<SigEntry>& scratch)
{
    scratch.clear();
    const auto n_obs = model.num_observations();
    for (ActionId a = 0; a < model.num_actions(); ++a) {
        for (const auto& e : model.transitions[a].row(s)) {
            const auto target = clusters.cluster_of(e.to);
            if (mode == StabilityMode::Mdp) {
                scratch.push_back({a, target, 0, e.prob});
            } else {
                auto orow = model.observation_row(a, s, e.to);
                for (ObsId o = 0; o < n_obs; ++o)
                    if (orow[o] != 0.0)
                        scratch.push_back({a, target, o, e.prob * orow[o]});
            }
        }
    }
    std::sort(scratch.begin(), scratch.end(), [](const SigEntry& x, const SigEntry& y) {
        return std::tie(x.action, x.target, x.observation) < std::tie(y.action, y.target, y.observation);
    });
    Signature sig;
    for (std::size_t i = 0; i < scratch.size();) {
        double sum = 0.0;
        std::size_t j = i;
        for (; j < scratch.size() && scratch[j].action == scratch[i].action && scratch[j].target == scratch[i].target &&
               scratch[j].observation == scratch[i].observation;
             ++j)
            sum += scratch[j].value;
        if (auto q = quantize(sum); q != 0)
            sig.push_back({scratch[i].action, scratch[i].target, scratch[i].observation, q});
        i = j;
    }
    return sig;
}

// First key at which two signatures disagree.
QuantEntry first_difference(const Signature& a, const Signature& b)
{
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].key() < b[j].key()))
            return a[i];
        if (i == a.size() || b[j].key() < a[i].key())
            return b[j];
        if (a[i].q != b[j].q)
            return a[i];
        ++i;
        ++j;
    }
    return {};
}

// Splits one cluster's members into signature groups; first group holds the
// smallest member.
std::vector<std::vector<StateId>> group_members(const DecisionModel& model, const ClusterMap& clusters,
                                                ClusterId cluster, StabilityMode mode, const TerminalMask& terminal,
                                                std::vector<SigEntry>& scratch)
{
    auto members = clusters.members(cluster);
    if (members.size() < 2 || is_terminal(terminal, members.front()))
        return {std::vector<StateId>(members.begin(), members.end())};
    std::map<Signature, std::size_t> index;
    std::vector<std::vector<StateId>> groups;
    for (StateId s : members) {
        auto [it, inserted] = index.emplace(signature(model, clusters, s, mode, scratch), groups.size());
        if (inserted)
            groups.emplace_back();
        groups[it->second].push_back(s);
    }
    return groups;
}

} // namespace

ClusterMap init_clusters(const DecisionModel& model, const TerminalMask& terminal,
                         std::span<const std::size_t> feature_hint)
{
    const auto n = model.num_states();
    if (!terminal.empty() && terminal.size() != n)
        throw InvalidInput("terminal mask has the wrong length");
    std::map<std::vector<long long>, ClusterId> index;
    std::vector<ClusterId> z(n);
    std::vector<long long> key;
    for (StateId s = 0; s < n; ++s) {
        key.clear();
        key.push_back(is_terminal(terminal, s) ? 1 : 0);
        for (ActionId a = 0; a < model.num_actions(); ++a)
            key.push_back(quantize(model.rewards[a][s]));
        for (auto f : feature_hint)
            key.push_back(static_cast<long long>(model.space.value_of(s, f)));
        auto [it, inserted] = index.emplace(key, index.size());
        z[s] = it->second;
    }
    return ClusterMap(std::move(z)).canonical();
}

StabilityResult is_stable(const DecisionModel& model, const ClusterMap& clusters, ClusterId cluster,
                          StabilityMode mode, const TerminalMask& terminal)
{
    require_observations(model, mode);
    if (cluster >= clusters.num_clusters())
        throw InvalidInput("cluster id out of range");
    auto members = clusters.members(cluster);
    if (members.size() < 2 || is_terminal(terminal, members.front()))
        return {};
    std::vector<SigEntry> scratch;
    const auto reference = signature(model, clusters, members.front(), mode, scratch);
    for (std::size_t i = 1; i < members.size(); ++i) {
        auto sig = signature(model, clusters, members[i], mode, scratch);
        if (sig != reference) {
            auto diff = first_difference(reference, sig);
            StabilityWitness w{members.front(), members[i], diff.target, diff.action, std::nullopt};
            if (mode == StabilityMode::Pomdp)
                w.observation = diff.observation;
            return {false, w};
        }
    }
    return {};
}

SplitResult split_cluster(const DecisionModel& model, const ClusterMap& clusters, ClusterId cluster,
                          StabilityMode mode, const TerminalMask& terminal)
{
    require_observations(model, mode);
    if (cluster >= clusters.num_clusters())
        throw InvalidInput("cluster id out of range");
    std::vector<SigEntry> scratch;
    auto groups = group_members(model, clusters, cluster, mode, terminal, scratch);
    if (groups.size() < 2)
        return {clusters, false};
    auto z = clusters.assignment();
    for (std::size_t g = 1; g < groups.size(); ++g) {
        const ClusterId id = clusters.num_clusters() + g - 1;
        for (StateId s : groups[g])
            z[s] = id;
    }
    return {ClusterMap(std::move(z)), true};
}

ClusterMap minimize(const DecisionModel& model, StabilityMode mode, const TerminalMask& terminal,
                    const ClusterMap* initial, MinimizeStats* stats)
{
    require_observations(model, mode);
    ClusterMap current = initial ? *initial : init_clusters(model, terminal);
    if (current.num_states() != model.num_states())
        throw InvalidInput("initial partition does not cover the model's states");
    MinimizeStats local;
    local.initial_clusters = current.num_clusters();
    std::vector<SigEntry> scratch;
    for (;;) {
        ++local.rounds;
        auto z = current.assignment();
        ClusterId next_id = current.num_clusters();
        for (ClusterId c = 0; c < current.num_clusters(); ++c) {
            auto groups = group_members(model, current, c, mode, terminal, scratch);
            for (std::size_t g = 1; g < groups.size(); ++g) {
                for (StateId s : groups[g])
                    z[s] = next_id;
                ++next_id;
                ++local.splits;
            }
        }
        if (next_id == current.num_clusters())
            break;
        current = ClusterMap(std::move(z));
    }
    if (stats)
        *stats = local;
    return current.canonical();
}

std::size_t ClusteredModel::parameter_count() const
{
    std::size_t n = q_value_count();
    for (const auto& t : transitions)
        n += t.nonzeros();
    return n;
}

ClusteredModel project_model(const DecisionModel& model, const ClusterMap& clusters, StabilityMode mode,
                             const TerminalMask& terminal)
{
    require_observations(model, mode);
    if (clusters.num_states() != model.num_states())
        throw InvalidInput("partition does not cover the model's states");
    const auto n_clusters = clusters.num_clusters();
    const auto n_obs = model.num_observations();

    ClusteredModel out;
    out.clusters = clusters;
    out.actions = model.actions;
    out.discount = model.discount;
    out.terminal.assign(n_clusters, 0);
    if (mode == StabilityMode::Pomdp) {
        out.observations = model.observations;
        out.joint.assign(model.num_actions(), std::vector<std::vector<ObsTransition>>(n_clusters));
    }

    for (ClusterId c = 0; c < n_clusters; ++c) {
        auto members = clusters.members(c);
        const bool term = is_terminal(terminal, members.front());
        for (StateId s : members)
            if (is_terminal(terminal, s) != term)
                throw UnstablePartition("cluster " + std::to_string(c) + " mixes terminal and nonterminal states");
        out.terminal[c] = term ? 1 : 0;
    }

    std::vector<double> block(n_clusters);
    std::vector<double> joint_block(mode == StabilityMode::Pomdp ? n_clusters * n_obs : 0);
    std::vector<double> member_block(n_clusters);
    std::vector<double> member_joint(joint_block.size());

    auto fill = [&](ActionId a, StateId s, std::vector<double>& b, std::vector<double>& j) {
        std::fill(b.begin(), b.end(), 0.0);
        std::fill(j.begin(), j.end(), 0.0);
        for (const auto& e : model.transitions[a].row(s)) {
            const auto target = clusters.cluster_of(e.to);
            b[target] += e.prob;
            if (mode == StabilityMode::Pomdp) {
                auto orow = model.observation_row(a, s, e.to);
                for (ObsId o = 0; o < n_obs; ++o)
                    j[target * n_obs + o] += e.prob * orow[o];
            }
        }
    };

    for (ActionId a = 0; a < model.num_actions(); ++a) {
        std::vector<std::vector<Transition>> rows(n_clusters);
        std::vector<double> rewards(n_clusters);
        for (ClusterId c = 0; c < n_clusters; ++c) {
            auto members = clusters.members(c);
            const StateId rep = members.front();
            rewards[c] = model.rewards[a][rep];
            for (StateId s : members)
                if (std::abs(model.rewards[a][s] - rewards[c]) > kStabilityEpsilon)
                    throw UnstablePartition("reward of action '" + model.actions[a] + "' differs within cluster " +
                                            std::to_string(c) + " (states " + std::to_string(rep) + ", " +
                                            std::to_string(s) + ")");
            if (out.terminal[c]) {
                rows[c].push_back({c, 1.0});
                continue;
            }
            fill(a, rep, block, joint_block);
            for (std::size_t i = 1; i < members.size(); ++i) {
                fill(a, members[i], member_block, member_joint);
                for (ClusterId t = 0; t < n_clusters; ++t)
                    if (std::abs(member_block[t] - block[t]) > kStabilityEpsilon)
                        throw UnstablePartition("block sum into cluster " + std::to_string(t) + " under '" +
                                                model.actions[a] + "' differs within cluster " + std::to_string(c));
                for (std::size_t k = 0; k < member_joint.size(); ++k)
                    if (std::abs(member_joint[k] - joint_block[k]) > kStabilityEpsilon)
                        throw UnstablePartition("observation-weighted block sum under '" + model.actions[a] +
                                                "' differs within cluster " + std::to_string(c));
            }
            for (ClusterId t = 0; t < n_clusters; ++t)
                if (block[t] != 0.0)
                    rows[c].push_back({t, block[t]});
            if (mode == StabilityMode::Pomdp) {
                auto& jrow = out.joint[a][c];
                for (ClusterId t = 0; t < n_clusters; ++t)
                    for (ObsId o = 0; o < n_obs; ++o)
                        if (double p = joint_block[t * n_obs + o]; p != 0.0)
                            jrow.push_back({t, o, p});
            }
        }
        out.transitions.emplace_back(std::move(rows));
        out.rewards.push_back(std::move(rewards));
    }
    return out;
}

std::vector<double> clustered_belief_update(const ClusteredModel& model, std::span<const double> b, ActionId a,
                                            ObsId o)
{
    if (!model.has_observations())
        throw InvalidInput("clustered belief update requires an observation-aware projection");
    std::vector<double> next(model.num_clusters(), 0.0);
    double norm = 0.0;
    for (ClusterId c = 0; c < b.size(); ++c) {
        if (b[c] == 0.0)
            continue;
        for (const auto& e : model.joint[a][c])
            if (e.observation == o) {
                next[e.to] += b[c] * e.prob;
                norm += b[c] * e.prob;
            }
    }
    if (!(norm > 0.0))
        throw ImpossibleObservation("observation has zero probability under the clustered belief");
    for (double& v : next)
        v /= norm;
    return next;
}

nlohmann::json cluster_report(const ClusterMap& clusters, const ClusteredModel* projected)
{
    nlohmann::json doc;
    nlohmann::json list = nlohmann::json::array();
    for (ClusterId c = 0; c < clusters.num_clusters(); ++c) {
        auto m = clusters.members(c);
        list.push_back(std::vector<StateId>(m.begin(), m.end()));
    }
    doc["clusters"] = std::move(list);
    nlohmann::json summary{{"n_states", clusters.num_states()}, {"n_clusters", clusters.num_clusters()}};
    if (projected)
        summary["n_params"] = projected->parameter_count();
    doc["summary"] = std::move(summary);
    return doc;
}

} // namespace polca
