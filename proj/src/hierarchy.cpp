#include "polca/hierarchy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "polca/errors.hpp"

namespace polca {

namespace {

std::size_t resolve_value(const FeatureSpace& space, std::size_t feature, const ValueRef& ref)
{
    const auto& f = space.feature(feature);
    if (const auto* idx = std::get_if<std::size_t>(&ref)) {
        if (*idx >= f.cardinality)
            throw InvalidInput("value " + std::to_string(*idx) + " out of range for feature '" + f.name + "'");
        return *idx;
    }
    const auto& label = std::get<std::string>(ref);
    auto v = space.find_value(feature, label);
    if (!v || *v >= f.cardinality)
        throw InvalidInput("unknown value '" + label + "' for feature '" + f.name + "'");
    return *v;
}

void fill_mask(const Condition& condition, const FeatureSpace& space, std::vector<char>& mask)
{
    std::vector<std::pair<std::size_t, std::vector<char>>> allowed;
    for (const auto& clause : condition.clauses) {
        auto f = space.feature_index(clause.feature);
        std::vector<char> ok(space.feature(f).cardinality, 0);
        for (const auto& v : clause.values)
            ok[resolve_value(space, f, v)] = 1;
        allowed.emplace_back(f, std::move(ok));
    }
    for (StateId s = 0; s < mask.size(); ++s) {
        bool holds = true;
        for (const auto& [f, ok] : allowed)
            if (!ok[space.value_of(s, f)]) {
                holds = false;
                break;
            }
        mask[s] = holds ? 1 : 0;
    }
    if (condition.any_of.empty())
        return;
    std::vector<char> any(mask.size(), 0), alt(mask.size());
    for (const auto& alternative : condition.any_of) {
        fill_mask(alternative, space, alt);
        for (std::size_t s = 0; s < any.size(); ++s)
            any[s] = static_cast<char>(any[s] | alt[s]);
    }
    for (std::size_t s = 0; s < mask.size(); ++s)
        mask[s] = static_cast<char>(mask[s] & any[s]);
}

std::optional<ActionId> action_index(const DecisionModel& model, std::string_view name)
{
    return model.find_action(name);
}

bool uniform_over(const RewardTable& table, std::span<const ActionId> actions)
{
    for (ActionId a : actions) {
        const auto& row = table[a];
        for (double r : row)
            if (std::abs(r - row.front()) > kStabilityEpsilon)
                return false;
    }
    return true;
}

} // namespace

std::vector<char> condition_mask(const Condition& condition, const FeatureSpace& space)
{
    std::vector<char> mask(space.num_states(), 1);
    fill_mask(condition, space, mask);
    return mask;
}

const TaskNode* TaskGraph::find(std::string_view id) const
{
    for (const auto& n : nodes)
        if (n.id == id)
            return &n;
    return nullptr;
}

const TaskNode& TaskGraph::node(std::string_view id) const
{
    if (const auto* n = find(id))
        return *n;
    throw InvalidInput("unknown subtask '" + std::string(id) + "'");
}

std::vector<GraphViolation> validate_task_graph(const TaskGraph& graph, const DecisionModel& model)
{
    using Kind = GraphViolation::Kind;
    std::vector<GraphViolation> out;
    std::set<std::string> ids;
    for (const auto& n : graph.nodes)
        if (!ids.insert(n.id).second)
            out.push_back({Kind::DuplicateNode, n.id, "subtask id '" + n.id + "' is declared twice"});
    if (!graph.find(graph.root))
        out.push_back({Kind::UnknownRoot, graph.root, "root '" + graph.root + "' is not a declared subtask"});

    for (const auto& n : graph.nodes) {
        if (n.children.empty())
            out.push_back({Kind::NoChildren, n.id, "subtask '" + n.id + "' has no children"});
        for (const auto& c : n.children) {
            const bool is_node = ids.count(c) > 0;
            const bool is_action = action_index(model, c).has_value();
            if (is_node && is_action)
                out.push_back({Kind::AmbiguousChild, n.id, "child '" + c + "' names both a subtask and an action"});
            else if (!is_node && !is_action)
                out.push_back({Kind::UnknownChild, n.id, "child '" + c + "' of '" + n.id + "' is unknown"});
        }
        auto check = [&](const Condition& cond, const std::string& what) {
            try {
                condition_mask(cond, model.space);
            } catch (const InvalidInput& e) {
                out.push_back({Kind::BadCondition, n.id, what + " of '" + n.id + "': " + e.what()});
            }
        };
        for (const auto& p : n.pseudo_rewards) {
            check(p.condition, "pseudo-reward condition");
            if (p.action && !action_index(model, *p.action))
                out.push_back({Kind::BadCondition, n.id, "pseudo-reward names unknown action '" + *p.action + "'"});
            if (!std::isfinite(p.value))
                out.push_back({Kind::BadCondition, n.id, "pseudo-reward value is not finite"});
        }
        if (n.terminal)
            check(*n.terminal, "terminal condition");
        for (const auto& f : n.relevant_features)
            if (!model.space.find_feature(f))
                out.push_back({Kind::BadCondition, n.id, "relevant feature '" + f + "' is unknown"});
    }

    // Cycles among subtasks (white/grey/black DFS, deterministic order).
    std::map<std::string, int> colour;
    bool cyclic = false;
    std::function<void(const TaskNode&)> visit = [&](const TaskNode& n) {
        colour[n.id] = 1;
        for (const auto& c : n.children) {
            const auto* child = graph.find(c);
            if (!child)
                continue;
            if (colour[c] == 1) {
                if (!cyclic)
                    out.push_back({Kind::Cycle, n.id, "cycle through '" + n.id + "' and '" + c + "'"});
                cyclic = true;
            } else if (colour[c] == 0) {
                visit(*child);
            }
        }
        colour[n.id] = 2;
    };
    for (const auto& n : graph.nodes)
        if (colour[n.id] == 0)
            visit(n);

    if (const auto* root = graph.find(graph.root)) {
        std::set<std::string> reached_nodes;
        std::set<ActionId> reached_actions;
        std::vector<const TaskNode*> stack{root};
        while (!stack.empty()) {
            const auto* n = stack.back();
            stack.pop_back();
            if (!reached_nodes.insert(n->id).second)
                continue;
            for (const auto& c : n->children) {
                if (const auto* child = graph.find(c))
                    stack.push_back(child);
                else if (auto a = action_index(model, c))
                    reached_actions.insert(*a);
            }
        }
        for (ActionId a = 0; a < model.num_actions(); ++a)
            if (!reached_actions.count(a))
                out.push_back({Kind::UnreachablePrimitive, graph.root,
                               "primitive action '" + model.actions[a] + "' is not reachable from the root"});
        for (const auto& n : graph.nodes)
            if (!reached_nodes.count(n.id))
                out.push_back({Kind::UnreachableNode, n.id, "subtask '" + n.id + "' is not reachable from the root"});
    }

    if (out.empty()) {
        for (const auto& n : graph.nodes) {
            try {
                effective_local_reward(model, graph, n.id);
            } catch (const UnsolvableSubtask& e) {
                out.push_back({Kind::UniformReward, n.id, e.what()});
            }
        }
    }
    return out;
}

std::vector<std::string> bottom_up_order(const TaskGraph& graph)
{
    std::set<std::string> done;
    std::vector<std::string> order;
    while (order.size() < graph.nodes.size()) {
        std::optional<std::string> pick;
        for (const auto& n : graph.nodes) {
            if (done.count(n.id))
                continue;
            bool ready = std::all_of(n.children.begin(), n.children.end(),
                                     [&](const std::string& c) { return !graph.find(c) || done.count(c); });
            if (ready && (!pick || n.id < *pick))
                pick = n.id;
        }
        if (!pick)
            throw InvalidInput("task graph has a cycle");
        done.insert(*pick);
        order.push_back(*pick);
    }
    return order;
}

std::size_t graph_depth(const TaskGraph& graph)
{
    std::map<std::string, std::size_t> memo;
    std::function<std::size_t(const TaskNode&, std::size_t)> depth = [&](const TaskNode& n, std::size_t guard) {
        if (guard > graph.nodes.size())
            throw InvalidInput("task graph has a cycle");
        if (auto it = memo.find(n.id); it != memo.end())
            return it->second;
        std::size_t best = 1;
        for (const auto& c : n.children)
            if (const auto* child = graph.find(c))
                best = std::max(best, 1 + depth(*child, guard + 1));
            else
                best = std::max<std::size_t>(best, 2);
        memo[n.id] = best;
        return best;
    };
    return depth(graph.node(graph.root), 0);
}

std::vector<ActionId> primitive_descendants(const TaskGraph& graph, const DecisionModel& model, std::string_view id)
{
    std::set<ActionId> found;
    std::set<std::string> seen;
    std::vector<const TaskNode*> stack{&graph.node(id)};
    while (!stack.empty()) {
        const auto* n = stack.back();
        stack.pop_back();
        if (!seen.insert(n->id).second)
            continue;
        for (const auto& c : n->children) {
            if (const auto* child = graph.find(c))
                stack.push_back(child);
            else if (auto a = action_index(model, c))
                found.insert(*a);
        }
    }
    return {found.begin(), found.end()};
}

RewardTable effective_local_reward(const DecisionModel& model, const TaskGraph& graph, std::string_view id)
{
    const auto& node = graph.node(id);
    RewardTable table = model.rewards;
    for (const auto& p : node.pseudo_rewards) {
        auto mask = condition_mask(p.condition, model.space);
        std::vector<ActionId> targets;
        if (p.action) {
            auto a = action_index(model, *p.action);
            if (!a)
                throw InvalidInput("pseudo-reward names unknown action '" + *p.action + "'");
            targets.push_back(*a);
        } else {
            for (ActionId a = 0; a < model.num_actions(); ++a)
                targets.push_back(a);
        }
        for (ActionId a : targets)
            for (StateId s = 0; s < mask.size(); ++s)
                if (mask[s])
                    table[a][s] += p.value;
    }
    if (uniform_over(table, primitive_descendants(graph, model, id)))
        throw UnsolvableSubtask("local reward of '" + std::string(id) +
                                "' is uniform over its states; declare a pseudo-reward");
    return table;
}

TerminalMask terminal_mask(const TaskNode& node, const FeatureSpace& space)
{
    if (!node.terminal)
        return {};
    return condition_mask(*node.terminal, space);
}

ActionId SubtaskPolicy::choose(std::span<const double> cluster_belief) const
{
    if (cluster_belief.size() != clusters.num_clusters())
        throw InvalidInput("belief over clusters of '" + id + "' has the wrong length");
    switch (solver) {
    case SubtaskSolver::ExactPomdp:
        return alphas.action(cluster_belief);
    case SubtaskSolver::Qmdp:
        return qmdp_action(q, cluster_belief);
    case SubtaskSolver::ValueIteration:
        break;
    }
    return greedy[argmax_lowest(cluster_belief)];
}

const SubtaskPolicy* HierarchicalPolicy::find(std::string_view id) const
{
    for (const auto& s : subtasks)
        if (s.id == id)
            return &s;
    return nullptr;
}

const SubtaskPolicy& HierarchicalPolicy::subtask(std::string_view id) const
{
    if (const auto* s = find(id))
        return *s;
    throw InvalidInput("policy has no subtask '" + std::string(id) + "'");
}

std::size_t HierarchicalPolicy::q_value_count() const
{
    std::size_t n = 0;
    for (const auto& s : subtasks)
        n += s.q_value_count();
    return n;
}

std::size_t HierarchicalPolicy::parameter_count() const
{
    std::size_t n = 0;
    for (const auto& s : subtasks)
        n += s.parameter_count;
    return n;
}

SubtaskProblem parameterize_subtask(const DecisionModel& model, const TaskGraph& graph, std::string_view id,
                                    const HierarchicalPolicy& solved)
{
    const auto& node = graph.node(id);
    const auto n = model.num_states();
    const auto local = effective_local_reward(model, graph, id);

    SubtaskProblem out;
    out.id = node.id;
    out.children = node.children;
    out.terminal = terminal_mask(node, model.space);

    for (const auto& c : node.children) {
        if (!graph.find(c)) {
            auto a = action_index(model, c);
            if (!a)
                throw InvalidInput("child '" + c + "' of '" + node.id + "' is unknown");
            out.primitive.emplace_back(*a);
            out.executed.emplace_back(n, *a);
            continue;
        }
        const auto* child = solved.find(c);
        if (!child)
            throw OrderingViolation("subtask '" + node.id + "' was parameterized before its child '" + c +
                                    "' was solved");
        if (child->resolved_primitive.size() != n)
            throw InvalidInput("solved child '" + c + "' covers a different state space");
        out.primitive.emplace_back(std::nullopt);
        out.executed.push_back(child->resolved_primitive);
    }

    auto& m = out.model;
    m.space = model.space;
    m.actions = node.children;
    m.discount = model.discount;
    const bool pomdp = model.kind() == ModelKind::Pomdp;
    if (pomdp) {
        m.observations = model.observations;
        m.observation_probs = model.observation_probs;
    }
    for (std::size_t k = 0; k < node.children.size(); ++k) {
        const auto& exec = out.executed[k];
        std::vector<double> rewards(n);
        for (StateId s = 0; s < n; ++s)
            rewards[s] = local[exec[s]][s];
        m.rewards.push_back(std::move(rewards));
        if (out.primitive[k]) {
            m.transitions.push_back(model.transitions[*out.primitive[k]]);
        } else {
            std::vector<std::vector<Transition>> rows(n);
            for (StateId s = 0; s < n; ++s) {
                auto r = model.transitions[exec[s]].row(s);
                rows[s].assign(r.begin(), r.end());
            }
            m.transitions.emplace_back(std::move(rows));
        }
        if (pomdp) {
            std::vector<std::size_t> source(n);
            for (StateId s = 0; s < n; ++s)
                source[s] = model.observation_table(exec[s], s);
            m.observation_source.push_back(std::move(source));
        }
    }
    return out;
}

namespace {

SubtaskPolicy plan_subtask(const DecisionModel& model, const TaskGraph& graph, const std::string& id,
                           const HierarchicalPolicy& solved, const PlanOptions& options)
{
    auto problem = parameterize_subtask(model, graph, id, solved);
    const auto& node = graph.node(id);
    const auto stability = options.mode == PlanMode::Pomdp ? StabilityMode::Pomdp : StabilityMode::Mdp;

    std::vector<std::size_t> hints;
    if (options.use_feature_hints)
        for (const auto& f : node.relevant_features)
            hints.push_back(model.space.feature_index(f));

    SubtaskPolicy out;
    out.id = id;
    out.children = problem.children;
    out.primitive = problem.primitive;
    out.terminal = problem.terminal;
    auto initial = init_clusters(problem.model, problem.terminal, hints);
    out.clusters = minimize(problem.model, stability, problem.terminal, &initial, &out.minimize_stats);
    auto cm = project_model(problem.model, out.clusters, stability, problem.terminal);
    out.parameter_count = cm.parameter_count();

    const bool is_root = id == graph.root;
    if (is_root && options.top_solver == TopSolver::Qmdp)
        out.solver = SubtaskSolver::Qmdp;
    else if (options.mode == PlanMode::Mdp)
        out.solver = SubtaskSolver::ValueIteration;
    else
        out.solver = SubtaskSolver::ExactPomdp;

    const auto n_clusters = cm.num_clusters();
    if (out.solver == SubtaskSolver::ExactPomdp) {
        auto solution = solve_pomdp_exact(cm, options.pomdp);
        out.alphas = std::move(solution.alphas);
        out.iterations = solution.iterations;
        out.residual = solution.residual;
        out.converged = solution.converged;
        out.greedy.resize(n_clusters);
        std::vector<double> vertex(n_clusters, 0.0);
        for (ClusterId c = 0; c < n_clusters; ++c) {
            vertex[c] = 1.0;
            out.greedy[c] = out.alphas.action(vertex);
            vertex[c] = 0.0;
        }
    } else {
        auto vf = value_iterate(cm, options.value_iteration);
        out.q = q_values(cm, vf.values);
        out.values = std::move(vf.values);
        out.iterations = vf.iterations;
        out.residual = vf.residual;
        out.converged = vf.converged;
        out.greedy.resize(n_clusters);
        for (ClusterId c = 0; c < n_clusters; ++c)
            out.greedy[c] = argmax_lowest(out.q[c]);
    }

    out.resolved_primitive.resize(model.num_states());
    for (StateId s = 0; s < model.num_states(); ++s)
        out.resolved_primitive[s] = problem.executed[out.choose(s)][s];
    out.model = std::move(cm);
    return out;
}

std::string join_violations(const std::vector<GraphViolation>& v)
{
    std::string msg;
    for (const auto& x : v)
        msg += (msg.empty() ? "" : "; ") + x.message;
    return msg;
}

} // namespace

HierarchicalPolicy polca_plan(const DecisionModel& model, const TaskGraph& graph, const PlanOptions& options)
{
    if (auto violations = validate_model(model); !violations.empty())
        throw InvalidInput("invalid model: " + violations.front().message);
    if (options.mode == PlanMode::Pomdp && model.kind() != ModelKind::Pomdp)
        throw InvalidInput("observation-aware planning needs a model with observations");
    if (auto violations = validate_task_graph(graph, model); !violations.empty())
        throw InvalidInput("invalid task graph: " + join_violations(violations));

    HierarchicalPolicy policy;
    policy.root = graph.root;
    policy.mode = options.mode;
    policy.primitive_actions = model.actions;
    policy.root_terminal = terminal_mask(graph.node(graph.root), model.space);
    for (const auto& id : bottom_up_order(graph)) {
        const auto start = std::chrono::steady_clock::now();
        try {
            policy.subtasks.push_back(plan_subtask(model, graph, id, policy, options));
        } catch (const SubtaskFailure&) {
            throw;
        } catch (const std::exception& e) {
            throw SubtaskFailure(id, e.what());
        }
        if (options.on_subtask_solved)
            options.on_subtask_solved(policy.subtasks.back(),
                                      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }
    return policy;
}

TaskGraph flat_graph(const DecisionModel& model, std::string root)
{
    TaskGraph g;
    g.root = root;
    TaskNode node;
    node.id = std::move(root);
    node.children = model.actions;
    g.nodes.push_back(std::move(node));
    return g;
}

} // namespace polca
