#include "polca/hierarchy_io.hpp"

#include <set>

#include "polca/errors.hpp"
#include "polca/model_io.hpp"

namespace polca {

using nlohmann::json;

namespace {

ValueRef value_from_json(const json& j)
{
    if (j.is_number_integer() && j.get<long long>() >= 0)
        return j.get<std::size_t>();
    if (j.is_string())
        return j.get<std::string>();
    throw InvalidInput("condition values must be labels or nonnegative indices");
}

json value_to_json(const ValueRef& v)
{
    if (const auto* i = std::get_if<std::size_t>(&v))
        return *i;
    return std::get<std::string>(v);
}

const char* solver_name(SubtaskSolver s)
{
    switch (s) {
    case SubtaskSolver::ExactPomdp:
        return "exact_pomdp";
    case SubtaskSolver::Qmdp:
        return "qmdp";
    case SubtaskSolver::ValueIteration:
        break;
    }
    return "value_iteration";
}

SubtaskSolver solver_from_name(const std::string& s)
{
    if (s == "value_iteration")
        return SubtaskSolver::ValueIteration;
    if (s == "exact_pomdp")
        return SubtaskSolver::ExactPomdp;
    if (s == "qmdp")
        return SubtaskSolver::Qmdp;
    throw InvalidInput("unknown solver '" + s + "'");
}

json mask_to_json(const std::vector<char>& mask)
{
    json out = json::array();
    for (std::size_t s = 0; s < mask.size(); ++s)
        if (mask[s])
            out.push_back(s);
    return out;
}

std::vector<char> mask_from_json(const json& j, std::size_t n)
{
    if (j.is_null())
        return {};
    std::vector<char> mask(n, 0);
    for (const auto& s : j) {
        auto i = s.get<std::size_t>();
        if (i >= n)
            throw InvalidInput("terminal state index out of range");
        mask[i] = 1;
    }
    return mask;
}

template <typename F>
auto wrap_json_errors(const char* what, F&& f)
{
    try {
        return f();
    } catch (const json::exception& e) {
        throw InvalidInput(std::string(what) + ": " + e.what());
    }
}

} // namespace

Condition condition_from_json(const json& doc)
{
    if (!doc.is_object())
        throw InvalidInput("a condition must be a JSON object");
    Condition c;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (it.key() == "any_of") {
            if (!it.value().is_array())
                throw InvalidInput("any_of must be a list of conditions");
            for (const auto& alt : it.value())
                c.any_of.push_back(condition_from_json(alt));
            continue;
        }
        Condition::Clause clause{it.key(), {}};
        if (it.value().is_array()) {
            for (const auto& v : it.value())
                clause.values.push_back(value_from_json(v));
        } else {
            clause.values.push_back(value_from_json(it.value()));
        }
        c.clauses.push_back(std::move(clause));
    }
    return c;
}

json condition_to_json(const Condition& condition)
{
    json out = json::object();
    for (const auto& clause : condition.clauses) {
        if (clause.values.size() == 1) {
            out[clause.feature] = value_to_json(clause.values.front());
        } else {
            json list = json::array();
            for (const auto& v : clause.values)
                list.push_back(value_to_json(v));
            out[clause.feature] = std::move(list);
        }
    }
    if (!condition.any_of.empty()) {
        json list = json::array();
        for (const auto& alt : condition.any_of)
            list.push_back(condition_to_json(alt));
        out["any_of"] = std::move(list);
    }
    return out;
}

TaskGraph task_graph_from_json(const json& doc)
{
    return wrap_json_errors("hierarchy", [&] {
        TaskGraph g;
        g.root = doc.at("root").get<std::string>();
        for (const auto& jn : doc.at("nodes")) {
            TaskNode n;
            n.id = jn.at("id").get<std::string>();
            n.children = jn.at("children").get<std::vector<std::string>>();
            if (jn.contains("pseudo_rewards")) {
                for (const auto& jp : jn.at("pseudo_rewards")) {
                    PseudoReward p;
                    p.condition = condition_from_json(jp.at("condition"));
                    if (jp.contains("action"))
                        p.action = jp.at("action").get<std::string>();
                    if (jp.contains("value"))
                        p.value = jp.at("value").get<double>();
                    n.pseudo_rewards.push_back(std::move(p));
                }
            }
            if (jn.contains("terminal"))
                n.terminal = condition_from_json(jn.at("terminal"));
            if (jn.contains("relevant_features"))
                n.relevant_features = jn.at("relevant_features").get<std::vector<std::string>>();
            g.nodes.push_back(std::move(n));
        }
        return g;
    });
}

json task_graph_to_json(const TaskGraph& graph)
{
    json nodes = json::array();
    for (const auto& n : graph.nodes) {
        json jn{{"id", n.id}, {"children", n.children}};
        if (!n.pseudo_rewards.empty()) {
            json list = json::array();
            for (const auto& p : n.pseudo_rewards) {
                json jp{{"condition", condition_to_json(p.condition)}, {"value", p.value}};
                if (p.action)
                    jp["action"] = *p.action;
                list.push_back(std::move(jp));
            }
            jn["pseudo_rewards"] = std::move(list);
        }
        if (n.terminal)
            jn["terminal"] = condition_to_json(*n.terminal);
        if (!n.relevant_features.empty())
            jn["relevant_features"] = n.relevant_features;
        nodes.push_back(std::move(jn));
    }
    return {{"root", graph.root}, {"nodes", std::move(nodes)}};
}

TaskGraph load_task_graph(const std::filesystem::path& path)
{
    return task_graph_from_json(read_json_file(path));
}

void save_task_graph(const TaskGraph& graph, const std::filesystem::path& path)
{
    write_json_file(task_graph_to_json(graph), path);
}

json policy_to_json(const HierarchicalPolicy& policy)
{
    json subtasks = json::array();
    for (const auto& s : policy.subtasks) {
        json js;
        js["id"] = s.id;
        js["children"] = s.children;
        js["solver"] = solver_name(s.solver);
        js["clusters"] = cluster_report(s.clusters)["clusters"];
        js["terminal"] = mask_to_json(s.terminal);
        if (s.solver == SubtaskSolver::ExactPomdp) {
            json alphas = json::array();
            for (const auto& a : s.alphas.vectors())
                alphas.push_back({{"action", a.action}, {"values", a.values}});
            js["alphas"] = std::move(alphas);
        } else {
            js["values"] = s.values;
            js["q"] = s.q;
        }
        js["greedy"] = s.greedy;
        js["resolved_primitive"] = s.resolved_primitive;
        js["iterations"] = s.iterations;
        js["residual"] = s.residual;
        js["converged"] = s.converged;
        js["n_params"] = s.parameter_count;
        subtasks.push_back(std::move(js));
    }
    return {{"root", policy.root},
            {"mode", policy.mode == PlanMode::Pomdp ? "pomdp" : "mdp"},
            {"primitive_actions", policy.primitive_actions},
            {"root_terminal", mask_to_json(policy.root_terminal)},
            {"subtasks", std::move(subtasks)}};
}

HierarchicalPolicy policy_from_json(const json& doc)
{
    return wrap_json_errors("policy", [&] {
        HierarchicalPolicy p;
        p.root = doc.at("root").get<std::string>();
        const auto mode = doc.at("mode").get<std::string>();
        if (mode != "mdp" && mode != "pomdp")
            throw InvalidInput("unknown policy mode '" + mode + "'");
        p.mode = mode == "pomdp" ? PlanMode::Pomdp : PlanMode::Mdp;
        p.primitive_actions = doc.at("primitive_actions").get<std::vector<std::string>>();

        std::set<std::string> ids;
        for (const auto& js : doc.at("subtasks"))
            ids.insert(js.at("id").get<std::string>());

        std::size_t n_states = 0;
        for (const auto& js : doc.at("subtasks")) {
            SubtaskPolicy s;
            s.id = js.at("id").get<std::string>();
            s.children = js.at("children").get<std::vector<std::string>>();
            for (const auto& c : s.children) {
                if (ids.count(c)) {
                    s.primitive.emplace_back(std::nullopt);
                    continue;
                }
                auto it = std::find(p.primitive_actions.begin(), p.primitive_actions.end(), c);
                if (it == p.primitive_actions.end())
                    throw InvalidInput("policy child '" + c + "' is neither a subtask nor a primitive");
                s.primitive.emplace_back(static_cast<ActionId>(it - p.primitive_actions.begin()));
            }
            s.solver = solver_from_name(js.at("solver").get<std::string>());
            const auto lists = js.at("clusters").get<std::vector<std::vector<StateId>>>();
            std::size_t n = 0;
            for (const auto& l : lists)
                n += l.size();
            std::vector<ClusterId> z(n, lists.size());
            for (ClusterId c = 0; c < lists.size(); ++c)
                for (StateId st : lists[c]) {
                    if (st >= n || z[st] != lists.size())
                        throw InvalidInput("cluster lists of '" + s.id + "' do not partition the states");
                    z[st] = c;
                }
            s.clusters = ClusterMap(std::move(z));
            if (n_states == 0)
                n_states = n;
            else if (n != n_states)
                throw InvalidInput("subtasks cover different state counts");
            s.terminal = mask_from_json(js.at("terminal"), n);
            if (s.solver == SubtaskSolver::ExactPomdp) {
                std::vector<AlphaVector> alphas;
                for (const auto& ja : js.at("alphas")) {
                    AlphaVector a{ja.at("values").get<std::vector<double>>(), ja.at("action").get<ActionId>()};
                    if (a.values.size() != lists.size() || a.action >= s.children.size())
                        throw InvalidInput("malformed alpha vector in '" + s.id + "'");
                    alphas.push_back(std::move(a));
                }
                if (alphas.empty())
                    throw InvalidInput("subtask '" + s.id + "' has no alpha vectors");
                s.alphas = AlphaVectorSet(std::move(alphas));
            } else {
                s.values = js.at("values").get<std::vector<double>>();
                s.q = js.at("q").get<QTable>();
                if (s.q.size() != lists.size())
                    throw InvalidInput("Q-table of '" + s.id + "' does not match its clusters");
                for (const auto& row : s.q)
                    if (row.size() != s.children.size())
                        throw InvalidInput("Q-table of '" + s.id + "' does not match its children");
            }
            s.greedy = js.at("greedy").get<std::vector<ActionId>>();
            if (s.greedy.size() != lists.size())
                throw InvalidInput("greedy table of '" + s.id + "' does not match its clusters");
            for (auto g : s.greedy)
                if (g >= s.children.size())
                    throw InvalidInput("greedy table of '" + s.id + "' names an unknown child");
            s.resolved_primitive = js.at("resolved_primitive").get<std::vector<ActionId>>();
            s.iterations = js.at("iterations").get<std::size_t>();
            s.residual = js.at("residual").get<double>();
            s.converged = js.at("converged").get<bool>();
            s.parameter_count = js.at("n_params").get<std::size_t>();
            p.subtasks.push_back(std::move(s));
        }
        if (!p.find(p.root))
            throw InvalidInput("policy root '" + p.root + "' has no subtask entry");
        p.root_terminal = mask_from_json(doc.at("root_terminal"), n_states);
        return p;
    });
}

HierarchicalPolicy load_policy(const std::filesystem::path& path)
{
    return policy_from_json(read_json_file(path));
}

void save_policy(const HierarchicalPolicy& policy, const std::filesystem::path& path)
{
    write_json_file(policy_to_json(policy), path);
}

} // namespace polca
