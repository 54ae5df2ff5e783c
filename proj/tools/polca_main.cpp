#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "polca/abstraction.hpp"
#include "polca/domains.hpp"
#include "polca/errors.hpp"
#include "polca/executor.hpp"
#include "polca/hierarchy.hpp"
#include "polca/hierarchy_io.hpp"
#include "polca/model_io.hpp"
#include "polca/report.hpp"

namespace {

using namespace polca;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Bad command-line arguments, as opposed to bad data or failed planning.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InputEnded : std::runtime_error {
    InputEnded() : std::runtime_error("interactive input ended") {}
};

struct Globals {
    std::uint64_t seed = 42;
    std::optional<double> gamma;
    std::optional<double> tolerance;
    std::optional<std::size_t> max_iters;
    std::string top_solver = "exact";
};

PlanOptions plan_options(const Globals& g, PlanMode mode)
{
    PlanOptions o;
    o.mode = mode;
    o.top_solver = g.top_solver == "qmdp" ? TopSolver::Qmdp : TopSolver::Exact;
    if (g.tolerance) {
        o.value_iteration.tolerance = *g.tolerance;
        o.pomdp.tolerance = *g.tolerance;
    }
    if (g.max_iters) {
        o.value_iteration.max_iterations = *g.max_iters;
        o.pomdp.max_iterations = *g.max_iters;
    }
    return o;
}

void apply_gamma(const Globals& g, DecisionModel& model)
{
    if (g.gamma)
        model.discount = *g.gamma;
}

PlanMode parse_mode(const std::string& s)
{
    return s == "pomdp" ? PlanMode::Pomdp : PlanMode::Mdp;
}

Domain named_domain(const std::string& name)
{
    try {
        return build_domain(name);
    } catch (const InvalidInput& e) {
        throw UsageError(e.what());
    }
}

void require_valid(const DecisionModel& model)
{
    const auto problems = validate_model(model);
    if (problems.empty())
        return;
    std::string msg = "invalid model:";
    for (std::size_t i = 0; i < problems.size() && i < 10; ++i)
        msg += "\n  " + problems[i].message;
    if (problems.size() > 10)
        msg += "\n  ... " + std::to_string(problems.size() - 10) + " more";
    throw InvalidInput(msg);
}

void require_valid(const TaskGraph& graph, const DecisionModel& model)
{
    const auto problems = validate_task_graph(graph, model);
    if (problems.empty())
        return;
    std::string msg = "invalid hierarchy:";
    for (const auto& p : problems)
        msg += "\n  " + p.node + ": " + p.message;
    throw InvalidInput(msg);
}

std::ofstream open_output(const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    return out;
}

Belief read_belief(const std::filesystem::path& path, std::size_t n)
{
    const auto doc = read_json_file(path);
    if (!doc.is_array())
        throw InvalidInput("belief file must hold a JSON array of probabilities");
    Belief b(doc.get<std::vector<double>>());
    if (b.size() != n)
        throw InvalidInput("belief has " + std::to_string(b.size()) + " entries but the model has " +
                           std::to_string(n) + " states");
    return b;
}

std::string solver_label(SubtaskSolver s)
{
    switch (s) {
    case SubtaskSolver::ExactPomdp:
        return "exact-pomdp";
    case SubtaskSolver::Qmdp:
        return "qmdp";
    case SubtaskSolver::ValueIteration:
        break;
    }
    return "value-iteration";
}

// ---- domain ----

struct DomainArgs {
    std::string name;
    std::string emit;
    std::string model_out;
    std::string hierarchy_out;
};

void cmd_domain(const Globals& g, const DomainArgs& args)
{
    auto d = named_domain(args.name);
    apply_gamma(g, d.model);
    std::filesystem::path model_out = args.model_out, hierarchy_out = args.hierarchy_out, initial_out;
    if (!args.emit.empty()) {
        std::filesystem::create_directories(args.emit);
        const std::filesystem::path dir = args.emit;
        if (model_out.empty())
            model_out = dir / (d.name + ".model.json");
        if (hierarchy_out.empty())
            hierarchy_out = dir / (d.name + ".hierarchy.json");
        initial_out = dir / (d.name + ".initial.json");
    }
    if (!model_out.empty())
        save_model(d.model, model_out);
    if (!hierarchy_out.empty())
        save_task_graph(d.hierarchy, hierarchy_out);
    if (!initial_out.empty())
        write_json_file(nlohmann::json(d.initial.probabilities()), initial_out);

    std::cout << "domain " << d.name << ": " << d.model.num_states() << " states, " << d.model.num_actions()
              << " actions, " << d.model.num_observations() << " observations, " << d.hierarchy.nodes.size()
              << " subtasks, depth " << graph_depth(d.hierarchy) << '\n';
    for (const auto& f : d.model.space.features())
        std::cout << "  feature " << f.name << " (" << f.cardinality << ")\n";
    if (!model_out.empty())
        std::cout << "wrote " << model_out.string() << '\n';
    if (!hierarchy_out.empty())
        std::cout << "wrote " << hierarchy_out.string() << '\n';
    if (!initial_out.empty())
        std::cout << "wrote " << initial_out.string() << '\n';
}

// ---- solve ----

struct SolveArgs {
    std::string model;
    std::string hierarchy;
    std::string mode = "mdp";
    std::string out;
};

void cmd_solve(const Globals& g, const SolveArgs& args)
{
    auto model = load_model(args.model);
    apply_gamma(g, model);
    require_valid(model);
    const auto mode = parse_mode(args.mode);
    if (mode == PlanMode::Pomdp && model.kind() != ModelKind::Pomdp)
        throw InvalidInput("pomdp mode needs a model with observations");
    const auto graph = args.hierarchy.empty() ? flat_graph(model) : load_task_graph(args.hierarchy);
    require_valid(graph, model);

    auto options = plan_options(g, mode);
    std::cout << std::left << std::setw(16) << "subtask" << std::setw(18) << "states->clusters" << std::setw(17)
              << "solver" << std::setw(8) << "iters" << std::setw(13) << "residual" << std::setw(9) << "vectors"
              << "seconds\n";
    options.on_subtask_solved = [](const SubtaskPolicy& s, double seconds) {
        std::ostringstream sc;
        sc << s.num_states() << "->" << s.clusters.num_clusters();
        std::cout << std::left << std::setw(16) << s.id << std::setw(18) << sc.str() << std::setw(17)
                  << solver_label(s.solver) << std::setw(8) << s.iterations << std::setw(13) << std::setprecision(3)
                  << s.residual << std::setw(9)
                  << (s.solver == SubtaskSolver::ExactPomdp ? std::to_string(s.alphas.size()) : std::string("-"))
                  << std::setprecision(3) << seconds << (s.converged ? "" : "  (not converged)") << std::endl;
    };
    const auto start = std::chrono::steady_clock::now();
    const auto policy = polca_plan(model, graph, options);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    save_policy(policy, args.out);
    std::cout << "q-values " << policy.q_value_count() << ", parameters " << policy.parameter_count() << ", "
              << std::setprecision(3) << seconds << " s\nwrote " << args.out << '\n';
}

// ---- minimize ----

struct MinimizeArgs {
    std::string model;
    std::string mode = "mdp";
    std::string out;
};

void cmd_minimize(const Globals& g, const MinimizeArgs& args)
{
    auto model = load_model(args.model);
    apply_gamma(g, model);
    require_valid(model);
    const auto mode = parse_mode(args.mode) == PlanMode::Pomdp ? StabilityMode::Pomdp : StabilityMode::Mdp;
    if (mode == StabilityMode::Pomdp && model.kind() != ModelKind::Pomdp)
        throw InvalidInput("pomdp mode needs a model with observations");
    MinimizeStats stats;
    const auto clusters = minimize(model, mode, {}, nullptr, &stats);
    const auto projected = project_model(model, clusters, mode);
    auto report = cluster_report(clusters, &projected);
    report["summary"]["rounds"] = stats.rounds;
    report["summary"]["splits"] = stats.splits;
    report["summary"]["initial_clusters"] = stats.initial_clusters;
    if (args.out.empty()) {
        std::cout << report.dump(2) << '\n';
        return;
    }
    write_json_file(report, args.out);
    std::cout << model.num_states() << " states -> " << clusters.num_clusters() << " clusters\nwrote " << args.out
              << '\n';
}

// ---- simulate ----

struct SimulateArgs {
    std::string model;
    std::string domain;
    std::string policy;
    std::string algo;
    std::size_t episodes = 1;
    std::size_t steps = 200;
    std::optional<std::size_t> initial_state;
    std::string initial_belief;
    std::string trace;
    std::string metrics;
    bool interactive = false;
    bool beliefs = false;
};

ObsId prompt_observation(const DecisionModel& model, ActionId a)
{
    std::cout << "action " << model.actions[a] << "\nobservation> " << std::flush;
    std::string line;
    while (std::getline(std::cin, line)) {
        const auto first = line.find_first_not_of(" \t");
        const auto last = line.find_last_not_of(" \t\r");
        const std::string name = first == std::string::npos ? "" : line.substr(first, last - first + 1);
        if (auto o = model.find_observation(name))
            return *o;
        std::cout << "unknown observation '" << name << "'; one of:";
        for (const auto& o : model.observations)
            std::cout << ' ' << o;
        std::cout << "\nobservation> " << std::flush;
    }
    throw InputEnded();
}

void cmd_simulate(const Globals& g, const SimulateArgs& args)
{
    if (args.model.empty() == args.domain.empty())
        throw UsageError("simulate needs exactly one of --model and --domain");
    if (args.policy.empty() == args.algo.empty())
        throw UsageError("simulate needs exactly one of --policy and --algo");
    if (!args.algo.empty() && args.domain.empty())
        throw UsageError("--algo plans a built-in domain; use it with --domain");

    Domain d;
    if (!args.domain.empty()) {
        d = named_domain(args.domain);
    } else {
        d.name = std::filesystem::path(args.model).stem().string();
        d.model = load_model(args.model);
        d.initial = Belief::uniform(d.model.num_states());
    }
    apply_gamma(g, d.model);
    require_valid(d.model);

    HierarchicalPolicy policy;
    std::string label = "policy";
    if (!args.algo.empty()) {
        Algorithm algo;
        try {
            algo = parse_algorithm(args.algo);
            check_applicable(algo, d.model);
        } catch (const InvalidInput& e) {
            throw UsageError(e.what());
        }
        policy = plan_algorithm(d, algo, plan_options(g, PlanMode::Mdp));
        label = algorithm_name(algo);
    } else {
        policy = load_policy(args.policy);
    }
    if (policy.subtask(policy.root).num_states() != d.model.num_states())
        throw InvalidInput("policy covers " + std::to_string(policy.subtask(policy.root).num_states()) +
                           " states but the model has " + std::to_string(d.model.num_states()));

    InitialCondition initial = d.initial;
    if (args.initial_state) {
        if (*args.initial_state >= d.model.num_states())
            throw InvalidInput("initial state out of range");
        initial = *args.initial_state;
    } else if (!args.initial_belief.empty()) {
        initial = read_belief(args.initial_belief, d.model.num_states());
    }

    EpisodeOptions eo;
    eo.max_steps = args.steps;
    eo.record_beliefs = args.beliefs;
    if (args.interactive) {
        if (d.model.kind() != ModelKind::Pomdp)
            throw UsageError("--interactive needs a model with observations");
        if (args.episodes != 1)
            throw UsageError("--interactive runs a single episode");
        eo.observation_source = [&d](ActionId a, StateId) { return prompt_observation(d.model, a); };
    }

    if (args.episodes == 0)
        throw UsageError("--episodes must be at least 1");
    const auto first = run_episode(policy, d.model, initial, eo, g.seed, 0);
    if (!args.trace.empty()) {
        auto out = open_output(args.trace);
        write_trajectory_jsonl(out, first, d.model);
    }
    if (args.episodes == 1) {
        std::cout << transcript_table(first, d.model);
        std::cout << "total reward " << first.total_reward << ", discounted " << first.discounted_reward << ", "
                  << first.steps.size() << " steps" << (first.reached_terminal ? ", reached terminal" : "") << '\n';
        if (first.aborted)
            std::cout << "aborted: " << *first.aborted << '\n';
    }
    if (args.episodes > 1 || !args.metrics.empty()) {
        const auto m = evaluate(policy, d.model, initial, args.episodes, eo, g.seed);
        if (args.episodes > 1)
            std::cout << args.episodes << " episodes: mean total reward " << m.mean_total_reward
                      << ", mean discounted " << m.mean_discounted_reward << ", aborted " << m.aborted << '\n';
        if (!args.metrics.empty()) {
            auto out = open_output(args.metrics);
            out << kMetricsCsvHeader << '\n';
            write_metrics_csv_rows(out, m, label, d.name, g.seed);
        }
    }
}

// ---- compare ----

struct CompareArgs {
    std::string domain;
    std::vector<std::string> algos;
    std::vector<std::uint64_t> seeds;
    std::size_t episodes = 100;
    std::size_t steps = 200;
    std::vector<std::size_t> checkpoints;
    std::string out;
    std::string curves;
};

void cmd_compare(const Globals& g, const CompareArgs& args)
{
    if (args.algos.empty())
        throw UsageError("--algos needs at least one algorithm");
    auto d = named_domain(args.domain);
    apply_gamma(g, d.model);

    CompareOptions o;
    try {
        for (const auto& a : args.algos) {
            o.algorithms.push_back(parse_algorithm(a));
            check_applicable(o.algorithms.back(), d.model);
        }
        o.episode.max_steps = args.steps;
        o.checkpoints = args.checkpoints;
        resolved_checkpoints(o);
    } catch (const InvalidInput& e) {
        throw UsageError(e.what());
    }
    if (args.episodes == 0)
        throw UsageError("--episodes must be at least 1");
    o.seeds = args.seeds.empty() ? std::vector<std::uint64_t>{g.seed} : args.seeds;
    o.episodes = args.episodes;
    o.plan = plan_options(g, PlanMode::Mdp);

    const auto rows = run_comparison(d, o);
    const auto checkpoints = resolved_checkpoints(o);
    std::ostream* summary = &std::cout;
    if (args.out.empty()) {
        write_compare_csv(std::cout, rows, checkpoints);
        summary = &std::cerr;
    } else {
        auto out = open_output(args.out);
        write_compare_csv(out, rows, checkpoints);
        std::cout << "wrote " << args.out << '\n';
    }
    if (!args.curves.empty()) {
        auto out = open_output(args.curves);
        out << kMetricsCsvHeader << '\n';
        for (const auto& r : rows)
            write_metrics_csv_rows(out, r.metrics, r.algorithm, r.domain, r.seed);
    }

    // Paired differences over every (seed, episode) between consecutive algorithms.
    const std::size_t per_algo = o.seeds.size();
    for (std::size_t i = 0; i + 1 < o.algorithms.size(); ++i)
        for (std::size_t j = i + 1; j < o.algorithms.size(); ++j) {
            std::vector<double> a, b;
            for (std::size_t k = 0; k < per_algo; ++k) {
                const auto& ra = rows[i * per_algo + k].metrics.episode_totals;
                const auto& rb = rows[j * per_algo + k].metrics.episode_totals;
                a.insert(a.end(), ra.begin(), ra.end());
                b.insert(b.end(), rb.begin(), rb.end());
            }
            if (a.size() < 2)
                continue;
            const auto c = paired_comparison(a, b);
            *summary << rows[i * per_algo].algorithm << " - " << rows[j * per_algo].algorithm << ": mean "
                     << c.mean_difference << " (se " << c.standard_error << ", t " << c.t_statistic << ", p "
                     << c.p_value << ", n " << c.n << ")\n";
        }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Hierarchical MDP/POMDP planning with per-subtask state abstraction"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "Random seed for simulations")->capture_default_str();
    app.add_option("--gamma", g.gamma, "Override the model discount")->check(CLI::Range(0.0, 1.0));
    app.add_option("--tolerance", g.tolerance, "Solver convergence tolerance")->check(CLI::PositiveNumber);
    app.add_option("--max-iters", g.max_iters, "Solver iteration cap")->check(CLI::PositiveNumber);
    app.add_option("--top-solver", g.top_solver, "Solver for the root subtask in POMDP mode")
        ->check(CLI::IsMember({"exact", "qmdp"}))
        ->capture_default_str();

    DomainArgs domain_args;
    auto* domain = app.add_subcommand("domain", "Build a built-in domain and emit its model and hierarchy");
    domain->add_option("--name", domain_args.name, "taxi, taxi2, nursebot, nursebot-small or micro")->required();
    domain->add_option("--emit", domain_args.emit, "Directory for <name>.model.json, .hierarchy.json, .initial.json");
    domain->add_option("--model-out", domain_args.model_out, "Model file to write");
    domain->add_option("--hierarchy-out", domain_args.hierarchy_out, "Hierarchy file to write");

    SolveArgs solve_args;
    auto* solve = app.add_subcommand("solve", "Plan a hierarchy over a model and write the policy");
    solve->add_option("--model", solve_args.model, "Model file")->required()->check(CLI::ExistingFile);
    solve->add_option("--hierarchy", solve_args.hierarchy, "Hierarchy file (default: flat)")
        ->check(CLI::ExistingFile);
    solve->add_option("--mode", solve_args.mode, "mdp or pomdp")
        ->check(CLI::IsMember({"mdp", "pomdp"}))
        ->capture_default_str();
    solve->add_option("--out", solve_args.out, "Policy file to write")->required();

    MinimizeArgs minimize_args;
    auto* min = app.add_subcommand("minimize", "Cluster a flat model and report the partition");
    min->add_option("--model", minimize_args.model, "Model file")->required()->check(CLI::ExistingFile);
    min->add_option("--mode", minimize_args.mode, "mdp or pomdp")
        ->check(CLI::IsMember({"mdp", "pomdp"}))
        ->capture_default_str();
    min->add_option("--out", minimize_args.out, "Report file (default: stdout)");

    SimulateArgs sim_args;
    auto* sim = app.add_subcommand("simulate", "Run a policy and print the transcript");
    sim->add_option("--model", sim_args.model, "Model file")->check(CLI::ExistingFile);
    sim->add_option("--domain", sim_args.domain, "Built-in domain instead of a model file");
    sim->add_option("--policy", sim_args.policy, "Policy file")->check(CLI::ExistingFile);
    sim->add_option("--algo", sim_args.algo, "Plan the built-in domain with flat, polca, polca+ or qmdp");
    sim->add_option("--episodes", sim_args.episodes, "Episodes to run")->capture_default_str();
    sim->add_option("--steps", sim_args.steps, "Steps per episode")->capture_default_str();
    sim->add_option("--initial-state", sim_args.initial_state, "Start state index");
    sim->add_option("--initial-belief", sim_args.initial_belief, "JSON array start distribution")
        ->check(CLI::ExistingFile);
    sim->add_option("--trace", sim_args.trace, "JSON-lines trace of the first episode");
    sim->add_option("--metrics", sim_args.metrics, "Reward-curve CSV");
    sim->add_flag("--beliefs", sim_args.beliefs, "Record beliefs in the trace");
    sim->add_flag("--interactive", sim_args.interactive, "Type observations instead of sampling them");

    CompareArgs cmp_args;
    auto* cmp = app.add_subcommand("compare", "Plan and evaluate several algorithms on common random numbers");
    cmp->add_option("--domain", cmp_args.domain, "Built-in domain")->required();
    cmp->add_option("--algos", cmp_args.algos, "Comma-separated subset of flat, polca, polca+, qmdp")
        ->required()
        ->delimiter(',');
    cmp->add_option("--seeds", cmp_args.seeds, "Comma-separated seeds (default: --seed)")->delimiter(',');
    cmp->add_option("--episodes", cmp_args.episodes, "Episodes per seed")->capture_default_str();
    cmp->add_option("--steps", cmp_args.steps, "Steps per episode")->capture_default_str();
    cmp->add_option("--checkpoints", cmp_args.checkpoints, "Comma-separated steps for reward columns")
        ->delimiter(',');
    cmp->add_option("--out", cmp_args.out, "Report CSV (default: stdout)");
    cmp->add_option("--curves", cmp_args.curves, "Reward-curve CSV for every row");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*domain)
            cmd_domain(g, domain_args);
        else if (*solve)
            cmd_solve(g, solve_args);
        else if (*min)
            cmd_minimize(g, minimize_args);
        else if (*sim)
            cmd_simulate(g, sim_args);
        else if (*cmp)
            cmd_compare(g, cmp_args);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const InputEnded& e) {
        std::cerr << e.what() << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
