#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "droneq/conic.hpp"
#include "droneq/harness.hpp"
#include "droneq/instance.hpp"
#include "droneq/simulator.hpp"
#include "droneq/solver.hpp"

namespace {

using namespace droneq;

GenConfig preset_config(const std::string& name) {
    if (name == "sp-paper") return GenConfig::sp_paper();
    if (name == "dp-paper") return GenConfig::dp_paper();
    throw ParseError("unknown preset '" + name + "' (expected sp-paper or dp-paper)");
}

struct GenerateArgs {
    std::uint64_t seed = 1;
    int nodes = -1, facilities = -1;
    std::string mode = "sp", preset, out;
};

int cmd_generate(const GenerateArgs& args) {
    GenConfig config;
    if (!args.preset.empty())
        config = preset_config(args.preset);
    else
        config.mode = mode_from_string(args.mode);
    if (args.nodes > 0) config.n_nodes = args.nodes;
    if (args.facilities > 0) config.n_facilities = args.facilities;
    if (config.mode == Mode::NP) {
        config.num_classes = 1;
        config.weights = {1.0};
    }
    const Instance inst = generate_instance(args.seed, config);
    if (args.out.empty())
        std::cout << instance_to_json(inst);
    else
        write_instance(inst, args.out);
    return 0;
}

struct EmitArgs {
    std::string model = "np", instance, out, format = "cbf";
    double alpha = -1;
    int budget_override = -1;
};

int cmd_emit_conic(const EmitArgs& args) {
    const Instance inst = read_instance(args.instance);
    const Model model = model_from_string(args.model);
    int K = args.budget_override;
    if (K < 0) {
        const double alpha = args.alpha >= 0 ? args.alpha : inst.fleet.alpha;
        K = budget(min_fleet(inst).k_star, alpha, inst.fleet.k_hard_cap);
    }
    ConicProgram prog;
    switch (model) {
        case Model::NP: prog = build_np(inst, K); break;
        case Model::SP: prog = build_sp(inst, K); break;
        case Model::DP: prog = build_dp(inst, K); break;
    }
    const ConicFormat fmt = args.format == "lp" ? ConicFormat::Lp : ConicFormat::Cbf;
    if (args.out.empty())
        std::cout << emit(prog, fmt);
    else
        emit_file(prog, args.out, fmt);
    return 0;
}

struct SolveArgs {
    std::string model = "np", instance, out;
    double alpha = 0.2;
    std::uint64_t seed = 1;
    bool oracle = false;
    int restarts = 16;
    long max_evals = 200000;
};

int cmd_solve(const SolveArgs& args) {
    const Instance inst = read_instance(args.instance);
    const Model model = model_from_string(args.model);
    const int k_star = min_fleet(inst).k_star;
    const int K = budget(k_star, args.alpha, inst.fleet.k_hard_cap);
    SolveResult res;
    if (args.oracle) {
        res = brute_force(inst, model, K);
    } else {
        SearchParams params;
        params.restarts = args.restarts;
        params.max_evals = args.max_evals;
        res = local_search(inst, model, K, args.seed, params);
    }
    if (args.out.empty())
        std::cout << solution_to_json(inst, res, k_star, K);
    else
        write_solution(inst, res, k_star, K, args.out);
    return 0;
}

struct SimulateArgs {
    std::string instance, solution, discipline, out, events;
    double horizon = 30000, warmup = 0.1;
    int reps = 10;
    std::uint64_t seed = 1;
    bool allow_unstable = false;
};

int cmd_simulate(const SimulateArgs& args) {
    const Instance inst = read_instance(args.instance);
    const Assignment asg = read_solution(args.solution, inst);
    SimConfig cfg;
    cfg.horizon = args.horizon;
    cfg.warmup_fraction = args.warmup;
    cfg.replications = args.reps;
    cfg.seed = args.seed;
    cfg.discipline = args.discipline.empty() ? discipline_for(asg.model)
                                             : discipline_from_string(args.discipline);
    cfg.allow_unstable = args.allow_unstable;
    cfg.record_event_log = !args.events.empty();
    const SimReport rep = simulate(inst, asg, cfg);
    if (!args.events.empty()) write_event_log_csv(rep, args.events);
    if (args.out.empty())
        std::cout << sim_report_to_json(rep);
    else
        write_sim_report(rep, args.out);
    return 0;
}

struct ExperimentArgs {
    std::string kind, preset = "sp-paper", out = ".", model;
    int seeds = 20;
    std::uint64_t base_seed = 1;
    std::vector<double> grid;
    double alpha = 0.2;
    bool no_sim = false;
    double horizon = 30000;
    int reps = 10;
    int restarts = 16;
    long max_evals = 200000;
};

int cmd_experiment(const ExperimentArgs& args) {
    ExperimentPlan plan;
    plan.sweep = sweep_from_string(args.kind);
    plan.preset = preset_config(args.preset);
    plan.num_seeds = args.seeds;
    plan.base_seed = args.base_seed;
    plan.grid = args.grid;
    plan.alpha = args.alpha;
    plan.model = args.model.empty()
                     ? (plan.preset.mode == Mode::DP ? Model::DP : Model::SP)
                     : model_from_string(args.model);
    plan.run_sim = !args.no_sim;
    plan.sim.horizon = args.horizon;
    plan.sim.replications = args.reps;
    plan.search.restarts = args.restarts;
    plan.search.max_evals = args.max_evals;
    const ExperimentResult result = run_experiment(plan);
    write_experiment(plan, result, args.out);
    std::cout << "wrote " << result.rows.size() << " rows to " << args.out << "\n";
    return result.any_error ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"drone delivery facility location under congestion"};
    app.require_subcommand(1);

    GenerateArgs gen;
    CLI::App* cgen = app.add_subcommand("generate", "sample a random instance");
    cgen->add_option("--seed", gen.seed, "instance seed");
    cgen->add_option("--nodes", gen.nodes, "number of demand nodes");
    cgen->add_option("--facilities", gen.facilities, "number of candidate facilities");
    cgen->add_option("--mode", gen.mode, "np, sp, or dp")
        ->check(CLI::IsMember({"np", "sp", "dp"}));
    cgen->add_option("--preset", gen.preset, "sp-paper or dp-paper")
        ->check(CLI::IsMember({"sp-paper", "dp-paper"}));
    cgen->add_option("--out", gen.out, "output file (default stdout)");

    EmitArgs emitargs;
    CLI::App* cemit = app.add_subcommand("emit-conic", "write the conic program of an instance");
    cemit->add_option("--model", emitargs.model, "np, sp, or dp")
        ->check(CLI::IsMember({"np", "sp", "dp"}));
    cemit->add_option("--instance", emitargs.instance, "instance file")->required();
    cemit->add_option("--out", emitargs.out, "output file (default stdout)");
    cemit->add_option("--format", emitargs.format, "cbf or lp")
        ->check(CLI::IsMember({"cbf", "lp"}));
    cemit->add_option("--alpha", emitargs.alpha, "spare-drone ratio for the budget");
    cemit->add_option("--budget", emitargs.budget_override, "drone budget K (overrides --alpha)");

    SolveArgs solveargs;
    CLI::App* csolve = app.add_subcommand("solve", "locate facilities and route demand");
    csolve->add_option("--model", solveargs.model, "np, sp, or dp")
        ->check(CLI::IsMember({"np", "sp", "dp"}));
    csolve->add_option("--instance", solveargs.instance, "instance file")->required();
    csolve->add_option("--alpha", solveargs.alpha, "spare-drone ratio");
    csolve->add_option("--seed", solveargs.seed, "search seed");
    csolve->add_flag("--oracle", solveargs.oracle, "exhaustive search (tiny instances only)");
    csolve->add_option("--restarts", solveargs.restarts, "search restarts");
    csolve->add_option("--max-evals", solveargs.max_evals, "search evaluation budget");
    csolve->add_option("--out", solveargs.out, "solution file (default stdout)");

    SimulateArgs simargs;
    CLI::App* csim = app.add_subcommand("simulate", "replay a solution through the simulator");
    csim->add_option("--instance", simargs.instance, "instance file")->required();
    csim->add_option("--solution", simargs.solution, "solution file")->required();
    csim->add_option("--discipline", simargs.discipline, "fcfs, static, or dynamic")
        ->check(CLI::IsMember({"fcfs", "static", "dynamic"}));
    csim->add_option("--horizon", simargs.horizon, "minutes per replication");
    csim->add_option("--warmup", simargs.warmup, "warmup fraction");
    csim->add_option("--reps", simargs.reps, "replications");
    csim->add_option("--seed", simargs.seed, "stream seed");
    csim->add_flag("--allow-unstable", simargs.allow_unstable, "skip the stability pre-check");
    csim->add_option("--events", simargs.events, "per-request event log CSV");
    csim->add_option("--out", simargs.out, "report file (default stdout)");

    ExperimentArgs expargs;
    CLI::App* cexp = app.add_subcommand("experiment", "run a sweep campaign");
    cexp->add_option("kind", expargs.kind, "alpha, weights, delta, or compare")
        ->required()
        ->check(CLI::IsMember({"alpha", "weights", "delta", "compare"}));
    cexp->add_option("--preset", expargs.preset, "sp-paper or dp-paper")
        ->check(CLI::IsMember({"sp-paper", "dp-paper"}));
    cexp->add_option("--seeds", expargs.seeds, "number of seeded instances");
    cexp->add_option("--base-seed", expargs.base_seed, "first instance seed");
    cexp->add_option("--grid", expargs.grid, "sweep grid values")->delimiter(',');
    cexp->add_option("--alpha", expargs.alpha, "fixed spare ratio for non-alpha sweeps");
    cexp->add_option("--model", expargs.model, "solved model for alpha/weights sweeps");
    cexp->add_flag("--no-sim", expargs.no_sim, "skip the simulation leg");
    cexp->add_option("--horizon", expargs.horizon, "simulation horizon");
    cexp->add_option("--reps", expargs.reps, "simulation replications");
    cexp->add_option("--restarts", expargs.restarts, "search restarts");
    cexp->add_option("--max-evals", expargs.max_evals, "search evaluation budget");
    cexp->add_option("--out", expargs.out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (cgen->parsed()) return cmd_generate(gen);
        if (cemit->parsed()) return cmd_emit_conic(emitargs);
        if (csolve->parsed()) return cmd_solve(solveargs);
        if (csim->parsed()) return cmd_simulate(simargs);
        if (cexp->parsed()) return cmd_experiment(expargs);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
