#include "droneq/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>

namespace droneq {

std::string to_string(Sweep s) {
    switch (s) {
        case Sweep::Alpha: return "alpha";
        case Sweep::Weights: return "weights";
        case Sweep::Delta: return "delta";
        case Sweep::Compare: return "compare";
    }
    return "alpha";
}

Sweep sweep_from_string(const std::string& s) {
    if (s == "alpha") return Sweep::Alpha;
    if (s == "weights") return Sweep::Weights;
    if (s == "delta") return Sweep::Delta;
    if (s == "compare") return Sweep::Compare;
    throw ParseError("unknown experiment '" + s + "' (expected alpha, weights, delta, or compare)");
}

std::vector<double> default_grid(Sweep sweep) {
    switch (sweep) {
        case Sweep::Alpha: return {0, 0.02, 0.05, 0.1, 0.2, 0.5, 1};
        case Sweep::Weights: return {0, 0.25, 0.5, 0.75, 1};
        case Sweep::Delta: return {3, 10, 20};
        case Sweep::Compare: return {};
    }
    return {};
}

void ExperimentPlan::validate() const {
    if (num_seeds < 1) throw ValidationError("num_seeds must be >= 1");
    if (alpha < 0) throw ValidationError("alpha must be >= 0");
    const std::vector<double> g = grid.empty() ? default_grid(sweep) : grid;
    if (sweep != Sweep::Compare && g.empty()) throw ValidationError("sweep grid must be nonempty");
    for (double v : g) {
        if (sweep == Sweep::Alpha && v < 0) throw ValidationError("alpha grid values must be >= 0");
        if (sweep == Sweep::Weights && (v < 0 || v > 1))
            throw ValidationError("w1 grid values must lie in [0,1]");
        if (sweep == Sweep::Delta && v < 0) throw ValidationError("delta grid values must be >= 0");
    }
}

double quantile(std::vector<double> v, double p) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    p = std::clamp(p, 0.0, 1.0);
    const double h = (v.size() - 1) * p;
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] + (h - lo) * (v[lo + 1] - v[lo]);
}

ClassBreakdown class_breakdown(const Instance& inst, const Assignment& asg) {
    const int n = inst.num_nodes();
    const int R = inst.num_classes();
    const auto units = demand_units(inst, asg.model);
    const QueueAnalytics qa = analyze(inst, asg);

    std::vector<std::vector<int>> route(n, std::vector<int>(R, -1));
    for (std::size_t u = 0; u < units.size(); ++u) {
        const int j = asg.unit_facility[u];
        if (asg.model == Model::NP)
            for (int r = 0; r < R; ++r) route[units[u].node][r] = j;
        else
            route[units[u].node][units[u].cls - 1] = j;
    }

    ClassBreakdown out;
    out.Z_r.assign(R, 0.0);
    out.sumZ_r.assign(R, 0.0);
    out.W_r.assign(R, 0.0);
    out.sumW_r.assign(R, 0.0);
    for (int i = 0; i < n; ++i)
        for (int r = 0; r < R; ++r) {
            const double rate = inst.nodes[i].lambda * inst.class_prob(i, r + 1);
            if (rate <= 0 || route[i][r] < 0) continue;
            const int j = route[i][r];
            const double w = asg.model == Model::NP ? qa.facility[j].wait_fcfs
                                                    : qa.facility[j].wait_r[r];
            const double t = inst.travel(i, j);
            out.Z_r[r] = std::max(out.Z_r[r], t + w);
            out.W_r[r] = std::max(out.W_r[r], w);
            out.sumZ_r[r] += rate * (t + w);
            out.sumW_r[r] += rate * w;
        }
    return out;
}

namespace {

double instance_delta_a(const Instance& inst) {
    const auto& a = inst.priority.initial_values;
    if (a.size() < 2) return 0;
    return a.front() - a.back();
}

ExperimentRow base_row(std::uint64_t seed, double value, Model model, const Instance& inst,
                       double alpha) {
    ExperimentRow row;
    row.seed = seed;
    row.sweep_value = value;
    row.model = to_string(model);
    row.alpha = alpha;
    row.w1 = inst.priority.weights.empty() ? 1.0 : inst.priority.weights[0];
    row.delta_a = instance_delta_a(inst);
    return row;
}

void fill_solution(ExperimentRow& row, const Instance& inst, const SolveResult& res, int k_star,
                   int K) {
    row.k_star = k_star;
    row.K = K;
    row.Z = res.objective.Z;
    const ClassBreakdown cb = class_breakdown(inst, res.best);
    row.Z_r = cb.Z_r;
    row.sumZ_r = cb.sumZ_r;
    row.W_r = cb.W_r;
    row.sumW_r = cb.sumW_r;
    row.solve_ms = res.wall_ms;
}

// Runs the simulation leg of one row and appends its tail curves.
void attach_sim(ExperimentRow& row, ExperimentResult& result, const Instance& inst,
                const Assignment& asg, const SimConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const SimReport rep = simulate(inst, asg, cfg);
    row.sim_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    const int R = rep.num_classes;
    row.sim_Z_r.resize(R);
    row.sim_W_r.resize(R);
    row.sim_W_ci_r.resize(R);
    for (int r = 0; r < R; ++r) {
        row.sim_Z_r[r] = rep.z_by_class[r].mean;
        row.sim_W_r[r] = rep.wait_by_class[r].mean;
        row.sim_W_ci_r[r] = rep.wait_by_class[r].ci_half;
    }
    result.tail_grid = rep.tail_grid;
    for (int r = 0; r < R; ++r)
        result.tails.push_back({row.seed, row.model, r + 1, rep.tail_by_class[r]});
}

SimConfig sim_config_for(const ExperimentPlan& plan, std::uint64_t instance_seed, Model model) {
    SimConfig cfg = plan.sim;
    cfg.seed = plan.sim.seed + instance_seed;
    cfg.discipline = discipline_for(model);
    return cfg;
}

// Shared sweep skeleton: one warm-started solve chain per seed along the
// grid, with a caller-supplied instance variant per grid value.
template <typename MakeVariant>
ExperimentResult run_sweep(const ExperimentPlan& plan, Model model, MakeVariant make_variant) {
    plan.validate();
    std::vector<double> grid = plan.grid.empty() ? default_grid(plan.sweep) : plan.grid;
    std::sort(grid.begin(), grid.end());
    ExperimentResult result;

    for (int s = 0; s < plan.num_seeds; ++s) {
        const std::uint64_t seed = plan.base_seed + s;
        Instance inst;
        MinFleetResult fleet;
        try {
            inst = generate_instance(seed, plan.preset);
            result.num_classes = inst.num_classes();
            fleet = min_fleet(inst);
        } catch (const std::exception& e) {
            for (double v : grid) {
                ExperimentRow row;
                row.seed = seed;
                row.sweep_value = v;
                row.model = to_string(model);
                row.error = e.what();
                result.rows.push_back(row);
            }
            result.any_error = true;
            continue;
        }
        const int k_star = fleet.k_star;

        // The side model's routing seeds the chain so the tightest budget
        // (K = k_star) always has a stable start to extend.
        std::vector<Assignment> warm = {fleet.assignment};
        for (double value : grid) {
            Instance variant = inst;
            double alpha = plan.alpha;
            make_variant(variant, value, alpha);
            ExperimentRow row = base_row(seed, value, model, variant, alpha);
            try {
                const int K = budget(k_star, alpha, variant.fleet.k_hard_cap);
                SearchParams params = plan.search;
                params.warm_starts = warm;
                const SolveResult res = local_search(variant, model, K, seed, params);
                warm = {res.best};
                fill_solution(row, variant, res, k_star, K);
                if (plan.run_sim)
                    attach_sim(row, result, variant, res.best, sim_config_for(plan, seed, model));
            } catch (const std::exception& e) {
                row.error = e.what();
                result.any_error = true;
            }
            result.rows.push_back(std::move(row));
        }
    }
    return result;
}

}  // namespace

ExperimentResult run_alpha_sweep(const ExperimentPlan& plan) {
    return run_sweep(plan, plan.model,
                     [](Instance&, double value, double& alpha) { alpha = value; });
}

ExperimentResult run_weight_sweep(const ExperimentPlan& plan) {
    return run_sweep(plan, plan.model, [](Instance& inst, double value, double&) {
        const int R = inst.num_classes();
        inst.priority.weights.assign(R, R > 1 ? (1.0 - value) / (R - 1) : 1.0);
        inst.priority.weights[0] = R > 1 ? value : 1.0;
    });
}

ExperimentResult run_delta_sweep(const ExperimentPlan& plan) {
    return run_sweep(plan, Model::DP, [](Instance& inst, double value, double&) {
        if (inst.mode != Mode::DP)
            throw ValidationError("delta sweep needs a dp preset");
        const int R = inst.num_classes();
        inst.priority.initial_values.resize(R);
        for (int r = 0; r < R; ++r) inst.priority.initial_values[r] = value * (R - 1 - r);
    });
}

ExperimentResult run_discipline_compare(const ExperimentPlan& plan) {
    plan.validate();
    ExperimentResult result;

    for (int s = 0; s < plan.num_seeds; ++s) {
        const std::uint64_t seed = plan.base_seed + s;
        Instance inst;
        std::vector<Model> models;
        MinFleetResult fleet;
        int k_star = 0, K = 0;
        try {
            inst = generate_instance(seed, plan.preset);
            result.num_classes = inst.num_classes();
            models.push_back(Model::NP);
            if (inst.num_classes() > 1) models.push_back(Model::SP);
            if (inst.mode == Mode::DP) models.push_back(Model::DP);
            fleet = min_fleet(inst);
            k_star = fleet.k_star;
            K = budget(k_star, plan.alpha, inst.fleet.k_hard_cap);
        } catch (const std::exception& e) {
            ExperimentRow row;
            row.seed = seed;
            row.sweep_value = plan.alpha;
            row.model = "np";
            row.error = e.what();
            result.rows.push_back(row);
            result.any_error = true;
            continue;
        }

        ClassBreakdown np_cb;
        std::vector<Assignment> warm = {fleet.assignment};
        for (Model model : models) {
            ExperimentRow row = base_row(seed, plan.alpha, model, inst, plan.alpha);
            try {
                SearchParams params = plan.search;
                params.warm_starts = warm;
                const SolveResult res = local_search(inst, model, K, seed, params);
                if (model == Model::NP) warm = {res.best};
                fill_solution(row, inst, res, k_star, K);
                const ClassBreakdown cb = class_breakdown(inst, res.best);
                if (model == Model::NP) np_cb = cb;
                const int R = inst.num_classes();
                row.gap_Z_r.assign(R, 0.0);
                row.gap_W_r.assign(R, 0.0);
                if (model != Model::NP)
                    for (int r = 0; r < R; ++r) {
                        if (np_cb.Z_r[r] > 0)
                            row.gap_Z_r[r] = (cb.Z_r[r] - np_cb.Z_r[r]) / np_cb.Z_r[r];
                        if (np_cb.W_r[r] > 0)
                            row.gap_W_r[r] = (cb.W_r[r] - np_cb.W_r[r]) / np_cb.W_r[r];
                    }
                if (plan.run_sim)
                    attach_sim(row, result, inst, res.best, sim_config_for(plan, seed, model));
            } catch (const std::exception& e) {
                row.error = e.what();
                result.any_error = true;
            }
            result.rows.push_back(std::move(row));
        }
    }
    return result;
}

ExperimentResult run_experiment(const ExperimentPlan& plan) {
    switch (plan.sweep) {
        case Sweep::Alpha: return run_alpha_sweep(plan);
        case Sweep::Weights: return run_weight_sweep(plan);
        case Sweep::Delta: return run_delta_sweep(plan);
        case Sweep::Compare: return run_discipline_compare(plan);
    }
    return run_alpha_sweep(plan);
}

namespace {

std::string num(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double at_or_zero(const std::vector<double>& v, int i) {
    return i < static_cast<int>(v.size()) ? v[i] : 0.0;
}

void write_rows_csv(const ExperimentPlan& plan, const ExperimentResult& result,
                    const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path.string());
    const int R = result.num_classes;
    out << "seed,sweep,value,model,alpha,w1,delta_a,k_star,K,Z";
    for (int r = 1; r <= R; ++r)
        out << ",Z_" << r << ",sumZ_" << r << ",W_" << r << ",sumW_" << r << ",gapZ_" << r
            << ",gapW_" << r << ",simZ_" << r << ",simW_" << r << ",simWci_" << r;
    out << ",solve_ms,sim_ms,error\n";
    for (const ExperimentRow& row : result.rows) {
        out << row.seed << ',' << to_string(plan.sweep) << ',' << num(row.sweep_value) << ','
            << row.model << ',' << num(row.alpha) << ',' << num(row.w1) << ','
            << num(row.delta_a) << ',' << row.k_star << ',' << row.K << ',' << num(row.Z);
        for (int r = 0; r < R; ++r)
            out << ',' << num(at_or_zero(row.Z_r, r)) << ',' << num(at_or_zero(row.sumZ_r, r))
                << ',' << num(at_or_zero(row.W_r, r)) << ',' << num(at_or_zero(row.sumW_r, r))
                << ',' << num(at_or_zero(row.gap_Z_r, r)) << ',' << num(at_or_zero(row.gap_W_r, r))
                << ',' << num(at_or_zero(row.sim_Z_r, r)) << ',' << num(at_or_zero(row.sim_W_r, r))
                << ',' << num(at_or_zero(row.sim_W_ci_r, r));
        out << ',' << num(row.solve_ms) << ',' << num(row.sim_ms) << ',' << row.error << '\n';
    }
}

void write_summary_csv(const ExperimentResult& result, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path.string());
    out << "value,model,metric,n,mean,min,q25,median,q75,max\n";

    std::vector<std::pair<double, std::string>> groups;
    for (const ExperimentRow& row : result.rows) {
        const std::pair<double, std::string> g{row.sweep_value, row.model};
        if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
    }

    auto emit = [&](const std::pair<double, std::string>& g, const std::string& metric,
                    const std::vector<double>& vals) {
        if (vals.empty()) return;
        double mean = 0;
        for (double v : vals) mean += v;
        mean /= vals.size();
        out << num(g.first) << ',' << g.second << ',' << metric << ',' << vals.size() << ','
            << num(mean) << ',' << num(quantile(vals, 0)) << ',' << num(quantile(vals, 0.25))
            << ',' << num(quantile(vals, 0.5)) << ',' << num(quantile(vals, 0.75)) << ','
            << num(quantile(vals, 1)) << '\n';
    };

    for (const auto& g : groups) {
        auto collect = [&](auto field) {
            std::vector<double> vals;
            for (const ExperimentRow& row : result.rows)
                if (row.error.empty() && row.sweep_value == g.first && row.model == g.second)
                    vals.push_back(field(row));
            return vals;
        };
        emit(g, "Z", collect([](const ExperimentRow& r) { return r.Z; }));
        for (int r = 0; r < result.num_classes; ++r) {
            const std::string suffix = "_" + std::to_string(r + 1);
            emit(g, "Z" + suffix,
                 collect([r](const ExperimentRow& row) { return at_or_zero(row.Z_r, r); }));
            emit(g, "W" + suffix,
                 collect([r](const ExperimentRow& row) { return at_or_zero(row.W_r, r); }));
            emit(g, "gapZ" + suffix,
                 collect([r](const ExperimentRow& row) { return at_or_zero(row.gap_Z_r, r); }));
            emit(g, "gapW" + suffix,
                 collect([r](const ExperimentRow& row) { return at_or_zero(row.gap_W_r, r); }));
            emit(g, "simW" + suffix,
                 collect([r](const ExperimentRow& row) { return at_or_zero(row.sim_W_r, r); }));
            emit(g, "simZ" + suffix,
                 collect([r](const ExperimentRow& row) { return at_or_zero(row.sim_Z_r, r); }));
        }
    }
}

void write_tails_csv(const ExperimentResult& result, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path.string());
    out << "seed,model,class,t,p\n";
    for (const TailRow& tail : result.tails)
        for (std::size_t g = 0; g < tail.p.size(); ++g)
            out << tail.seed << ',' << tail.model << ',' << tail.cls << ','
                << num(result.tail_grid[g]) << ',' << num(tail.p[g]) << '\n';
}

void write_manifest(const ExperimentPlan& plan, const ExperimentResult& result,
                    const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["tool"] = {{"name", "droneq"}, {"version", "1.0.0"}};
    j["sweep"] = to_string(plan.sweep);
    j["model"] = to_string(plan.model);
    j["alpha"] = plan.alpha;
    j["grid"] = plan.grid.empty() ? default_grid(plan.sweep) : plan.grid;
    j["num_seeds"] = plan.num_seeds;
    j["base_seed"] = plan.base_seed;
    nlohmann::ordered_json seeds = nlohmann::ordered_json::array();
    for (int s = 0; s < plan.num_seeds; ++s) seeds.push_back(plan.base_seed + s);
    j["seeds"] = seeds;
    const GenConfig& p = plan.preset;
    j["preset"] = {{"mode", to_string(p.mode)},
                   {"n_nodes", p.n_nodes},
                   {"n_facilities", p.n_facilities},
                   {"coord_lo", p.coord_lo},
                   {"coord_hi", p.coord_hi},
                   {"lambda_lo", p.lambda_lo},
                   {"lambda_hi", p.lambda_hi},
                   {"num_classes", p.num_classes},
                   {"weights", p.weights},
                   {"initial_values", p.initial_values},
                   {"n_class1", p.n_class1},
                   {"speed_kmh", p.speed_kmh},
                   {"endurance_min", p.endurance_min}};
    if (p.k_hard_cap) j["preset"]["k_hard_cap"] = *p.k_hard_cap;
    j["sim"] = {{"horizon", plan.sim.horizon},
                {"warmup_fraction", plan.sim.warmup_fraction},
                {"replications", plan.sim.replications},
                {"seed", plan.sim.seed},
                {"enabled", plan.run_sim}};
    j["search"] = {{"restarts", plan.search.restarts}, {"max_evals", plan.search.max_evals}};
    j["outputs"] = {"rows.csv", "summary.csv", "tails.csv"};
    j["rows"] = result.rows.size();
    j["any_error"] = result.any_error;
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace

void write_experiment(const ExperimentPlan& plan, const ExperimentResult& result,
                      const std::string& dir) {
    const std::filesystem::path root(dir);
    std::filesystem::create_directories(root);
    write_rows_csv(plan, result, root / "rows.csv");
    write_summary_csv(result, root / "summary.csv");
    write_tails_csv(result, root / "tails.csv");
    write_manifest(plan, result, root / "manifest.json");
}

}  // namespace droneq
