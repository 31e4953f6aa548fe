#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "droneq/instance.hpp"
#include "droneq/simulator.hpp"
#include "droneq/solver.hpp"

namespace droneq {

enum class Sweep { Alpha, Weights, Delta, Compare };

std::string to_string(Sweep s);
Sweep sweep_from_string(const std::string& s);

// One experiment campaign: a batch of seeded instances from a preset, a
// sweep variable and grid, and the shared solve/simulate settings.
struct ExperimentPlan {
    Sweep sweep = Sweep::Alpha;
    GenConfig preset;
    int num_seeds = 20;
    std::uint64_t base_seed = 1;     // instance s uses seed base_seed + s
    std::vector<double> grid;        // empty = default_grid(sweep)
    double alpha = 0.2;              // fixed spare ratio for non-alpha sweeps
    Model model = Model::SP;         // solved model for alpha/weights/delta
    SimConfig sim;
    bool run_sim = true;
    SearchParams search;

    void validate() const;
};

std::vector<double> default_grid(Sweep sweep);

// One solved (and optionally simulated) scenario point. Per-class vectors
// are indexed by class - 1 and sized by the instance's class count.
struct ExperimentRow {
    std::uint64_t seed = 0;
    double sweep_value = 0;
    std::string model;               // np | sp | dp
    double alpha = 0, w1 = 0, delta_a = 0;
    int k_star = 0, K = 0;
    double Z = 0;                    // solved objective
    std::vector<double> Z_r, sumZ_r, W_r, sumW_r;          // analytic, class-resolved
    std::vector<double> gap_Z_r, gap_W_r;                  // vs the np system (compare)
    std::vector<double> sim_Z_r, sim_W_r, sim_W_ci_r;      // simulated (means, CI)
    double solve_ms = 0, sim_ms = 0;
    std::string error;               // nonempty when this point failed
};

struct TailRow {
    std::uint64_t seed = 0;
    std::string model;
    int cls = 1;
    std::vector<double> p;           // P(wait > t) on the tail grid
};

struct ExperimentResult {
    std::vector<ExperimentRow> rows;
    std::vector<TailRow> tails;
    std::vector<double> tail_grid;
    int num_classes = 1;
    bool any_error = false;
};

// Class-resolved analytics of an assignment: response/waiting maxima and
// rate-weighted totals per arrival class, under the assignment's own
// waiting model.
struct ClassBreakdown {
    std::vector<double> Z_r, sumZ_r, W_r, sumW_r;
};

ClassBreakdown class_breakdown(const Instance& instance, const Assignment& assignment);

ExperimentResult run_alpha_sweep(const ExperimentPlan& plan);
ExperimentResult run_weight_sweep(const ExperimentPlan& plan);
ExperimentResult run_delta_sweep(const ExperimentPlan& plan);
ExperimentResult run_discipline_compare(const ExperimentPlan& plan);
ExperimentResult run_experiment(const ExperimentPlan& plan);

// Linear-interpolation quantile (the spreadsheet rule): h = (n-1)p,
// interpolating between the floor(h)-th and next order statistics.
double quantile(std::vector<double> values, double p);

// Writes rows.csv, summary.csv, tails.csv, manifest.json into plan dir.
void write_experiment(const ExperimentPlan& plan, const ExperimentResult& result,
                      const std::string& dir);

}  // namespace droneq
