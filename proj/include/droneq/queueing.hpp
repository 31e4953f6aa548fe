#pragma once

#include <cstdint>
#include <vector>

#include "droneq/instance.hpp"

namespace droneq {

// Which waiting-time model an assignment is evaluated under. Decoupled from
// Instance::mode: an sp-flavored instance can be solved as a plain FCFS
// system (Model::NP) for like-for-like comparisons.
enum class Model { NP, SP, DP };

std::string to_string(Model model);
Model model_from_string(const std::string& s);

// One Poisson demand stream that is routed as a whole. Under NP and DP a
// unit is a node; under SP it is a (node, class) pair with rate
// lambda_i * v_ir, and pairs with v_ir = 0 are dropped.
struct DemandUnit {
    int node = 0;
    int cls = 1;       // 1-based
    double rate = 0;   // requests per minute
};

std::vector<DemandUnit> demand_units(const Instance& instance, Model model);

struct Assignment {
    Model model = Model::NP;
    std::vector<std::uint8_t> open;       // per facility
    std::vector<int> drones;              // per facility, 0 when closed
    std::vector<int> unit_facility;       // aligned with demand_units(instance, model)

    int total_drones() const;
};

// Per-facility aggregates used by every discipline's waiting formula.
struct FacilityAnalytics {
    double gamma = 0;    // total arrival rate (requests/min)
    double load = 0;     // sum of lambda * service (busy drones)
    double moment1 = 0;  // E[tau]: service time of a random request
    double moment2 = 0;  // E[tau^2]
    double wait_fcfs = 0;                // W_j
    std::vector<double> gamma_r;         // per class
    std::vector<double> load_r;          // per class
    std::vector<double> rho_r;           // load_r / k
    std::vector<double> wait_r;          // W_jr under the assignment's model
};

struct QueueAnalytics {
    std::vector<FacilityAnalytics> facility;
};

inline constexpr double kStabilityMargin = 1e-6;  // required k_j - load_j slack

// Expected queueing delay (minutes) at facility j under FCFS.
double waiting_np(const Instance& instance, const Assignment& assignment, int j);

// Expected class-r delay under static non-preemptive priority.
double waiting_sp(const Instance& instance, const Assignment& assignment, int j, int r);

// Upper bound on the class-r delay under the linear dynamic priority rule.
double waiting_dp(const Instance& instance, const Assignment& assignment, int j, int r);

QueueAnalytics analyze(const Instance& instance, const Assignment& assignment);

struct Objective {
    double Z = 0;                 // weighted sum of per-class maxima
    std::vector<double> Z_r;      // max assigned response time per class
};

Objective objective(const Instance& instance, const Assignment& assignment);

struct ClassMetrics {
    double Z = 0;      // max assigned response time
    double sumZ = 0;   // rate-weighted total response time
    double W = 0;      // max assigned waiting time
    double sumW = 0;   // rate-weighted total waiting time
};

std::vector<ClassMetrics> report_metrics(const Instance& instance, const Assignment& assignment);

}  // namespace droneq
