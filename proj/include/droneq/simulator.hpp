#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "droneq/queueing.hpp"

namespace droneq {

// Queue discipline applied when a server frees up. Non-preemptive in all
// cases: fcfs takes the earliest arrival, static the lowest class index,
// dynamic the largest accrued priority a_r + (now - arrival), which orders
// the same as the smallest arrival - a_r.
enum class Discipline { Fcfs, Static, Dynamic };

std::string to_string(Discipline d);
Discipline discipline_from_string(const std::string& s);

// The discipline each waiting-time model assumes.
Discipline discipline_for(Model model);

struct SimConfig {
    double horizon = 30000;        // minutes of arrivals per replication
    double warmup_fraction = 0.1;  // arrivals before this point are discarded
    int replications = 10;
    std::uint64_t seed = 0;
    Discipline discipline = Discipline::Fcfs;
    bool allow_unstable = false;   // skip the stability pre-check
    bool record_event_log = false;
    std::vector<double> tail_grid; // empty = 0,1,...,20
};

// One served request. Departure is start + service.
struct ServiceEvent {
    int facility = 0;
    int node = 0;
    int cls = 1;
    double arrival = 0;
    double start = 0;
    double service = 0;

    friend bool operator==(const ServiceEvent&, const ServiceEvent&) = default;
};

// Mean with a 95% Student-t confidence interval over replications.
struct SummaryStat {
    double mean = 0;
    double sd = 0;
    double ci_half = 0;
    std::vector<double> per_rep;
};

// Raw in-window tallies of one replication.
struct ReplicationTotals {
    std::vector<std::vector<double>> wait_sum;      // [node][class]
    std::vector<std::vector<long>> served;          // [node][class]
    std::vector<std::vector<double>> fac_wait_sum;  // [facility][class]
    std::vector<std::vector<long>> fac_served;      // [facility][class]
    std::vector<std::vector<long>> tail_over;       // [class][grid]: waits > t
    std::vector<long> class_served;                 // [class]
};

struct SimReport {
    int num_classes = 1;
    double horizon = 0;
    double window_start = 0;
    std::vector<double> tail_grid;
    std::vector<ReplicationTotals> reps;
    std::vector<std::vector<ServiceEvent>> event_logs;  // [rep]; empty unless recorded

    std::vector<SummaryStat> wait_by_class;      // job-average waiting time
    std::vector<SummaryStat> z_by_class;         // max node travel + mean wait
    std::vector<SummaryStat> sum_wait_by_class;  // rate-weighted waiting
    std::vector<SummaryStat> sum_resp_by_class;  // rate-weighted response
    std::vector<std::vector<double>> tail_by_class;  // [class][grid]: P(wait > t)
    long total_served = 0;
};

// Event-driven simulation of every open facility as an M/G/k queue with
// deterministic per-node service times. Arrival streams come from
// per-(replication, node) substreams of the seed, so two runs that differ
// only in discipline or routing see identical arrivals.
SimReport simulate(const Instance& instance, const Assignment& assignment,
                   const SimConfig& config);

// Relative per-class gaps (x - y) / y computed replication by replication.
struct PairedGaps {
    std::vector<SummaryStat> z_gap;     // on z_by_class
    std::vector<SummaryStat> wait_gap;  // on wait_by_class
};

PairedGaps paired_gap(const SimReport& x, const SimReport& y);

// Runs each (discipline, assignment) pair under the same seed; reports are
// paired through the substream layout.
std::vector<SimReport> paired_compare(
    const Instance& instance, const std::vector<std::pair<Discipline, Assignment>>& runs,
    const SimConfig& config);

std::string sim_report_to_json(const SimReport& report);
void write_sim_report(const SimReport& report, const std::string& path);

// CSV with one row per served request: rep, arrival, start, departure,
// node, class, facility.
void write_event_log_csv(const SimReport& report, const std::string& path);

// Two-sided 95% critical value of Student's t.
double student_t95(int df);

}  // namespace droneq
