#include "droneq/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <queue>
#include <set>
#include <sstream>

#include "droneq/rng.hpp"

namespace droneq {

std::string to_string(Discipline d) {
    switch (d) {
        case Discipline::Fcfs: return "fcfs";
        case Discipline::Static: return "static";
        case Discipline::Dynamic: return "dynamic";
    }
    return "fcfs";
}

Discipline discipline_from_string(const std::string& s) {
    if (s == "fcfs") return Discipline::Fcfs;
    if (s == "static") return Discipline::Static;
    if (s == "dynamic") return Discipline::Dynamic;
    throw ParseError("unknown discipline '" + s + "' (expected fcfs, static, or dynamic)");
}

Discipline discipline_for(Model model) {
    switch (model) {
        case Model::NP: return Discipline::Fcfs;
        case Model::SP: return Discipline::Static;
        case Model::DP: return Discipline::Dynamic;
    }
    return Discipline::Fcfs;
}

double student_t95(int df) {
    static constexpr double table[] = {
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
        2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
        2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
    if (df < 1) return 0.0;
    if (df <= 30) return table[df - 1];
    return 1.96;
}

namespace {

constexpr double kInfT = std::numeric_limits<double>::infinity();

struct Arrival {
    double T = 0;
    int node = 0;
    int cls = 1;
    long seq = 0;
};

// Waiting request with its precomputed discipline key. All three
// disciplines order by (key1, arrival, node, seq): fcfs uses key1 =
// arrival, static the class index, dynamic arrival - a_class.
struct WaitingJob {
    double key1 = 0;
    double T = 0;
    int node = 0;
    int cls = 1;
    long seq = 0;

    bool operator<(const WaitingJob& o) const {
        if (key1 != o.key1) return key1 < o.key1;
        if (T != o.T) return T < o.T;
        if (node != o.node) return node < o.node;
        return seq < o.seq;
    }
};

SummaryStat summarize(std::vector<double> per_rep) {
    SummaryStat s;
    s.per_rep = std::move(per_rep);
    const int n = static_cast<int>(s.per_rep.size());
    if (n == 0) return s;
    for (double v : s.per_rep) s.mean += v;
    s.mean /= n;
    if (n >= 2) {
        double ss = 0;
        for (double v : s.per_rep) ss += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(ss / (n - 1));
        s.ci_half = student_t95(n - 1) * s.sd / std::sqrt(static_cast<double>(n));
    }
    return s;
}

}  // namespace

SimReport simulate(const Instance& inst, const Assignment& asg, const SimConfig& cfg) {
    const int n = inst.num_nodes();
    const int J = inst.num_facilities();
    const int R = inst.num_classes();
    const auto units = demand_units(inst, asg.model);
    if (static_cast<int>(asg.drones.size()) != J ||
        asg.unit_facility.size() != units.size())
        throw ValidationError("assignment shape mismatch");
    if (cfg.horizon <= 0) throw ValidationError("horizon must be positive");
    if (cfg.replications < 1) throw ValidationError("replications must be >= 1");
    if (cfg.discipline == Discipline::Dynamic &&
        static_cast<int>(inst.priority.initial_values.size()) < R)
        throw ValidationError("dynamic discipline needs initial priority values per class");

    // Class-resolved routing: route[i][r-1] is the facility serving class-r
    // requests from node i, -1 when that class never arrives there.
    std::vector<std::vector<int>> route(n, std::vector<int>(R, -1));
    for (std::size_t u = 0; u < units.size(); ++u) {
        const int j = asg.unit_facility[u];
        if (j < 0 || j >= J) throw ValidationError("unit routed outside facility range");
        if (asg.model == Model::NP)
            for (int r = 0; r < R; ++r) route[units[u].node][r] = j;
        else
            route[units[u].node][units[u].cls - 1] = j;
    }

    // Stability pre-check on the analytic load.
    std::vector<double> load(J, 0.0);
    for (std::size_t u = 0; u < units.size(); ++u)
        load[asg.unit_facility[u]] += units[u].rate * inst.service_time(units[u].node,
                                                                        asg.unit_facility[u]);
    for (int j = 0; j < J; ++j) {
        if (load[j] == 0) continue;
        if (asg.drones[j] == 0)
            throw ValidationError("facility " + std::to_string(j) + " has demand but no drones");
        if (!cfg.allow_unstable && asg.drones[j] - load[j] < kStabilityMargin)
            throw StabilityError(j, load[j], asg.drones[j]);
    }

    SimReport rep;
    rep.num_classes = R;
    rep.horizon = cfg.horizon;
    rep.window_start = cfg.warmup_fraction * cfg.horizon;
    if (cfg.tail_grid.empty())
        for (int t = 0; t <= 20; ++t) rep.tail_grid.push_back(t);
    else
        rep.tail_grid = cfg.tail_grid;
    const int G = static_cast<int>(rep.tail_grid.size());

    const std::vector<double>& a_vals = inst.priority.initial_values;
    std::vector<std::vector<Arrival>> by_facility(J);

    for (int r = 0; r < cfg.replications; ++r) {
        ReplicationTotals tot;
        tot.wait_sum.assign(n, std::vector<double>(R, 0.0));
        tot.served.assign(n, std::vector<long>(R, 0));
        tot.fac_wait_sum.assign(J, std::vector<double>(R, 0.0));
        tot.fac_served.assign(J, std::vector<long>(R, 0));
        tot.tail_over.assign(R, std::vector<long>(G, 0));
        tot.class_served.assign(R, 0);
        std::vector<ServiceEvent> events;

        for (auto& v : by_facility) v.clear();
        for (int i = 0; i < n; ++i) {
            Rng gen = Rng::substream(cfg.seed, static_cast<std::uint64_t>(r),
                                     static_cast<std::uint64_t>(i));
            double t = 0;
            long seq = 0;
            while (true) {
                t += gen.exponential(inst.nodes[i].lambda);
                if (t >= cfg.horizon) break;
                int cls = 1;
                if (inst.mode == Mode::SP) {
                    const double u = gen.uniform01();
                    double cum = 0;
                    for (cls = 1; cls < R; ++cls) {
                        cum += inst.class_prob(i, cls);
                        if (u < cum) break;
                    }
                } else if (inst.mode == Mode::DP) {
                    cls = inst.nodes[i].fixed_class;
                }
                const int j = route[i][cls - 1];
                if (j < 0)
                    throw ValidationError("arrival of class " + std::to_string(cls) +
                                          " at node " + std::to_string(i) + " has no route");
                by_facility[j].push_back({t, i, cls, seq++});
            }
        }

        for (int j = 0; j < J; ++j) {
            std::vector<Arrival>& arr = by_facility[j];
            if (arr.empty()) continue;
            std::sort(arr.begin(), arr.end(), [](const Arrival& a, const Arrival& b) {
                if (a.T != b.T) return a.T < b.T;
                if (a.node != b.node) return a.node < b.node;
                return a.seq < b.seq;
            });
            const int k = asg.drones[j];
            std::priority_queue<double, std::vector<double>, std::greater<>> busy;
            std::multiset<WaitingJob> waiting;
            std::size_t ai = 0;

            auto start_service = [&](double T, int node, int cls, double at) {
                const double wait = at - T;
                const double s = inst.service_time(node, j);
                busy.push(at + s);
                if (T >= rep.window_start) {
                    tot.wait_sum[node][cls - 1] += wait;
                    tot.served[node][cls - 1] += 1;
                    tot.fac_wait_sum[j][cls - 1] += wait;
                    tot.fac_served[j][cls - 1] += 1;
                    tot.class_served[cls - 1] += 1;
                    for (int g = 0; g < G; ++g)
                        if (wait > rep.tail_grid[g]) tot.tail_over[cls - 1][g] += 1;
                }
                if (cfg.record_event_log) events.push_back({j, node, cls, T, at, s});
            };

            while (ai < arr.size() || !busy.empty()) {
                const double ta = ai < arr.size() ? arr[ai].T : kInfT;
                if (!busy.empty() && busy.top() <= ta) {
                    const double td = busy.top();
                    busy.pop();
                    if (!waiting.empty()) {
                        const WaitingJob job = *waiting.begin();
                        waiting.erase(waiting.begin());
                        start_service(job.T, job.node, job.cls, td);
                    }
                } else {
                    const Arrival& a = arr[ai++];
                    if (static_cast<int>(busy.size()) < k) {
                        start_service(a.T, a.node, a.cls, a.T);
                    } else {
                        WaitingJob job{a.T, a.T, a.node, a.cls, a.seq};
                        if (cfg.discipline == Discipline::Static)
                            job.key1 = a.cls;
                        else if (cfg.discipline == Discipline::Dynamic)
                            job.key1 = a.T - a_vals[a.cls - 1];
                        waiting.insert(job);
                    }
                }
            }
        }

        if (cfg.record_event_log) {
            std::sort(events.begin(), events.end(),
                      [](const ServiceEvent& a, const ServiceEvent& b) {
                          if (a.start != b.start) return a.start < b.start;
                          if (a.facility != b.facility) return a.facility < b.facility;
                          if (a.node != b.node) return a.node < b.node;
                          if (a.arrival != b.arrival) return a.arrival < b.arrival;
                          return a.cls < b.cls;
                      });
            rep.event_logs.push_back(std::move(events));
        }
        rep.reps.push_back(std::move(tot));
    }

    // Analytic per-(node, class) arrival rates for the rate-weighted sums.
    std::vector<std::vector<double>> rate(n, std::vector<double>(R, 0.0));
    for (int i = 0; i < n; ++i)
        for (int c = 1; c <= R; ++c) rate[i][c - 1] = inst.nodes[i].lambda * inst.class_prob(i, c);

    for (int c = 0; c < R; ++c) {
        std::vector<double> w(cfg.replications, 0.0), z(cfg.replications, 0.0);
        std::vector<double> sw(cfg.replications, 0.0), sz(cfg.replications, 0.0);
        for (int rr = 0; rr < cfg.replications; ++rr) {
            const ReplicationTotals& tot = rep.reps[rr];
            double sum = 0;
            long cnt = 0;
            for (int i = 0; i < n; ++i) {
                sum += tot.wait_sum[i][c];
                cnt += tot.served[i][c];
                if (route[i][c] < 0) continue;
                const double mean_i =
                    tot.served[i][c] > 0 ? tot.wait_sum[i][c] / tot.served[i][c] : 0.0;
                const double travel = inst.travel(i, route[i][c]);
                if (tot.served[i][c] > 0) z[rr] = std::max(z[rr], travel + mean_i);
                sw[rr] += rate[i][c] * mean_i;
                sz[rr] += rate[i][c] * (travel + mean_i);
            }
            w[rr] = cnt > 0 ? sum / cnt : 0.0;
            rep.total_served += cnt;
        }
        rep.wait_by_class.push_back(summarize(std::move(w)));
        rep.z_by_class.push_back(summarize(std::move(z)));
        rep.sum_wait_by_class.push_back(summarize(std::move(sw)));
        rep.sum_resp_by_class.push_back(summarize(std::move(sz)));
    }

    rep.tail_by_class.assign(R, std::vector<double>(G, 0.0));
    for (int c = 0; c < R; ++c)
        for (int g = 0; g < G; ++g) {
            double acc = 0;
            for (const ReplicationTotals& tot : rep.reps)
                if (tot.class_served[c] > 0)
                    acc += static_cast<double>(tot.tail_over[c][g]) / tot.class_served[c];
            rep.tail_by_class[c][g] = acc / cfg.replications;
        }
    return rep;
}

PairedGaps paired_gap(const SimReport& x, const SimReport& y) {
    if (x.num_classes != y.num_classes || x.reps.size() != y.reps.size())
        throw ValidationError("reports are not paired");
    PairedGaps gaps;
    const int nrep = static_cast<int>(x.reps.size());
    for (int c = 0; c < x.num_classes; ++c) {
        std::vector<double> gz(nrep, 0.0), gw(nrep, 0.0);
        for (int r = 0; r < nrep; ++r) {
            const double zy = y.z_by_class[c].per_rep[r];
            const double wy = y.wait_by_class[c].per_rep[r];
            gz[r] = zy > 0 ? (x.z_by_class[c].per_rep[r] - zy) / zy : 0.0;
            gw[r] = wy > 0 ? (x.wait_by_class[c].per_rep[r] - wy) / wy : 0.0;
        }
        gaps.z_gap.push_back(summarize(std::move(gz)));
        gaps.wait_gap.push_back(summarize(std::move(gw)));
    }
    return gaps;
}

std::vector<SimReport> paired_compare(const Instance& inst,
                                      const std::vector<std::pair<Discipline, Assignment>>& runs,
                                      const SimConfig& cfg) {
    std::vector<SimReport> out;
    out.reserve(runs.size());
    for (const auto& [disc, asg] : runs) {
        SimConfig c = cfg;
        c.discipline = disc;
        out.push_back(simulate(inst, asg, c));
    }
    return out;
}

namespace {

nlohmann::ordered_json stat_json(const SummaryStat& s) {
    return {{"mean", s.mean}, {"sd", s.sd}, {"ci95_half", s.ci_half}, {"per_rep", s.per_rep}};
}

}  // namespace

std::string sim_report_to_json(const SimReport& rep) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["num_classes"] = rep.num_classes;
    j["horizon"] = rep.horizon;
    j["window_start"] = rep.window_start;
    j["replications"] = rep.reps.size();
    j["total_served"] = rep.total_served;
    j["tail_grid"] = rep.tail_grid;
    auto by_class = [&](const char* key, const std::vector<SummaryStat>& v) {
        j[key] = nlohmann::ordered_json::array();
        for (const SummaryStat& s : v) j[key].push_back(stat_json(s));
    };
    by_class("wait_by_class", rep.wait_by_class);
    by_class("z_by_class", rep.z_by_class);
    by_class("sum_wait_by_class", rep.sum_wait_by_class);
    by_class("sum_resp_by_class", rep.sum_resp_by_class);
    j["tail_by_class"] = rep.tail_by_class;
    return j.dump(2) + "\n";
}

void write_sim_report(const SimReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write report file: " + path);
    out << sim_report_to_json(rep);
}

void write_event_log_csv(const SimReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write event log file: " + path);
    out << "rep,arrival,start,departure,node,class,facility\n";
    std::ostringstream line;
    line.precision(17);
    for (std::size_t r = 0; r < rep.event_logs.size(); ++r)
        for (const ServiceEvent& e : rep.event_logs[r]) {
            line.str("");
            line << r << ',' << e.arrival << ',' << e.start << ',' << e.start + e.service << ','
                 << e.node << ',' << e.cls << ',' << e.facility;
            out << line.str() << '\n';
        }
}

}  // namespace droneq
