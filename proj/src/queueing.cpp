#include "droneq/queueing.hpp"

#include <algorithm>
#include <cmath>

namespace droneq {

std::string to_string(Model model) {
    switch (model) {
        case Model::NP: return "np";
        case Model::SP: return "sp";
        case Model::DP: return "dp";
    }
    return "np";
}

Model model_from_string(const std::string& s) {
    if (s == "np") return Model::NP;
    if (s == "sp") return Model::SP;
    if (s == "dp") return Model::DP;
    throw ParseError("unknown model '" + s + "' (expected np, sp, or dp)");
}

std::vector<DemandUnit> demand_units(const Instance& inst, Model model) {
    std::vector<DemandUnit> units;
    if (model == Model::SP) {
        const int R = inst.num_classes();
        for (int i = 0; i < inst.num_nodes(); ++i)
            for (int r = 1; r <= R; ++r) {
                const double v = inst.class_prob(i, r);
                if (v > 0) units.push_back({i, r, inst.nodes[i].lambda * v});
            }
    } else {
        for (int i = 0; i < inst.num_nodes(); ++i) {
            const int cls = (model == Model::DP) ? inst.nodes[i].fixed_class : 1;
            units.push_back({i, cls, inst.nodes[i].lambda});
        }
    }
    return units;
}

int Assignment::total_drones() const {
    int total = 0;
    for (int k : drones) total += k;
    return total;
}

namespace {

// Number of classes the waiting formulas distinguish: FCFS pools everything.
int view_classes(const Instance& inst, Model model) {
    return model == Model::NP ? 1 : inst.num_classes();
}

struct FacilityAgg {
    double N = 0;           // sum of rate * service^2 over assigned units
    double load_total = 0;  // sum of rate * service, in unit order
    double gamma = 0;
    std::vector<double> load_r, gamma_r;

    explicit FacilityAgg(int R) : load_r(R, 0.0), gamma_r(R, 0.0) {}

    void add(double rate, double service, int cls) {
        N += rate * service * service;
        load_total += rate * service;
        gamma += rate;
        load_r[cls - 1] += rate * service;
        gamma_r[cls - 1] += rate;
    }
};

FacilityAgg aggregate(const Instance& inst, const Assignment& asg,
                      const std::vector<DemandUnit>& units, int j, int R) {
    FacilityAgg agg(R);
    for (std::size_t u = 0; u < units.size(); ++u)
        if (asg.unit_facility[u] == j)
            agg.add(units[u].rate, inst.service_time(units[u].node, j),
                    asg.model == Model::NP ? 1 : units[u].cls);
    return agg;
}

void check_stable(const FacilityAgg& agg, double k, int j) {
    if (agg.load_total > 0 && k - agg.load_total < kStabilityMargin)
        throw StabilityError(j, agg.load_total, k);
}

// W_jr for every class at one facility. The FCFS value is the single-class
// case of the priority formula, computed through the identical expressions,
// so collapsing the model (one class, or zero priority increments) returns
// bit-identical numbers.
std::vector<double> waits_from_agg(const FacilityAgg& agg, double k, Model model,
                                   const PriorityParams& prio, int j) {
    const int R = static_cast<int>(agg.load_r.size());
    std::vector<double> waits(R, 0.0);
    if (agg.gamma == 0) return waits;
    check_stable(agg, k, j);

    if (model == Model::SP) {
        double cum_prev = 0.0;
        for (int r = 1; r <= R; ++r) {
            const double cum = cum_prev + agg.load_r[r - 1];
            waits[r - 1] = agg.N / ((2.0 * (k - cum)) * (k - cum_prev));
            cum_prev = cum;
        }
    } else {
        const double fcfs = agg.N / ((2.0 * (k - agg.load_total)) * k);
        for (int r = 1; r <= R; ++r) {
            double w = fcfs;
            if (model == Model::DP)
                for (int l = 1; l < r; ++l)
                    w += prio.delta_a(l - 1, r - 1) *
                         ((agg.load_total * agg.load_r[l - 1]) / (k * k));
            waits[r - 1] = w;
        }
    }
    return waits;
}

// Waits at facility j with the discipline forced to `formula`, routing and
// class structure taken from the assignment's own unit view.
std::vector<double> waits_under(const Instance& inst, const Assignment& asg, int j,
                                Model formula) {
    if (formula == Model::DP && inst.mode != Mode::DP)
        throw ValidationError("dynamic priority requires an instance with fixed classes");
    const auto units = demand_units(inst, asg.model);
    const int R = view_classes(inst, formula);
    FacilityAgg agg(R);
    for (std::size_t u = 0; u < units.size(); ++u)
        if (asg.unit_facility[u] == j)
            agg.add(units[u].rate, inst.service_time(units[u].node, j),
                    formula == Model::NP ? 1 : units[u].cls);
    return waits_from_agg(agg, asg.drones[j], formula, inst.priority, j);
}

int checked_class(int r, int R) {
    if (r < 1 || r > R) throw ValidationError("class index out of range");
    return r;
}

}  // namespace

double waiting_np(const Instance& inst, const Assignment& asg, int j) {
    return waits_under(inst, asg, j, Model::NP)[0];
}

double waiting_sp(const Instance& inst, const Assignment& asg, int j, int r) {
    const auto waits = waits_under(inst, asg, j, Model::SP);
    return waits[checked_class(r, static_cast<int>(waits.size())) - 1];
}

double waiting_dp(const Instance& inst, const Assignment& asg, int j, int r) {
    const auto waits = waits_under(inst, asg, j, Model::DP);
    return waits[checked_class(r, static_cast<int>(waits.size())) - 1];
}

QueueAnalytics analyze(const Instance& inst, const Assignment& asg) {
    if (asg.model == Model::DP && inst.mode != Mode::DP)
        throw ValidationError("dynamic priority requires an instance with fixed classes");
    const auto units = demand_units(inst, asg.model);
    const int R = view_classes(inst, asg.model);
    QueueAnalytics out;
    out.facility.resize(inst.num_facilities());
    for (int j = 0; j < inst.num_facilities(); ++j) {
        const FacilityAgg agg = aggregate(inst, asg, units, j, R);
        FacilityAnalytics& fa = out.facility[j];
        fa.gamma = agg.gamma;
        fa.load = agg.load_total;
        fa.gamma_r = agg.gamma_r;
        fa.load_r = agg.load_r;
        fa.moment1 = agg.gamma > 0 ? agg.load_total / agg.gamma : 0.0;
        fa.moment2 = agg.gamma > 0 ? agg.N / agg.gamma : 0.0;
        fa.rho_r.assign(R, 0.0);
        const double k = asg.drones[j];
        if (k > 0)
            for (int r = 0; r < R; ++r) fa.rho_r[r] = agg.load_r[r] / k;
        fa.wait_r = waits_from_agg(agg, k, asg.model, inst.priority, j);
        fa.wait_fcfs = waits_from_agg(agg, k, Model::NP, inst.priority, j)[0];
    }
    return out;
}

Objective objective(const Instance& inst, const Assignment& asg) {
    const auto units = demand_units(inst, asg.model);
    const int R = view_classes(inst, asg.model);
    const QueueAnalytics qa = analyze(inst, asg);
    Objective obj;
    obj.Z_r.assign(R, 0.0);
    for (std::size_t u = 0; u < units.size(); ++u) {
        const int j = asg.unit_facility[u];
        const int r = asg.model == Model::NP ? 1 : units[u].cls;
        const double resp = inst.travel(units[u].node, j) + qa.facility[j].wait_r[r - 1];
        obj.Z_r[r - 1] = std::max(obj.Z_r[r - 1], resp);
    }
    if (asg.model == Model::NP) {
        obj.Z = obj.Z_r[0];
    } else {
        for (int r = 0; r < R; ++r) obj.Z += inst.priority.weights[r] * obj.Z_r[r];
    }
    return obj;
}

std::vector<ClassMetrics> report_metrics(const Instance& inst, const Assignment& asg) {
    const auto units = demand_units(inst, asg.model);
    const int R = view_classes(inst, asg.model);
    const QueueAnalytics qa = analyze(inst, asg);
    std::vector<ClassMetrics> out(R);
    for (std::size_t u = 0; u < units.size(); ++u) {
        const int j = asg.unit_facility[u];
        const int r = asg.model == Model::NP ? 1 : units[u].cls;
        const double w = qa.facility[j].wait_r[r - 1];
        const double travel = inst.travel(units[u].node, j);
        ClassMetrics& m = out[r - 1];
        m.Z = std::max(m.Z, travel + w);
        m.W = std::max(m.W, w);
        m.sumZ += units[u].rate * (travel + w);
        m.sumW += units[u].rate * w;
    }
    return out;
}

}  // namespace droneq
