#pragma once

// Hand-built micro instances for tests. Speed is fixed at 60 km/h so travel
// minutes equal straight-line kilometres, which keeps expected values exact.

#include <utility>
#include <vector>

#include "droneq/instance.hpp"
#include "droneq/queueing.hpp"
#include "droneq/rng.hpp"

namespace droneq::testing {

struct NodeSpec {
    NodeSpec(double x_, double lambda_, std::vector<double> probs_ = {}, int cls_ = 1)
        : x(x_), lambda(lambda_), probs(std::move(probs_)), cls(cls_) {}
    double x;
    double lambda;
    std::vector<double> probs;  // SP class split
    int cls;                    // DP fixed class
};

inline Instance micro(Mode mode, const std::vector<NodeSpec>& nodes,
                      const std::vector<double>& facility_x, int num_classes = 1,
                      std::vector<double> weights = {1.0},
                      std::vector<double> initial_values = {}) {
    Instance inst;
    inst.mode = mode;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        DemandNode n;
        n.id = static_cast<int>(i);
        n.x = nodes[i].x;
        n.lambda = nodes[i].lambda;
        n.class_probs = nodes[i].probs;
        n.fixed_class = nodes[i].cls;
        inst.nodes.push_back(n);
    }
    for (std::size_t j = 0; j < facility_x.size(); ++j)
        inst.facilities.push_back({static_cast<int>(j), facility_x[j], 0});
    inst.fleet.speed_kmh = 60;
    inst.fleet.endurance_min = 1000;
    inst.priority.num_classes = num_classes;
    inst.priority.weights = std::move(weights);
    inst.priority.initial_values = std::move(initial_values);
    inst.rebuild_travel();
    return inst;
}

// Everything routed to facility j with k drones there.
inline Assignment all_to(const Instance& inst, Model model, int j, int k) {
    Assignment a;
    a.model = model;
    a.open.assign(inst.num_facilities(), 0);
    a.open[j] = 1;
    a.drones.assign(inst.num_facilities(), 0);
    a.drones[j] = k;
    a.unit_facility.assign(demand_units(inst, model).size(), j);
    return a;
}

// Spec's worked examples.
inline Instance np_single() { return micro(Mode::NP, {{1, 0.4}}, {0}); }

inline Instance np_pair() { return micro(Mode::NP, {{2, 0.3}, {1, 0.2}}, {0}); }

inline Instance sp_half() {
    return micro(Mode::SP, {{1, 1.0, {0.5, 0.5}}}, {0}, 2, {0.7, 0.3});
}

inline Instance dp_pair(double delta = 3.0) {
    return micro(Mode::DP, {{1, 0.4, {}, 1}, {1, 0.4, {}, 2}}, {0}, 2, {0.7, 0.3},
                 {delta, 0.0});
}

// Random stable system for property tests: every demand unit routed to a
// random facility, drones at the minimum stable count plus random slack.
struct RandomSystem {
    Instance inst;
    Assignment asg;
};

inline RandomSystem random_system(Rng& rng, Model model, int max_nodes = 4, int max_facilities = 3,
                                  int max_classes = 2) {
    const Mode mode = model == Model::NP   ? Mode::NP
                      : model == Model::SP ? Mode::SP
                                           : Mode::DP;
    const int n = 1 + static_cast<int>(rng.uniform_int(max_nodes));
    const int J = 1 + static_cast<int>(rng.uniform_int(max_facilities));
    const int R = mode == Mode::NP ? 1 : max_classes;

    Instance inst;
    inst.mode = mode;
    for (int i = 0; i < n; ++i) {
        DemandNode node;
        node.id = i;
        node.x = rng.uniform(0.5, 10);
        node.y = rng.uniform(0.5, 10);
        node.lambda = rng.uniform(0.1, 0.8);
        if (mode == Mode::SP) {
            if (R == 1) {
                node.class_probs = {1.0};
            } else {
                const double v1 = rng.uniform(0.1, 0.9);
                node.class_probs = {v1, 1.0 - v1};
            }
        } else if (mode == Mode::DP) {
            node.fixed_class = 1 + static_cast<int>(rng.uniform_int(R));
        }
        inst.nodes.push_back(node);
    }
    for (int j = 0; j < J; ++j)
        inst.facilities.push_back({j, rng.uniform(0, 10), rng.uniform(0, 10)});
    inst.fleet.speed_kmh = 60;
    inst.fleet.endurance_min = 1000;
    inst.priority.num_classes = R;
    if (R == 1) {
        inst.priority.weights = {1.0};
    } else {
        const double w1 = rng.uniform(0.2, 0.8);
        inst.priority.weights = {w1, 1.0 - w1};
    }
    if (mode == Mode::DP) inst.priority.initial_values = {rng.uniform(0.5, 5), 0.0};
    inst.rebuild_travel();

    Assignment asg;
    asg.model = model;
    asg.open.assign(J, 0);
    asg.drones.assign(J, 0);
    const auto units = demand_units(inst, model);
    std::vector<double> load(J, 0.0);
    for (const DemandUnit& u : units) {
        const int j = static_cast<int>(rng.uniform_int(J));
        asg.unit_facility.push_back(j);
        asg.open[j] = 1;
        load[j] += u.rate * inst.service_time(u.node, j);
    }
    for (int j = 0; j < J; ++j)
        if (load[j] > 0)
            asg.drones[j] = static_cast<int>(load[j]) + 2 + static_cast<int>(rng.uniform_int(3));
    for (int j = 0; j < J; ++j)
        if (asg.drones[j] == 0) asg.open[j] = 0;
    return {std::move(inst), std::move(asg)};
}

}  // namespace droneq::testing
