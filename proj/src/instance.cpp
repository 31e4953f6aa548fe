#include "droneq/instance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "droneq/rng.hpp"

namespace droneq {

using ordered_json = nlohmann::ordered_json;

std::string to_string(Mode mode) {
    switch (mode) {
        case Mode::NP: return "np";
        case Mode::SP: return "sp";
        case Mode::DP: return "dp";
    }
    return "np";
}

Mode mode_from_string(const std::string& s) {
    if (s == "np") return Mode::NP;
    if (s == "sp") return Mode::SP;
    if (s == "dp") return Mode::DP;
    throw ParseError("unknown mode '" + s + "' (expected np, sp, or dp)");
}

double Instance::class_prob(int i, int r) const {
    const DemandNode& node = nodes[i];
    switch (mode) {
        case Mode::NP: return r == 1 ? 1.0 : 0.0;
        case Mode::SP: return node.class_probs[r - 1];
        case Mode::DP: return node.fixed_class == r ? 1.0 : 0.0;
    }
    return 0.0;
}

Eigen::MatrixXd compute_travel_matrix(const std::vector<DemandNode>& nodes,
                                      const std::vector<Facility>& facilities,
                                      double speed_kmh) {
    Eigen::MatrixXd t(nodes.size(), facilities.size());
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (std::size_t j = 0; j < facilities.size(); ++j)
            t(i, j) = 60.0 * std::hypot(nodes[i].x - facilities[j].x, nodes[i].y - facilities[j].y) /
                      speed_kmh;
    return t;
}

void Instance::rebuild_travel() {
    travel = compute_travel_matrix(nodes, facilities, fleet.speed_kmh);
}

void Instance::validate() const {
    if (nodes.empty()) throw ValidationError("instance must have at least one node");
    if (facilities.empty()) throw ValidationError("instance must have at least one facility");
    if (fleet.speed_kmh <= 0) throw ValidationError("speed_kmh must be positive");
    if (fleet.endurance_min <= 0) throw ValidationError("endurance_min must be positive");
    if (fleet.alpha < 0) throw ValidationError("alpha must be nonnegative");
    if (fleet.k_hard_cap && *fleet.k_hard_cap <= 0)
        throw ValidationError("k_hard_cap must be positive when present");

    const int R = priority.num_classes;
    if (R < 1) throw ValidationError("num_classes must be at least 1");
    if (static_cast<int>(priority.weights.size()) != R)
        throw ValidationError("weights must have one entry per class");
    double wsum = 0;
    for (double w : priority.weights) {
        if (w < 0) throw ValidationError("weights must be nonnegative");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-12) throw ValidationError("weights must sum to 1");

    if (mode == Mode::DP) {
        if (static_cast<int>(priority.initial_values.size()) != R)
            throw ValidationError("initial_values must have one entry per class");
        for (int r = 1; r < R; ++r)
            if (!(priority.initial_values[r - 1] > priority.initial_values[r]))
                throw ValidationError("initial_values must be strictly decreasing");
    }

    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const DemandNode& node = nodes[i];
        if (node.id != static_cast<int>(i)) throw ValidationError("node ids must be contiguous from 0");
        if (!(node.lambda > 0)) throw ValidationError("lambda must be positive");
        if (mode == Mode::SP) {
            if (static_cast<int>(node.class_probs.size()) != R)
                throw ValidationError("class_probs must have one entry per class");
            double vsum = 0;
            for (double v : node.class_probs) {
                if (v < 0) throw ValidationError("class_probs must be nonnegative");
                vsum += v;
            }
            if (std::abs(vsum - 1.0) > 1e-12) throw ValidationError("class_probs must sum to 1");
        } else if (!node.class_probs.empty()) {
            throw ValidationError("class_probs only valid in sp mode");
        }
        if (mode == Mode::DP && (node.fixed_class < 1 || node.fixed_class > R))
            throw ValidationError("fixed_class must lie in 1..num_classes");
    }
    for (std::size_t j = 0; j < facilities.size(); ++j)
        if (facilities[j].id != static_cast<int>(j))
            throw ValidationError("facility ids must be contiguous from 0");

    if (travel.rows() != num_nodes() || travel.cols() != num_facilities())
        throw ValidationError("travel matrix shape mismatch");
    for (int i = 0; i < num_nodes(); ++i) {
        bool reachable = false;
        for (int j = 0; j < num_facilities(); ++j) {
            if (!(travel(i, j) >= 0) || !std::isfinite(travel(i, j)))
                throw ValidationError("travel times must be finite and nonnegative");
            reachable = reachable || travel(i, j) <= fleet.endurance_min;
        }
        if (!reachable)
            throw ValidationError("node " + std::to_string(i) +
                                  " has no facility within endurance");
    }
}

GenConfig GenConfig::sp_paper() {
    GenConfig c;
    c.mode = Mode::SP;
    c.n_nodes = 10;
    c.n_facilities = 6;
    c.lambda_lo = 0.6;
    c.lambda_hi = 1.0;
    return c;
}

GenConfig GenConfig::dp_paper() {
    GenConfig c;
    c.mode = Mode::DP;
    c.n_nodes = 11;
    c.n_facilities = 6;
    c.lambda_lo = 0.1;
    c.lambda_hi = 0.5;
    c.n_class1 = 6;
    return c;
}

Instance generate_instance(std::uint64_t seed, const GenConfig& config) {
    if (config.n_nodes <= 0) throw ValidationError("n_nodes must be positive");
    if (config.n_facilities <= 0) throw ValidationError("n_facilities must be positive");

    Rng rng(seed);
    Instance inst;
    inst.mode = config.mode;
    inst.fleet.speed_kmh = config.speed_kmh;
    inst.fleet.endurance_min = config.endurance_min;
    inst.fleet.k_hard_cap = config.k_hard_cap;

    const int R = config.mode == Mode::NP ? 1 : config.num_classes;
    inst.priority.num_classes = R;
    if (config.mode == Mode::NP) {
        inst.priority.weights = {1.0};
    } else {
        inst.priority.weights = config.weights;
    }
    if (config.mode == Mode::DP) inst.priority.initial_values = config.initial_values;

    // Draw order is fixed: node coords, facility coords, lambdas, class data.
    inst.nodes.resize(config.n_nodes);
    for (int i = 0; i < config.n_nodes; ++i) {
        inst.nodes[i].id = i;
        inst.nodes[i].x = rng.uniform(config.coord_lo, config.coord_hi);
        inst.nodes[i].y = rng.uniform(config.coord_lo, config.coord_hi);
    }
    inst.facilities.resize(config.n_facilities);
    for (int j = 0; j < config.n_facilities; ++j) {
        inst.facilities[j].id = j;
        inst.facilities[j].x = rng.uniform(config.coord_lo, config.coord_hi);
        inst.facilities[j].y = rng.uniform(config.coord_lo, config.coord_hi);
    }
    for (int i = 0; i < config.n_nodes; ++i)
        inst.nodes[i].lambda = rng.uniform(config.lambda_lo, config.lambda_hi);

    if (config.mode == Mode::SP) {
        for (int i = 0; i < config.n_nodes; ++i) {
            double v1 = rng.uniform01();
            inst.nodes[i].class_probs = {v1, 1.0 - v1};
            if (R != 2) {
                // Uniform split of the remaining mass across classes 2..R.
                inst.nodes[i].class_probs.assign(R, (1.0 - v1) / (R - 1));
                inst.nodes[i].class_probs[0] = v1;
            }
        }
    } else if (config.mode == Mode::DP) {
        // Partial Fisher-Yates: the first n_class1 slots become class 1.
        std::vector<int> order(config.n_nodes);
        std::iota(order.begin(), order.end(), 0);
        const int picks = std::min(config.n_class1, config.n_nodes);
        for (int i = 0; i < picks; ++i) {
            int j = i + static_cast<int>(rng.uniform_int(config.n_nodes - i));
            std::swap(order[i], order[j]);
        }
        for (int i = 0; i < config.n_nodes; ++i) inst.nodes[i].fixed_class = 2;
        for (int i = 0; i < picks; ++i) inst.nodes[order[i]].fixed_class = 1;
    }

    inst.rebuild_travel();
    inst.validate();
    return inst;
}

namespace {

const ordered_json& require(const ordered_json& obj, const char* field, const char* where) {
    auto it = obj.find(field);
    if (it == obj.end())
        throw ParseError(std::string("missing field '") + field + "' in " + where);
    return *it;
}

double require_num(const ordered_json& obj, const char* field, const char* where) {
    const auto& v = require(obj, field, where);
    if (!v.is_number()) throw ParseError(std::string("field '") + field + "' must be a number");
    return v.get<double>();
}

}  // namespace

std::string instance_to_json(const Instance& inst) {
    ordered_json j;
    j["schema_version"] = 1;
    j["mode"] = to_string(inst.mode);
    j["fleet"] = {{"speed_kmh", inst.fleet.speed_kmh},
                  {"endurance_min", inst.fleet.endurance_min},
                  {"alpha", inst.fleet.alpha}};
    if (inst.fleet.k_hard_cap) j["fleet"]["k_hard_cap"] = *inst.fleet.k_hard_cap;
    j["priority"] = {{"num_classes", inst.priority.num_classes},
                     {"weights", inst.priority.weights}};
    if (inst.mode == Mode::DP) j["priority"]["initial_values"] = inst.priority.initial_values;
    j["round_trip_service"] = inst.round_trip_service;
    j["nodes"] = ordered_json::array();
    for (const DemandNode& n : inst.nodes) {
        ordered_json nj{{"id", n.id}, {"x", n.x}, {"y", n.y}, {"lambda", n.lambda}};
        if (inst.mode == Mode::SP) nj["class_probs"] = n.class_probs;
        if (inst.mode == Mode::DP) nj["fixed_class"] = n.fixed_class;
        j["nodes"].push_back(std::move(nj));
    }
    j["facilities"] = ordered_json::array();
    for (const Facility& f : inst.facilities)
        j["facilities"].push_back(ordered_json{{"id", f.id}, {"x", f.x}, {"y", f.y}});
    return j.dump(2) + "\n";
}

Instance instance_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }

    const int version = static_cast<int>(require_num(j, "schema_version", "document"));
    if (version != 1)
        throw ParseError("unsupported schema_version " + std::to_string(version));

    Instance inst;
    inst.mode = mode_from_string(require(j, "mode", "document").get<std::string>());

    const auto& fleet = require(j, "fleet", "document");
    inst.fleet.speed_kmh = require_num(fleet, "speed_kmh", "fleet");
    inst.fleet.endurance_min = require_num(fleet, "endurance_min", "fleet");
    inst.fleet.alpha = require_num(fleet, "alpha", "fleet");
    if (fleet.contains("k_hard_cap")) inst.fleet.k_hard_cap = fleet["k_hard_cap"].get<int>();

    const auto& prio = require(j, "priority", "document");
    inst.priority.num_classes = static_cast<int>(require_num(prio, "num_classes", "priority"));
    inst.priority.weights = require(prio, "weights", "priority").get<std::vector<double>>();
    if (inst.mode == Mode::DP)
        inst.priority.initial_values =
            require(prio, "initial_values", "priority").get<std::vector<double>>();

    if (j.contains("round_trip_service")) inst.round_trip_service = j["round_trip_service"].get<bool>();

    for (const auto& nj : require(j, "nodes", "document")) {
        DemandNode n;
        n.id = static_cast<int>(require_num(nj, "id", "node"));
        n.x = require_num(nj, "x", "node");
        n.y = require_num(nj, "y", "node");
        n.lambda = require_num(nj, "lambda", "node");
        if (inst.mode == Mode::SP)
            n.class_probs = require(nj, "class_probs", "node").get<std::vector<double>>();
        if (inst.mode == Mode::DP)
            n.fixed_class = static_cast<int>(require_num(nj, "fixed_class", "node"));
        inst.nodes.push_back(std::move(n));
    }
    for (const auto& fj : require(j, "facilities", "document")) {
        Facility f;
        f.id = static_cast<int>(require_num(fj, "id", "facility"));
        f.x = require_num(fj, "x", "facility");
        f.y = require_num(fj, "y", "facility");
        inst.facilities.push_back(f);
    }

    inst.rebuild_travel();
    inst.validate();
    return inst;
}

Instance read_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open instance file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return instance_from_json(buf.str());
}

void write_instance(const Instance& inst, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write instance file: " + path);
    out << instance_to_json(inst);
}

bool operator==(const DemandNode& a, const DemandNode& b) {
    return a.id == b.id && a.x == b.x && a.y == b.y && a.lambda == b.lambda &&
           a.class_probs == b.class_probs && a.fixed_class == b.fixed_class;
}
bool operator==(const Facility& a, const Facility& b) {
    return a.id == b.id && a.x == b.x && a.y == b.y;
}
bool operator==(const FleetParams& a, const FleetParams& b) {
    return a.speed_kmh == b.speed_kmh && a.endurance_min == b.endurance_min &&
           a.alpha == b.alpha && a.k_hard_cap == b.k_hard_cap;
}
bool operator==(const PriorityParams& a, const PriorityParams& b) {
    return a.num_classes == b.num_classes && a.weights == b.weights &&
           a.initial_values == b.initial_values;
}
bool operator==(const Instance& a, const Instance& b) {
    return a.mode == b.mode && a.nodes == b.nodes && a.facilities == b.facilities &&
           a.fleet == b.fleet && a.priority == b.priority &&
           a.round_trip_service == b.round_trip_service;
}

}  // namespace droneq
