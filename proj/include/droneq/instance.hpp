#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "droneq/errors.hpp"

namespace droneq {

// Which flavor of class data an instance carries.
//   NP: single class, no class fields.
//   SP: per-node class probabilities (a request's class is random).
//   DP: per-node fixed class plus initial priority values a_r.
enum class Mode { NP, SP, DP };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& s);

struct DemandNode {
    int id = 0;
    double x = 0, y = 0;             // km
    double lambda = 0;               // requests per minute
    std::vector<double> class_probs; // SP: v_ir, one entry per class
    int fixed_class = 1;             // DP: 1-based class index
};

struct Facility {
    int id = 0;
    double x = 0, y = 0;  // km
};

struct FleetParams {
    double speed_kmh = 80.0;
    double endurance_min = 40.0;
    double alpha = 0.0;              // slack fraction on the minimum fleet
    std::optional<int> k_hard_cap;   // absolute cap on total drones
};

struct PriorityParams {
    int num_classes = 1;
    std::vector<double> weights;         // w_r, sums to 1
    std::vector<double> initial_values;  // a_r, strictly decreasing (DP only)

    double delta_a(int l, int r) const { return initial_values[l] - initial_values[r]; }
};

struct Instance {
    Mode mode = Mode::NP;
    std::vector<DemandNode> nodes;
    std::vector<Facility> facilities;
    FleetParams fleet;
    PriorityParams priority;
    bool round_trip_service = false;  // bill 2*t_ij of drone time per request
    Eigen::MatrixXd travel;           // minutes, nodes x facilities, derived

    int num_nodes() const { return static_cast<int>(nodes.size()); }
    int num_facilities() const { return static_cast<int>(facilities.size()); }
    int num_classes() const { return priority.num_classes; }

    // Drone-time billed to one request from node i served at facility j.
    double service_time(int i, int j) const {
        return (round_trip_service ? 2.0 : 1.0) * travel(i, j);
    }

    // Probability that a request from node i belongs to class r (1-based).
    double class_prob(int i, int r) const;

    void rebuild_travel();

    // Throws ValidationError naming the violated invariant.
    void validate() const;
};

// t_ij = 60 * euclidean_distance / speed, in minutes.
Eigen::MatrixXd compute_travel_matrix(const std::vector<DemandNode>& nodes,
                                      const std::vector<Facility>& facilities, double speed_kmh);

struct GenConfig {
    Mode mode = Mode::SP;
    int n_nodes = 10;
    int n_facilities = 6;
    double coord_lo = 0.0, coord_hi = 30.0;  // km box
    double lambda_lo = 0.6, lambda_hi = 1.0;
    int num_classes = 2;
    std::vector<double> weights = {0.7, 0.3};
    std::vector<double> initial_values = {3.0, 0.0};  // DP
    int n_class1 = 6;                                 // DP: nodes fixed to class 1
    double speed_kmh = 80.0;
    double endurance_min = 40.0;
    std::optional<int> k_hard_cap = 200;

    static GenConfig sp_paper();  // 10 nodes, 6 facilities, lambda U(0.6,1), v1 U(0,1)
    static GenConfig dp_paper();  // 11 nodes, 6 facilities, lambda U(0.1,0.5), 6 class-1 nodes
};

Instance generate_instance(std::uint64_t seed, const GenConfig& config);

Instance read_instance(const std::string& path);
void write_instance(const Instance& instance, const std::string& path);

// JSON body shared by file I/O and in-memory round trips.
std::string instance_to_json(const Instance& instance);
Instance instance_from_json(const std::string& text);

bool operator==(const DemandNode& a, const DemandNode& b);
bool operator==(const Facility& a, const Facility& b);
bool operator==(const FleetParams& a, const FleetParams& b);
bool operator==(const PriorityParams& a, const PriorityParams& b);
bool operator==(const Instance& a, const Instance& b);

}  // namespace droneq
