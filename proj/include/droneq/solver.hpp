#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "droneq/queueing.hpp"

namespace droneq {

struct FeasibilityCheck {
    bool ok = true;
    std::string violation;  // first failed constraint, empty when ok
};

// Structural, endurance, stability, and (when K given) budget checks.
FeasibilityCheck feasible(const Instance& instance, const Assignment& assignment,
                          std::optional<int> K = std::nullopt);

// Smallest integer drone count that keeps a facility with this load stable
// under the strict margin: floor(load)+1, bumped once if the margin is
// thinner than kStabilityMargin.
int min_stable_k(double load);

struct MinFleetResult {
    int k_star = 0;
    bool exact = false;       // true when found by full enumeration
    Assignment assignment;    // node-level routing realizing k_star
};

// Side model: minimum total drones over open sets and routings.
MinFleetResult min_fleet(const Instance& instance);

// K = min(cap, floor((1+alpha) K*)); throws InfeasibleInstance if the cap
// cuts below K*.
int budget(int k_star, double alpha, std::optional<int> k_hard_cap);

struct SolveResult {
    Assignment best;
    Objective objective;      // canonical re-evaluation of best
    double sum_wait = 0;      // total rate-weighted waiting of best
    std::string method;       // brute_force | local_search
    long iterations = 0;      // candidate evaluations
    double wall_ms = 0;
    std::vector<std::pair<long, double>> trace;  // (evaluation, Z) improvements
};

inline constexpr int kBruteMaxFacilities = 4;
inline constexpr int kBruteMaxUnits = 8;
inline constexpr int kBruteMaxDrones = 12;

// Exact optimum by full enumeration of open sets, routings, and drone
// splits. Ties: smaller total waiting, fewer open facilities, then
// lexicographic routing and drone vectors.
SolveResult brute_force(const Instance& instance, Model model, int K);

struct SearchParams {
    int restarts = 16;
    long max_evals = 200000;
    std::vector<Assignment> warm_starts;  // tried in addition to constructions
    bool trace = false;
};

// Multi-start first-improvement search over routings and drone moves.
SolveResult local_search(const Instance& instance, Model model, int K, std::uint64_t seed,
                         const SearchParams& params = {});

// Re-shapes a node-level routing into the unit view of another model.
Assignment convert_assignment(const Instance& instance, const Assignment& node_level, Model model);

// Solution file I/O (JSON): open set, drones, routing, objective, metrics.
void write_solution(const Instance& instance, const SolveResult& result, int k_star, int K,
                    const std::string& path);
std::string solution_to_json(const Instance& instance, const SolveResult& result, int k_star,
                             int K);
Assignment read_solution(const std::string& path, const Instance& instance);

}  // namespace droneq
