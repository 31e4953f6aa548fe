#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <vector>

#include "droneq/rng.hpp"
#include "droneq/solver.hpp"
#include "helpers.hpp"

using namespace droneq;
using namespace droneq::testing;

namespace {

struct TempFile {
    std::filesystem::path path;
    explicit TempFile(const std::string& name)
        : path(std::filesystem::temp_directory_path() / name) {}
    ~TempFile() { std::filesystem::remove(path); }
};

}  // namespace

TEST_CASE("minimal stable drone count rounds up past the margin") {
    CHECK(min_stable_k(0.5) == 1);
    CHECK(min_stable_k(1.2) == 2);
    CHECK(min_stable_k(2.0) == 3);
    CHECK(min_stable_k(0.9999999) == 2);
}

TEST_CASE("budget matches hand arithmetic on the documented grid") {
    const std::vector<double> alphas = {0, 0.02, 0.05, 0.1, 0.2, 0.5, 1};
    const std::vector<std::pair<int, std::vector<int>>> table = {
        {10, {10, 10, 10, 11, 12, 15, 20}},
        {50, {50, 51, 52, 55, 60, 75, 100}},
        {137, {137, 139, 143, 150, 164, 205, 274}},
    };
    for (const auto& [k_star, expected] : table)
        for (std::size_t i = 0; i < alphas.size(); ++i)
            CHECK(budget(k_star, alphas[i], std::nullopt) == expected[i]);
}

TEST_CASE("budget honors the hard cap") {
    CHECK(budget(10, 0.5, 12) == 12);
    CHECK(budget(10, 0.5, 20) == 15);
    CHECK_THROWS_AS(budget(10, 0.0, 9), InfeasibleInstance);
}

TEST_CASE("feasibility names the first broken constraint") {
    const Instance inst = np_pair();
    const Assignment good = all_to(inst, Model::NP, 0, 2);
    CHECK(feasible(inst, good).ok);
    CHECK(feasible(inst, good, 2).ok);

    Assignment bad = good;
    bad.drones.pop_back();
    CHECK(feasible(inst, bad).violation == "assignment shape mismatch");

    bad = good;
    bad.drones[0] = -1;
    CHECK(feasible(inst, bad).violation == "negative drone count");

    bad = good;
    bad.open[0] = 0;
    CHECK(feasible(inst, bad).violation == "closed facility holds drones");

    bad = good;
    bad.drones[0] = 0;
    CHECK(feasible(inst, bad).violation == "stability margin violated at facility 0");

    CHECK(feasible(inst, good, 1).violation == "drone budget exceeded");

    Instance short_range = inst;
    short_range.fleet.endurance_min = 1.5;
    CHECK(feasible(short_range, good).violation == "assignment exceeds endurance");
}

TEST_CASE("minimum fleet is exact on tiny instances") {
    const MinFleetResult one = min_fleet(np_single());
    CHECK(one.k_star == 1);
    CHECK(one.exact);
    CHECK(feasible(np_single(), one.assignment).ok);

    const MinFleetResult pooled = min_fleet(sp_half());
    CHECK(pooled.k_star == 2);
    CHECK(pooled.exact);
}

TEST_CASE("minimum fleet prefers pooling when it saves a drone") {
    // Two facilities both in range: splitting needs 1+1, pooling needs 1.
    const Instance inst = micro(Mode::NP, {{1, 0.2}, {3, 0.2}}, {0, 4});
    const MinFleetResult r = min_fleet(inst);
    CHECK(r.k_star == 1);
    CHECK(r.assignment.total_drones() == 1);
}

TEST_CASE("minimum fleet rejects unreachable nodes") {
    Instance inst = np_single();
    inst.fleet.endurance_min = 0.5;
    CHECK_THROWS_AS(min_fleet(inst), InfeasibleInstance);
}

TEST_CASE("exhaustive solver spends the whole budget") {
    const Instance inst = np_single();
    const SolveResult res = brute_force(inst, Model::NP, 3);
    CHECK(res.best.drones[0] == 3);
    CHECK(res.objective.Z == doctest::Approx(1.0 + 0.4 / 15.6).epsilon(1e-12));
    CHECK(res.method == "brute_force");
}

TEST_CASE("exhaustive solver refuses oversized inputs") {
    const Instance wide = micro(Mode::NP, {{1, 0.4}}, {0, 1, 2, 3, 4});
    CHECK_THROWS_AS(brute_force(wide, Model::NP, 3), SizeExceeded);
    CHECK_THROWS_AS(brute_force(np_single(), Model::NP, 13), SizeExceeded);
}

TEST_CASE("search and exhaustive solvers agree on tiny instances") {
    Rng rng(77);
    for (Model model : {Model::NP, Model::SP, Model::DP}) {
        for (int trial = 0; trial < 6; ++trial) {
            RandomSystem sys = random_system(rng, model, 3, 3, 2);
            while (sys.asg.total_drones() > kBruteMaxDrones)
                sys = random_system(rng, model, 3, 3, 2);
            const int K = sys.asg.total_drones();
            const SolveResult exact = brute_force(sys.inst, model, K);
            const SolveResult heur = local_search(sys.inst, model, K, 4242);
            CHECK(heur.objective.Z == doctest::Approx(exact.objective.Z).epsilon(1e-12));
        }
    }
}

TEST_CASE("search is deterministic for a fixed seed") {
    Rng rng(88);
    const RandomSystem sys = random_system(rng, Model::SP);
    const int K = sys.asg.total_drones();
    const SolveResult a = local_search(sys.inst, Model::SP, K, 7);
    const SolveResult b = local_search(sys.inst, Model::SP, K, 7);
    CHECK(a.objective.Z == b.objective.Z);
    CHECK(a.best.unit_facility == b.best.unit_facility);
    CHECK(a.best.drones == b.best.drones);
}

TEST_CASE("a warm start never lets a larger budget end worse") {
    Rng rng(99);
    for (int trial = 0; trial < 10; ++trial) {
        const RandomSystem sys = random_system(rng, Model::SP);
        const int K1 = sys.asg.total_drones();
        const SolveResult first = local_search(sys.inst, Model::SP, K1, 5);
        SearchParams params;
        params.warm_starts = {first.best};
        const SolveResult second = local_search(sys.inst, Model::SP, K1 + 2, 5, params);
        CHECK(second.objective.Z <= first.objective.Z);
    }
}

TEST_CASE("search reports infeasibility under a hopeless budget") {
    CHECK_THROWS_WITH_AS(local_search(np_single(), Model::NP, 0, 1),
                         "no stable assignment within the drone budget", InfeasibleInstance);
}

TEST_CASE("node-level routing converts to the class-split view") {
    const Instance inst = sp_half();
    const MinFleetResult mf = min_fleet(inst);
    const Assignment sp = convert_assignment(inst, mf.assignment, Model::SP);
    CHECK(sp.model == Model::SP);
    REQUIRE(sp.unit_facility.size() == 2);
    CHECK(sp.unit_facility[0] == mf.assignment.unit_facility[0]);
    CHECK(sp.unit_facility[1] == mf.assignment.unit_facility[0]);
}

TEST_CASE("solution files round-trip through json") {
    const Instance inst = sp_half();
    const SolveResult res = brute_force(inst, Model::SP, 3);
    TempFile tmp("droneq_solution_test.json");
    write_solution(inst, res, 2, 3, tmp.path.string());
    const Assignment back = read_solution(tmp.path.string(), inst);
    CHECK(back.model == Model::SP);
    CHECK(back.open == res.best.open);
    CHECK(back.drones == res.best.drones);
    CHECK(back.unit_facility == res.best.unit_facility);
}

TEST_CASE("solution files refuse a different instance") {
    const Instance inst = sp_half();
    const SolveResult res = brute_force(inst, Model::SP, 3);
    TempFile tmp("droneq_solution_mismatch.json");
    write_solution(inst, res, 2, 3, tmp.path.string());
    Instance other = sp_half();
    other.nodes[0].lambda = 0.9;
    CHECK_THROWS_AS(read_solution(tmp.path.string(), other), ValidationError);
}

TEST_CASE("dynamic model requires fixed-class instances") {
    CHECK_THROWS_AS(local_search(sp_half(), Model::DP, 3, 1), ValidationError);
    CHECK_THROWS_AS(brute_force(sp_half(), Model::DP, 3), ValidationError);
}
