#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "droneq/harness.hpp"
#include "droneq/rng.hpp"
#include "helpers.hpp"

using namespace droneq;
using namespace droneq::testing;

namespace {

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name)
        : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove_all(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

ExperimentPlan tiny_alpha_plan() {
    ExperimentPlan plan;
    plan.sweep = Sweep::Alpha;
    plan.preset = GenConfig::sp_paper();
    plan.num_seeds = 2;
    plan.base_seed = 5;
    plan.grid = {0.0, 0.2, 0.5};
    plan.run_sim = false;
    plan.search.restarts = 4;
    plan.search.max_evals = 20000;
    return plan;
}

}  // namespace

TEST_CASE("quantile follows the linear interpolation rule") {
    const std::vector<double> v = {4, 2, 1, 3};
    CHECK(quantile(v, 0.0) == 1.0);
    CHECK(quantile(v, 0.25) == 1.75);
    CHECK(quantile(v, 0.5) == 2.5);
    CHECK(quantile(v, 1.0) == 4.0);
    CHECK(quantile({7.0}, 0.5) == 7.0);
}

TEST_CASE("default grids carry the documented values") {
    CHECK(default_grid(Sweep::Alpha) == std::vector<double>{0, 0.02, 0.05, 0.1, 0.2, 0.5, 1});
    CHECK(default_grid(Sweep::Weights) == std::vector<double>{0, 0.25, 0.5, 0.75, 1});
    CHECK(default_grid(Sweep::Delta) == std::vector<double>{3, 10, 20});
}

TEST_CASE("sweep names round-trip") {
    for (Sweep s : {Sweep::Alpha, Sweep::Weights, Sweep::Delta, Sweep::Compare})
        CHECK(sweep_from_string(to_string(s)) == s);
    CHECK_THROWS_AS(sweep_from_string("beta"), ParseError);
}

TEST_CASE("plan validation rejects bad settings") {
    ExperimentPlan plan = tiny_alpha_plan();
    plan.num_seeds = 0;
    CHECK_THROWS_AS(plan.validate(), ValidationError);

    plan = tiny_alpha_plan();
    plan.grid = {-0.1};
    CHECK_THROWS_AS(plan.validate(), ValidationError);

    plan = tiny_alpha_plan();
    plan.sweep = Sweep::Weights;
    plan.grid = {1.5};
    CHECK_THROWS_AS(plan.validate(), ValidationError);

    plan = tiny_alpha_plan();
    plan.sweep = Sweep::Delta;
    plan.grid = {3};
    CHECK_THROWS_AS(run_delta_sweep(plan), ValidationError);
}

TEST_CASE("class breakdown agrees with the per-class metrics") {
    Rng rng(55);
    for (int trial = 0; trial < 20; ++trial) {
        const RandomSystem sys = random_system(rng, Model::SP);
        const ClassBreakdown cb = class_breakdown(sys.inst, sys.asg);
        const auto metrics = report_metrics(sys.inst, sys.asg);
        REQUIRE(cb.Z_r.size() == metrics.size());
        for (std::size_t r = 0; r < metrics.size(); ++r) {
            CHECK(cb.Z_r[r] == doctest::Approx(metrics[r].Z).epsilon(1e-12));
            CHECK(cb.sumZ_r[r] == doctest::Approx(metrics[r].sumZ).epsilon(1e-12));
            CHECK(cb.W_r[r] == doctest::Approx(metrics[r].W).epsilon(1e-12));
            CHECK(cb.sumW_r[r] == doctest::Approx(metrics[r].sumW).epsilon(1e-12));
        }
    }
}

TEST_CASE("alpha sweep produces one clean row per seed and grid point") {
    const ExperimentPlan plan = tiny_alpha_plan();
    const ExperimentResult res = run_alpha_sweep(plan);
    REQUIRE(res.rows.size() == 6);
    CHECK_FALSE(res.any_error);
    for (const ExperimentRow& row : res.rows) {
        CHECK(row.error.empty());
        CHECK(row.model == "sp");
        CHECK(row.Z > 0);
        CHECK(row.K == budget(row.k_star, row.sweep_value, plan.preset.k_hard_cap));
        CHECK(row.sim_Z_r.empty());
    }
}

TEST_CASE("alpha sweep is per-seed monotone and budget-consistent") {
    const ExperimentPlan plan = tiny_alpha_plan();
    const ExperimentResult res = run_alpha_sweep(plan);
    for (int s = 0; s < plan.num_seeds; ++s) {
        double prev_z = -1;
        int k_star = -1;
        for (const ExperimentRow& row : res.rows) {
            if (row.seed != plan.base_seed + static_cast<std::uint64_t>(s)) continue;
            if (k_star < 0) k_star = row.k_star;
            CHECK(row.k_star == k_star);
            if (prev_z >= 0) CHECK(row.Z <= prev_z);
            prev_z = row.Z;
        }
    }
}

TEST_CASE("experiment runs are reproducible") {
    const ExperimentPlan plan = tiny_alpha_plan();
    const ExperimentResult a = run_experiment(plan);
    const ExperimentResult b = run_experiment(plan);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].Z == b.rows[i].Z);
        CHECK(a.rows[i].K == b.rows[i].K);
        CHECK(a.rows[i].W_r == b.rows[i].W_r);
    }
}

TEST_CASE("weight sweep records the swept weight") {
    ExperimentPlan plan = tiny_alpha_plan();
    plan.sweep = Sweep::Weights;
    plan.num_seeds = 1;
    plan.grid = {0.0, 0.5, 1.0};
    const ExperimentResult res = run_weight_sweep(plan);
    REQUIRE(res.rows.size() == 3);
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
        CHECK(res.rows[i].w1 == plan.grid[i]);
        CHECK(res.rows[i].error.empty());
        CHECK(res.rows[i].Z > 0);
    }
}

TEST_CASE("delta sweep runs the dynamic model over the gap grid") {
    ExperimentPlan plan = tiny_alpha_plan();
    plan.sweep = Sweep::Delta;
    plan.preset = GenConfig::dp_paper();
    plan.model = Model::DP;
    plan.num_seeds = 1;
    plan.grid = {3.0, 10.0};
    const ExperimentResult res = run_delta_sweep(plan);
    REQUIRE(res.rows.size() == 2);
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
        CHECK(res.rows[i].model == "dp");
        CHECK(res.rows[i].delta_a == plan.grid[i]);
        CHECK(res.rows[i].error.empty());
        CHECK(res.rows[i].W_r.size() == 2);
    }
}

TEST_CASE("discipline comparison solves all models at a shared budget") {
    ExperimentPlan plan = tiny_alpha_plan();
    plan.sweep = Sweep::Compare;
    plan.preset = GenConfig::dp_paper();
    plan.num_seeds = 1;
    plan.grid = {};
    const ExperimentResult res = run_discipline_compare(plan);
    REQUIRE(res.rows.size() == 3);
    CHECK(res.rows[0].model == "np");
    CHECK(res.rows[1].model == "sp");
    CHECK(res.rows[2].model == "dp");
    const int K = res.rows[0].K;
    for (const ExperimentRow& row : res.rows) {
        CHECK(row.K == K);
        CHECK(row.error.empty());
    }
    for (double g : res.rows[0].gap_Z_r) CHECK(g == 0);
    for (double g : res.rows[0].gap_W_r) CHECK(g == 0);
    REQUIRE(res.rows[1].gap_W_r.size() == 2);
}

TEST_CASE("experiment files land on disk with the documented headers") {
    const ExperimentPlan plan = tiny_alpha_plan();
    const ExperimentResult res = run_alpha_sweep(plan);
    TempDir dir("droneq_harness_test");
    write_experiment(plan, res, dir.path.string());

    const std::string rows = slurp(dir.path / "rows.csv");
    CHECK(rows.rfind("seed,sweep,value,model,alpha,w1,delta_a,k_star,K,Z", 0) == 0);
    CHECK(rows.find(",solve_ms,sim_ms,error\n") != std::string::npos);
    std::size_t lines = 0;
    for (char c : rows) lines += c == '\n';
    CHECK(lines == res.rows.size() + 1);

    const std::string summary = slurp(dir.path / "summary.csv");
    CHECK(summary.rfind("value,model,metric,n,mean,min,q25,median,q75,max\n", 0) == 0);

    const std::string tails = slurp(dir.path / "tails.csv");
    CHECK(tails.rfind("seed,model,class,t,p\n", 0) == 0);

    const auto manifest = nlohmann::json::parse(slurp(dir.path / "manifest.json"));
    CHECK(manifest["sweep"] == "alpha");
    CHECK(manifest["rows"] == res.rows.size());
    CHECK(manifest["grid"].size() == plan.grid.size());
}

TEST_CASE("writing the same result twice is byte-identical") {
    ExperimentPlan plan = tiny_alpha_plan();
    plan.grid = {0.2};
    plan.num_seeds = 1;
    const ExperimentResult res = run_alpha_sweep(plan);
    TempDir a("droneq_harness_bytes_a"), b("droneq_harness_bytes_b");
    write_experiment(plan, res, a.path.string());
    write_experiment(plan, res, b.path.string());
    for (const char* f : {"rows.csv", "summary.csv", "tails.csv", "manifest.json"})
        CHECK(slurp(a.path / f) == slurp(b.path / f));
}

TEST_CASE("a failing seed is reported in rows instead of aborting") {
    ExperimentPlan plan = tiny_alpha_plan();
    plan.num_seeds = 1;
    plan.preset.endurance_min = 0.01;  // nothing is reachable
    const ExperimentResult res = run_alpha_sweep(plan);
    CHECK(res.any_error);
    REQUIRE(!res.rows.empty());
    for (const ExperimentRow& row : res.rows) CHECK_FALSE(row.error.empty());
}
