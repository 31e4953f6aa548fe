#include <doctest.h>

#include <cmath>
#include <vector>

#include "droneq/simulator.hpp"
#include "helpers.hpp"

using namespace droneq;
using namespace droneq::testing;

namespace {

SimConfig quick(double horizon, int reps, Discipline d = Discipline::Fcfs) {
    SimConfig cfg;
    cfg.horizon = horizon;
    cfg.replications = reps;
    cfg.seed = 314;
    cfg.discipline = d;
    return cfg;
}

}  // namespace

TEST_CASE("simulated fcfs wait matches the closed form for M/D/1") {
    const Instance inst = np_single();
    const Assignment asg = all_to(inst, Model::NP, 0, 1);
    const SimReport rep = simulate(inst, asg, quick(8000, 8));
    const double analytic = waiting_np(inst, asg, 0);
    const SummaryStat& w = rep.wait_by_class[0];
    CHECK(std::abs(w.mean - analytic) <= w.ci_half);
    CHECK(std::abs(w.mean - analytic) / analytic <= 0.05);
    CHECK(rep.total_served > 1000);
}

TEST_CASE("simulated static priority matches the closed form per class") {
    const Instance inst = micro(Mode::SP, {{1, 0.5, {0.5, 0.5}}}, {0}, 2, {0.7, 0.3});
    const Assignment asg = all_to(inst, Model::SP, 0, 1);
    const SimReport rep = simulate(inst, asg, quick(8000, 8, Discipline::Static));
    const double w1 = waiting_sp(inst, asg, 0, 1);
    const double w2 = waiting_sp(inst, asg, 0, 2);
    CHECK(w1 == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(w2 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(std::abs(rep.wait_by_class[0].mean - w1) / w1 <= 0.05);
    CHECK(std::abs(rep.wait_by_class[1].mean - w2) / w2 <= 0.05);
}

TEST_CASE("simulated dynamic class-2 wait stays under the additive bound") {
    const Instance inst = dp_pair(3.0);
    const Assignment asg = all_to(inst, Model::DP, 0, 1);
    const SimReport rep = simulate(inst, asg, quick(10000, 8, Discipline::Dynamic));
    const double bound = waiting_dp(inst, asg, 0, 2);
    CHECK(rep.wait_by_class[1].mean <= bound + rep.wait_by_class[1].ci_half);
}

TEST_CASE("zero priority gap replays the fcfs event log exactly") {
    Instance inst = dp_pair(3.0);
    inst.priority.initial_values = {2.0, 2.0};
    const Assignment asg = all_to(inst, Model::DP, 0, 1);
    SimConfig cfg = quick(150, 2, Discipline::Dynamic);
    cfg.record_event_log = true;
    const SimReport dyn = simulate(inst, asg, cfg);
    cfg.discipline = Discipline::Fcfs;
    const SimReport fcfs = simulate(inst, asg, cfg);
    REQUIRE(dyn.event_logs.size() == fcfs.event_logs.size());
    CHECK(dyn.event_logs == fcfs.event_logs);
}

TEST_CASE("a priority gap beyond the horizon replays the static event log exactly") {
    Instance inst = dp_pair(3.0);
    inst.priority.initial_values = {400.0, 0.0};
    const Assignment asg = all_to(inst, Model::DP, 0, 1);
    SimConfig cfg = quick(150, 2, Discipline::Dynamic);
    cfg.record_event_log = true;
    const SimReport dyn = simulate(inst, asg, cfg);
    cfg.discipline = Discipline::Static;
    const SimReport stat = simulate(inst, asg, cfg);
    CHECK(dyn.event_logs == stat.event_logs);
}

TEST_CASE("disciplines serve the same arrivals") {
    const Instance inst = dp_pair(3.0);
    const Assignment asg = all_to(inst, Model::DP, 0, 1);
    std::vector<long> served;
    for (Discipline d : {Discipline::Fcfs, Discipline::Static, Discipline::Dynamic})
        served.push_back(simulate(inst, asg, quick(500, 2, d)).total_served);
    CHECK(served[0] == served[1]);
    CHECK(served[0] == served[2]);
}

TEST_CASE("event logs are ordered and physically consistent") {
    const Instance inst = np_pair();
    const Assignment asg = all_to(inst, Model::NP, 0, 2);
    SimConfig cfg = quick(300, 1);
    cfg.record_event_log = true;
    const SimReport rep = simulate(inst, asg, cfg);
    REQUIRE(rep.event_logs.size() == 1);
    const auto& log = rep.event_logs[0];
    REQUIRE(!log.empty());
    for (std::size_t i = 0; i < log.size(); ++i) {
        CHECK(log[i].start >= log[i].arrival);
        CHECK(log[i].arrival <= cfg.horizon);
        CHECK(log[i].service > 0);
        if (i > 0) CHECK(log[i - 1].start <= log[i].start);
    }
}

TEST_CASE("replications and reruns are reproducible") {
    const Instance inst = np_single();
    const Assignment asg = all_to(inst, Model::NP, 0, 1);
    const SimReport a = simulate(inst, asg, quick(1000, 3));
    const SimReport b = simulate(inst, asg, quick(1000, 3));
    CHECK(a.wait_by_class[0].per_rep == b.wait_by_class[0].per_rep);
    CHECK(sim_report_to_json(a) == sim_report_to_json(b));
}

TEST_CASE("tail curves decrease over the grid") {
    const Instance inst = np_single();
    const Assignment asg = all_to(inst, Model::NP, 0, 1);
    const SimReport rep = simulate(inst, asg, quick(4000, 4));
    REQUIRE(rep.tail_by_class.size() == 1);
    const auto& tail = rep.tail_by_class[0];
    REQUIRE(tail.size() == rep.tail_grid.size());
    for (std::size_t i = 0; i < tail.size(); ++i) {
        CHECK(tail[i] >= 0);
        CHECK(tail[i] <= 1);
        if (i > 0) CHECK(tail[i] <= tail[i - 1]);
    }
}

TEST_CASE("an idle system produces an empty but well-formed report") {
    const Instance inst = micro(Mode::NP, {{1, 1e-9}}, {0});
    const Assignment asg = all_to(inst, Model::NP, 0, 1);
    const SimReport rep = simulate(inst, asg, quick(100, 2));
    CHECK(rep.total_served == 0);
    CHECK(rep.wait_by_class[0].mean == 0);
    CHECK(std::isfinite(rep.wait_by_class[0].ci_half));
}

TEST_CASE("the stability pre-check can be overridden") {
    const Instance inst = micro(Mode::NP, {{1, 2.5}}, {0});
    const Assignment asg = all_to(inst, Model::NP, 0, 2);
    CHECK_THROWS_AS(simulate(inst, asg, quick(100, 1)), StabilityError);
    SimConfig cfg = quick(100, 1);
    cfg.allow_unstable = true;
    const SimReport rep = simulate(inst, asg, cfg);
    CHECK(rep.total_served > 0);
}

TEST_CASE("routing demand to a droneless facility is rejected") {
    const Instance inst = np_single();
    Assignment asg = all_to(inst, Model::NP, 0, 1);
    asg.drones[0] = 0;
    asg.open[0] = 1;
    CHECK_THROWS_AS(simulate(inst, asg, quick(100, 1)), ValidationError);
}

TEST_CASE("dynamic discipline needs priority values") {
    const Instance inst = np_single();
    const Assignment asg = all_to(inst, Model::NP, 0, 1);
    CHECK_THROWS_AS(simulate(inst, asg, quick(100, 1, Discipline::Dynamic)), ValidationError);
}

TEST_CASE("config validation rejects degenerate settings") {
    const Instance inst = np_single();
    const Assignment asg = all_to(inst, Model::NP, 0, 1);
    CHECK_THROWS_AS(simulate(inst, asg, quick(0, 1)), ValidationError);
    CHECK_THROWS_AS(simulate(inst, asg, quick(100, 0)), ValidationError);
}

TEST_CASE("a report paired with itself has zero gaps") {
    const Instance inst = sp_half();
    const Assignment asg = all_to(inst, Model::SP, 0, 2);
    const SimReport rep = simulate(inst, asg, quick(1000, 3, Discipline::Static));
    const PairedGaps gaps = paired_gap(rep, rep);
    for (const SummaryStat& s : gaps.wait_gap) CHECK(s.mean == 0);
    for (const SummaryStat& s : gaps.z_gap) CHECK(s.mean == 0);
}

TEST_CASE("paired comparison shares arrivals across runs") {
    const Instance inst = dp_pair(3.0);
    const Assignment asg = all_to(inst, Model::DP, 0, 1);
    const SimConfig cfg = quick(400, 2);
    const auto reports = paired_compare(
        inst, {{Discipline::Fcfs, asg}, {Discipline::Static, asg}, {Discipline::Dynamic, asg}},
        cfg);
    REQUIRE(reports.size() == 3);
    CHECK(reports[0].total_served == reports[1].total_served);
    CHECK(reports[0].total_served == reports[2].total_served);
}

TEST_CASE("student t critical values match the table") {
    CHECK(student_t95(1) == doctest::Approx(12.706).epsilon(1e-3));
    CHECK(student_t95(10) == doctest::Approx(2.228).epsilon(1e-3));
    CHECK(student_t95(1000) == doctest::Approx(1.96).epsilon(1e-3));
}

TEST_CASE("discipline names round-trip") {
    for (Discipline d : {Discipline::Fcfs, Discipline::Static, Discipline::Dynamic})
        CHECK(discipline_from_string(to_string(d)) == d);
    CHECK_THROWS_AS(discipline_from_string("lifo"), ParseError);
    CHECK(discipline_for(Model::NP) == Discipline::Fcfs);
    CHECK(discipline_for(Model::SP) == Discipline::Static);
    CHECK(discipline_for(Model::DP) == Discipline::Dynamic);
}
