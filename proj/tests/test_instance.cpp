#include <doctest.h>

#include <cmath>
#include <set>

#include "droneq/instance.hpp"
#include "helpers.hpp"

using namespace droneq;

TEST_CASE("travel minutes follow 60 * distance / speed") {
    std::vector<DemandNode> nodes(1);
    std::vector<Facility> facilities{{0, 3, 4}};
    const Eigen::MatrixXd t = compute_travel_matrix(nodes, facilities, 80);
    CHECK(t(0, 0) == doctest::Approx(3.75).epsilon(1e-12));

    facilities[0] = {0, 30, 30};
    const Eigen::MatrixXd far = compute_travel_matrix(nodes, facilities, 80);
    CHECK(far(0, 0) == doctest::Approx(31.819805153394636).epsilon(1e-12));
}

TEST_CASE("generation is deterministic in the seed") {
    const GenConfig config = GenConfig::sp_paper();
    const Instance a = generate_instance(7, config);
    const Instance b = generate_instance(7, config);
    const Instance c = generate_instance(8, config);
    CHECK(a == b);
    CHECK_FALSE(a == c);
}

TEST_CASE("sp preset honours its documented shape") {
    const Instance inst = generate_instance(3, GenConfig::sp_paper());
    CHECK(inst.mode == Mode::SP);
    CHECK(inst.num_nodes() == 10);
    CHECK(inst.num_facilities() == 6);
    CHECK(inst.num_classes() == 2);
    CHECK(inst.priority.weights == std::vector<double>{0.7, 0.3});
    for (const DemandNode& n : inst.nodes) {
        CHECK(n.lambda >= 0.6);
        CHECK(n.lambda <= 1.0);
        REQUIRE(n.class_probs.size() == 2);
        CHECK(n.class_probs[0] + n.class_probs[1] == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK_NOTHROW(inst.validate());
}

TEST_CASE("dp preset fixes six class-1 nodes") {
    const Instance inst = generate_instance(3, GenConfig::dp_paper());
    CHECK(inst.mode == Mode::DP);
    CHECK(inst.num_nodes() == 11);
    CHECK(inst.priority.initial_values == std::vector<double>{3.0, 0.0});
    int class1 = 0;
    for (const DemandNode& n : inst.nodes) {
        CHECK(n.lambda >= 0.1);
        CHECK(n.lambda <= 0.5);
        class1 += n.fixed_class == 1;
    }
    CHECK(class1 == 6);
    CHECK_NOTHROW(inst.validate());
}

TEST_CASE("np generation collapses to one class") {
    GenConfig config;
    config.mode = Mode::NP;
    const Instance inst = generate_instance(5, config);
    CHECK(inst.num_classes() == 1);
    CHECK(inst.priority.weights == std::vector<double>{1.0});
    for (const DemandNode& n : inst.nodes) CHECK(n.class_probs.empty());
    CHECK_NOTHROW(inst.validate());
}

TEST_CASE("json round trip preserves every mode") {
    for (const GenConfig& config :
         {GenConfig::sp_paper(), GenConfig::dp_paper(), [] {
              GenConfig c;
              c.mode = Mode::NP;
              return c;
          }()}) {
        const Instance inst = generate_instance(11, config);
        const Instance back = instance_from_json(instance_to_json(inst));
        CHECK(inst == back);
    }
}

TEST_CASE("json rejects missing fields and wrong versions") {
    const Instance inst = generate_instance(1, GenConfig::sp_paper());
    std::string text = instance_to_json(inst);
    CHECK_THROWS_AS(instance_from_json("{}"), ParseError);
    const auto at = text.find("\"schema_version\": 1");
    REQUIRE(at != std::string::npos);
    std::string bumped = text;
    bumped.replace(at, 19, "\"schema_version\": 9");
    CHECK_THROWS_AS(instance_from_json(bumped), ParseError);
}

TEST_CASE("validation names the broken invariant") {
    using testing::micro;
    Instance inst = micro(Mode::SP, {{1, 1.0, {0.5, 0.5}}}, {0}, 2, {0.7, 0.3});
    CHECK_NOTHROW(inst.validate());

    Instance bad = inst;
    bad.nodes[0].lambda = 0;
    CHECK_THROWS_WITH_AS(bad.validate(), "lambda must be positive", ValidationError);

    bad = inst;
    bad.nodes[0].class_probs = {0.6, 0.6};
    CHECK_THROWS_WITH_AS(bad.validate(), "class_probs must sum to 1", ValidationError);

    bad = inst;
    bad.priority.weights = {0.7, 0.2};
    CHECK_THROWS_WITH_AS(bad.validate(), "weights must sum to 1", ValidationError);

    bad = inst;
    bad.nodes[0].id = 5;
    CHECK_THROWS_WITH_AS(bad.validate(), "node ids must be contiguous from 0", ValidationError);

    bad = inst;
    bad.fleet.endurance_min = 0.1;
    bad.nodes[0].x = 100;
    bad.rebuild_travel();
    CHECK_THROWS_WITH_AS(bad.validate(), "node 0 has no facility within endurance",
                         ValidationError);

    Instance dp = micro(Mode::DP, {{1, 0.4, {}, 1}}, {0}, 2, {0.7, 0.3}, {3, 0});
    CHECK_NOTHROW(dp.validate());
    dp.priority.initial_values = {0, 0};
    CHECK_THROWS_WITH_AS(dp.validate(), "initial_values must be strictly decreasing",
                         ValidationError);
}

TEST_CASE("preset instances stay valid across many seeds") {
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        CHECK_NOTHROW(generate_instance(seed, GenConfig::sp_paper()).validate());
        CHECK_NOTHROW(generate_instance(seed, GenConfig::dp_paper()).validate());
    }
}

TEST_CASE("service time doubles under the round-trip toggle") {
    Instance inst = testing::np_single();
    CHECK(inst.service_time(0, 0) == 1.0);
    inst.round_trip_service = true;
    CHECK(inst.service_time(0, 0) == 2.0);
    CHECK(inst.travel(0, 0) == 1.0);
}
