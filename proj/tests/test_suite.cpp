#include <doctest.h>

#include <set>

#include <json.hpp>

#include "exdiff/debug.hpp"
#include "exdiff/suite.hpp"

using namespace exdiff;

TEST_CASE("every sampler has an oracle") {
    CHECK(uncovered_samplers().empty());
    std::set<std::string> names;
    for (const auto& t : oracle_registry()) CHECK(names.insert(t.name).second);
}

TEST_CASE("case weight oracle passes, and fails on a corrupted p1") {
    const auto clean = run_oracle_suite("bridge_case_weights_quadrature", 17);
    REQUIRE(clean.size() == 1);
    CHECK(clean[0].pass);
    {
        const debug::ScopedMutation m(debug::Mutation::CorruptP1);
        const auto broken = run_oracle_suite("bridge_case_weights_quadrature", 17);
        REQUIRE(broken.size() == 1);
        CHECK_FALSE(broken[0].pass);
    }
    CHECK(debug::current_mutation() == debug::Mutation::None);
}

TEST_CASE("report json") {
    const auto r = run_oracle_suite("local_time_density_mass", 1);
    const auto j = nlohmann::json::parse(oracle_report_json(r, 1));
    CHECK(j["seed"] == 1);
    CHECK(j["tests"].size() == r.size());
    CHECK(j["pass"] == r[0].pass);
}
