#include <catch_amalgamated.hpp>

#include "nmforge/nmx.hpp"

using namespace nmforge;

namespace {

std::string error_of(const nlohmann::json& j) {
    try {
        profile_from_json(j);
    } catch (const ProfileError& e) {
        return e.what();
    }
    return "no error";
}

nlohmann::json toy_json() { return nlohmann::json::parse(profile_to_json(builtin_toy20()).dump()); }

}  // namespace

TEST_CASE("builtin profiles round-trip through JSON", "[profile]") {
    for (const auto& name : builtin_profile_names()) {
        auto p = *builtin_profile(name);
        auto text = profile_to_json(p).dump();
        auto q = parse_profile(text);
        CHECK(q.name == name);
        CHECK(profile_to_json(q).dump() == text);
    }
    CHECK_FALSE(builtin_profile("toy21").has_value());
}

TEST_CASE("builtin profiles validate", "[profile]") {
    for (const auto& name : builtin_profile_names()) {
        INFO(name);
        NmSuite s(*builtin_profile(name));
        CHECK(s.code().n_out >= 2 * s.profile().n);
        CHECK(s.inv().cell_dim() >= 1);
        auto r = s.report();
        CHECK(r["block_bits"] == 2 * s.profile().n);
        CHECK(r["message_bits"] == s.profile().m);
    }
}

TEST_CASE("shipped profile files match the builtins", "[profile]") {
    for (const auto& name : builtin_profile_names()) {
        auto path = std::string(NMFORGE_SOURCE_DIR) + "/profiles/" + name + ".json";
        auto p = load_profile_file(path);
        CHECK(profile_to_json(p).dump() == profile_to_json(*builtin_profile(name)).dump());
    }
    CHECK_THROWS_WITH(load_profile_file("/nonexistent/x.json"), Catch::Matchers::StartsWith("profile not found"));
}

TEST_CASE("profile errors name the field", "[profile]") {
    auto j = toy_json();
    j["ilnm_inv"].erase("split");
    CHECK(error_of(j) == "missing field: ilnm_inv.split");

    j = toy_json();
    j["ilnm"]["wrap"]["acb"].erase("n2");
    CHECK(error_of(j) == "missing field: ilnm.wrap.acb.n2");

    j = toy_json();
    j["n"] = -3;
    CHECK(error_of(j) == "bad field: n must be a non-negative integer");

    j = toy_json();
    j["ilnm_inv"]["samp_d"] = {1, 2};
    CHECK(error_of(j) == "bad field: ilnm_inv.samp_d must be an array of 4 counts");

    j = toy_json();
    j["ilext"]["acb"]["eps"] = 1.5;
    CHECK(error_of(j) == "bad field: ilext.acb.eps must lie in (0, 1)");

    j = toy_json();
    j["code"]["family"] = "reed-solomon";
    CHECK(error_of(j) == "bad field: code.family must be \"dual-bch\"");

    j = toy_json();
    j["moduli"] = {{"four", "13"}};
    CHECK(error_of(j) == "bad field: moduli.four key must be a degree");

    CHECK_THROWS_WITH(parse_profile("{"), Catch::Matchers::StartsWith("profile is not valid JSON"));
}

TEST_CASE("structural errors surface on construction", "[profile]") {
    auto p = builtin_toy20();
    p.wrap.acb.n2 = 3;
    CHECK_THROWS_WITH(NmSuite(p), Catch::Matchers::StartsWith("ilnm.wrap.acb.n2"));

    p = builtin_toy20();
    p.inv.acb.n2 = 40;
    CHECK_THROWS_WITH(NmSuite(p), Catch::Matchers::StartsWith("ilnm_inv.acb"));

    p = builtin_toy20();
    p.code.n_b = 15;
    CHECK_THROWS_AS(NmSuite(p), ProfileError);

    p = builtin_toy20();
    p.enforce_preconditions = true;
    CHECK_THROWS_WITH(NmSuite(p), Catch::Matchers::ContainsSubstring("breaker preconditions fail"));
}

TEST_CASE("field overrides", "[profile]") {
    // x^4 + x^3 + 1 in place of the default quartic.
    auto j = toy_json();
    j["moduli"] = {{"4", "19"}};
    auto p = profile_from_json(j);
    REQUIRE(p.moduli.count(4) == 1);
    CHECK(p.moduli.at(4)->modulus() == BitVector::parse("5:19"));
    CHECK(profile_to_json(p)["moduli"]["4"] == "19");
    NmSuite over(p), base(builtin_toy20());
    std::size_t differ = 0;
    for (std::uint64_t z = 0; z < 4096; ++z) {
        auto v = BitVector::from_uint(z * 257 + 3, 20);
        differ += ilext(over, v) != ilext(base, v);
    }
    CHECK(differ > 0);

    j["moduli"] = {{"4", "11"}};  // x^4 + 1 is reducible
    CHECK_THAT(error_of(j), Catch::Matchers::StartsWith("bad field: moduli.4"));
}
