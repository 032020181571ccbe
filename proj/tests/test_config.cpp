#include "monoflow/presets.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>

using namespace monoflow;

TEST_CASE("parse keeps order and trims whitespace") {
    const Config c = Config::parse_string(
        "# comment\n"
        "[spectral_space]\n"
        "  n = 64 \n"
        "dim=1\n"
        "\n"
        "[evolve]\n"
        "dt = 0.01\n");
    REQUIRE(c.sections().size() == 2);
    CHECK(c.sections()[0].name == "spectral_space");
    CHECK(c.get("spectral_space", "n") == "64");
    CHECK(c.get("spectral_space", "dim") == "1");
    CHECK_FALSE(c.get("spectral_space", "boundary").has_value());
    CHECK(c.has_section("evolve"));
    CHECK(Config::parse_string(c.to_string()) == c);
}

TEST_CASE("every parse problem is reported at once") {
    try {
        Config::parse_string(
            "orphan = 1\n"
            "[a\n"
            "[b]\n"
            "no equals sign\n"
            "x = 1\n"
            "x = 2\n"
            "[b]\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.issues().size() == 5);
        const std::string what = e.what();
        CHECK(what.find("line 1") != std::string::npos);
        CHECK(what.find("given twice") != std::string::npos);
    }
}

TEST_CASE("set overwrites in place") {
    Config c;
    c.set("noise", "kind", "wiener");
    c.set("noise", "sigma", "1");
    c.set("noise", "kind", "zero");
    CHECK(c.get("noise", "kind") == "zero");
    CHECK(c.sections()[0].entries.size() == 2);
}

TEST_CASE("doubles print in shortest round-trip form") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-300, 300);
    for (int i = 0; i < 2000; ++i) {
        const double v = std::pow(10.0, u(rng) / 10) * (i % 2 ? 1 : -1);
        CHECK(parse_double(format_double(v)) == v);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1e-3) == "0.001");
    CHECK_FALSE(parse_double("1.0x").has_value());
    CHECK_FALSE(parse_double("").has_value());
    CHECK(parse_int("-12") == -12);
    CHECK_FALSE(parse_int("3.5").has_value());
    CHECK(parse_u64("18446744073709551615") == std::numeric_limits<unsigned long long>::max());
    CHECK(parse_bool("true") == true);
    CHECK(parse_bool("0") == false);
    CHECK_FALSE(parse_bool("maybe").has_value());
}

TEST_CASE("lists split and join") {
    CHECK(split_list(" 1, 2 ,3") == std::vector<std::string>{"1", "2", "3"});
    CHECK(split_list("").empty());
    CHECK(join_list({"a", "b"}) == "a, b");
}

TEST_CASE("every preset survives a config round trip") {
    int count = 0;
    for (const auto& base : preset_names()) {
        for (Variant v : preset_variants(base)) {
            const ExperimentPreset p = make_preset(base + "." + variant_name(v));
            INFO(p.full_name());
            CHECK_NOTHROW(p.validate());
            const ExperimentPreset q = preset_from_config(Config::parse_string(to_config(p).to_string()));
            CHECK(p == q);
            ++count;
        }
    }
    CHECK(count >= 30);
}

TEST_CASE("overrides apply on top of the named preset") {
    const Config c = Config::parse_string(
        "[harness]\npreset = fastdiff_1d\nvariant = wiener\nseed = 5\n"
        "[evolve]\ndt = 0.005\n"
        "[monotone_graphs]\np = 1.25\n");
    const ExperimentPreset p = preset_from_config(c);
    CHECK(p.name == "fastdiff_1d");
    CHECK(p.variant == Variant::Wiener);
    CHECK(p.seed == 5);
    CHECK(p.solver.dt == 0.005);
    CHECK(p.p == 1.25);
    CHECK(p.noise == make_preset("fastdiff_1d.wiener").noise);
}

TEST_CASE("invalid settings are listed together") {
    const Config c = Config::parse_string(
        "[harness]\npreset = tvflow_1d\n"
        "[spectral_space]\nn = -3\nbogus = 1\n"
        "[monotone_graphs]\np = 7\n"
        "[evolve]\ndt = abc\n");
    try {
        preset_from_config(c);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.issues().size() >= 4);
    }
    CHECK_THROWS(make_preset("no_such_preset"));
    CHECK_THROWS_AS(make_preset("tvflow_1d.sideways"), std::invalid_argument);
}

TEST_CASE("uncertified noise is rejected when regularity is claimed") {
    ExperimentPreset p = make_preset("tvflow_1d.wiener");
    REQUIRE(p.claims_s_regular);
    p.noise.rho = 0.25;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p.claims_s_regular = false;
    CHECK_NOTHROW(p.validate());
}

TEST_CASE("builders honour the preset") {
    const ExperimentPreset p = make_preset("plasma_2d");
    const auto space = build_space(p);
    CHECK(space->grid().dim() == 2);
    CHECK(space->grid().n() == p.n);
    CHECK(space->mode() == TripleMode::L2OverHm1);
    const DriftOperator op = build_operator(p, space);
    CHECK(op.graph().kind() == GraphKind::LogPlasma);
    const Vec x0 = initial_state(p, *space);
    CHECK(x0.size() == p.n * p.n);
    CHECK(x0 == initial_state(p, *space));

    ExperimentPreset q = make_preset("tvflow_1d");
    q.initial.norm = 2.0;
    const auto s1 = build_space(q);
    CHECK(s1->norm_h(initial_state(q, *s1)) == Catch::Approx(2.0).epsilon(1e-12));
}
