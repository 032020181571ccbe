#include "monoflow/noise.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <sstream>

using namespace monoflow;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("seed splitting is deterministic and collision free on a block") {
    CHECK(split_seed(1, 2) == split_seed(1, 2));
    std::set<std::uint64_t> seen;
    for (std::uint64_t m : {0ULL, 1ULL, 20240917ULL})
        for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(split_seed(m, i));
    CHECK(seen.size() == 3000);
    auto a = make_engine(5);
    auto b = make_engine(5);
    CHECK(a() == b());
}

TEST_CASE("Wiener increments have the prescribed modal variance") {
    const SpectralSpace s(GridDomain(1, 32, Boundary::Dirichlet), TripleMode::H1OverL2);
    const NoiseSpec spec = NoiseSpec::wiener(2.0, 1.0, 6);
    const double dt = 0.01;
    const int steps = 20000;
    const NoisePath path = sample_path(s, spec, 17, dt, steps);
    REQUIRE(path.driven_modes() == 6);
    REQUIRE(path.steps() == steps);
    const Vec amp = wiener_amplitudes(s, 2.0, 1.0, 6);
    for (int j = 0; j < 6; ++j) {
        CHECK_THAT(amp[j], WithinRel(2.0 / s.eigenvalue(j), 1e-14));
        double sum = 0.0, sq = 0.0;
        for (int k = 0; k < steps; ++k) {
            const double v = path.modal()(k, j);
            sum += v;
            sq += v * v;
        }
        const double var = sq / steps - (sum / steps) * (sum / steps);
        const double expect = amp[j] * amp[j] * dt;
        // sample variance of a Gaussian has relative SE sqrt(2/N) ≈ 0.01
        CHECK_THAT(var, WithinRel(expect, 0.05));
        CHECK(std::abs(sum / steps) < 5.0 * std::sqrt(expect / steps));
    }
    for (int k = 0; k < 10; ++k) {
        const Vec dw = path.wiener_increment(k);
        for (int j = 0; j < 6; ++j) CHECK_THAT(path.modal()(k, j), WithinAbs(amp[j] * dw[j], 1e-14));
    }
}

TEST_CASE("grid increments synthesize the modal coefficients") {
    const SpectralSpace s(GridDomain(2, 8, Boundary::Dirichlet), TripleMode::L2OverHm1);
    const NoisePath path = sample_path(s, NoiseSpec::wiener(1.0, 1.0, 10), 3, 0.1, 5);
    for (int k = 0; k < 5; ++k) {
        const Vec c = s.analyze(path.increment(k));
        for (int j = 0; j < s.modes(); ++j) CHECK_THAT(c[j], WithinAbs(j < 10 ? path.modal()(k, j) : 0.0, 1e-12));
    }
    CHECK((path.cumulative(3) - path.increment(0) - path.increment(1) - path.increment(2)).norm() < 1e-14);
    CHECK(path.cumulative(0).norm() == 0.0);
}

TEST_CASE("same seed gives the same path, different seeds differ") {
    const SpectralSpace s(GridDomain(1, 16, Boundary::Dirichlet), TripleMode::H1OverL2);
    const NoiseSpec spec = NoiseSpec::wiener(1.0, 2.0);
    const NoisePath a = sample_path(s, spec, 42, 0.01, 50);
    const NoisePath b = sample_path(s, spec, 42, 0.01, 50);
    const NoisePath c = sample_path(s, spec, 43, 0.01, 50);
    CHECK(a.modal() == b.modal());
    CHECK(a.modal() != c.modal());
}

TEST_CASE("coarsening sums consecutive increments and slicing keeps them") {
    const SpectralSpace s(GridDomain(1, 16, Boundary::Dirichlet), TripleMode::H1OverL2);
    const NoisePath fine = sample_path(s, NoiseSpec::wiener(1.0, 2.0), 1, 0.01, 12);
    const NoisePath coarse = fine.coarsen(s, 4);
    REQUIRE(coarse.steps() == 3);
    CHECK_THAT(coarse.dt(), WithinRel(0.04, 1e-14));
    for (int k = 0; k < 3; ++k) {
        Vec sum = Vec::Zero(16);
        for (int j = 0; j < 4; ++j) sum += fine.increment(4 * k + j);
        CHECK((coarse.increment(k) - sum).norm() < 1e-13);
    }
    const NoisePath tail = fine.slice(5, 4);
    REQUIRE(tail.steps() == 4);
    for (int k = 0; k < 4; ++k) CHECK((tail.increment(k) - fine.increment(5 + k)).norm() == 0.0);
    CHECK_THROWS_AS(fine.slice(10, 5), std::out_of_range);
}

TEST_CASE("compound Poisson jump counts and support") {
    const SpectralSpace s(GridDomain(1, 16, Boundary::Dirichlet), TripleMode::H1OverL2);
    const NoiseSpec spec = NoiseSpec::compound_poisson(3.0, {0, 2}, 0.5);
    const int steps = 20000;
    const double dt = 0.01;
    const NoisePath path = sample_path(s, spec, 11, dt, steps);
    long total = 0;
    for (int k = 0; k < steps; ++k) {
        total += path.jumps(k);
        const Vec c = s.analyze(path.increment(k));
        for (int j = 0; j < s.modes(); ++j)
            if (j != 0 && j != 2) CHECK(std::abs(c[j]) < 1e-12);
        if (path.jumps(k) == 0) CHECK(path.increment(k).norm() == 0.0);
    }
    const double mean = 3.0 * dt * steps;
    CHECK(std::abs(total - mean) < 5.0 * std::sqrt(mean));
}

TEST_CASE("CSV round trip reproduces the path") {
    const SpectralSpace s(GridDomain(1, 16, Boundary::Dirichlet), TripleMode::H1OverL2);
    for (const NoiseSpec& spec : {NoiseSpec::wiener(1.5, 2.0, 5), NoiseSpec::compound_poisson(5.0, {0, 1}, 1.0)}) {
        const NoisePath path = sample_path(s, spec, 77, 0.02, 30);
        std::stringstream ss;
        path.write_csv(ss);
        const NoisePath back = NoisePath::read_csv(ss, s);
        REQUIRE(back.steps() == 30);
        for (int k = 0; k < 30; ++k) CHECK((back.increment(k) - path.increment(k)).norm() <= 1e-15 * (1 + path.increment(k).norm()));
    }
}

TEST_CASE("spec validation") {
    const SpectralSpace s(GridDomain(1, 8, Boundary::Dirichlet), TripleMode::H1OverL2);
    CHECK_NOTHROW(NoiseSpec::wiener(1.0, 2.0).validate(s));
    CHECK_THROWS(NoiseSpec::wiener(-1.0, 2.0).validate(s));
    CHECK_THROWS(NoiseSpec::compound_poisson(1.0, {99}, 1.0).validate(s));
    CHECK(parse_noise_kind(NoiseSpec::wiener(1.0, 2.0).kind_name()) == NoiseKind::TraceClassWiener);
}

TEST_CASE("regularity certificate depends on spectral decay") {
    const SpectralSpace s(GridDomain(1, 64, Boundary::Dirichlet), TripleMode::H1OverL2);
    const RegularityReport good = regularity_report(s, sample_path(s, NoiseSpec::wiener(1.0, 2.0), 1, 0.01, 200));
    const RegularityReport bad = regularity_report(s, sample_path(s, NoiseSpec::wiener(1.0, 0.5), 1, 0.01, 200));
    CHECK(good.certifies_hyp_g);
    CHECK(good.tail_fraction <= 0.05);
    CHECK_FALSE(bad.certifies_hyp_g);
    CHECK(good.l2_T32_norm > 0.0);
}

TEST_CASE("diffusion coefficient modulation") {
    const SpectralSpace s(GridDomain(1, 16, Boundary::Dirichlet), TripleMode::H1OverL2);
    DiffusionCoefficient c;
    c.b = wiener_amplitudes(s, 1.0, 2.0, 4);
    Vec x = Vec::Zero(16);
    x[3] = 1.0;
    const double nx = s.norm_h(x);
    CHECK(c.beta(s, x) == 1.0);
    c.modulation = Modulation::Saturating;
    CHECK_THAT(c.beta(s, x), WithinRel(1.0 / (1.0 + nx), 1e-14));
    c.modulation = Modulation::AffineClipped;
    c.a = 0.5;
    c.slope = 10.0;
    c.clip = 0.8;
    CHECK(c.beta(s, x) == 0.8);
    CHECK(parse_modulation(modulation_name(Modulation::Saturating)) == Modulation::Saturating);

    const Vec dw = Vec::Constant(4, 0.1);
    c.modulation = Modulation::Saturating;
    const Vec inc = multiplicative_increment(s, c, x, dw);
    CHECK((inc - c.beta(s, x) * modal_increment(s, c.b, dw)).norm() < 1e-14);

    std::vector<Vec> samples = {x, 2 * x, Vec::Zero(16)};
    CHECK(audit_coefficient(s, c, samples).within_declared);
}
