#include <cmath>
#include <limits>

#include <doctest.h>

#include "opencarnot/errors.hpp"
#include "opencarnot/fluid.hpp"

using namespace ocarnot;

namespace {

const SpeciesSpec A("A", 100.0, 250.0, 0.0);
const SpeciesSpec B("B", 200.0, 600.0, 1000.0);
const StandardState ss(300.0, 1e5);

// Ideal-gas entropy relative to (T0, p0), written out independently.
double s_oracle(const SpeciesSpec& sp, double T, double p) {
    return (sp.cv() + sp.Rs()) * std::log(T / 300.0) - sp.Rs() * std::log(p / 1e5);
}

}  // namespace

TEST_CASE("species constants") {
    CHECK(A.cp() == A.cv() + A.Rs());
    CHECK(A.cp() == 350.0);
    CHECK(A.standard_volume(ss) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK_THROWS_AS(SpeciesSpec("X", -1.0, 250.0), Error);
    CHECK_THROWS_AS(SpeciesSpec("X", 100.0, 0.0), Error);
    CHECK_THROWS_AS(SpeciesSpec("X", std::numeric_limits<double>::infinity(), 250.0), Error);
    CHECK_THROWS_AS(StandardState(0.0, 1e5), Error);
    CHECK_THROWS_AS(StandardState(300.0, -1.0), Error);
}

TEST_CASE("reference species matches the default constants") {
    const auto r = reference_species();
    CHECK(r.Rs() == 100.0);
    CHECK(r.cv() == 250.0);
    CHECK(r.cp() == 350.0);
    CHECK(r.Uss() == 0.0);
    const auto s0 = reference_standard_state();
    CHECK(s0.T0() == 300.0);
    CHECK(s0.p0() == 1e5);
}

TEST_CASE("partial and total pressure") {
    const Roster one{A};
    CHECK(partial_pressure({300.0, 1.0, {1.0}}, one, 0) == doctest::Approx(30000.0).epsilon(1e-15));
    const Roster two{A, B};
    const SystemState s{350.0, 2.0, {1.0, 0.0}};
    CHECK(partial_pressure(s, two, 1) == 0.0);
    const SystemState m{350.0, 2.0, {1.0, 0.4}};
    const double pA = 1.0 * 100.0 * 350.0 / 2.0;
    const double pB = 0.4 * 200.0 * 350.0 / 2.0;
    CHECK(total_pressure(m, two) == doctest::Approx(pA + pB).epsilon(1e-14));
    CHECK(total_pressure(m, two) * m.V == doctest::Approx(gas_constant(m, two) * m.T).epsilon(1e-14));
    const SystemState k{350.0, 6.0, {3.0, 1.2}};
    CHECK(partial_pressure(k, two, 0) == doctest::Approx(pA).epsilon(1e-14));
    CHECK(partial_pressure(k, two, 1) == doctest::Approx(pB).epsilon(1e-14));
    CHECK_THROWS_AS(partial_pressure(m, two, 2), RosterError);
}

TEST_CASE("state validation") {
    const Roster two{A, B};
    CHECK_NOTHROW(validate_state({300.0, 1.0, {1.0, 0.0}}, two));
    CHECK_THROWS_AS(validate_state({-1.0, 1.0, {1.0, 0.0}}, two), Error);
    CHECK_THROWS_AS(validate_state({300.0, 0.0, {1.0, 0.0}}, two), Error);
    CHECK_THROWS_AS(validate_state({300.0, 1.0, {-1.0, 1.0}}, two), Error);
    CHECK_THROWS_AS(validate_state({300.0, 1.0, {0.0, 0.0}}, two), Error);
    CHECK_THROWS_AS(validate_state({300.0, 1.0, {1.0}}, two), Error);
}

TEST_CASE("convected entropy closed form and quadrature route") {
    CHECK(specific_convected_entropy(A, ss, 300.0, 1e5) == 0.0);
    for (double T : {150.0, 300.0, 700.0, 1200.0}) {
        for (double p : {1e4, 1e5, 3e6}) {
            const double oracle = s_oracle(A, T, p);
            CHECK(specific_convected_entropy(A, ss, T, p) == doctest::Approx(oracle).epsilon(1e-13).scale(1.0));
            CHECK(specific_convected_entropy_quadrature(A, ss, T, p) ==
                  doctest::Approx(oracle).epsilon(1e-10).scale(1.0));
            const auto r = specific_convected_entropy_routes(B, ss, T, p);
            CHECK(r.closed_form == doctest::Approx(s_oracle(B, T, p)).epsilon(1e-13).scale(1.0));
            CHECK(r.rel_difference < 1e-10);
        }
    }
}

TEST_CASE("energies and property bundle") {
    const auto e = pure_specific_energy(B, ss, 400.0);
    CHECK(e.u == doctest::Approx(1000.0 + 600.0 * 100.0));
    CHECK(e.h == doctest::Approx(e.u + 200.0 * 400.0));
    const Roster two{A, B};
    const SystemState s{400.0, 2.0, {1.5, 0.5}};
    const double U = 1.5 * (250.0 * 100.0) + 0.5 * (1000.0 + 600.0 * 100.0);
    CHECK(mixture_energy(s, two, ss) == doctest::Approx(U).epsilon(1e-14));
    CHECK(heat_capacity(s, two) == doctest::Approx(1.5 * 250.0 + 0.5 * 600.0));
    const auto p = properties(s, two, ss);
    CHECK(p.U == doctest::Approx(U).epsilon(1e-14));
    CHECK(p.p_total == doctest::Approx(p.p[0] + p.p[1]).epsilon(1e-15));
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(p.h[i] == doctest::Approx(p.u[i] + two[i].Rs() * s.T).epsilon(1e-15));
        CHECK(p.s[i] == doctest::Approx(s_oracle(two[i], s.T, p.p[i])).epsilon(1e-13));
    }
    const auto q = properties({400.0, 2.0, {1.0, 0.0}}, two, ss);
    CHECK(std::isnan(q.s[1]));
}

TEST_CASE("mixture specific entropy equals convected entropy at the partial pressure") {
    const Roster two{A, B};
    const SystemState s{450.0, 1.7, {0.8, 0.3}};
    for (std::size_t i = 0; i < 2; ++i) {
        const double p = s.m[i] * two[i].Rs() * s.T / s.V;
        CHECK(mixture_specific_entropy(s, two, ss, i) == doctest::Approx(s_oracle(two[i], s.T, p)).epsilon(1e-13));
    }
}
