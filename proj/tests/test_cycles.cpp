#include <cmath>

#include <doctest.h>

#include "opencarnot/cycles.hpp"

using namespace ocarnot;

namespace {

const SpeciesSpec A("A", 100.0, 250.0, 0.0);
const SpeciesSpec B("B", 200.0, 600.0, 1000.0);
const StandardState ss(300.0, 1e5);

CycleContext single() { return CycleContext(Roster{A}, ss); }
CycleContext mixture() { return CycleContext(Roster{A, B}, ss); }

CarnotGeometry geometry(double T1, double T2, double ratio, double dm) {
    CarnotGeometry g;
    g.id = "g";
    g.T1 = T1;
    g.T2 = T2;
    g.ratio = ratio;
    g.m_start = {0.01};
    g.dm = dm;
    return g;
}

double carnot_gap(const CycleLedger& L) {
    const double a = L.Q1_tot / L.reservoirs.T1;
    return std::abs(a - L.Q2_tot / L.reservoirs.T2) / std::abs(a);
}

}  // namespace

TEST_CASE("isotherm and adiabat against ideal-gas closed forms") {
    const auto ctx = single();
    const SystemState s{400.0, 1.0, {0.01}};
    const auto iso = integrate_segment(s, SegmentSpec::isotherm(3.0), ctx);
    CHECK(iso.end.V == doctest::Approx(3.0));
    CHECK(iso.leg.boundary_work == doctest::Approx(-0.01 * 100.0 * 400.0 * std::log(3.0)).epsilon(1e-12));
    CHECK(iso.leg.diathermal_heat == doctest::Approx(0.01 * 100.0 * 400.0 * std::log(3.0)).epsilon(1e-12));

    const auto ad = integrate_segment(s, SegmentSpec::adiabat(300.0), ctx);
    CHECK(ad.end.T == doctest::Approx(300.0));
    CHECK(ad.end.V == doctest::Approx(std::pow(400.0 / 300.0, 250.0 / 100.0)).epsilon(1e-11));
    CHECK(ad.leg.boundary_work == doctest::Approx(0.01 * 250.0 * (300.0 - 400.0)).epsilon(1e-11));
    CHECK(std::abs(ad.leg.diathermal_heat) < 1e-12);
}

TEST_CASE("isothermal exchange against closed-form pump heat") {
    const auto ctx = single();
    const double T = 450.0, V = 2.0, m = 0.5, dm = 0.05;
    const auto r = integrate_segment({T, V, {m}}, SegmentSpec::isothermal_exchange(0, dm), ctx);
    CHECK(r.end.m[0] == doctest::Approx(m + dm));
    CHECK(r.end.T == T);
    CHECK(r.end.V == V);
    CHECK(r.leg.membrane_work == doctest::Approx(100.0 * T * dm).epsilon(1e-12));
    CHECK(r.leg.system_heat() == doctest::Approx(-100.0 * T * dm).epsilon(1e-12));
    // int T s(T, x Rs T / V) dx with int ln x dx = x ln x - x.
    auto F = [&](double x) {
        return T * (350.0 * std::log(T / 300.0) * x - 100.0 * (x * std::log(x * 100.0 * T / (V * 1e5)) - x));
    };
    CHECK(r.leg.pump_heat == doctest::Approx(F(m + dm) - F(m)).epsilon(1e-10));
    auto Fs = [&](double x) { return F(x) / T; };
    CHECK(r.leg.convected_entropy == doctest::Approx(Fs(m + dm) - Fs(m)).epsilon(1e-10));
    CHECK(r.leg.convected_energy == doctest::Approx(250.0 * (T - 300.0) * dm).epsilon(1e-12));
}

TEST_CASE("adiabatic exchange follows T proportional to m^(Rs/cv)") {
    const auto ctx = single();
    const double m = 0.5, dm = 0.1;
    const auto r = integrate_segment({400.0, 1.0, {m}}, SegmentSpec::adiabatic_exchange(0, dm), ctx);
    CHECK(r.end.T == doctest::Approx(400.0 * std::pow((m + dm) / m, 100.0 / 250.0)).epsilon(1e-11));
    CHECK(std::abs(r.leg.diathermal_heat + r.leg.injection_heat) < 1e-10);
}

TEST_CASE("extraction beyond the available mass") {
    const auto ctx = single();
    CHECK_THROWS_AS(integrate_segment({400.0, 1.0, {0.01}}, SegmentSpec::isothermal_exchange(0, -0.02), ctx),
                    EmptySpeciesError);
    CHECK_THROWS_AS(integrate_segment({400.0, 1.0, {0.01}}, SegmentSpec::adiabatic_exchange(0, -0.01), ctx),
                    EmptySpeciesError);
}

TEST_CASE("closed Carnot cycle matches the textbook ledger") {
    const auto ctx = single();
    const auto L = run_cycle(make_cycle(CycleKind::Iso, geometry(400.0, 300.0, 2.0, 0.0), ctx.roster), ctx);
    const double Q1 = 0.01 * 100.0 * 400.0 * std::log(2.0);
    CHECK(L.Q1_tot == doctest::Approx(Q1).epsilon(1e-11));
    CHECK(L.Q2_tot == doctest::Approx(Q1 * 300.0 / 400.0).epsilon(1e-11));
    CHECK(L.W_tot == doctest::Approx(Q1 * (1.0 - 300.0 / 400.0)).epsilon(1e-10));
    CHECK(std::abs(L.dU_conv) == 0.0);
}

TEST_CASE("open cycles satisfy the Carnot condition") {
    for (auto kind : {CycleKind::Iso, CycleKind::Adia, CycleKind::Comb}) {
        for (double dm : {0.0, 1e-3, -1e-3}) {
            const auto ctx = single();
            const auto L = run_cycle(make_cycle(kind, geometry(600.0, 280.0, 4.0, dm), ctx.roster), ctx);
            CHECK(carnot_gap(L) < 1e-8);
            const double scale = std::max(1.0, std::abs(L.Q1_tot));
            CHECK(std::abs(L.Q1_tot - L.Q2_tot - L.W_tot + L.dU_boundary) / scale < 1e-9);
            CHECK(std::abs(L.energy_residual) / scale < 1e-9);
        }
    }
}

TEST_CASE("mixture cycle exchanging the second species") {
    const auto ctx = mixture();
    auto g = geometry(500.0, 320.0, 2.5, 2e-3);
    g.m_start = {0.01, 0.005};
    g.species = 1;
    for (auto kind : {CycleKind::Iso, CycleKind::Adia, CycleKind::Comb}) {
        const auto L = run_cycle(make_cycle(kind, g, ctx.roster), ctx);
        CHECK(carnot_gap(L) < 1e-8);
    }
}

TEST_CASE("reversal negates the ledger") {
    const auto ctx = single();
    const auto spec = make_cycle(CycleKind::Comb, geometry(400.0, 300.0, 2.0, 1e-3), ctx.roster);
    const auto f = run_cycle(spec, ctx);
    const auto r = run_cycle(reverse_cycle(spec, ctx), ctx);
    CHECK(r.W_tot == doctest::Approx(-f.W_tot).epsilon(1e-8));
    CHECK(r.Q1_tot == doctest::Approx(-f.Q1_tot).epsilon(1e-8));
    CHECK(r.Q2_tot == doctest::Approx(-f.Q2_tot).epsilon(1e-8));
}

TEST_CASE("non-closing and malformed cycles are rejected") {
    const auto ctx = single();
    CycleSpec c;
    c.id = "open";
    c.reservoirs = {400.0, 300.0};
    c.start = {400.0, 1.0, {0.01}};
    c.segments = {SegmentSpec::isotherm(2.0), SegmentSpec::adiabat(300.0), SegmentSpec::isotherm(2.0),
                  SegmentSpec::adiabat(400.0)};
    CHECK_THROWS_AS(run_cycle(c, ctx), ClosureError);
    c.reservoirs = {300.0, 400.0};
    CHECK_THROWS_AS(validate_cycle(c, ctx), SpecError);
}

TEST_CASE("concatenation cancels the shared adiabat") {
    const auto ctx = single();
    auto g = geometry(450.0, 300.0, 2.0, 1e-3);
    const auto La = run_cycle(make_cycle(CycleKind::Iso, g, ctx.roster), ctx);
    const auto shared = La.legs[2];
    CycleSpec b;
    b.id = "b";
    b.reservoirs = {450.0, 300.0};
    b.start = shared.start;
    b.segments = {SegmentSpec::isotherm(2.0 * shared.start.V), SegmentSpec::adiabat(300.0),
                  SegmentSpec::isotherm(shared.end.V), SegmentSpec::adiabat(450.0)};
    const auto Lb = run_cycle(b, ctx);
    const auto c = concatenate({La, Lb}, {{0, 2, 1, 3}});
    CHECK(c.ledger.W_tot == doctest::Approx(La.W_tot + Lb.W_tot).epsilon(1e-12));
    CHECK(std::abs(c.residual) < 1e-8 * La.Q1_tot / 450.0);
    CHECK(c.shared_cancellation < 1e-9);
}

TEST_CASE("virtual work per cycle and over a family") {
    const auto ctx = single();
    std::vector<CycleLedger> family;
    for (auto kind : {CycleKind::Iso, CycleKind::Adia, CycleKind::Comb}) {
        for (double dm : {0.0, 1e-3, -1e-3}) {
            const auto L = run_cycle(make_cycle(kind, geometry(400.0, 300.0, 2.0, dm), ctx.roster), ctx);
            const auto v = virtual_work(L, 400.0, 300.0);
            const double W_vir = L.Q1_tot * (1.0 - 300.0 / 400.0);
            CHECK(v.W_vir == doctest::Approx(W_vir).epsilon(1e-14));
            CHECK(std::abs(L.W_tot - L.dU_boundary - W_vir) < 1e-8 * std::abs(W_vir));
            if (dm == 0.0) family.push_back(L);
        }
    }
    const auto f = virtual_work_family(family);
    CHECK(std::abs(f.residual) < 1e-7 * f.sum_abs_W_vir);
}
