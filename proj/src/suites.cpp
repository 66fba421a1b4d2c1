#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <random>

#include "opencarnot/harness.hpp"

namespace ocarnot::harness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

std::string signed_num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%+.0e", x);
    return x == 0.0 ? "0" : buf;
}

std::string padded(int n, int width = 2) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%0*d", width, n);
    return buf;
}

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) { return splitmix(seed ^ splitmix(stream)); }

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double relative(double value, double scale) { return std::abs(value) / std::max(std::abs(scale), 1e-300); }

class Rows {
public:
    explicit Rows(SuiteOutput& out) : out_(out) {}

    void at_most(const std::string& id, const std::string& tag, double value, double bound) {
        out_.rows.push_back({id, RowKind::Asserted, tag, value, bound, value <= bound ? Verdict::Pass : Verdict::Fail});
    }
    void at_least(const std::string& id, const std::string& tag, double value, double bound) {
        out_.rows.push_back({id, RowKind::Asserted, tag, value, bound, value >= bound ? Verdict::Pass : Verdict::Fail});
    }
    void measured(const std::string& id, const std::string& tag, double value, double bound) {
        out_.rows.push_back({id, RowKind::ReportOnly, tag, value, bound, Verdict::Measured});
    }
    /// Runs one experiment; a module error becomes a failing row carrying the id.
    void guarded(const std::string& id, const std::string& tag, const std::function<void()>& f) {
        try {
            f();
        } catch (const std::exception& e) {
            out_.errors.push_back(id + ": " + e.what());
            out_.rows.push_back({id + "/error", RowKind::Asserted, tag, kNaN, 0.0, Verdict::Fail});
        }
    }
    void table(ConvergenceTable t) { out_.tables.push_back(std::move(t)); }

private:
    SuiteOutput& out_;
};

struct Reference {
    Roster single{reference_species()};
    Roster mixture{reference_species(), SpeciesSpec("B", 200.0, 600.0, 1000.0)};
    StandardState ss = reference_standard_state();
};

const Reference& reference() {
    static const Reference r;
    return r;
}

CycleContext context(const Roster& roster, const StandardState& ss, const Tolerances& tol) {
    CycleContext ctx(roster, ss);
    ctx.closure_tol = tol.closure;
    return ctx;
}

// Cycle checks shared by the built-in sweep and config cycles.
void cycle_rows(Rows& rows, const std::string& id, const CycleLedger& L, const Tolerances& tol, bool closed,
                CycleKind kind) {
    const double T1 = L.reservoirs.T1;
    const double T2 = L.reservoirs.T2;
    const auto c = carnot_residual(L, T1, T2);
    rows.at_most(id + "/carnot", closed ? "Lemma3" : "Eq.19", c.relative, tol.carnot);
    rows.at_most(id + "/heat_ratio", "Eq.20", relative(c.heat_ratio - c.temperature_ratio, c.temperature_ratio),
                 tol.carnot);
    const double scale = std::max(1.0, std::abs(L.Q1_tot));
    rows.at_most(id + "/energy_balance", kind == CycleKind::Adia ? "Eq.16" : "Eq.13",
                 std::abs(L.energy_residual) / scale, tol.ledger);
    rows.at_most(id + "/first_law_closure", kind == CycleKind::Adia ? "Eq.17" : "Eq.14",
                 std::abs(L.closure_residual) / scale, tol.ledger);
}

void carnot_suite(Rows& rows, const Tolerances& tol) {
    const auto& ref = reference();
    const auto ctx = context(ref.single, ref.ss, tol);
    for (auto kind : {CycleKind::Iso, CycleKind::Adia, CycleKind::Comb}) {
        for (double T1 : {350.0, 400.0, 600.0}) {
            for (double T2 : {280.0, 300.0}) {
                for (double ratio : {1.5, 2.0, 4.0}) {
                    for (double dm : {0.0, 1e-3, -1e-3}) {
                        const std::string id = "carnot/" + to_string(kind) + "/T1=" + num(T1) + "/T2=" + num(T2) +
                                               "/r=" + num(ratio) + "/dm=" + signed_num(dm);
                        rows.guarded(id, "Eq.19", [&] {
                            CarnotGeometry g;
                            g.id = id;
                            g.T1 = T1;
                            g.T2 = T2;
                            g.ratio = ratio;
                            g.m_start = {0.01};
                            g.dm = dm;
                            const auto L = run_cycle(make_cycle(kind, g, ctx.roster), ctx);
                            cycle_rows(rows, id, L, tol, dm == 0.0, kind);
                        });
                    }
                }
            }
        }
    }

    // Two-species working fluid exchanging the second species.
    const auto mix = context(ref.mixture, ref.ss, tol);
    for (auto kind : {CycleKind::Iso, CycleKind::Adia, CycleKind::Comb}) {
        for (double dm : {2e-3, -2e-3}) {
            const std::string id = "carnot/mixture/" + to_string(kind) + "/dm=" + signed_num(dm);
            rows.guarded(id, "Eq.19", [&] {
                CarnotGeometry g;
                g.id = id;
                g.T1 = 500.0;
                g.T2 = 320.0;
                g.ratio = 2.5;
                g.m_start = {0.01, 0.005};
                g.species = 1;
                g.dm = dm;
                const auto L = run_cycle(make_cycle(kind, g, mix.roster), mix);
                cycle_rows(rows, id, L, tol, false, kind);
            });
        }
    }

    // Reversed traversal gives the negated ledger.
    for (auto kind : {CycleKind::Iso, CycleKind::Adia, CycleKind::Comb}) {
        const std::string id = "carnot/reversal/" + to_string(kind);
        rows.guarded(id, "Lemma3", [&] {
            CarnotGeometry g;
            g.id = id;
            g.m_start = {0.01};
            g.dm = 1e-3;
            const auto spec = make_cycle(kind, g, ctx.roster);
            const auto fwd = run_cycle(spec, ctx);
            const auto rev = run_cycle(reverse_cycle(spec, ctx), ctx);
            rows.at_most(id + "/work_negation", "Lemma3", relative(fwd.W_tot + rev.W_tot, fwd.W_tot), tol.carnot);
            rows.at_most(id + "/heat_negation", "Lemma3", relative(fwd.Q1_tot + rev.Q1_tot, fwd.Q1_tot), tol.carnot);
            cycle_rows(rows, id, rev, tol, false, kind);
        });
    }

    // Two cycles sharing an adiabat traversed in opposite directions.
    const std::string cid = "carnot/concatenation";
    rows.guarded(cid, "Lemma4", [&] {
        CarnotGeometry g;
        g.id = cid + "/a";
        g.T1 = 450.0;
        g.T2 = 300.0;
        g.ratio = 2.0;
        g.m_start = {0.01};
        g.dm = 1e-3;
        const auto a = make_cycle(CycleKind::Iso, g, ctx.roster);
        const auto La = run_cycle(a, ctx);
        const auto shared = La.legs[2];  // adiabat T1 -> T2 after the hot exchange
        CycleSpec b;
        b.id = cid + "/b";
        b.kind = CycleKind::Iso;
        b.reservoirs = {g.T1, g.T2};
        b.start = shared.start;
        b.segments = {SegmentSpec::isotherm(2.0 * shared.start.V), SegmentSpec::adiabat(g.T2),
                      SegmentSpec::isotherm(shared.end.V), SegmentSpec::adiabat(g.T1)};
        const auto Lb = run_cycle(b, ctx);
        const auto comp = concatenate({La, Lb}, {{0, 2, 1, 3}}, tol.closure);
        const double scale = std::abs(comp.ledger.Q1_tot / g.T1);
        rows.at_most(cid + "/composite_carnot", "Lemma4", relative(comp.residual, scale), tol.carnot);
        rows.at_most(cid + "/shared_leg_cancellation", "Lemma4",
                     comp.shared_cancellation / std::max(1.0, std::abs(La.Q1_tot)), tol.ledger);
        rows.at_most(cid + "/component_sum", "Lemma4", relative(comp.component_residual_sum, scale), tol.carnot);
    });
}

void work_routes_suite(Rows& rows, const Tolerances& tol) {
    const auto& ref = reference();
    const auto& sp = ref.single[0];
    double witness = std::numeric_limits<double>::infinity();
    for (double T : {150.0, 300.0, 450.0, 600.0, 1200.0}) {
        for (double pf : {0.1, 0.5, 1.0, 2.0, 10.0}) {
            const double p = pf * ref.ss.p0();
            const std::string id = "work_routes/T=" + num(T) + "/p=" + num(pf) + "p0";
            rows.guarded(id, "Eq.11", [&] {
                const auto w = work_state_function_routes(sp, ref.ss, T, p);
                const double scale = std::max(1.0, std::abs(w.via_pt));
                rows.at_most(id + "/route_gap", "Eq.11", w.path_gap / scale, tol.work_routes);
                rows.at_most(id + "/direct_gap", "Eq.12", w.direct_gap / scale, tol.work_routes);
                const double fgap = std::abs(formation_work(sp, ref.ss, T, p, CanonicalPath::PT) -
                                             formation_work(sp, ref.ss, T, p, CanonicalPath::TP));
                rows.measured(id + "/formation_gap", "Eq.8", fgap, 0.0);
                if (T != ref.ss.T0() && pf != 1.0) witness = std::min(witness, fgap);
            });
        }
    }
    rows.at_least("work_routes/formation_gap_min_off_reference", "Eq.8", witness, 100.0);
}

void reciprocity_suite(Rows& rows, const Tolerances& tol) {
    const auto& ref = reference();
    struct Case {
        std::string name;
        SystemState state;
        const Roster* roster;
    };
    const std::vector<Case> cases{{"single", {450.0, 2.0, {1.5}}, &ref.single},
                                  {"mixture", {350.0, 1.0, {1.0, 0.4}}, &ref.mixture}};
    const std::vector<double> steps{4e-3, 2e-3, 1e-3, 5e-4, 2.5e-4};
    for (const auto& c : cases) {
        for (auto which : {StateFunctional::TotalHeat, StateFunctional::TotalWork}) {
            const std::string tag = which == StateFunctional::TotalHeat ? "Lemma1" : "Lemma2";
            const std::string id = "reciprocity/" + c.name + "/" + to_string(which);
            rows.guarded(id, tag, [&] {
                ConvergenceTable t;
                t.name = "reciprocity_" + c.name + "_" + to_string(which);
                t.header = {"rel_step", "max_rel_asymmetry", "max_abs_asymmetry"};
                std::vector<double> asym;
                for (double h : steps) {
                    const auto r = reciprocity_check(c.state, *c.roster, ref.ss, which, h);
                    asym.push_back(r.max_rel_asymmetry);
                    t.rows.push_back({h, r.max_rel_asymmetry, r.max_abs_asymmetry});
                }
                rows.at_most(id + "/asymmetry", tag, asym.back(), tol.reciprocity);
                // Truncation-dominated pair of steps; h^2 behaviour gives 4.
                rows.at_least(id + "/halving_ratio", tag, asym[0] / asym[1], 3.0);
                rows.table(std::move(t));
            });
        }
    }
}

// Loop rows shared by the loops suite, adjudication and config loops.
void loop_rows(Rows& rows, const std::string& id, const LoopSpec& loop, const Roster& roster,
               const StandardState& ss, const Tolerances& tol, bool report_only_rows_only = false) {
    rows.guarded(id, "Thm1", [&] {
        LoopSpec l = loop;
        l.quad.abs_tol = tol.quadrature;
        const auto f = loop_functionals(l, roster, ss);
        const double k = tol.identity_factor;
        if (!report_only_rows_only) {
            rows.at_most(id + "/clausius_total", "Thm1", relative(f.I_tot, f.abs_tot), tol.clausius);
            rows.at_most(id + "/decomposition_gap", "Eq.24", std::abs(f.decomposition_gap),
                         k * (f.err_tot + f.err_dia + f.err_conv));
            rows.at_most(id + "/product_rule_gap", "Thm2", std::abs(f.product_gap), k * (f.err_conv + f.err_gd));
            if (loop.intensive_frozen) {
                rows.at_most(id + "/I_gd", "Lemma5", std::abs(f.I_gd), k * f.err_gd + tol.quadrature * f.abs_tot);
                rows.at_most(id + "/I_dia", "Lemma5", std::abs(f.I_dia), k * f.err_dia + tol.quadrature * f.abs_tot);
            }
        }
        if (!loop.intensive_frozen) {
            rows.measured(id + "/I_dia", "Thm3", f.I_dia, f.err_dia);
            rows.measured(id + "/I_gd", "Thm2", f.I_gd, f.err_gd);
        }
    });
}

struct LoopSet {
    std::vector<std::pair<std::string, LoopSpec>> loops;
};

SystemState closed_mass(const SystemState& s, const SystemState& frozen) {
    SystemState x = s;
    x.m = frozen.m;
    return x;
}

LoopSet builtin_loops(std::uint64_t seed) {
    LoopSet set;
    const SystemState base{400.0, 1.0, {1.0, 0.5}};
    for (int k = 0; k < 20; ++k) {
        const std::string id = "loops/fourier-" + padded(k);
        set.loops.emplace_back(id, LoopSpec::fourier(id, base, 4, 0.3, derive_seed(seed, 100 + k)));
    }
    struct E {
        double T, m, aT, am;
        bool cw;
    };
    const std::vector<E> ellipses{{400, 1.0, 100, 0.4, false},
                                  {300, 0.5, 60, 0.2, false},
                                  {700, 2.0, 300, 1.5, false},
                                  {500, 1.0, 50, 0.8, true},
                                  {350, 0.3, 150, 0.1, false}};
    for (std::size_t k = 0; k < ellipses.size(); ++k) {
        const auto& e = ellipses[k];
        const std::string id = "loops/ellipse-" + padded(static_cast<int>(k));
        set.loops.emplace_back(id, LoopSpec::ellipse_tm(id, SystemState{e.T, 1.0, {e.m, 0.5}}, 0, e.aT, e.am, e.cw));
    }
    set.loops.emplace_back("loops/polygon",
                           LoopSpec::polygon_tm("loops/polygon", base, 1,
                                                {{300.0, 0.3}, {520.0, 0.4}, {480.0, 0.9}, {320.0, 0.7}}));
    // Closed system: the random loop with masses frozen.
    const std::string cid = "loops/closed-system";
    auto closed = LoopSpec::fourier(cid, base, 3, 0.3, derive_seed(seed, 99));
    auto pos = closed.position;
    auto vel = closed.velocity;
    closed.position = [pos, base](double s) { return closed_mass(pos(s), base); };
    closed.velocity = [vel](double s) {
        auto v = vel(s);
        std::fill(v.dm.begin(), v.dm.end(), 0.0);
        return v;
    };
    set.loops.emplace_back(cid, closed);
    return set;
}

void loops_suite(Rows& rows, const Tolerances& tol, std::uint64_t seed, bool report_only_rows_only) {
    const auto& ref = reference();
    for (const auto& [id, loop] : builtin_loops(seed).loops) {
        loop_rows(rows, id, loop, ref.mixture, ref.ss, tol, report_only_rows_only);
    }
    if (report_only_rows_only) return;
    // A closed system is Clausius-exact in both forms.
    const std::string cid = "loops/closed-system";
    rows.guarded(cid + "/clausius", "Thm1", [&] {
        for (const auto& [id, loop] : builtin_loops(seed).loops) {
            if (id != cid) continue;
            LoopSpec l = loop;
            l.quad.abs_tol = tol.quadrature;
            const auto f = loop_functionals(l, ref.mixture, ref.ss);
            rows.at_most(cid + "/clausius_dia", "Thm1", relative(f.I_dia, f.abs_dia), tol.clausius);
        }
    });
}

const std::pair<double, double> kEllipseAxes{100.0, 0.4};

LoopSpec reference_ellipse(bool clockwise = false) {
    return LoopSpec::ellipse_tm("ellipse", SystemState{400.0, 1.0, {1.0}}, 0, kEllipseAxes.first,
                                kEllipseAxes.second, clockwise);
}

void staircase_rows(Rows& rows, const std::string& id, const LoopSpec& loop, const std::vector<int>& ladder,
                    const CycleContext& ctx, const Tolerances& tol) {
    rows.guarded(id, "Eq.23", [&] {
        LoopSpec l = loop;
        l.quad.abs_tol = tol.quadrature;
        const auto conv = staircase_refine(l, ladder, ctx);
        ConvergenceTable t;
        t.name = "staircase_" + id.substr(id.find('/') + 1);
        std::replace(t.name.begin(), t.name.end(), '/', '_');
        t.header = {"N", "I_dia_staircase", "I_dia_smooth", "error", "ratio", "I_tot_staircase", "reconstruction"};
        int non_monotone = 0;
        for (std::size_t k = 0; k < conv.rows.size(); ++k) {
            const auto& r = conv.rows[k];
            const std::string rid = id + "/N=" + padded(r.N, 3);
            t.rows.push_back({static_cast<double>(r.N), r.I_dia, conv.smooth.I_dia, r.error, r.ratio, r.I_tot,
                              r.reconstruction_residual});
            rows.measured(rid + "/I_dia_error", "Eq.21", r.error, 0.0);
            rows.at_most(rid + "/mass_reconstruction", "Eq.22", r.reconstruction_residual, 1e-12);
            rows.at_most(rid + "/carnot_sum", "Eq.23", relative(r.I_tot, conv.smooth.abs_tot), tol.carnot);
            if (k > 0 && !(r.error < conv.rows[k - 1].error)) ++non_monotone;
        }
        if (conv.rows.size() > 1) {
            rows.at_most(id + "/non_monotone_steps", "Eq.23", non_monotone, 0.0);
            rows.at_least(id + "/min_doubling_ratio", "Eq.23", conv.min_ratio, 1.7);
        }
        rows.table(std::move(t));
    });
}

void staircase_suite(Rows& rows, const Tolerances& tol) {
    const auto& ref = reference();
    const auto ctx = context(ref.single, ref.ss, tol);
    staircase_rows(rows, "staircase/ellipse", reference_ellipse(), {8, 16, 32, 64}, ctx, tol);
    staircase_rows(rows, "staircase/ellipse-clockwise", reference_ellipse(true), {8, 16, 32}, ctx, tol);
    const std::string rid = "staircase/rectangle/N=001";
    rows.guarded(rid, "Eq.21", [&] {
        const auto rect = LoopSpec::polygon_tm("rectangle", SystemState{400.0, 1.0, {1.0}}, 0,
                                               {{300.0, 0.6}, {500.0, 0.6}, {500.0, 1.4}, {300.0, 1.4}});
        const auto smooth = loop_functionals(rect, ctx.roster, ctx.ss);
        const auto st = staircase_functionals(make_staircase(rect, 1, ctx.roster), ctx);
        rows.at_most(rid + "/exact_match", "Eq.21", relative(st.I_dia - smooth.I_dia, smooth.I_dia), 1e-9);
    });
}

void virtual_work_suite(Rows& rows, const Tolerances& tol) {
    const auto& ref = reference();
    const auto ctx = context(ref.single, ref.ss, tol);
    for (auto kind : {CycleKind::Iso, CycleKind::Adia, CycleKind::Comb}) {
        for (double dm : {0.0, 1e-3, -1e-3}) {
            const std::string id = "virtual_work/" + to_string(kind) + "/dm=" + signed_num(dm);
            rows.guarded(id, "Eq.33", [&] {
                CarnotGeometry g;
                g.id = id;
                g.T1 = 400.0;
                g.T2 = 300.0;
                g.ratio = 2.0;
                g.m_start = {0.01};
                g.dm = dm;
                const auto L = run_cycle(make_cycle(kind, g, ctx.roster), ctx);
                const auto v = virtual_work(L, g.T1, g.T2);
                rows.at_most(id + "/engine_residual", "Eq.33", relative(v.residual, v.W_vir), tol.virtual_work);
                rows.measured(id + "/system_residual", "Eq.33", v.system_residual, 0.0);
            });
        }
    }
    for (int N : {16, 32}) {
        const std::string id = "virtual_work/family/ellipse-N=" + padded(N, 3);
        rows.guarded(id, "Eq.34", [&] {
            const auto st = staircase_functionals(make_staircase(reference_ellipse(), N, ctx.roster), ctx);
            const auto f = virtual_work_family(st.ledgers);
            rows.at_most(id + "/family_residual", "Eq.34", relative(f.residual, f.sum_abs_W_vir),
                         tol.virtual_work_family);
            rows.measured(id + "/sum_dU_conv", "Eq.34", f.sum_dU_conv, 0.0);
            rows.measured(id + "/sum_dU_boundary", "Eq.34", f.sum_dU_boundary, 0.0);
        });
    }
}

SystemState random_state(std::mt19937_64& rng) {
    SystemState s;
    s.T = 200.0 + 600.0 * unit_uniform(rng);
    s.V = 0.5 + 1.5 * unit_uniform(rng);
    s.m = {0.1 + 1.9 * unit_uniform(rng), 0.1 + 1.9 * unit_uniform(rng)};
    return s;
}

void scaling_suite(Rows& rows, const Tolerances& tol, std::uint64_t seed) {
    const auto& ref = reference();
    std::mt19937_64 rng(derive_seed(seed, 7));
    std::vector<SystemState> states;
    for (int k = 0; k < 10; ++k) states.push_back(random_state(rng));
    for (int k = 0; k < 10; ++k) {
        const std::string id = "scaling/state-" + padded(k);
        rows.guarded(id, "Lemma5", [&] {
            const auto& s = states[k];
            const auto c = convected_entropy(s, ref.mixture, ref.ss);
            rows.at_most(id + "/route_agreement", "Lemma5", c.rel_difference, tol.scaling);
            SystemState big = s;
            big.V *= 3.0;
            for (double& m : big.m) m *= 3.0;
            const auto cb = convected_entropy(big, ref.mixture, ref.ss);
            rows.at_most(id + "/extensivity", "Eq.28", relative(cb.direct - 3.0 * c.direct, 3.0 * c.direct),
                         tol.scaling);
        });
    }
    const std::vector<double> kmax{2.0, 0.5, 3.5};
    for (std::size_t k = 0; k < kmax.size(); ++k) {
        const std::string id = "scaling/loop-" + padded(static_cast<int>(k));
        loop_rows(rows, id, LoopSpec::scaling(id, states[k], kmax[k]), ref.mixture, ref.ss, tol);
    }
}

void adjudication_suite(Rows& rows, const Tolerances& tol, std::uint64_t seed) {
    const auto& ref = reference();
    loops_suite(rows, tol, seed, true);
    struct Case {
        std::string name;
        SystemState state;
        const Roster* roster;
    };
    const std::vector<Case> cases{{"single", {500.0, 1.0, {1.0}}, &ref.single},
                                  {"mixture", {350.0, 1.0, {1.0, 0.4}}, &ref.mixture}};
    for (const auto& c : cases) {
        const std::string pid = "adjudication/partials/" + c.name;
        rows.guarded(pid, "Eq.26", [&] {
            const auto coarse = partials_report(c.state, *c.roster, ref.ss, 2e-3);
            const auto fine = partials_report(c.state, *c.roster, ref.ss, 1e-3);
            for (std::size_t i = 0; i < fine.size(); ++i) {
                const double fd_err = std::abs(fine[i].dS_dm - coarse[i].dS_dm);
                const std::string sid = pid + "/" + fine[i].species;
                rows.measured(sid + "/as_printed", "Eq.26", fine[i].residual_plain, fd_err);
                rows.measured(sid + "/with_injection_heat", "Eq.26", fine[i].residual_injection, fd_err);
            }
        });
        for (auto mode : {WssMode::FlowWork, WssMode::Zero}) {
            const std::string lid = "adjudication/local_energy/" + c.name + "/" + to_string(mode);
            rows.guarded(lid, "Eq.30", [&] {
                StateTangent d;
                d.dT = 1e-4 * c.state.T;
                d.dV = 1e-6 * c.state.V;
                d.dm.assign(c.roster->size(), 0.0);
                for (std::size_t i = 0; i < d.dm.size(); ++i) d.dm[i] = 1e-6 * c.state.m[i];
                const auto le = local_energy_report(c.state, d, *c.roster, ref.ss, mode);
                for (std::size_t i = 0; i < c.roster->size(); ++i) {
                    rows.measured(lid + "/" + (*c.roster)[i].id() + "/mu_minus_h", "Eq.30", le.mu_minus_h[i], 0.0);
                }
                rows.measured(lid + "/residual", "Eq.30", le.residual, std::abs(le.dU_actual));
            });
        }
    }
}

std::uint64_t require_seed(std::optional<std::uint64_t> seed, const std::string& suite) {
    if (!seed) throw ConfigError("suite '" + suite + "' is randomized and needs a seed (config 'seed' or --seed)");
    return *seed;
}

void run_builtin(Rows& rows, const std::string& name, const Tolerances& tol, std::optional<std::uint64_t> seed) {
    if (name == "carnot") return carnot_suite(rows, tol);
    if (name == "work_routes") return work_routes_suite(rows, tol);
    if (name == "reciprocity") return reciprocity_suite(rows, tol);
    if (name == "loops") return loops_suite(rows, tol, require_seed(seed, name), false);
    if (name == "scaling") return scaling_suite(rows, tol, require_seed(seed, name));
    if (name == "staircase") return staircase_suite(rows, tol);
    if (name == "virtual_work") return virtual_work_suite(rows, tol);
    if (name == "adjudication") return adjudication_suite(rows, tol, require_seed(seed, name));
    if (name == "all") {
        const auto s = require_seed(seed, name);
        for (const auto& b : builtin_suites()) {
            if (b != "all") run_builtin(rows, b, tol, s);
        }
        return;
    }
    throw ConfigError("unknown suite '" + name + "'");
}

void finish_impl(SuiteOutput& out);

void finish(SuiteOutput& out) { finish_impl(out); }

void config_cycle_rows(Rows& rows, const ExperimentConfig& cfg, const std::string& id) {
    const std::string rid = "cycle/" + id;
    rows.guarded(rid, "Eq.19", [&] {
        const auto& spec = cfg.cycles.at(id).spec;
        const auto L = run_config_cycle(cfg, id);
        bool closed = true;
        for (const auto& seg : spec.segments) closed = closed && seg.dm == 0.0;
        cycle_rows(rows, rid, L, cfg.tol, closed, spec.kind);
        const auto v = virtual_work(L, L.reservoirs.T1, L.reservoirs.T2);
        rows.at_most(rid + "/virtual_work", "Eq.33", relative(v.residual, v.W_vir), cfg.tol.virtual_work);
        StateTangent d;
        d.dT = 1e-4 * spec.start.T;
        d.dV = 1e-6 * spec.start.V;
        d.dm.assign(cfg.roster.size(), 0.0);
        const auto le = local_energy_report(spec.start, d, cfg.roster, cfg.ss, cfg.wss);
        for (std::size_t i = 0; i < cfg.roster.size(); ++i) {
            if (spec.start.m[i] <= 0.0) continue;
            rows.measured(rid + "/" + cfg.roster[i].id() + "/mu_minus_h_" + to_string(cfg.wss), "Eq.30",
                          le.mu_minus_h[i], 0.0);
        }
    });
}

}  // namespace

const std::vector<std::string>& builtin_suites() {
    static const std::vector<std::string> names{"carnot",   "work_routes",  "reciprocity", "loops",
                                                "scaling",  "staircase",    "virtual_work", "adjudication",
                                                "all"};
    return names;
}

CycleContext make_context(const ExperimentConfig& cfg) { return context(cfg.roster, cfg.ss, cfg.tol); }

CycleLedger run_config_cycle(const ExperimentConfig& cfg, const std::string& id) {
    const auto it = cfg.cycles.find(id);
    if (it == cfg.cycles.end()) throw ConfigError("no cycle with id '" + id + "'");
    auto L = run_cycle(it->second.spec, make_context(cfg));
    if (it->second.corrupt_q2_scale != 1.0) {
        L.Q2_tot *= it->second.corrupt_q2_scale;
        L.energy_residual = numerics::stable_sum({L.Q1_tot, -L.Q2_tot, -L.W_tot, L.dU_boundary});
        L.reservoir_heat = {{L.reservoirs.T1, L.Q1_tot}, {L.reservoirs.T2, -L.Q2_tot}};
    }
    return L;
}

LoopSpec resolve_loop(const ExperimentConfig& cfg, const std::string& id, std::optional<std::uint64_t> seed) {
    const auto it = cfg.loops.find(id);
    if (it == cfg.loops.end()) throw ConfigError("no loop with id '" + id + "'");
    const auto& e = it->second;
    LoopSpec l = e.needs_seed ? LoopSpec::fourier(id, e.base, e.harmonics, e.amplitude,
                                                  derive_seed(require_seed(seed ? seed : cfg.seed, "loop " + id),
                                                              1000 + e.ordinal))
                              : e.loop;
    l.quad.abs_tol = cfg.tol.quadrature;
    return l;
}

SuiteOutput run_suite(const ExperimentConfig& cfg, const std::string& suite, std::optional<std::uint64_t> seed) {
    SuiteOutput out;
    Rows rows(out);
    const auto run_seed = seed ? seed : cfg.seed;
    const auto it = cfg.suites.find(suite);
    if (it == cfg.suites.end()) {
        run_builtin(rows, suite, cfg.tol, run_seed);
    } else {
        const auto& s = it->second;
        for (const auto& b : s.builtin) run_builtin(rows, b, cfg.tol, run_seed);
        const auto ctx = make_context(cfg);
        for (const auto& id : s.cycles) config_cycle_rows(rows, cfg, id);
        for (const auto& id : s.loops) {
            loop_rows(rows, "loop/" + id, resolve_loop(cfg, id, run_seed), cfg.roster, cfg.ss, cfg.tol);
        }
        for (const auto& id : s.staircases) {
            const auto& st = cfg.staircases.at(id);
            staircase_rows(rows, "staircase/" + id, resolve_loop(cfg, st.loop, run_seed), st.ladder, ctx, cfg.tol);
        }
    }
    finish(out);
    return out;
}

SuiteOutput cycle_report(const ExperimentConfig& cfg, const std::string& id) {
    if (!cfg.cycles.count(id)) throw ConfigError("no cycle with id '" + id + "'");
    SuiteOutput out;
    Rows rows(out);
    config_cycle_rows(rows, cfg, id);
    finish(out);
    return out;
}

SuiteOutput loop_report(const ExperimentConfig& cfg, const std::string& id, const std::vector<int>& ladder,
                        std::optional<std::uint64_t> seed) {
    const auto loop = resolve_loop(cfg, id, seed ? seed : cfg.seed);
    SuiteOutput out;
    Rows rows(out);
    loop_rows(rows, "loop/" + id, loop, cfg.roster, cfg.ss, cfg.tol);
    if (!ladder.empty()) staircase_rows(rows, "staircase/" + id, loop, ladder, make_context(cfg), cfg.tol);
    finish(out);
    return out;
}

namespace {

void finish_impl(SuiteOutput& out) {
    // Unique ids, sorted; a repeated id keeps its first occurrence.
    std::stable_sort(out.rows.begin(), out.rows.end(),
                     [](const ReportRow& a, const ReportRow& b) { return a.id < b.id; });
    out.rows.erase(std::unique(out.rows.begin(), out.rows.end(),
                               [](const ReportRow& a, const ReportRow& b) { return a.id == b.id; }),
                   out.rows.end());
    std::sort(out.tables.begin(), out.tables.end(),
              [](const ConvergenceTable& a, const ConvergenceTable& b) { return a.name < b.name; });
    out.tables.erase(std::unique(out.tables.begin(), out.tables.end(),
                                 [](const ConvergenceTable& a, const ConvergenceTable& b) { return a.name == b.name; }),
                     out.tables.end());
}

}  // namespace

bool any_failure(const std::vector<ReportRow>& rows) {
    return std::any_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.verdict == Verdict::Fail; });
}

}  // namespace ocarnot::harness
