#include "opencarnot/paths.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "opencarnot/errors.hpp"

namespace ocarnot {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

SystemState scaled(const SystemState& s, double k) {
    SystemState out = s;
    out.V *= k;
    for (double& m : out.m) m *= k;
    return out;
}

}  // namespace

LoopSpec LoopSpec::ellipse_tm(std::string id, const SystemState& center, std::size_t species, double aT, double am,
                              bool clockwise) {
    if (species >= center.m.size()) throw SpecError("ellipse loop " + id + ": species outside state");
    if (!(aT > 0.0) || !(am > 0.0)) throw SpecError("ellipse loop " + id + ": semi-axes must be positive");
    if (!(aT < center.T) || !(am < center.m[species])) {
        throw DomainError("ellipse loop " + id + " would leave the positive domain");
    }
    LoopSpec L;
    L.id = std::move(id);
    L.family = "ellipse_tm";
    L.planar = PlanarLoop{species, center.V};
    const double dir = clockwise ? -1.0 : 1.0;
    L.position = [=](double s) {
        SystemState x = center;
        x.T = center.T + aT * std::cos(kTwoPi * s);
        x.m[species] = center.m[species] + dir * am * std::sin(kTwoPi * s);
        return x;
    };
    const std::size_t n = center.m.size();
    L.velocity = [=](double s) {
        StateTangent v;
        v.dm.assign(n, 0.0);
        v.dT = -kTwoPi * aT * std::sin(kTwoPi * s);
        v.dm[species] = dir * kTwoPi * am * std::cos(kTwoPi * s);
        return v;
    };
    return L;
}

LoopSpec LoopSpec::polygon_tm(std::string id, const SystemState& base, std::size_t species,
                              const std::vector<std::pair<double, double>>& vertices) {
    if (species >= base.m.size()) throw SpecError("polygon loop " + id + ": species outside state");
    if (vertices.size() < 3) throw SpecError("polygon loop " + id + " needs at least three vertices");
    for (const auto& [T, m] : vertices) {
        if (!(T > 0.0) || !(m > 0.0)) throw DomainError("polygon loop " + id + " has a vertex outside the positive domain");
    }
    LoopSpec L;
    L.id = std::move(id);
    L.family = "polygon_tm";
    L.planar = PlanarLoop{species, base.V};
    const std::size_t n = vertices.size();
    for (std::size_t k = 1; k < n; ++k) L.breakpoints.push_back(static_cast<double>(k) / static_cast<double>(n));
    auto edge = [n](double s) {
        const double x = std::clamp(s, 0.0, 1.0) * static_cast<double>(n);
        std::size_t k = std::min(static_cast<std::size_t>(x), n - 1);
        return std::pair<std::size_t, double>{k, x - static_cast<double>(k)};
    };
    L.position = [=](double s) {
        const auto [k, t] = edge(s);
        const auto& a = vertices[k];
        const auto& b = vertices[(k + 1) % n];
        SystemState x = base;
        x.T = a.first + t * (b.first - a.first);
        x.m[species] = a.second + t * (b.second - a.second);
        return x;
    };
    const std::size_t nm = base.m.size();
    L.velocity = [=](double s) {
        const auto [k, t] = edge(s);
        (void)t;
        const auto& a = vertices[k];
        const auto& b = vertices[(k + 1) % n];
        StateTangent v;
        v.dm.assign(nm, 0.0);
        v.dT = static_cast<double>(n) * (b.first - a.first);
        v.dm[species] = static_cast<double>(n) * (b.second - a.second);
        return v;
    };
    return L;
}

LoopSpec LoopSpec::fourier(std::string id, const SystemState& base, int harmonics, double amplitude,
                           std::uint64_t seed) {
    if (harmonics < 1) throw SpecError("fourier loop " + id + ": need at least one harmonic");
    if (!(amplitude > 0.0) || amplitude > 0.5) throw SpecError("fourier loop " + id + ": amplitude must lie in (0, 0.5]");
    std::mt19937_64 rng(seed);
    // Coordinate order: T, V, m_0 .. m_{n-1}; absent species stay at zero.
    const std::size_t nc = 2 + base.m.size();
    std::vector<double> x0(nc);
    x0[0] = base.T;
    x0[1] = base.V;
    for (std::size_t i = 0; i < base.m.size(); ++i) x0[2 + i] = base.m[i];
    std::vector<std::vector<double>> a(nc, std::vector<double>(harmonics)), b = a;
    for (std::size_t c = 0; c < nc; ++c) {
        for (int k = 0; k < harmonics; ++k) {
            const double bound = amplitude / static_cast<double>((k + 1) * (k + 1));
            a[c][k] = (2.0 * unit_uniform(rng) - 1.0) * bound;
            b[c][k] = (2.0 * unit_uniform(rng) - 1.0) * bound;
        }
    }
    auto series = [=](std::size_t c, double s, double& value, double& slope) {
        double e = 0.0, de = 0.0;
        for (int k = 0; k < harmonics; ++k) {
            const double w = kTwoPi * (k + 1);
            e += a[c][k] * std::cos(w * s) + b[c][k] * std::sin(w * s);
            de += w * (-a[c][k] * std::sin(w * s) + b[c][k] * std::cos(w * s));
        }
        value = x0[c] * std::exp(e);
        slope = value * de;
    };
    LoopSpec L;
    L.id = std::move(id);
    L.family = "fourier";
    L.position = [=](double s) {
        SystemState x = base;
        double d;
        series(0, s, x.T, d);
        series(1, s, x.V, d);
        for (std::size_t i = 0; i < base.m.size(); ++i) series(2 + i, s, x.m[i], d);
        return x;
    };
    L.velocity = [=](double s) {
        StateTangent v;
        v.dm.assign(base.m.size(), 0.0);
        double x;
        series(0, s, x, v.dT);
        series(1, s, x, v.dV);
        for (std::size_t i = 0; i < base.m.size(); ++i) series(2 + i, s, x, v.dm[i]);
        return v;
    };
    return L;
}

LoopSpec LoopSpec::scaling(std::string id, const SystemState& base, double k_max) {
    if (!(k_max > 0.0) || k_max == 1.0) throw SpecError("scaling loop " + id + ": k_max must be positive and not 1");
    LoopSpec L;
    L.id = std::move(id);
    L.family = "scaling";
    L.intensive_frozen = true;
    L.position = [=](double s) {
        const double sn = std::sin(std::numbers::pi * s);
        return scaled(base, 1.0 + (k_max - 1.0) * sn * sn);
    };
    L.velocity = [=](double s) {
        const double dk = (k_max - 1.0) * std::numbers::pi * std::sin(kTwoPi * s);
        StateTangent v;
        v.dV = base.V * dk;
        v.dm.resize(base.m.size());
        for (std::size_t i = 0; i < base.m.size(); ++i) v.dm[i] = base.m[i] * dk;
        return v;
    };
    return L;
}

void validate_loop(const LoopSpec& loop, const Roster& roster) {
    if (!loop.position || !loop.velocity) throw SpecError("loop " + loop.id + " has no parametrization");
    for (double b : loop.breakpoints) {
        if (!(b > 0.0 && b < 1.0)) throw SpecError("loop " + loop.id + ": breakpoints must lie in (0, 1)");
    }
    constexpr int samples = 256;
    for (int k = 0; k <= samples; ++k) {
        const auto x = loop.position(static_cast<double>(k) / samples);
        try {
            validate_state(x, roster);
        } catch (const Error& e) {
            throw DomainError("loop " + loop.id + " leaves the positive domain: " + e.what());
        }
        const auto v = loop.velocity(static_cast<double>(k) / samples);
        if (v.dm.size() != roster.size()) throw RosterError("loop " + loop.id + " tangent does not match roster");
        for (std::size_t i = 0; i < roster.size(); ++i) {
            if (x.m[i] == 0.0 && v.dm[i] != 0.0) {
                throw DomainError("loop " + loop.id + " touches m=0 for species " + roster[i].id());
            }
        }
    }
    const auto a = loop.position(0.0);
    const auto b = loop.position(1.0);
    auto gap = [](double x, double y) { return std::abs(x - y) / std::max(std::abs(x), 1e-300); };
    double worst = std::max(gap(a.T, b.T), gap(a.V, b.V));
    for (std::size_t i = 0; i < a.m.size(); ++i) {
        if (a.m[i] != 0.0) worst = std::max(worst, gap(a.m[i], b.m[i]));
    }
    if (worst > 1e-12) throw SpecError("loop " + loop.id + " does not close; relative gap " + fmt(worst));
}

DiathermalHeat diathermal_heat_form(const SystemState& s, const StateTangent& v, const Roster& roster) {
    validate_state(s, roster);
    if (v.dm.size() != roster.size()) throw RosterError("tangent does not match roster");
    DiathermalHeat q;
    q.injection.assign(roster.size(), 0.0);
    const double C = heat_capacity(s, roster);
    const double p = total_pressure(s, roster);
    numerics::CompensatedSum total;
    total += C * v.dT;
    total += p * v.dV;
    numerics::CompensatedSum inj;
    for (std::size_t i = 0; i < roster.size(); ++i) {
        q.injection[i] = -roster[i].Rs() * s.T * v.dm[i];
        total += q.injection[i];
        inj += q.injection[i];
    }
    q.total = total.value();
    q.system = q.total - inj.value();
    return q;
}

namespace {

struct FormRates {
    std::array<double, 4> main;   // dQ_tot/T, dQ_dia/T, s dm, m ds
    std::array<double, 2> scale;  // |dQ_tot|/T, |dQ_dia|/T
};

FormRates form_rates(const LoopSpec& loop, const Roster& roster, const StandardState& ss, double t) {
    const auto x = loop.position(t);
    const auto v = loop.velocity(t);
    const double dQdia = diathermal_heat_form(x, v, roster).total;
    numerics::CompensatedSum conv, gd;
    for (std::size_t i = 0; i < roster.size(); ++i) {
        if (!(x.m[i] > 0.0)) continue;
        const auto& sp = roster[i];
        const double s = specific_convected_entropy(sp, ss, x.T, partial_pressure(x, roster, i));
        conv += s * v.dm[i];
        gd += x.m[i] * sp.cv() * v.dT / x.T;
        gd += -sp.Rs() * v.dm[i];
        gd += x.m[i] * sp.Rs() * v.dV / x.V;
    }
    const double dia = dQdia / x.T;
    const double tot = dia + conv.value();
    return {{tot, dia, conv.value(), gd.value()}, {std::abs(tot), std::abs(dia)}};
}

std::vector<double> pieces(const LoopSpec& loop) {
    std::vector<double> edges{0.0};
    auto b = loop.breakpoints;
    std::sort(b.begin(), b.end());
    edges.insert(edges.end(), b.begin(), b.end());
    edges.push_back(1.0);
    return edges;
}

}  // namespace

LoopFunctionals loop_functionals(const LoopSpec& loop, const Roster& roster, const StandardState& ss) {
    validate_loop(loop, roster);
    LoopFunctionals out;
    out.id = loop.id;
    const auto edges = pieces(loop);
    const double npieces = static_cast<double>(edges.size() - 1);

    numerics::QuadratureOptions coarse{1e-300, 1e-9, loop.quad.max_intervals};
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
        auto f = [&](double t) { return form_rates(loop, roster, ss, t).scale; };
        const auto r = numerics::integrate<2>(f, edges[k], edges[k + 1], coarse);
        out.abs_tot += r.value[0];
        out.abs_dia += r.value[1];
        out.evaluations += r.evaluations;
    }
    const double scale = std::max(out.abs_tot, out.abs_dia);
    numerics::QuadratureOptions fine = loop.quad;
    fine.abs_tol = scale > 0.0 ? loop.quad.abs_tol * scale / npieces : loop.quad.abs_tol;

    std::array<numerics::CompensatedSum, 4> value, error;
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
        auto f = [&](double t) { return form_rates(loop, roster, ss, t).main; };
        const auto r = numerics::integrate<4>(f, edges[k], edges[k + 1], fine);
        if (!r.converged) {
            throw QuadratureError("loop " + loop.id + ": quadrature did not converge; worst sub-interval [" +
                                  fmt(r.worst_a) + ", " + fmt(r.worst_b) + "]");
        }
        for (std::size_t c = 0; c < 4; ++c) {
            value[c] += r.value[c];
            error[c] += r.error[c];
        }
        out.evaluations += r.evaluations;
        out.intervals += r.intervals;
    }
    out.I_tot = value[0].value();
    out.I_dia = value[1].value();
    out.I_conv = value[2].value();
    out.I_gd = value[3].value();
    out.err_tot = error[0].value();
    out.err_dia = error[1].value();
    out.err_conv = error[2].value();
    out.err_gd = error[3].value();
    out.decomposition_gap = numerics::stable_sum({out.I_tot, -out.I_dia, -out.I_conv});
    out.product_gap = out.I_conv + out.I_gd;
    return out;
}

namespace {

std::vector<double> sample_grid(const LoopSpec& loop, int n) {
    std::vector<double> s;
    for (int k = 0; k <= n; ++k) s.push_back(static_cast<double>(k) / n);
    s.insert(s.end(), loop.breakpoints.begin(), loop.breakpoints.end());
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

struct Crossing {
    double s;
    double T;
    double dm;
};

}  // namespace

StaircaseSpec make_staircase(const LoopSpec& base, int N, const Roster& roster) {
    if (N < 1) throw RefinementError("staircase needs N >= 1");
    if (!base.planar) throw RefinementError("staircase needs a planar (T, m) loop; " + base.id + " is not planar");
    validate_loop(base, roster);
    const std::size_t j = base.planar->species;
    auto mass = [&](double s) { return base.position(s).m[j]; };

    const auto grid = sample_grid(base, 2048);
    StaircaseSpec st;
    st.base = base;
    st.N = N;
    // Extremes: best sample, then Brent on the bracketing neighbours.
    auto extreme = [&](double sign) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < grid.size(); ++k) {
            if (sign * mass(grid[k]) < sign * mass(grid[best])) best = k;
        }
        const double lo = grid[best == 0 ? 0 : best - 1];
        const double hi = grid[std::min(best + 1, grid.size() - 1)];
        auto f = [&](double s) { return sign * mass(s); };
        const auto r = boost::math::tools::brent_find_minima(f, lo, hi, 52);
        return sign * std::min(r.second, sign * mass(grid[best]));
    };
    st.m_min = extreme(1.0);
    st.m_max = extreme(-1.0);
    if (!(st.m_max > st.m_min)) throw RefinementError("loop " + base.id + " spans no mass range");
    st.dm = (st.m_max - st.m_min) / N;

    for (int k = 0; k < N; ++k) {
        const double level = st.m_min + (k + 0.5) * st.dm;
        std::vector<Crossing> hits;
        for (std::size_t q = 0; q + 1 < grid.size(); ++q) {
            const double fa = mass(grid[q]) - level;
            const double fb = mass(grid[q + 1]) - level;
            if (fa == 0.0) {
                hits.push_back({grid[q], base.position(grid[q]).T, base.velocity(grid[q]).dm[j]});
                continue;
            }
            if (fb == 0.0 || (fa < 0.0) == (fb < 0.0)) continue;
            auto g = [&](double s) { return mass(s) - level; };
            boost::math::tools::eps_tolerance<double> tol(50);
            std::uintmax_t iters = 200;
            const auto br = boost::math::tools::toms748_solve(g, grid[q], grid[q + 1], fa, fb, tol, iters);
            const double s = 0.5 * (br.first + br.second);
            hits.push_back({s, base.position(s).T, base.velocity(s).dm[j]});
        }
        if (hits.size() != 2) {
            throw RefinementError("loop " + base.id + ": strip " + std::to_string(k) + " crosses the loop " +
                                  std::to_string(hits.size()) + " times; staircase needs a loop convex in m");
        }
        const auto& hot = hits[0].T > hits[1].T ? hits[0] : hits[1];
        const auto& cold = hits[0].T > hits[1].T ? hits[1] : hits[0];
        if (!(hot.T > cold.T)) throw RefinementError("loop " + base.id + ": degenerate strip; use a larger N");
        const bool cw = hot.dm < 0.0;
        if (k == 0) st.clockwise = cw;
        if (cw != st.clockwise) throw RefinementError("loop " + base.id + " changes orientation between strips");
        st.cells.push_back({st.m_min + k * st.dm, cold.T, hot.T});
        const double up_T = cw ? cold.T : hot.T;
        const double down_T = cw ? hot.T : cold.T;
        st.steps.push_back({static_cast<std::size_t>(k), j, up_T, +1, st.dm});
        st.steps.push_back({static_cast<std::size_t>(k), j, down_T, -1, st.dm});
    }
    return st;
}

StaircaseResult staircase_functionals(const StaircaseSpec& spec, const CycleContext& ctx) {
    StaircaseResult out;
    out.N = spec.N;
    const std::size_t j = spec.base.planar->species;
    const SystemState origin = spec.base.position(0.0);
    std::vector<double> tot, dia, conv;
    for (std::size_t k = 0; k < spec.cells.size(); ++k) {
        const auto& cell = spec.cells[k];
        CycleSpec c;
        c.id = spec.base.id + ".cell" + std::to_string(k);
        c.kind = CycleKind::Iso;
        c.reservoirs = {cell.T_right, cell.T_left};
        c.start = origin;
        c.start.T = cell.T_right;
        c.start.V = spec.base.planar->V;
        c.start.m[j] = cell.m_low;
        c.segments = {SegmentSpec::isothermal_exchange(j, spec.dm), SegmentSpec::adiabat(cell.T_left),
                      SegmentSpec::isotherm(c.start.V), SegmentSpec::isothermal_exchange(j, -spec.dm),
                      SegmentSpec::adiabat(cell.T_right), SegmentSpec::isotherm(c.start.V)};
        try {
            const CycleSpec run = spec.clockwise ? reverse_cycle(c, ctx) : c;
            auto L = run_cycle(run, ctx);
            tot.push_back(L.Q1_tot / cell.T_right - L.Q2_tot / cell.T_left);
            for (const auto& leg : L.legs) {
                if (leg.heat_sink != HeatSink::None) dia.push_back(leg.system_heat() / leg.heat_temperature);
                conv.push_back(leg.convected_entropy);
            }
            out.ledgers.push_back(std::move(L));
        } catch (const Error& e) {
            throw RefinementError("staircase cell " + std::to_string(k) + " of " + spec.base.id + " failed (" +
                                  e.what() + "); try a larger N");
        }
    }
    out.I_tot = numerics::stable_sum(tot);
    out.I_dia = numerics::stable_sum(dia);
    out.I_conv = numerics::stable_sum(conv);

    double up = 0.0, all = 0.0;
    for (const auto& s : spec.steps) {
        all += s.f * s.dm;
        if (s.f > 0) up += s.f * s.dm;
    }
    out.reconstruction_residual = std::max(std::abs(spec.m_min + up - spec.m_max), std::abs(all));
    return out;
}

StaircaseConvergence staircase_refine(const LoopSpec& base, const std::vector<int>& ladder, const CycleContext& ctx) {
    StaircaseConvergence out;
    out.smooth = loop_functionals(base, ctx.roster, ctx.ss);
    out.min_ratio = std::numeric_limits<double>::infinity();
    for (int N : ladder) {
        const auto st = make_staircase(base, N, ctx.roster);
        const auto r = staircase_functionals(st, ctx);
        ConvergenceRow row;
        row.N = N;
        row.I_dia = r.I_dia;
        row.I_tot = r.I_tot;
        row.error = std::abs(r.I_dia - out.smooth.I_dia);
        row.reconstruction_residual = r.reconstruction_residual;
        if (!out.rows.empty()) {
            const auto& prev = out.rows.back();
            row.ratio = row.error > 0.0 ? prev.error / row.error : std::numeric_limits<double>::infinity();
            if (!(row.error < prev.error)) out.monotone = false;
            out.min_ratio = std::min(out.min_ratio, row.ratio);
        }
        out.rows.push_back(row);
    }
    if (out.rows.size() < 2) out.min_ratio = 0.0;
    return out;
}

ConvectedEntropy convected_entropy(const SystemState& s, const Roster& roster, const StandardState& ss) {
    validate_state(s, roster);
    ConvectedEntropy out;
    numerics::CompensatedSum direct;
    for (std::size_t i = 0; i < roster.size(); ++i) {
        if (s.m[i] == 0.0) continue;
        direct += s.m[i] * specific_convected_entropy(roster[i], ss, s.T, partial_pressure(s, roster, i));
    }
    out.direct = direct.value();
    auto rate = [&](double k) {
        const SystemState x = scaled(s, k);
        numerics::CompensatedSum r;
        for (std::size_t i = 0; i < roster.size(); ++i) {
            if (s.m[i] == 0.0) continue;
            r += specific_convected_entropy(roster[i], ss, x.T, partial_pressure(x, roster, i)) * s.m[i];
        }
        return r.value();
    };
    const auto q = numerics::integrate_scalar(rate, 0.0, 1.0, {1e-300, 1e-14, 1000});
    if (!q.converged) throw QuadratureError("convected entropy scaling quadrature did not converge");
    out.scaling = q.value[0];
    out.error = q.error[0];
    const double scale = std::max(std::abs(out.direct), std::abs(out.scaling));
    out.rel_difference = scale > 0.0 ? std::abs(out.direct - out.scaling) / scale : 0.0;
    return out;
}

double system_entropy(const SystemState& s, const Roster& roster, const StandardState& ss) {
    validate_state(s, roster);
    SystemState cold = s;
    cold.T = ss.T0();
    auto scaling_rate = [&](double k) {
        const SystemState x = scaled(cold, k);
        numerics::CompensatedSum r;
        for (std::size_t i = 0; i < roster.size(); ++i) {
            if (s.m[i] == 0.0) continue;
            r += specific_convected_entropy(roster[i], ss, x.T, partial_pressure(x, roster, i)) * s.m[i];
        }
        return r.value();
    };
    const double C = heat_capacity(s, roster);
    auto heating_rate = [C](double T) { return C / T; };
    const numerics::QuadratureOptions opt{1e-300, 1e-15, 1000};
    const auto a = numerics::integrate_scalar(scaling_rate, 0.0, 1.0, opt);
    const auto b = numerics::integrate_scalar(heating_rate, ss.T0(), s.T, opt);
    return a.value[0] + b.value[0];
}

std::vector<MassPartial> partials_report(const SystemState& s, const Roster& roster, const StandardState& ss,
                                         double h) {
    validate_state(s, roster);
    if (!(h > 0.0) || h >= 0.25) throw StepSizeError("relative step must lie in (0, 0.25), got " + fmt(h));
    std::vector<MassPartial> out;
    for (std::size_t i = 0; i < roster.size(); ++i) {
        if (!(s.m[i] > 0.0)) continue;
        const double step = h * s.m[i];
        if (s.m[i] + step == s.m[i]) throw StepSizeError("mass step underflows for species " + roster[i].id());
        SystemState up = s, down = s;
        up.m[i] += step;
        down.m[i] -= step;
        MassPartial p;
        p.species = roster[i].id();
        p.dS_dm = (system_entropy(up, roster, ss) - system_entropy(down, roster, ss)) / (2.0 * step);
        p.s = specific_convected_entropy(roster[i], ss, s.T, partial_pressure(s, roster, i));
        p.phi_over_T = -roster[i].Rs();
        p.residual_plain = p.dS_dm - p.s;
        p.residual_injection = p.dS_dm - (p.s + p.phi_over_T);
        out.push_back(p);
    }
    return out;
}

namespace {

std::vector<double> chemical_potentials(const SystemState& s, const Roster& roster, const StandardState& ss,
                                        WssMode mode) {
    std::vector<double> mu(roster.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < roster.size(); ++i) {
        if (!(s.m[i] > 0.0)) continue;
        const auto& sp = roster[i];
        const double p = partial_pressure(s, roster, i);
        mu[i] = numerics::stable_sum({formation_work(sp, ss, s.T, p, CanonicalPath::PT),
                                      supply_work_per_mass(sp, ss, mode),
                                      path_heat(sp, ss, s.T, p, CanonicalPath::PT), sp.Rs() * s.T, sp.Uss()});
    }
    return mu;
}

}  // namespace

LocalEnergy local_energy_report(const SystemState& s, const StateTangent& displacement, const Roster& roster,
                                const StandardState& ss, WssMode mode) {
    validate_state(s, roster);
    if (displacement.dm.size() != roster.size()) throw RosterError("displacement does not match roster");
    for (std::size_t i = 0; i < roster.size(); ++i) {
        if (!(s.m[i] > 0.0) && displacement.dm[i] != 0.0) {
            throw DomainError("local energy needs species " + roster[i].id() + " present to move it");
        }
    }
    SystemState end = s, mid = s;
    end.T += displacement.dT;
    end.V += displacement.dV;
    mid.T += 0.5 * displacement.dT;
    mid.V += 0.5 * displacement.dV;
    for (std::size_t i = 0; i < roster.size(); ++i) {
        end.m[i] += displacement.dm[i];
        mid.m[i] += 0.5 * displacement.dm[i];
    }
    validate_state(end, roster);

    LocalEnergy out;
    out.mu = chemical_potentials(s, roster, ss, mode);
    out.mu_minus_h.resize(roster.size());
    for (std::size_t i = 0; i < roster.size(); ++i) {
        out.mu_minus_h[i] = out.mu[i] - pure_specific_energy(roster[i], ss, s.T).h;
    }
    const auto mu_mid = chemical_potentials(mid, roster, ss, mode);
    std::vector<double> terms{diathermal_heat_form(mid, displacement, roster).total,
                              -total_pressure(mid, roster) * displacement.dV};
    for (std::size_t i = 0; i < roster.size(); ++i) {
        if (displacement.dm[i] != 0.0) terms.push_back(mu_mid[i] * displacement.dm[i]);
    }
    out.dU_predicted = numerics::stable_sum(terms);
    out.dU_actual = mixture_energy(end, roster, ss) - mixture_energy(s, roster, ss);
    out.residual = out.dU_predicted - out.dU_actual;
    return out;
}

}  // namespace ocarnot
