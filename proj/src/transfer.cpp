#include "opencarnot/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "opencarnot/errors.hpp"
#include "opencarnot/numerics.hpp"

namespace ocarnot {

std::string to_string(CanonicalPath p) { return p == CanonicalPath::PT ? "PT" : "TP"; }

std::string to_string(WssMode m) { return m == WssMode::FlowWork ? "flow-work" : "zero"; }

std::string to_string(StateFunctional f) {
    return f == StateFunctional::TotalHeat ? "total-heat" : "total-work";
}

namespace {

const SpeciesSpec& species_at(const Roster& roster, std::size_t i) {
    if (i >= roster.size()) throw RosterError("species index " + std::to_string(i) + " outside roster");
    return roster[i];
}

void check_transfer(const SystemState& s, const Roster& roster, std::size_t i, double dm) {
    species_at(roster, i);
    if (i >= s.m.size()) throw RosterError("state has no mass slot for species " + std::to_string(i));
    if (!std::isfinite(dm)) throw DomainError("mass increment must be finite");
    if (dm < 0.0 && !(s.m[i] > 0.0)) {
        throw EmptySpeciesError("cannot extract species " + roster[i].id() + ": no mass present");
    }
}

struct LegIntegrals {
    double work = 0.0;  // done on the element
    double heat = 0.0;  // absorbed by the element
};

LegIntegrals isobar_leg(const SpeciesSpec& sp, double Ta, double Tb) {
    return {-sp.Rs() * (Tb - Ta), sp.cp() * (Tb - Ta)};
}

LegIntegrals isotherm_leg(const SpeciesSpec& sp, double T, double pa, double pb) {
    const double w = sp.Rs() * T * std::log(pb / pa);
    return {w, -w};
}

LegIntegrals route(const SpeciesSpec& sp, const StandardState& ss, double T, double p, CanonicalPath path) {
    if (!(T > 0.0) || !(p > 0.0) || !std::isfinite(T) || !std::isfinite(p)) {
        throw DomainError("canonical route endpoint must have positive finite T and p");
    }
    LegIntegrals a, b;
    if (path == CanonicalPath::PT) {
        a = isobar_leg(sp, ss.T0(), T);
        b = isotherm_leg(sp, T, ss.p0(), p);
    } else {
        a = isotherm_leg(sp, ss.T0(), ss.p0(), p);
        b = isobar_leg(sp, ss.T0(), T);
    }
    return {a.work + b.work, a.heat + b.heat};
}

}  // namespace

double membrane_injection_work(const SystemState& s, const Roster& roster, std::size_t i, double dm) {
    check_transfer(s, roster, i, dm);
    return roster[i].Rs() * s.T * dm;
}

double membrane_injection_heat(const SystemState& s, const Roster& roster, std::size_t i, double dm) {
    check_transfer(s, roster, i, dm);
    return -roster[i].Rs() * s.T * dm;
}

double supply_cell_extraction_work(const SpeciesSpec& spec, const StandardState& ss, double dm) {
    return spec.Rs() * ss.T0() * dm;
}

double supply_work_per_mass(const SpeciesSpec& spec, const StandardState& ss, WssMode mode) {
    return mode == WssMode::FlowWork ? spec.Rs() * ss.T0() : 0.0;
}

double pump_heat(const SpeciesSpec& spec, const StandardState& ss, double T, double p, double dm) {
    return T * specific_convected_entropy(spec, ss, T, p) * dm;
}

double formation_work(const SpeciesSpec& spec, const StandardState& ss, double T, double p,
                      CanonicalPath path) {
    return route(spec, ss, T, p, path).work;
}

double path_heat(const SpeciesSpec& spec, const StandardState& ss, double T, double p, CanonicalPath path) {
    return route(spec, ss, T, p, path).heat;
}

double pump_work(const SpeciesSpec& spec, const StandardState& ss, double T, double p, CanonicalPath path) {
    return pump_work_from(spec, ss, T, T, p, path);
}

double pump_work_from(const SpeciesSpec& spec, const StandardState& ss, double T_reservoir, double T,
                      double p, CanonicalPath path) {
    return T_reservoir * specific_convected_entropy(spec, ss, T, p) - path_heat(spec, ss, T, p, path);
}

WorkStateFunction work_state_function_routes(const SpeciesSpec& spec, const StandardState& ss, double T,
                                             double p) {
    WorkStateFunction w;
    w.via_pt = formation_work(spec, ss, T, p, CanonicalPath::PT) - pump_work(spec, ss, T, p, CanonicalPath::PT);
    w.via_tp = formation_work(spec, ss, T, p, CanonicalPath::TP) - pump_work(spec, ss, T, p, CanonicalPath::TP);
    const double du = spec.cv() * (T - ss.T0());
    w.direct = du - T * specific_convected_entropy(spec, ss, T, p);
    w.path_gap = std::abs(w.via_pt - w.via_tp);
    w.direct_gap = std::abs(w.via_pt - w.direct);
    return w;
}

double work_state_function(const SpeciesSpec& spec, const StandardState& ss, double T, double p, double tol) {
    const auto w = work_state_function_routes(spec, ss, T, p);
    const double bound = tol * std::max(1.0, std::abs(w.via_pt));
    if (w.path_gap > bound) {
        throw InvariantViolation("work state function differs between PT and TP routes by " +
                                 std::to_string(w.path_gap));
    }
    return w.via_pt;
}

double total_heat_state_function(const SystemState& s, const Roster& roster, const StandardState& ss) {
    validate_state(s, roster);
    numerics::CompensatedSum q;
    for (std::size_t i = 0; i < roster.size(); ++i) {
        if (s.m[i] == 0.0) continue;
        const double p = partial_pressure(s, roster, i);
        q += s.T * s.m[i] * specific_convected_entropy(roster[i], ss, s.T, p);
    }
    return q.value();
}

double total_work_state_function(const SystemState& s, const Roster& roster, const StandardState& ss) {
    validate_state(s, roster);
    numerics::CompensatedSum w;
    for (std::size_t i = 0; i < roster.size(); ++i) {
        if (s.m[i] == 0.0) continue;
        const double p = partial_pressure(s, roster, i);
        w += s.m[i] * work_state_function_routes(roster[i], ss, s.T, p).via_pt;
    }
    return w.value();
}

namespace {

struct Coordinate {
    std::string name;
    std::function<double&(SystemState&)> ref;
};

std::vector<Coordinate> coordinates(const SystemState& s, const Roster& roster) {
    std::vector<Coordinate> c;
    c.push_back({"T", [](SystemState& x) -> double& { return x.T; }});
    c.push_back({"V", [](SystemState& x) -> double& { return x.V; }});
    for (std::size_t i = 0; i < roster.size(); ++i) {
        if (!(s.m[i] > 0.0)) continue;
        c.push_back({"m_" + roster[i].id(), [i](SystemState& x) -> double& { return x.m[i]; }});
    }
    return c;
}

}  // namespace

ReciprocityResult reciprocity_check(const SystemState& s, const Roster& roster, const StandardState& ss,
                                    StateFunctional which, double rel_step) {
    validate_state(s, roster);
    if (!(rel_step > 0.0) || rel_step >= 0.25) {
        throw StepSizeError("relative step must lie in (0, 0.25), got " + std::to_string(rel_step));
    }
    auto F = [&](const SystemState& x) {
        return which == StateFunctional::TotalHeat ? total_heat_state_function(x, roster, ss)
                                                   : total_work_state_function(x, roster, ss);
    };
    const auto coords = coordinates(s, roster);
    const double F0 = std::abs(F(s));
    ReciprocityResult out;
    for (std::size_t a = 0; a < coords.size(); ++a) {
        for (std::size_t b = a + 1; b < coords.size(); ++b) {
            const auto& cx = coords[a];
            const auto& cy = coords[b];
            SystemState base = s;
            const double x0 = cx.ref(base);
            const double y0 = cy.ref(base);
            const double hx = rel_step * x0;
            const double hy = rel_step * y0;
            if (x0 + hx == x0 || y0 + hy == y0 || hx == 0.0 || hy == 0.0) {
                throw StepSizeError("finite-difference step underflows for pair (" + cx.name + ", " + cy.name + ")");
            }
            auto at = [&](double dx, double dy) {
                SystemState t = s;
                cx.ref(t) = x0 + dx;
                cy.ref(t) = y0 + dy;
                return F(t);
            };
            auto fx = [&](double dy) { return (at(hx, dy) - at(-hx, dy)) / (2.0 * hx); };
            auto fy = [&](double dx) { return (at(dx, hy) - at(dx, -hy)) / (2.0 * hy); };
            PairAsymmetry p;
            p.x = cx.name;
            p.y = cy.name;
            p.d_xy = (fx(2.0 * hy) - fx(-2.0 * hy)) / (4.0 * hy);
            p.d_yx = (fy(2.0 * hx) - fy(-2.0 * hx)) / (4.0 * hx);
            p.abs_asymmetry = std::abs(p.d_xy - p.d_yx);
            const double scale = std::max({std::abs(p.d_xy), std::abs(p.d_yx), F0 / std::abs(x0 * y0)});
            p.rel_asymmetry = scale > 0.0 ? p.abs_asymmetry / scale : 0.0;
            out.max_abs_asymmetry = std::max(out.max_abs_asymmetry, p.abs_asymmetry);
            out.max_rel_asymmetry = std::max(out.max_rel_asymmetry, p.rel_asymmetry);
            out.pairs.push_back(p);
        }
    }
    return out;
}

}  // namespace ocarnot
