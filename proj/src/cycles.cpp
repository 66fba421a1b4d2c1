#include "opencarnot/cycles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "opencarnot/errors.hpp"

namespace ocarnot {

std::string to_string(SegmentKind k) {
    switch (k) {
        case SegmentKind::Isotherm: return "isotherm";
        case SegmentKind::Adiabat: return "adiabat";
        case SegmentKind::IsothermalExchange: return "isothermal_exchange";
        case SegmentKind::AdiabaticExchange: return "adiabatic_exchange";
    }
    return "unknown";
}

std::string to_string(CycleKind k) {
    switch (k) {
        case CycleKind::Iso: return "C_iso";
        case CycleKind::Adia: return "C_adia";
        case CycleKind::Comb: return "C_comb";
    }
    return "unknown";
}

CycleKind cycle_kind_from_string(const std::string& s) {
    if (s == "C_iso") return CycleKind::Iso;
    if (s == "C_adia") return CycleKind::Adia;
    if (s == "C_comb") return CycleKind::Comb;
    throw SpecError("unknown cycle kind '" + s + "' (expected C_iso, C_adia or C_comb)");
}

SegmentSpec SegmentSpec::isotherm(double volume) {
    SegmentSpec s;
    s.kind = SegmentKind::Isotherm;
    s.target = volume;
    return s;
}

SegmentSpec SegmentSpec::adiabat(double temperature) {
    SegmentSpec s;
    s.kind = SegmentKind::Adiabat;
    s.target = temperature;
    return s;
}

SegmentSpec SegmentSpec::isothermal_exchange(std::size_t species, double dm) {
    SegmentSpec s;
    s.kind = SegmentKind::IsothermalExchange;
    s.species = species;
    s.dm = dm;
    return s;
}

SegmentSpec SegmentSpec::adiabatic_exchange(std::size_t species, double dm, PumpReservoir pump) {
    SegmentSpec s;
    s.kind = SegmentKind::AdiabaticExchange;
    s.species = species;
    s.dm = dm;
    s.pump = pump;
    return s;
}

namespace {

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

struct Level {
    HeatSink sink;
    double T;
};

Level match_level(double T, const CycleContext& ctx, const std::optional<Reservoirs>& res) {
    if (!res) return {HeatSink::Local, T};
    if (std::abs(T - res->T1) <= ctx.level_tol * res->T1) return {HeatSink::Hot, res->T1};
    if (std::abs(T - res->T2) <= ctx.level_tol * res->T2) return {HeatSink::Cold, res->T2};
    throw SpecError("isothermal leg at T=" + fmt(T) + " K touches neither reservoir (T1=" + fmt(res->T1) +
                    ", T2=" + fmt(res->T2) + ")");
}

Level pump_level(const SegmentSpec& seg, double T_start, const std::optional<Reservoirs>& res) {
    switch (seg.pump) {
        case PumpReservoir::Hot:
            if (!res) throw SpecError("hot pump reservoir requested without reservoirs");
            return {HeatSink::Hot, res->T1};
        case PumpReservoir::Cold:
            if (!res) throw SpecError("cold pump reservoir requested without reservoirs");
            return {HeatSink::Cold, res->T2};
        case PumpReservoir::Auto:
            if (!res) return {HeatSink::Local, T_start};
            if (std::abs(T_start - res->T1) <= std::abs(T_start - res->T2)) return {HeatSink::Hot, res->T1};
            return {HeatSink::Cold, res->T2};
    }
    return {HeatSink::Local, T_start};
}

double end_mass(const SystemState& s, const Roster& roster, std::size_t i, double dm) {
    if (i >= roster.size()) throw RosterError("exchange names species index " + std::to_string(i) + " outside roster");
    if (!std::isfinite(dm)) throw DomainError("mass increment must be finite");
    if (dm < 0.0 && !(s.m[i] > 0.0)) {
        throw EmptySpeciesError("cannot extract species " + roster[i].id() + ": no mass present");
    }
    double m = s.m[i] + dm;
    if (m < 0.0) {
        if (m > -1e-15 * std::max(1.0, s.m[i])) {
            m = 0.0;
        } else {
            throw EmptySpeciesError("extraction of " + fmt(-dm) + " kg exceeds the " + fmt(s.m[i]) +
                                    " kg of species " + roster[i].id() + " present");
        }
    }
    return m;
}

void integrate_isotherm(const SystemState& start, const SegmentSpec& seg, const CycleContext& ctx,
                        const std::optional<Reservoirs>& res, SystemState& end, LegLedger& leg) {
    if (!(seg.target > 0.0) || !std::isfinite(seg.target)) {
        throw DomainError("isotherm target volume must be positive, got " + fmt(seg.target));
    }
    const Level lv = match_level(start.T, ctx, res);
    leg.heat_sink = lv.sink;
    leg.heat_temperature = lv.T;
    const double R = gas_constant(start, ctx.roster);
    const double T = start.T;
    auto pressure = [&](double V) { return R * T / V; };
    const auto q = numerics::integrate_scalar(pressure, start.V, seg.target, ctx.quad);
    if (!q.converged) throw QuadratureError("isotherm work quadrature did not converge");
    leg.boundary_work = -q.value[0];
    // Internal energy of an ideal gas is unchanged at constant T and m.
    leg.diathermal_heat = -leg.boundary_work;
    end.V = seg.target;
}

void integrate_adiabat(const SystemState& start, const SegmentSpec& seg, const CycleContext& ctx, SystemState& end,
                       LegLedger& leg) {
    if (!(seg.target > 0.0) || !std::isfinite(seg.target)) {
        throw DomainError("adiabat target temperature must be positive, got " + fmt(seg.target));
    }
    const double C = heat_capacity(start, ctx.roster);
    const double R = gas_constant(start, ctx.roster);
    // (sum m cv) dT = -p dV, integrated in T; y = {V, work on system}.
    numerics::OdeRhs rhs = [C, R](const std::vector<double>& y, std::vector<double>& dy, double T) {
        const double dVdT = -C * y[0] / (R * T);
        dy[0] = dVdT;
        dy[1] = -(R * T / y[0]) * dVdT;
    };
    std::vector<double> y{start.V, 0.0};
    const auto stats = numerics::integrate_ode(rhs, y, start.T, seg.target, ctx.ode);
    if (!(y[0] > 0.0)) throw DomainError("adiabat left the positive volume domain");
    end.T = seg.target;
    end.V = y[0];
    leg.boundary_work = y[1];
    leg.ode_steps = stats.steps;
}

void integrate_isothermal_exchange(const SystemState& start, const SegmentSpec& seg, const CycleContext& ctx,
                                   const std::optional<Reservoirs>& res, SystemState& end, LegLedger& leg) {
    const std::size_t i = seg.species;
    end.m[i] = end_mass(start, ctx.roster, i, seg.dm);
    const auto& sp = ctx.roster[i];
    const Level lv = match_level(start.T, ctx, res);
    leg.heat_sink = lv.sink;
    leg.heat_temperature = lv.T;
    leg.pump_sink = lv.sink;
    leg.pump_temperature = lv.T;
    leg.species = sp.id();
    if (seg.dm == 0.0) return;

    const double T = start.T;
    const double V = start.V;
    const double Tr = lv.T;
    const double mi = start.m[i];
    const auto& ss = ctx.ss;
    const CanonicalPath path = ctx.path;
    auto rates = [&](double mu) {
        const double p = (mi + mu) * sp.Rs() * T / V;
        const double s = specific_convected_entropy(sp, ss, T, p);
        return std::array<double, 4>{Tr * s, Tr * s - path_heat(sp, ss, T, p, path),
                                     formation_work(sp, ss, T, p, path), s};
    };
    // Pump work is a difference of two large terms; tolerances scale with them.
    double magnitude = 0.0;
    for (double mu : {0.0, seg.dm}) {
        if (mi + mu <= 0.0) continue;
        const auto r = rates(mu);
        magnitude = std::max({magnitude, std::abs(r[0]), std::abs(r[2])});
    }
    numerics::QuadratureOptions opt = ctx.quad;
    opt.abs_tol *= std::max(1.0, magnitude * std::abs(seg.dm));
    const auto q = numerics::integrate<4>(rates, 0.0, seg.dm, opt);
    if (!q.converged) {
        throw QuadratureError("isothermal exchange quadrature did not converge; worst interval [" + fmt(q.worst_a) +
                              ", " + fmt(q.worst_b) + "]");
    }
    leg.pump_heat = q.value[0];
    leg.pump_work = q.value[1];
    leg.formation_work = q.value[2];
    leg.convected_entropy = q.value[3];
    leg.membrane_work = sp.Rs() * T * seg.dm;
    leg.injection_heat = -sp.Rs() * T * seg.dm;
    leg.convected_energy = pure_specific_energy(sp, ss, T).u * seg.dm;
    leg.supply_work = supply_cell_extraction_work(sp, ss, seg.dm);
    leg.supply_energy = sp.Uss() * seg.dm;
}

void integrate_adiabatic_exchange(const SystemState& start, const SegmentSpec& seg, const CycleContext& ctx,
                                  const std::optional<Reservoirs>& res, SystemState& end, LegLedger& leg) {
    const std::size_t i = seg.species;
    end.m[i] = end_mass(start, ctx.roster, i, seg.dm);
    const auto& sp = ctx.roster[i];
    leg.species = sp.id();
    const Level lv = pump_level(seg, start.T, res);
    leg.pump_sink = lv.sink;
    leg.pump_temperature = lv.T;
    if (seg.dm == 0.0) return;
    if (!(start.m[i] > 0.0) || !(end.m[i] > 0.0)) {
        throw EmptySpeciesError("adiabatic exchange needs species " + sp.id() +
                                " present at both ends of the leg");
    }

    const double V = start.V;
    const double C0 = heat_capacity(start, ctx.roster);
    const double mi = start.m[i];
    const double Tr = lv.T;
    const auto& ss = ctx.ss;
    const CanonicalPath path = ctx.path;
    // Energy balance at constant V with no heat: C dT + u_i dm = h_i dm.
    // y = {T, pump heat, pump work, formation work, convected energy,
    //      membrane work, convected entropy}, independent variable = mass moved.
    numerics::OdeRhs rhs = [&](const std::vector<double>& y, std::vector<double>& dy, double mu) {
        const double T = y[0];
        const double C = C0 + sp.cv() * mu;
        const double p = (mi + mu) * sp.Rs() * T / V;
        const double s = specific_convected_entropy(sp, ss, T, p);
        dy[0] = sp.Rs() * T / C;
        dy[1] = Tr * s;
        dy[2] = Tr * s - path_heat(sp, ss, T, p, path);
        dy[3] = formation_work(sp, ss, T, p, path);
        dy[4] = pure_specific_energy(sp, ss, T).u;
        dy[5] = sp.Rs() * T;
        dy[6] = s;
    };
    std::vector<double> y{start.T, 0, 0, 0, 0, 0, 0};
    const auto stats = numerics::integrate_ode(rhs, y, 0.0, seg.dm, ctx.ode);
    if (!(y[0] > 0.0)) throw DomainError("adiabatic exchange left the positive temperature domain");
    end.T = y[0];
    leg.pump_heat = y[1];
    leg.pump_work = y[2];
    leg.formation_work = y[3];
    leg.convected_energy = y[4];
    leg.membrane_work = y[5];
    leg.convected_entropy = y[6];
    leg.supply_work = supply_cell_extraction_work(sp, ss, seg.dm);
    leg.supply_energy = sp.Uss() * seg.dm;
    leg.ode_steps = stats.steps;
}

std::string sink_label(HeatSink s, double T) {
    switch (s) {
        case HeatSink::Hot: return "@T1";
        case HeatSink::Cold: return "@T2";
        case HeatSink::Local: return "@" + fmt(T) + "K";
        case HeatSink::None: return "";
    }
    return "";
}

bool states_close(const SystemState& a, const SystemState& b, double tol, std::string* why = nullptr) {
    double mscale = 0.0;
    for (double x : a.m) mscale += std::abs(x);
    mscale = std::max(mscale, 1e-300);
    const double gT = std::abs(a.T - b.T) / a.T;
    const double gV = std::abs(a.V - b.V) / a.V;
    double gm = 0.0;
    for (std::size_t i = 0; i < a.m.size() && i < b.m.size(); ++i) {
        gm = std::max(gm, std::abs(a.m[i] - b.m[i]) / mscale);
    }
    const bool ok = gT <= tol && gV <= tol && gm <= tol && a.m.size() == b.m.size();
    if (!ok && why) {
        *why = "relative gaps T=" + fmt(gT) + " V=" + fmt(gV) + " m=" + fmt(gm);
    }
    return ok;
}

}  // namespace

SegmentResult integrate_segment(const SystemState& start, const SegmentSpec& seg, const CycleContext& ctx,
                                const std::optional<Reservoirs>& reservoirs) {
    validate_state(start, ctx.roster);
    SegmentResult r;
    r.end = start;
    r.leg.kind = seg.kind;
    r.leg.start = start;
    r.leg.dm = seg.kind == SegmentKind::IsothermalExchange || seg.kind == SegmentKind::AdiabaticExchange ? seg.dm
                                                                                                         : 0.0;
    switch (seg.kind) {
        case SegmentKind::Isotherm:
            integrate_isotherm(start, seg, ctx, reservoirs, r.end, r.leg);
            break;
        case SegmentKind::Adiabat:
            integrate_adiabat(start, seg, ctx, r.end, r.leg);
            break;
        case SegmentKind::IsothermalExchange:
            integrate_isothermal_exchange(start, seg, ctx, reservoirs, r.end, r.leg);
            break;
        case SegmentKind::AdiabaticExchange:
            integrate_adiabatic_exchange(start, seg, ctx, reservoirs, r.end, r.leg);
            break;
    }
    validate_state(r.end, ctx.roster);
    r.leg.end = r.end;
    return r;
}

void validate_cycle(const CycleSpec& spec, const CycleContext& ctx) {
    const auto& res = spec.reservoirs;
    if (!(res.T2 > 0.0) || !(res.T1 > res.T2) || !std::isfinite(res.T1)) {
        throw SpecError("cycle " + spec.id + ": reservoirs need T1 > T2 > 0");
    }
    validate_state(spec.start, ctx.roster);
    if (spec.segments.empty()) throw SpecError("cycle " + spec.id + " has no segments");
    for (const auto& seg : spec.segments) {
        const bool exchange = seg.kind == SegmentKind::IsothermalExchange || seg.kind == SegmentKind::AdiabaticExchange;
        if (!exchange && seg.dm != 0.0) throw SpecError("cycle " + spec.id + ": isotherm/adiabat segments carry no dm");
        if (exchange && seg.species >= ctx.roster.size()) {
            throw SpecError("cycle " + spec.id + ": exchange names species outside roster");
        }
        if (spec.kind == CycleKind::Iso && seg.kind == SegmentKind::AdiabaticExchange && seg.dm != 0.0) {
            throw SpecError("cycle " + spec.id + ": C_iso exchanges mass on isothermal legs only");
        }
        if (spec.kind == CycleKind::Adia && seg.kind == SegmentKind::IsothermalExchange && seg.dm != 0.0) {
            throw SpecError("cycle " + spec.id + ": C_adia exchanges mass on adiabatic legs only");
        }
    }
}

CycleLedger run_cycle(const CycleSpec& spec, const CycleContext& ctx) {
    validate_cycle(spec, ctx);
    CycleLedger L;
    L.id = spec.id;
    L.reservoirs = spec.reservoirs;
    SystemState state = spec.start;
    for (std::size_t k = 0; k < spec.segments.size(); ++k) {
        auto r = integrate_segment(state, spec.segments[k], ctx, spec.reservoirs);
        r.leg.index = k;
        L.legs.push_back(r.leg);
        state = r.end;
    }
    std::string why;
    if (!states_close(spec.start, state, ctx.closure_tol, &why)) {
        throw ClosureError("cycle " + spec.id + " does not close: " + why);
    }

    std::vector<double> q1, q2, wtot, qsys, wsys, conv, supply, boundary, sq1, sq2;
    for (const auto& leg : L.legs) {
        char prefix[32];
        std::snprintf(prefix, sizeof prefix, "L%02zu.", leg.index);
        const std::string base = prefix + to_string(leg.kind) + ".";
        const std::string heat_at = sink_label(leg.heat_sink, leg.heat_temperature);
        const std::string pump_at = sink_label(leg.pump_sink, leg.pump_temperature);
        const bool exchange = leg.kind == SegmentKind::IsothermalExchange || leg.kind == SegmentKind::AdiabaticExchange;

        if (leg.kind == SegmentKind::Isotherm || leg.kind == SegmentKind::Adiabat) {
            L.terms[base + "boundary_work_on_system"] = leg.boundary_work;
        }
        if (leg.kind == SegmentKind::Isotherm) {
            L.terms[base + "heat_absorbed_by_system" + heat_at] = leg.diathermal_heat;
        }
        if (exchange) {
            L.terms[base + "membrane_work_on_system"] = leg.membrane_work;
            L.terms[base + "pump_heat_given_up" + pump_at] = leg.pump_heat;
            L.terms[base + "pump_work_on_environment"] = leg.pump_work;
            L.terms[base + "formation_work_on_element"] = leg.formation_work;
            L.terms[base + "supply_cell_work_by_environment"] = leg.supply_work;
            L.terms[base + "convected_energy_into_system"] = leg.convected_energy;
        }
        if (leg.kind == SegmentKind::IsothermalExchange) {
            L.terms[base + "injection_heat_absorbed_by_system" + heat_at] = leg.injection_heat;
        }

        const double sh = leg.system_heat();
        if (leg.heat_sink == HeatSink::Hot) {
            q1.push_back(sh);
            sq1.push_back(sh);
        }
        if (leg.heat_sink == HeatSink::Cold) {
            q2.push_back(-sh);
            sq2.push_back(-sh);
        }
        if (leg.pump_sink == HeatSink::Hot) q1.push_back(leg.pump_heat);
        if (leg.pump_sink == HeatSink::Cold) q2.push_back(-leg.pump_heat);
        wtot.push_back(-leg.boundary_work);
        wtot.push_back(-leg.membrane_work);
        wtot.push_back(-leg.formation_work);
        wtot.push_back(leg.pump_work);
        qsys.push_back(sh);
        wsys.push_back(leg.boundary_work);
        wsys.push_back(leg.membrane_work);
        conv.push_back(leg.convected_energy);
        supply.push_back(leg.supply_work);
        boundary.push_back(leg.supply_energy);
    }
    using numerics::stable_sum;
    L.Q1_tot = stable_sum(q1);
    L.Q2_tot = stable_sum(q2);
    L.W_tot = stable_sum(wtot);
    L.Q_system = stable_sum(qsys);
    L.W_on_system = stable_sum(wsys);
    L.dU_conv = stable_sum(conv);
    L.W_supply = stable_sum(supply);
    L.dU_boundary = stable_sum(boundary);
    L.system_Q1 = stable_sum(sq1);
    L.system_Q2 = stable_sum(sq2);
    L.closure_residual = stable_sum({L.Q_system, L.W_on_system, L.dU_conv});
    L.energy_residual = stable_sum({L.Q1_tot, -L.Q2_tot, -L.W_tot, L.dU_boundary});
    L.reservoir_heat = {{spec.reservoirs.T1, L.Q1_tot}, {spec.reservoirs.T2, -L.Q2_tot}};
    return L;
}

CycleSpec reverse_cycle(const CycleSpec& spec, const CycleContext& ctx) {
    validate_cycle(spec, ctx);
    std::vector<SystemState> waypoints;
    std::vector<PumpReservoir> pumps;
    SystemState state = spec.start;
    for (const auto& seg : spec.segments) {
        waypoints.push_back(state);
        auto r = integrate_segment(state, seg, ctx, spec.reservoirs);
        PumpReservoir p = seg.pump;
        if (seg.kind == SegmentKind::AdiabaticExchange) {
            p = r.leg.pump_sink == HeatSink::Hot ? PumpReservoir::Hot : PumpReservoir::Cold;
        }
        pumps.push_back(p);
        state = r.end;
    }
    CycleSpec rev = spec;
    rev.id = spec.id + ".reversed";
    rev.segments.clear();
    for (std::size_t k = spec.segments.size(); k-- > 0;) {
        const auto& seg = spec.segments[k];
        const auto& from = waypoints[k];
        switch (seg.kind) {
            case SegmentKind::Isotherm: rev.segments.push_back(SegmentSpec::isotherm(from.V)); break;
            case SegmentKind::Adiabat: rev.segments.push_back(SegmentSpec::adiabat(from.T)); break;
            case SegmentKind::IsothermalExchange:
                rev.segments.push_back(SegmentSpec::isothermal_exchange(seg.species, -seg.dm));
                break;
            case SegmentKind::AdiabaticExchange:
                rev.segments.push_back(SegmentSpec::adiabatic_exchange(seg.species, -seg.dm, pumps[k]));
                break;
        }
    }
    return rev;
}

CarnotCheck carnot_residual(const CycleLedger& ledger, double T1, double T2) {
    CarnotCheck c;
    c.residual = ledger.Q1_tot / T1 - ledger.Q2_tot / T2;
    const double scale = std::abs(ledger.Q1_tot / T1);
    c.relative = scale > 0.0 ? std::abs(c.residual) / scale : std::abs(c.residual);
    c.heat_ratio = ledger.Q2_tot != 0.0 ? ledger.Q1_tot / ledger.Q2_tot : std::nan("");
    c.temperature_ratio = T1 / T2;
    return c;
}

CycleSpec make_cycle(CycleKind kind, const CarnotGeometry& g, const Roster& roster) {
    if (!(g.T1 > g.T2) || !(g.T2 > 0.0)) throw SpecError("cycle " + g.id + ": need T1 > T2 > 0");
    if (!(g.ratio > 0.0) || !(g.V_start > 0.0)) throw SpecError("cycle " + g.id + ": ratio and V must be positive");
    if (g.species >= roster.size()) throw SpecError("cycle " + g.id + ": species outside roster");
    CycleSpec c;
    c.id = g.id;
    c.kind = kind;
    c.reservoirs = {g.T1, g.T2};
    c.start.T = g.T1;
    c.start.V = g.V_start;
    c.start.m = g.m_start;
    validate_state(c.start, roster);

    // Planning uses the ideal-gas closed forms; the legs themselves are
    // integrated numerically and closure is checked afterwards.
    SystemState exchanged = c.start;
    exchanged.m[g.species] += g.dm;
    if (exchanged.m[g.species] < 0.0) throw SpecError("cycle " + g.id + ": dm removes more mass than present");
    const double C = heat_capacity(c.start, roster);
    const double R = gas_constant(c.start, roster);
    const double Cx = heat_capacity(exchanged, roster);
    const double Rx = gas_constant(exchanged, roster);
    const auto& sp = roster[g.species];
    const double Vb = g.ratio * g.V_start;
    auto adiabat_volume = [](double V, double Ta, double Tb, double Cc, double Rr) {
        return V * std::pow(Ta / Tb, Cc / Rr);
    };
    auto exchange_temperature = [&](double T, double Cfrom, double Cto) {
        return T * std::pow(Cto / Cfrom, sp.Rs() / sp.cv());
    };
    const std::size_t j = g.species;
    auto& segs = c.segments;
    switch (kind) {
        case CycleKind::Iso: {
            const double Vd = adiabat_volume(g.V_start, g.T1, g.T2, C, R);
            segs.push_back(SegmentSpec::isotherm(Vb));
            segs.push_back(SegmentSpec::isothermal_exchange(j, g.dm));
            segs.push_back(SegmentSpec::adiabat(g.T2));
            segs.push_back(SegmentSpec::isotherm(Vd));
            segs.push_back(SegmentSpec::isothermal_exchange(j, -g.dm));
            segs.push_back(SegmentSpec::adiabat(g.T1));
            break;
        }
        case CycleKind::Adia: {
            const double Tb2 = exchange_temperature(g.T1, C, Cx);
            const double Td2 = exchange_temperature(g.T2, Cx, C);
            const double Vd = adiabat_volume(g.V_start, g.T1, Td2, C, R);
            segs.push_back(SegmentSpec::isotherm(Vb));
            segs.push_back(SegmentSpec::adiabatic_exchange(j, g.dm));
            segs.push_back(SegmentSpec::adiabat(g.T2));
            segs.push_back(SegmentSpec::isotherm(Vd));
            segs.push_back(SegmentSpec::adiabatic_exchange(j, -g.dm));
            segs.push_back(SegmentSpec::adiabat(g.T1));
            (void)Tb2;
            (void)Rx;
            break;
        }
        case CycleKind::Comb: {
            const double Td2 = exchange_temperature(g.T2, Cx, C);
            const double Vd = adiabat_volume(g.V_start, g.T1, Td2, C, R);
            segs.push_back(SegmentSpec::isotherm(Vb));
            segs.push_back(SegmentSpec::isothermal_exchange(j, g.dm));
            segs.push_back(SegmentSpec::adiabat(g.T2));
            segs.push_back(SegmentSpec::isotherm(Vd));
            segs.push_back(SegmentSpec::adiabatic_exchange(j, -g.dm));
            segs.push_back(SegmentSpec::adiabat(g.T1));
            break;
        }
    }
    return c;
}

CompositeLedger concatenate(const std::vector<CycleLedger>& cycles, const std::vector<SharedLeg>& shared,
                            double tol) {
    CompositeLedger out;
    for (const auto& s : shared) {
        if (s.cycle_a >= cycles.size() || s.cycle_b >= cycles.size() ||
            s.leg_a >= cycles[s.cycle_a].legs.size() || s.leg_b >= cycles[s.cycle_b].legs.size()) {
            throw BoundaryMismatchError("shared-leg declaration refers to a missing cycle or leg");
        }
        const auto& a = cycles[s.cycle_a].legs[s.leg_a];
        const auto& b = cycles[s.cycle_b].legs[s.leg_b];
        std::string why;
        if (a.kind != b.kind) {
            throw BoundaryMismatchError("shared legs differ in kind: " + to_string(a.kind) + " vs " + to_string(b.kind));
        }
        if (!states_close(a.start, b.end, tol, &why) || !states_close(a.end, b.start, tol, &why)) {
            throw BoundaryMismatchError("shared legs " + cycles[s.cycle_a].id + "/L" + std::to_string(s.leg_a) +
                                        " and " + cycles[s.cycle_b].id + "/L" + std::to_string(s.leg_b) +
                                        " are not opposite traversals: " + why);
        }
        out.shared_cancellation = std::max({out.shared_cancellation, std::abs(a.system_heat() + b.system_heat()),
                                            std::abs(a.boundary_work + b.boundary_work),
                                            std::abs(a.membrane_work + b.membrane_work),
                                            std::abs(a.pump_heat + b.pump_heat)});
    }

    CycleLedger& L = out.ledger;
    L.id = "composite";
    std::vector<double> w, q1c, conv, qsys, wsys, supply, bnd, resid;
    std::vector<ReservoirHeat> buckets;
    auto bucket = [&](double T, double lost) {
        for (auto& b : buckets) {
            if (std::abs(b.T - T) <= tol * T) {
                b.lost += lost;
                return;
            }
        }
        buckets.push_back({T, lost});
    };
    for (const auto& c : cycles) {
        w.push_back(c.W_tot);
        conv.push_back(c.dU_conv);
        qsys.push_back(c.Q_system);
        wsys.push_back(c.W_on_system);
        supply.push_back(c.W_supply);
        bnd.push_back(c.dU_boundary);
        resid.push_back(c.Q1_tot / c.reservoirs.T1 - c.Q2_tot / c.reservoirs.T2);
        for (const auto& rh : c.reservoir_heat) bucket(rh.T, rh.lost);
        for (const auto& [k, v] : c.terms) L.terms[c.id + "/" + k] += v;
        for (const auto& leg : c.legs) L.legs.push_back(leg);
    }
    using numerics::stable_sum;
    L.W_tot = stable_sum(w);
    L.dU_conv = stable_sum(conv);
    L.Q_system = stable_sum(qsys);
    L.W_on_system = stable_sum(wsys);
    L.W_supply = stable_sum(supply);
    L.dU_boundary = stable_sum(bnd);
    L.closure_residual = stable_sum({L.Q_system, L.W_on_system, L.dU_conv});
    std::sort(buckets.begin(), buckets.end(), [](const ReservoirHeat& a, const ReservoirHeat& b) { return a.T > b.T; });
    L.reservoir_heat = buckets;
    std::vector<double> r;
    for (const auto& b : buckets) r.push_back(b.lost / b.T);
    out.residual = stable_sum(r);
    out.component_residual_sum = stable_sum(resid);
    if (!buckets.empty()) {
        L.reservoirs = {buckets.front().T, buckets.back().T};
        L.Q1_tot = buckets.front().lost;
        L.Q2_tot = -buckets.back().lost;
    }
    L.energy_residual = stable_sum({L.Q1_tot, -L.Q2_tot, -L.W_tot, L.dU_boundary});
    return out;
}

VirtualWork virtual_work(const CycleLedger& ledger, double T1, double T2) {
    VirtualWork v;
    v.W_vir = ledger.Q1_tot * (T1 - T2) / T1;
    v.W_ext = ledger.W_tot;
    v.dU_boundary = ledger.dU_boundary;
    v.residual = numerics::stable_sum({v.W_ext, -v.dU_boundary, -v.W_vir});
    v.system_W_vir = ledger.system_Q1 * (T1 - T2) / T1;
    v.system_W_ext = -ledger.W_on_system;
    v.system_residual = numerics::stable_sum({v.system_W_ext, -ledger.dU_conv, -v.system_W_vir});
    return v;
}

VirtualWorkFamily virtual_work_family(const std::vector<CycleLedger>& ledgers) {
    VirtualWorkFamily f;
    std::vector<double> vir, ext, absvir, bnd, conv;
    for (const auto& L : ledgers) {
        const auto v = virtual_work(L, L.reservoirs.T1, L.reservoirs.T2);
        vir.push_back(v.W_vir);
        ext.push_back(v.W_ext);
        absvir.push_back(std::abs(v.W_vir));
        bnd.push_back(v.dU_boundary);
        conv.push_back(L.dU_conv);
    }
    using numerics::stable_sum;
    f.sum_W_vir = stable_sum(vir);
    f.sum_W_ext = stable_sum(ext);
    f.sum_abs_W_vir = stable_sum(absvir);
    f.sum_dU_boundary = stable_sum(bnd);
    f.sum_dU_conv = stable_sum(conv);
    f.residual = f.sum_W_vir - f.sum_W_ext;
    return f;
}

}  // namespace ocarnot
