#include "opencarnot/fluid.hpp"

#include <cmath>
#include <limits>

#include "opencarnot/errors.hpp"
#include "opencarnot/numerics.hpp"

namespace ocarnot {

namespace {

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

void require_positive(double x, const char* what) {
    if (!positive_finite(x)) {
        throw DomainError(std::string(what) + " must be positive and finite, got " + std::to_string(x));
    }
}

}  // namespace

StandardState::StandardState(double T0, double p0) : T0_(T0), p0_(p0) {
    require_positive(T0, "standard temperature T0");
    require_positive(p0, "standard pressure p0");
}

SpeciesSpec::SpeciesSpec(std::string id, double Rs, double cv, double Uss)
    : id_(std::move(id)), Rs_(Rs), cv_(cv), cp_(cv + Rs), Uss_(Uss) {
    require_positive(Rs, "specific gas constant Rs");
    require_positive(cv, "specific heat cv");
    if (!std::isfinite(Uss)) throw DomainError("standard-state energy Uss must be finite");
    if (id_.empty()) throw DomainError("species id must not be empty");
}

SpeciesSpec reference_species() { return SpeciesSpec("A", 100.0, 250.0, 0.0); }

StandardState reference_standard_state() { return StandardState(300.0, 1.0e5); }

void validate_state(const SystemState& s, const Roster& roster) {
    require_positive(s.T, "temperature T");
    require_positive(s.V, "volume V");
    if (s.m.size() != roster.size()) {
        throw RosterError("state carries " + std::to_string(s.m.size()) + " masses for a roster of " +
                          std::to_string(roster.size()) + " species");
    }
    bool any = false;
    for (std::size_t i = 0; i < s.m.size(); ++i) {
        if (!std::isfinite(s.m[i]) || s.m[i] < 0.0) {
            throw DomainError("mass of species " + roster[i].id() + " must be finite and >= 0");
        }
        any = any || s.m[i] > 0.0;
    }
    if (!any) throw DomainError("state holds no mass");
}

double partial_pressure(const SystemState& s, const Roster& roster, std::size_t i) {
    if (i >= roster.size() || i >= s.m.size()) {
        throw RosterError("species index " + std::to_string(i) + " outside roster");
    }
    return s.m[i] * roster[i].Rs() * s.T / s.V;
}

double total_pressure(const SystemState& s, const Roster& roster) {
    return gas_constant(s, roster) * s.T / s.V;
}

double heat_capacity(const SystemState& s, const Roster& roster) {
    numerics::CompensatedSum c;
    for (std::size_t i = 0; i < roster.size(); ++i) c += s.m[i] * roster[i].cv();
    return c.value();
}

double gas_constant(const SystemState& s, const Roster& roster) {
    numerics::CompensatedSum r;
    for (std::size_t i = 0; i < roster.size(); ++i) r += s.m[i] * roster[i].Rs();
    return r.value();
}

double specific_convected_entropy(const SpeciesSpec& spec, const StandardState& ss, double T, double p) {
    require_positive(T, "temperature T");
    require_positive(p, "pressure p");
    return spec.cp() * std::log(T / ss.T0()) - spec.Rs() * std::log(p / ss.p0());
}

double specific_convected_entropy_quadrature(const SpeciesSpec& spec, const StandardState& ss,
                                             double T, double p) {
    require_positive(T, "temperature T");
    require_positive(p, "pressure p");
    const double Rs = spec.Rs();
    const double cp = spec.cp();
    const double cv = spec.cv();
    numerics::QuadratureOptions opt;
    opt.abs_tol = 1e-15;
    opt.rel_tol = 1e-14;

    // Isobar at p0, parametrized by T': v = Rs T'/p0, dv = Rs dT'/p0, dp = 0.
    const double p0 = ss.p0();
    auto isobar = [&](double Tp) {
        const double dv = Rs / p0;
        const double dq = (cp / Rs) * p0 * dv;
        return dq / Tp;
    };
    // Isotherm at T, parametrized by ln p': p' = e^x, v = Rs T/p',
    // dp = p' dx, dv = -Rs T/p' dx.
    auto isotherm = [&](double x) {
        const double pp = std::exp(x);
        const double v = Rs * T / pp;
        const double dq = (cp / Rs) * pp * (-v) + (cv / Rs) * v * pp;
        return dq / T;
    };
    const auto a = numerics::integrate_scalar(isobar, ss.T0(), T, opt);
    const auto b = numerics::integrate_scalar(isotherm, std::log(p0), std::log(p), opt);
    if (!a.converged || !b.converged) {
        throw QuadratureError("convected entropy quadrature did not converge");
    }
    return a.value[0] + b.value[0];
}

EntropyRoutes specific_convected_entropy_routes(const SpeciesSpec& spec, const StandardState& ss,
                                                double T, double p) {
    EntropyRoutes r;
    r.closed_form = specific_convected_entropy(spec, ss, T, p);
    r.quadrature = specific_convected_entropy_quadrature(spec, ss, T, p);
    const double scale = std::max({std::abs(r.closed_form), std::abs(r.quadrature),
                                   std::numeric_limits<double>::min()});
    r.rel_difference = std::abs(r.closed_form - r.quadrature) / scale;
    return r;
}

double mixture_specific_entropy(const SystemState& s, const Roster& roster, const StandardState& ss,
                                std::size_t i) {
    if (i >= roster.size()) throw RosterError("species index outside roster");
    if (!(s.m[i] > 0.0)) throw DomainError("specific entropy undefined for an absent species");
    const auto& sp = roster[i];
    const double vi = s.V / s.m[i];
    return sp.cv() * std::log(s.T / ss.T0()) + sp.Rs() * std::log(vi / sp.standard_volume(ss));
}

SpecificEnergy pure_specific_energy(const SpeciesSpec& spec, const StandardState& ss, double T) {
    require_positive(T, "temperature T");
    SpecificEnergy e;
    e.u = spec.Uss() + spec.cv() * (T - ss.T0());
    e.h = e.u + spec.Rs() * T;
    return e;
}

double mixture_energy(const SystemState& s, const Roster& roster, const StandardState& ss) {
    numerics::CompensatedSum U;
    for (std::size_t i = 0; i < roster.size(); ++i) {
        if (s.m[i] == 0.0) continue;
        U += s.m[i] * pure_specific_energy(roster[i], ss, s.T).u;
    }
    return U.value();
}

PropertyBundle properties(const SystemState& s, const Roster& roster, const StandardState& ss) {
    validate_state(s, roster);
    PropertyBundle b;
    const std::size_t n = roster.size();
    b.p.resize(n);
    b.u.resize(n);
    b.h.resize(n);
    b.s.resize(n);
    numerics::CompensatedSum pt;
    for (std::size_t i = 0; i < n; ++i) {
        b.p[i] = partial_pressure(s, roster, i);
        pt += b.p[i];
        const auto e = pure_specific_energy(roster[i], ss, s.T);
        b.u[i] = e.u;
        b.h[i] = e.h;
        b.s[i] = b.p[i] > 0.0 ? specific_convected_entropy(roster[i], ss, s.T, b.p[i])
                              : std::numeric_limits<double>::quiet_NaN();
    }
    b.p_total = pt.value();
    b.U = mixture_energy(s, roster, ss);
    return b;
}

}  // namespace ocarnot
