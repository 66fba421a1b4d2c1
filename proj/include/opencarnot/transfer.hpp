#pragma once

// Mass transfer between the supply cells and the open system: membrane flow
// work and heat, supply-cell withdrawal work, the reversible heat pumps that
// condition a mass element from the standard state, and the state functions
// built from them.
//
// Sign convention: heats are "absorbed by" and works "done on" the body named
// in the function, unless the name says otherwise (pump_work is work done on
// the environment by the pumps; pump_heat is heat given up by the reservoir).

#include <cstddef>
#include <string>
#include <vector>

#include "opencarnot/fluid.hpp"

namespace ocarnot {

/// Reversible route from the standard state to (T, p).
///   PT: isobar at p0 from T0 to T, then isotherm at T from p0 to p.
///   TP: isotherm at T0 from p0 to p, then isobar at p from T0 to T.
enum class CanonicalPath { PT, TP };

/// Reading of the per-unit-mass work needed to withdraw a species from its
/// supply cell: flow work Rs*T0, or nothing.
enum class WssMode { FlowWork, Zero };

std::string to_string(CanonicalPath p);
std::string to_string(WssMode m);

/// Work done on the system when dm crosses the membrane at the system state:
/// Rs*T*dm. Negative dm is extraction.
double membrane_injection_work(const SystemState& s, const Roster& roster, std::size_t i, double dm);

/// Heat absorbed by the system during isothermal, constant-volume injection:
/// -Rs*T*dm.
double membrane_injection_heat(const SystemState& s, const Roster& roster, std::size_t i, double dm);

/// Work done by the environment to withdraw dm from the supply cell: Rs*T0*dm.
double supply_cell_extraction_work(const SpeciesSpec& spec, const StandardState& ss, double dm);

/// W_ss per unit mass under the selected reading.
double supply_work_per_mass(const SpeciesSpec& spec, const StandardState& ss, WssMode mode);

/// Heat given up by the reservoir at T while the pumps condition dm from the
/// standard state to (T, p): T * s(T, p) * dm.
double pump_heat(const SpeciesSpec& spec, const StandardState& ss, double T, double p, double dm);

/// Work per unit mass done on the element, -int p dv, along the route.
double formation_work(const SpeciesSpec& spec, const StandardState& ss, double T, double p,
                      CanonicalPath path);

/// Heat per unit mass absorbed by the element along the route.
double path_heat(const SpeciesSpec& spec, const StandardState& ss, double T, double p,
                 CanonicalPath path);

/// Work per unit mass done on the environment by the pumps: T*s - q_path.
double pump_work(const SpeciesSpec& spec, const StandardState& ss, double T, double p,
                 CanonicalPath path);

/// Pump work when the pumps draw from a reservoir at T_reservoir while the
/// element is brought to (T, p): T_reservoir*s - q_path.
double pump_work_from(const SpeciesSpec& spec, const StandardState& ss, double T_reservoir, double T,
                      double p, CanonicalPath path);

struct WorkStateFunction {
    double via_pt = 0.0;
    double via_tp = 0.0;
    double direct = 0.0;  ///< u(T) - u(T0) - T*s
    double path_gap = 0.0;
    double direct_gap = 0.0;
};

/// Work function of state per unit mass, w_form - pump_work, evaluated on
/// both canonical routes and directly.
WorkStateFunction work_state_function_routes(const SpeciesSpec& spec, const StandardState& ss,
                                             double T, double p);

/// Path-independent value; throws InvariantViolation if the two routes
/// disagree by more than `tol * max(1, |value|)`.
double work_state_function(const SpeciesSpec& spec, const StandardState& ss, double T, double p,
                           double tol = 1e-10);

/// sum_i T m_i s_i(T, p_i). Absent species contribute nothing.
double total_heat_state_function(const SystemState& s, const Roster& roster, const StandardState& ss);

/// sum_i m_i * work_state_function(T, p_i).
double total_work_state_function(const SystemState& s, const Roster& roster, const StandardState& ss);

enum class StateFunctional { TotalHeat, TotalWork };

std::string to_string(StateFunctional f);

struct PairAsymmetry {
    std::string x;
    std::string y;
    double d_xy = 0.0;  ///< d/dy of dF/dx
    double d_yx = 0.0;  ///< d/dx of dF/dy
    double abs_asymmetry = 0.0;
    double rel_asymmetry = 0.0;
};

struct ReciprocityResult {
    double max_abs_asymmetry = 0.0;
    double max_rel_asymmetry = 0.0;
    std::vector<PairAsymmetry> pairs;
};

/// Mixed second partials of the chosen state functional over every pair of
/// {T, V, m_1..m_n} (absent species skipped), by nested central differences
/// in both orders. Steps are `rel_step` times the coordinate value; the inner
/// derivative uses one step and the outer twice that step; the disagreement
/// between the two orders shrinks as h^2.
/// Relative asymmetry is measured against max(|d_xy|, |d_yx|, |F| / |x y|).
ReciprocityResult reciprocity_check(const SystemState& s, const Roster& roster, const StandardState& ss,
                                    StateFunctional which, double rel_step);

}  // namespace ocarnot
