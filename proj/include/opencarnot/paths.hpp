#pragma once

// Closed paths through state space and the loop integrals taken along them:
// total, diathermal and convected entropy flows, the Gibbs-Duhem-type sum,
// the staircase approximation of a planar loop by elementary cycles, and the
// point diagnostics built on the same forms.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "opencarnot/cycles.hpp"
#include "opencarnot/fluid.hpp"
#include "opencarnot/numerics.hpp"
#include "opencarnot/transfer.hpp"

namespace ocarnot {

/// Derivative of (T, V, m) along a path parameter.
struct StateTangent {
    double dT = 0.0;
    double dV = 0.0;
    std::vector<double> dm;
};

/// Loop confined to the (T, m_j) plane with V and the other masses fixed.
struct PlanarLoop {
    std::size_t species = 0;
    double V = 0.0;
};

struct LoopSpec {
    std::string id;
    std::string family;
    /// s in [0, 1]; position(0) == position(1).
    std::function<SystemState(double)> position;
    std::function<StateTangent(double)> velocity;
    /// Interior parameters where the tangent may jump (polygon corners).
    std::vector<double> breakpoints;
    std::optional<PlanarLoop> planar;
    /// True for paths along which every intensive variable is frozen.
    bool intensive_frozen = false;
    /// abs_tol is relative to the loop scale (integral of |dQ_tot|/T).
    numerics::QuadratureOptions quad{1e-12, 1e-12, 4000};

    /// (T, m_j) = (Tc + aT cos 2pi s, mc + am sin 2pi s) at fixed V; counter-
    /// clockwise in the (T, m_j) plane unless `clockwise`.
    static LoopSpec ellipse_tm(std::string id, const SystemState& center, std::size_t species, double aT, double am,
                               bool clockwise = false);
    /// Straight-edged planar loop through (T, m_j) vertices, closed back to the first.
    static LoopSpec polygon_tm(std::string id, const SystemState& base, std::size_t species,
                               const std::vector<std::pair<double, double>>& vertices);
    /// Every coordinate x of `base` with x > 0 follows x0 * exp(sum_k a_k cos 2pi k s + b_k sin 2pi k s)
    /// with |a_k|, |b_k| <= amplitude / k^2 drawn from a seeded generator.
    static LoopSpec fourier(std::string id, const SystemState& base, int harmonics, double amplitude,
                            std::uint64_t seed);
    /// (V, m) scaled by k(s) = 1 + (k_max - 1) sin^2(pi s) at fixed T.
    static LoopSpec scaling(std::string id, const SystemState& base, double k_max);
};

/// Samples the loop and throws DomainError if it leaves the positive domain
/// or SpecError if it does not close.
void validate_loop(const LoopSpec& loop, const Roster& roster);

struct DiathermalHeat {
    double total = 0.0;                ///< dQ_dia = dU + p dV - sum h_i dm_i
    double system = 0.0;               ///< dQ_dia - sum injection parts
    std::vector<double> injection;     ///< phi_i dm_i = -Rs_i T dm_i
};

/// dQ_dia along a tangent, from first-law accounting.
DiathermalHeat diathermal_heat_form(const SystemState& s, const StateTangent& v, const Roster& roster);

struct LoopFunctionals {
    std::string id;
    double I_tot = 0.0;   ///< loop integral of dQ_tot/T
    double I_dia = 0.0;   ///< loop integral of dQ_dia/T
    double I_conv = 0.0;  ///< loop integral of sum s_i dm_i
    double I_gd = 0.0;    ///< loop integral of sum m_i ds_i
    double err_tot = 0.0;
    double err_dia = 0.0;
    double err_conv = 0.0;
    double err_gd = 0.0;
    double abs_tot = 0.0;  ///< loop integral of |dQ_tot|/T
    double abs_dia = 0.0;  ///< loop integral of |dQ_dia|/T
    double decomposition_gap = 0.0;  ///< I_tot - I_dia - I_conv
    double product_gap = 0.0;        ///< I_conv + I_gd
    int evaluations = 0;
    int intervals = 0;
};

/// Adaptive quadrature of all loop integrals over one traversal. Throws
/// QuadratureError naming the worst sub-interval on non-convergence.
LoopFunctionals loop_functionals(const LoopSpec& loop, const Roster& roster, const StandardState& ss);

/// One mass step of the staircase: f = +1 injects, -1 extracts.
struct StaircaseStep {
    std::size_t cell = 0;
    std::size_t species = 0;
    double T = 0.0;
    int f = 0;
    double dm = 0.0;
};

struct StaircaseCell {
    double m_low = 0.0;
    double T_left = 0.0;
    double T_right = 0.0;
};

struct StaircaseSpec {
    LoopSpec base;
    int N = 0;
    double m_min = 0.0;
    double m_max = 0.0;
    double dm = 0.0;
    bool clockwise = false;
    std::vector<StaircaseCell> cells;
    std::vector<StaircaseStep> steps;
};

/// Slices a planar loop into N strips of equal mass width; each strip becomes
/// one elementary cycle exchanging the strip's mass isothermally at the two
/// temperatures where the strip's mid-level crosses the loop. Throws
/// RefinementError if a strip cannot be formed.
StaircaseSpec make_staircase(const LoopSpec& base, int N, const Roster& roster);

struct StaircaseResult {
    int N = 0;
    double I_tot = 0.0;  ///< sum over cells of Q1/T1 - Q2/T2
    double I_dia = 0.0;  ///< sum over cell legs of system heat / leg temperature
    double I_conv = 0.0; ///< sum over cell legs of int s dm
    /// Largest gap in the mass reconstruction from the f table.
    double reconstruction_residual = 0.0;
    std::vector<CycleLedger> ledgers;
};

StaircaseResult staircase_functionals(const StaircaseSpec& spec, const CycleContext& ctx);

struct ConvergenceRow {
    int N = 0;
    double I_dia = 0.0;
    double I_tot = 0.0;
    double error = 0.0;  ///< |I_dia(staircase) - I_dia(smooth)|
    double ratio = 0.0;  ///< error(previous N) / error(N); 0 for the first row
    double reconstruction_residual = 0.0;
};

struct StaircaseConvergence {
    LoopFunctionals smooth;
    std::vector<ConvergenceRow> rows;
    bool monotone = true;
    double min_ratio = 0.0;
};

StaircaseConvergence staircase_refine(const LoopSpec& base, const std::vector<int>& ladder, const CycleContext& ctx);

struct ConvectedEntropy {
    double direct = 0.0;   ///< sum m_i s_i
    double scaling = 0.0;  ///< int_0^1 sum s_i m_i dk with intensives frozen
    double error = 0.0;    ///< quadrature error estimate
    double rel_difference = 0.0;
};

ConvectedEntropy convected_entropy(const SystemState& s, const Roster& roster, const StandardState& ss);

/// System entropy from the empty state: k-scaling at (T0, V, m), then
/// constant-volume heating to T, both by quadrature of dQ_tot/T.
double system_entropy(const SystemState& s, const Roster& roster, const StandardState& ss);

struct MassPartial {
    std::string species;
    double dS_dm = 0.0;         ///< central difference of system_entropy
    double s = 0.0;             ///< specific convected entropy
    double phi_over_T = 0.0;    ///< injection heat per unit mass over T
    double residual_plain = 0.0;      ///< dS/dm - s
    double residual_injection = 0.0;  ///< dS/dm - (s + phi/T)
};

/// Finite-difference mass partials of the system entropy with relative step h.
std::vector<MassPartial> partials_report(const SystemState& s, const Roster& roster, const StandardState& ss,
                                         double h);

struct LocalEnergy {
    double dU_actual = 0.0;
    double dU_predicted = 0.0;
    double residual = 0.0;  ///< predicted - actual
    std::vector<double> mu;
    std::vector<double> mu_minus_h;
};

/// mu_i = w_form + W_ss + q_path + zeta_i + Uss (PT route, zeta_i = Rs T) and
/// the local first law T dS_dia - p dV + sum mu_i dm_i against the exact
/// mixture-energy change over `displacement`.
LocalEnergy local_energy_report(const SystemState& s, const StateTangent& displacement, const Roster& roster,
                                const StandardState& ss, WssMode mode);

}  // namespace ocarnot
