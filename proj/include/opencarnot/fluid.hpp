#pragma once

// Ideal-gas mixture with constant specific heats. Every per-species property
// is expressed per unit mass and relative to the standard state (T0, p0) of
// the supply cells. SI units throughout.

#include <cstddef>
#include <string>
#include <vector>

namespace ocarnot {

/// Temperature and pressure of the supply cells.
class StandardState {
public:
    StandardState(double T0, double p0);

    double T0() const { return T0_; }
    double p0() const { return p0_; }

private:
    double T0_;
    double p0_;
};

/// Constants of one pure substance. cp is derived, never stored
/// independently, so cp - cv == Rs holds bit for bit.
class SpeciesSpec {
public:
    SpeciesSpec(std::string id, double Rs, double cv, double Uss = 0.0);

    const std::string& id() const { return id_; }
    double Rs() const { return Rs_; }
    double cv() const { return cv_; }
    double cp() const { return cp_; }
    double Uss() const { return Uss_; }

    /// Specific volume at the standard state, Rs*T0/p0.
    double standard_volume(const StandardState& ss) const { return Rs_ * ss.T0() / ss.p0(); }

private:
    std::string id_;
    double Rs_;
    double cv_;
    double cp_;
    double Uss_;
};

using Roster = std::vector<SpeciesSpec>;

/// Reference species used by the default configuration and the examples.
SpeciesSpec reference_species();
StandardState reference_standard_state();

/// Open-system state: temperature, volume and one mass per roster entry.
struct SystemState {
    double T = 0.0;
    double V = 0.0;
    std::vector<double> m;
};

/// Throws DomainError / RosterError when the state is not admissible for the
/// roster (T, V > 0; every m_i >= 0, finite; at least one m_i > 0).
void validate_state(const SystemState& s, const Roster& roster);

double partial_pressure(const SystemState& s, const Roster& roster, std::size_t i);
double total_pressure(const SystemState& s, const Roster& roster);

/// Sum of m_i * cv_i.
double heat_capacity(const SystemState& s, const Roster& roster);
/// Sum of m_i * Rs_i, so that p * V = gas_constant * T.
double gas_constant(const SystemState& s, const Roster& roster);

/// Convected entropy per unit mass of pure `spec` at (T, p), relative to the
/// standard state: cp*ln(T/T0) - Rs*ln(p/p0).
double specific_convected_entropy(const SpeciesSpec& spec, const StandardState& ss, double T, double p);

/// Same quantity by quadrature of dq/T along the two-leg route
/// (isobar at p0 from T0 to T, then isotherm at T from p0 to p), with the
/// reversible specific heat dq = (cp/Rs) p dv + (cv/Rs) v dp.
double specific_convected_entropy_quadrature(const SpeciesSpec& spec, const StandardState& ss,
                                             double T, double p);

struct EntropyRoutes {
    double closed_form = 0.0;
    double quadrature = 0.0;
    double rel_difference = 0.0;
};

EntropyRoutes specific_convected_entropy_routes(const SpeciesSpec& spec, const StandardState& ss,
                                                double T, double p);

/// Mixture specific entropy of species i in volume V: cv ln(T/T0) + Rs ln(v_i/v0).
double mixture_specific_entropy(const SystemState& s, const Roster& roster, const StandardState& ss,
                                std::size_t i);

struct SpecificEnergy {
    double u = 0.0;  ///< Uss + cv (T - T0)
    double h = 0.0;  ///< u + Rs T
};

SpecificEnergy pure_specific_energy(const SpeciesSpec& spec, const StandardState& ss, double T);

/// U = sum m_i u_i(T).
double mixture_energy(const SystemState& s, const Roster& roster, const StandardState& ss);

struct PropertyBundle {
    double p_total = 0.0;
    std::vector<double> p;
    std::vector<double> u;
    std::vector<double> h;
    std::vector<double> s;  ///< convected entropy at (T, p_i); NaN for m_i == 0
    double U = 0.0;
};

PropertyBundle properties(const SystemState& s, const Roster& roster, const StandardState& ss);

}  // namespace ocarnot
