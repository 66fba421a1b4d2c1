#include "opencarnot/numerics.hpp"

#include <boost/numeric/odeint.hpp>

namespace ocarnot::numerics {

double stable_sum(std::vector<double> values) {
    std::sort(values.begin(), values.end(),
              [](double a, double b) { return std::abs(a) < std::abs(b); });
    CompensatedSum s;
    for (double v : values) s += v;
    return s.value();
}

namespace {

struct StepLimit {
    std::size_t limit;
    std::size_t* count;
    void operator()(const std::vector<double>& y, double t) const {
        ++*count;
        if (*count > limit) {
            throw IntegratorError("ODE step budget of " + std::to_string(limit) +
                                  " exceeded at t=" + std::to_string(t));
        }
        for (double v : y) {
            if (!std::isfinite(v)) {
                throw IntegratorError("ODE state became non-finite at t=" + std::to_string(t));
            }
        }
    }
};

}  // namespace

OdeStats integrate_ode(const OdeRhs& rhs, std::vector<double>& y, double t0, double t1,
                       const OdeOptions& opt) {
    namespace odeint = boost::numeric::odeint;
    OdeStats stats;
    if (t0 == t1) return stats;
    using Stepper = odeint::runge_kutta_dopri5<std::vector<double>>;
    auto stepper = odeint::make_controlled<Stepper>(opt.abs_tol, opt.rel_tol);
    const double dt0 = (t1 - t0) / 64.0;
    try {
        odeint::integrate_adaptive(stepper, rhs, y, t0, t1, dt0, StepLimit{opt.max_steps, &stats.steps});
    } catch (const IntegratorError&) {
        throw;
    } catch (const std::exception& e) {
        throw IntegratorError(std::string("ODE step control failed: ") + e.what());
    }
    for (double v : y) {
        if (!std::isfinite(v)) throw IntegratorError("ODE result is non-finite");
    }
    return stats;
}

}  // namespace ocarnot::numerics
