#pragma once

// Numerical plumbing shared by the thermodynamic modules: compensated
// summation, a vector-valued adaptive Gauss-Kronrod quadrature and a thin
// adaptive ODE driver on top of Boost.Odeint.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "opencarnot/errors.hpp"

namespace ocarnot::numerics {

/// Neumaier's variant of Kahan summation.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    CompensatedSum& operator+=(double x) {
        add(x);
        return *this;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Order-independent sum: sorts by magnitude before compensated summation.
double stable_sum(std::vector<double> values);

struct QuadratureOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-12;
    int max_intervals = 4000;
};

template <std::size_t N>
struct QuadratureResult {
    std::array<double, N> value{};
    /// Truncation estimate plus a round-off floor of 50 eps * integral of |f|.
    std::array<double, N> error{};
    std::array<double, N> l1{};
    bool converged = false;
    int evaluations = 0;
    int intervals = 0;
    /// Sub-interval with the largest normalized error when not converged.
    double worst_a = 0.0;
    double worst_b = 0.0;
};

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the nodes kKronrodNodes[1], [3], [5], [7].
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <std::size_t N>
struct Panel {
    double a = 0.0;
    double b = 0.0;
    std::array<double, N> kronrod{};
    std::array<double, N> error{};
    std::array<double, N> l1{};
    double priority = 0.0;
    bool operator<(const Panel& o) const { return priority < o.priority; }
};

template <std::size_t N, class F>
Panel<N> gk15(F& f, double a, double b) {
    Panel<N> p;
    p.a = a;
    p.b = b;
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    std::array<double, N> gauss{};
    for (std::size_t j = 0; j < 8; ++j) {
        const double x = kKronrodNodes[j];
        const std::array<double, N> f1 = f(c - h * x);
        const bool center = (j == 7);
        const std::array<double, N> f2 = center ? f1 : f(c + h * x);
        for (std::size_t k = 0; k < N; ++k) {
            const double s = center ? f1[k] : f1[k] + f2[k];
            const double sa = center ? std::abs(f1[k]) : std::abs(f1[k]) + std::abs(f2[k]);
            p.kronrod[k] += kKronrodWeights[j] * s;
            p.l1[k] += kKronrodWeights[j] * sa;
            if (j % 2 == 1) gauss[k] += kGaussWeights[j / 2] * s;
        }
    }
    for (std::size_t k = 0; k < N; ++k) {
        p.kronrod[k] *= h;
        p.l1[k] *= std::abs(h);
        p.error[k] = std::abs(p.kronrod[k] - h * gauss[k]);
    }
    return p;
}

}  // namespace detail

/// Globally adaptive G7/K15 quadrature of an R^N-valued integrand over [a, b].
/// Every component must satisfy sum(err) <= max(abs_tol, rel_tol * int |f|).
/// Non-convergence is reported through `converged` and the worst panel, it
/// does not throw.
template <std::size_t N, class F>
QuadratureResult<N> integrate(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
    QuadratureResult<N> out;
    if (a == b) {
        out.converged = true;
        return out;
    }
    auto normalized = [&](const detail::Panel<N>& p, const std::array<double, N>& scale) {
        double worst = 0.0;
        for (std::size_t k = 0; k < N; ++k) {
            const double tol = std::max(opt.abs_tol, opt.rel_tol * scale[k]);
            worst = std::max(worst, p.error[k] / tol);
        }
        return worst;
    };

    std::priority_queue<detail::Panel<N>> heap;
    std::vector<detail::Panel<N>> done;
    auto first = detail::gk15<N>(f, a, b);
    out.evaluations = 15;
    first.priority = normalized(first, first.l1);
    heap.push(first);

    auto totals = [&]() {
        std::array<CompensatedSum, N> v, e, l;
        auto accumulate = [&](const detail::Panel<N>& p) {
            for (std::size_t k = 0; k < N; ++k) {
                v[k] += p.kronrod[k];
                e[k] += p.error[k];
                l[k] += p.l1[k];
            }
        };
        auto copy = heap;
        while (!copy.empty()) {
            accumulate(copy.top());
            copy.pop();
        }
        for (const auto& p : done) accumulate(p);
        std::array<std::array<double, N>, 3> r{};
        for (std::size_t k = 0; k < N; ++k) {
            r[0][k] = v[k].value();
            r[1][k] = e[k].value();
            r[2][k] = l[k].value();
        }
        return r;
    };

    int intervals = 1;
    while (true) {
        const auto t = totals();
        bool ok = true;
        for (std::size_t k = 0; k < N; ++k) {
            const double tol = std::max(opt.abs_tol, opt.rel_tol * t[2][k]);
            if (t[1][k] > tol) ok = false;
        }
        if (ok || intervals >= opt.max_intervals || heap.empty()) {
            out.value = t[0];
            out.l1 = t[2];
            for (std::size_t k = 0; k < N; ++k) {
                out.error[k] = t[1][k] + 50.0 * std::numeric_limits<double>::epsilon() * t[2][k];
            }
            out.converged = ok;
            out.intervals = intervals;
            if (!ok && !heap.empty()) {
                out.worst_a = heap.top().a;
                out.worst_b = heap.top().b;
            }
            return out;
        }
        // Split the worst panel; re-prioritize against the running totals.
        const detail::Panel<N> worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid == worst.a || mid == worst.b) {
            done.push_back(worst);
            continue;
        }
        auto left = detail::gk15<N>(f, worst.a, mid);
        auto right = detail::gk15<N>(f, mid, worst.b);
        out.evaluations += 30;
        left.priority = normalized(left, t[2]);
        right.priority = normalized(right, t[2]);
        heap.push(left);
        heap.push(right);
        ++intervals;
    }
}

/// Scalar convenience wrapper.
template <class F>
QuadratureResult<1> integrate_scalar(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
    auto vf = [&](double x) { return std::array<double, 1>{f(x)}; };
    return integrate<1>(vf, a, b, opt);
}

struct OdeOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-12;
    std::size_t max_steps = 200000;
};

struct OdeStats {
    std::size_t steps = 0;
};

using OdeRhs = std::function<void(const std::vector<double>& y, std::vector<double>& dydt, double t)>;

/// Integrates y' = rhs(y, t) from t0 to t1 (either direction) with an
/// adaptive Dormand-Prince 5(4) stepper. Throws IntegratorError on step
/// failure, step-count overrun or a non-finite state.
OdeStats integrate_ode(const OdeRhs& rhs, std::vector<double>& y, double t0, double t1,
                       const OdeOptions& opt = {});

}  // namespace ocarnot::numerics
