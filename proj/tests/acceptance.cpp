// Acceptance criteria 1-11. One PASS/FAIL line per criterion; exit 0 iff all pass.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "opencarnot/harness.hpp"

using namespace ocarnot;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kCarnotRel = 1e-8;
constexpr double kClausiusRel = 1e-8;
constexpr double kWorkRouteRel = 1e-10;
constexpr double kFormationWitness = 1e2;
constexpr double kReciprocityRel = 1e-6;
constexpr double kReciprocityStep = 2.5e-4;
constexpr double kShrinkMin = 3.0;
constexpr double kShrinkMax = 5.0;
constexpr double kIdentityFactor = 10.0;
constexpr double kGreenRel = 1e-6;
constexpr double kStaircaseRatio = 1.7;
constexpr double kVirtualWorkRel = 1e-8;
constexpr double kVirtualFamilyRel = 1e-7;
constexpr double kScalingRel = 1e-10;
constexpr double kLoopQuadratureTol = 1e-12;
constexpr std::uint64_t kSeed = 20240611;

const SpeciesSpec A("A", 100.0, 250.0, 0.0);
const SpeciesSpec B("B", 200.0, 600.0, 1000.0);
const StandardState ss(300.0, 1e5);
const Roster single{A};
const Roster mixture{A, B};

int failures = 0;

void report(int n, bool ok, const std::string& what) {
    std::printf("%s %d: %s\n", ok ? "PASS" : "FAIL", n, what.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

template <class F>
void criterion(int n, F&& f) {
    try {
        f();
    } catch (const std::exception& e) {
        report(n, false, std::string("error: ") + e.what());
    }
}

std::vector<LoopSpec> random_loops() {
    std::vector<LoopSpec> loops;
    std::mt19937_64 seeds(kSeed);
    for (int k = 0; k < 20; ++k) {
        loops.push_back(LoopSpec::fourier("random-" + std::to_string(k), {400.0, 1.0, {1.0, 0.5}}, 4, 0.3, seeds()));
    }
    return loops;
}

struct Ellipse {
    SystemState center;
    std::size_t species;
    double aT, am;
    bool clockwise;
};

const std::vector<Ellipse> kEllipses{{{400.0, 1.0, {1.0, 0.5}}, 0, 100.0, 0.4, false},
                                     {{300.0, 0.5, {0.5, 0.5}}, 0, 60.0, 0.2, false},
                                     {{700.0, 2.0, {2.0, 0.5}}, 0, 300.0, 1.5, false},
                                     {{500.0, 1.0, {1.0, 1.0}}, 1, 50.0, 0.8, true},
                                     {{350.0, 1.0, {0.3, 0.6}}, 1, 150.0, 0.3, false}};

LoopSpec ellipse_loop(const Ellipse& e, int k) {
    return LoopSpec::ellipse_tm("ellipse-" + std::to_string(k), e.center, e.species, e.aT, e.am, e.clockwise);
}

// -iint (ds_j/dT) dT dm_j over the ellipse, with ds/dT by central difference of
// the convected entropy at the partial pressure, both integrals by tanh-sinh.
double green_oracle(const Ellipse& e) {
    const auto& sp = mixture[e.species];
    const double V = e.center.V;
    const double Tc = e.center.T;
    const double mc = e.center.m[e.species];
    auto dsdT = [&](double T, double m) {
        const double h = 1e-4 * T;
        auto s = [&](double t) { return specific_convected_entropy(sp, ss, t, m * sp.Rs() * t / V); };
        return (s(T + h) - s(T - h)) / (2.0 * h);
    };
    boost::math::quadrature::tanh_sinh<double> q;
    auto inner = [&](double T) {
        const double u = (T - Tc) / e.aT;
        const double half = e.am * std::sqrt(std::max(0.0, 1.0 - u * u));
        if (half == 0.0) return 0.0;
        return q.integrate([&](double m) { return dsdT(T, m); }, mc - half, mc + half, 1e-12);
    };
    const double area = q.integrate(inner, Tc - e.aT, Tc + e.aT, 1e-12);
    return (e.clockwise ? 1.0 : -1.0) * area;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(OPENCARNOT_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

int main() {
    criterion(1, [] {
        const CycleContext ctx(single, ss);
        int runs = 0;
        double worst = 0.0;
        for (auto kind : {CycleKind::Iso, CycleKind::Adia, CycleKind::Comb}) {
            for (double T1 : {350.0, 400.0, 600.0}) {
                for (double T2 : {280.0, 300.0}) {
                    for (double r : {1.5, 2.0, 4.0}) {
                        for (double dm : {0.0, 1e-3, -1e-3}) {
                            CarnotGeometry g;
                            g.id = "sweep";
                            g.T1 = T1;
                            g.T2 = T2;
                            g.ratio = r;
                            g.m_start = {0.01};
                            g.dm = dm;
                            const auto L = run_cycle(make_cycle(kind, g, single), ctx);
                            const double lhs = L.Q1_tot / T1;
                            worst = std::max(worst, std::abs(lhs - L.Q2_tot / T2) / std::abs(lhs));
                            ++runs;
                        }
                    }
                }
            }
        }
        report(1, runs >= 27 && worst <= kCarnotRel,
               "Carnot condition over " + std::to_string(runs) + " cycles, worst relative gap " + fmt(worst) +
                   " <= " + fmt(kCarnotRel));
    });

    criterion(2, [] {
        double worst = 0.0;
        for (const auto& loop : random_loops()) {
            const auto f = loop_functionals(loop, mixture, ss);
            worst = std::max(worst, std::abs(f.I_tot) / f.abs_tot);
        }
        report(2, worst <= kClausiusRel,
               "total-heat Clausius integral on 20 random loops, worst " + fmt(worst) + " <= " + fmt(kClausiusRel));
    });

    criterion(3, [] {
        double worst = 0.0;
        double witness = INFINITY;
        for (double T : {150.0, 300.0, 450.0, 600.0, 1200.0}) {
            for (double pf : {0.1, 0.5, 1.0, 2.0, 10.0}) {
                const double p = pf * ss.p0();
                const auto w = work_state_function_routes(A, ss, T, p);
                worst = std::max(worst, std::abs(w.via_pt - w.via_tp) / std::max(1.0, std::abs(w.via_pt)));
                if (T != ss.T0() && pf != 1.0) {
                    witness = std::min(witness, std::abs(formation_work(A, ss, T, p, CanonicalPath::PT) -
                                                         formation_work(A, ss, T, p, CanonicalPath::TP)));
                }
            }
        }
        report(3, worst <= kWorkRouteRel && witness >= kFormationWitness,
               "work function route gap " + fmt(worst) + " <= " + fmt(kWorkRouteRel) + ", formation-work gap min " +
                   fmt(witness) + " >= " + fmt(kFormationWitness));
    });

    criterion(4, [] {
        const SystemState s{450.0, 2.0, {1.5}};
        const auto fine = reciprocity_check(s, single, ss, StateFunctional::TotalHeat, kReciprocityStep);
        const auto h1 = reciprocity_check(s, single, ss, StateFunctional::TotalHeat, 4e-3);
        const auto h2 = reciprocity_check(s, single, ss, StateFunctional::TotalHeat, 2e-3);
        const double ratio = h1.max_rel_asymmetry / h2.max_rel_asymmetry;
        report(4,
               fine.pairs.size() == 3 && fine.max_rel_asymmetry <= kReciprocityRel && ratio >= kShrinkMin &&
                   ratio <= kShrinkMax,
               "total-heat mixed partials over {T, V, m1}, asymmetry " + fmt(fine.max_rel_asymmetry) + " <= " +
                   fmt(kReciprocityRel) + ", halving ratio " + fmt(ratio) + " in [" + fmt(kShrinkMin) + ", " +
                   fmt(kShrinkMax) + "]");
    });

    criterion(5, [] {
        auto loops = random_loops();
        for (std::size_t k = 0; k < kEllipses.size(); ++k) loops.push_back(ellipse_loop(kEllipses[k], k));
        loops.push_back(LoopSpec::scaling("scaling", {350.0, 1.0, {1.0, 0.4}}, 2.0));
        double worst = 0.0;
        for (const auto& loop : loops) {
            const auto f = loop_functionals(loop, mixture, ss);
            const double dec = std::abs(f.I_tot - f.I_dia - f.I_conv) / (f.err_tot + f.err_dia + f.err_conv);
            const double prod = std::abs(f.I_conv + f.I_gd) / (f.err_conv + f.err_gd);
            worst = std::max({worst, dec, prod});
        }
        report(5, worst <= kIdentityFactor,
               "decomposition and product-rule gaps on " + std::to_string(loops.size()) +
                   " loops, worst gap / error estimate " + fmt(worst) + " <= " + fmt(kIdentityFactor));
    });

    criterion(6, [] {
        double worst = 0.0;
        for (std::size_t k = 0; k < kEllipses.size(); ++k) {
            const auto f = loop_functionals(ellipse_loop(kEllipses[k], k), mixture, ss);
            const double oracle = green_oracle(kEllipses[k]);
            worst = std::max(worst, std::abs(f.I_dia - oracle) / std::abs(oracle));
        }
        report(6, worst <= kGreenRel,
               "diathermal integral against area oracle on 5 planar loops, worst " + fmt(worst) + " <= " +
                   fmt(kGreenRel));
    });

    criterion(7, [] {
        const CycleContext ctx(single, ss);
        const auto loop = LoopSpec::ellipse_tm("reference", {400.0, 1.0, {1.0}}, 0, 100.0, 0.4);
        // Closed form of -cv iint dT dm / T over the ellipse.
        const double exact = -250.0 * 2.0 * 0.4 * std::numbers::pi * (400.0 - std::sqrt(400.0 * 400.0 - 1e4)) / 100.0;
        std::vector<double> err;
        for (int N : {8, 16, 32, 64}) {
            const auto st = staircase_functionals(make_staircase(loop, N, single), ctx);
            err.push_back(std::abs(st.I_dia - exact));
        }
        double min_ratio = INFINITY;
        for (std::size_t k = 1; k < err.size(); ++k) min_ratio = std::min(min_ratio, err[k - 1] / err[k]);
        std::string list;
        for (double e : err) list += (list.empty() ? "" : ", ") + fmt(e);
        report(7, min_ratio >= kStaircaseRatio,
               "staircase errors N=8..64 [" + list + "], min doubling ratio " + fmt(min_ratio) +
                   " >= " + fmt(kStaircaseRatio));
    });

    criterion(8, [] {
        const CycleContext ctx(single, ss);
        double worst = 0.0;
        for (auto kind : {CycleKind::Iso, CycleKind::Adia, CycleKind::Comb}) {
            for (double dm : {0.0, 1e-3, -1e-3}) {
                CarnotGeometry g;
                g.id = "vw";
                g.m_start = {0.01};
                g.dm = dm;
                const auto L = run_cycle(make_cycle(kind, g, single), ctx);
                const double W_vir = L.Q1_tot * (g.T1 - g.T2) / g.T1;
                worst = std::max(worst, std::abs(L.W_tot - L.dU_boundary - W_vir) / std::abs(W_vir));
            }
        }
        const auto loop = LoopSpec::ellipse_tm("reference", {400.0, 1.0, {1.0}}, 0, 100.0, 0.4);
        const auto st = staircase_functionals(make_staircase(loop, 16, single), ctx);
        double sum_vir = 0.0, sum_ext = 0.0, sum_abs = 0.0;
        for (const auto& L : st.ledgers) {
            const double W_vir = L.Q1_tot * (L.reservoirs.T1 - L.reservoirs.T2) / L.reservoirs.T1;
            sum_vir += W_vir;
            sum_abs += std::abs(W_vir);
            sum_ext += L.W_tot;
        }
        const double family = std::abs(sum_vir - sum_ext) / sum_abs;
        report(8, worst <= kVirtualWorkRel && family <= kVirtualFamilyRel,
               "virtual work per cycle " + fmt(worst) + " <= " + fmt(kVirtualWorkRel) + ", loop family " +
                   fmt(family) + " <= " + fmt(kVirtualFamilyRel));
    });

    criterion(9, [] {
        std::mt19937_64 rng(kSeed);
        auto u = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
        double worst = 0.0;
        std::vector<SystemState> states;
        for (int k = 0; k < 10; ++k) {
            const SystemState s{200.0 + 600.0 * u(), 0.5 + 1.5 * u(), {0.1 + 1.9 * u(), 0.1 + 1.9 * u()}};
            states.push_back(s);
            double direct = 0.0;
            for (std::size_t i = 0; i < 2; ++i) {
                const double p = s.m[i] * mixture[i].Rs() * s.T / s.V;
                direct += s.m[i] * (mixture[i].cp() * std::log(s.T / 300.0) - mixture[i].Rs() * std::log(p / 1e5));
            }
            const auto c = convected_entropy(s, mixture, ss);
            worst = std::max({worst, std::abs(c.scaling - direct) / std::abs(direct),
                              std::abs(c.direct - direct) / std::abs(direct)});
        }
        double loop_worst = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            auto loop = LoopSpec::scaling("k", states[k], k == 1 ? 0.5 : 2.0 + k);
            const auto f = loop_functionals(loop, mixture, ss);
            const double tol = kLoopQuadratureTol * f.abs_tot;
            loop_worst = std::max({loop_worst, std::abs(f.I_gd) / tol, std::abs(f.I_dia) / tol});
        }
        report(9, worst <= kScalingRel && loop_worst <= 1.0,
               "convected entropy routes on 10 states " + fmt(worst) + " <= " + fmt(kScalingRel) +
                   ", scaling-loop integrals at " + fmt(loop_worst) + " of the quadrature tolerance");
    });

    criterion(10, [] {
        const auto cfg = harness::parse_config("{}");
        const auto out = harness::run_suite(cfg, "adjudication", kSeed);
        int loops_dia = 0, loops_gd = 0, plain = 0, injection = 0, mu_flow = 0, mu_zero = 0, bad = 0;
        for (const auto& r : out.rows) {
            if (r.kind != harness::RowKind::ReportOnly || r.verdict != harness::Verdict::Measured) {
                ++bad;
                continue;
            }
            if (!std::isfinite(r.value)) ++bad;
            const auto& id = r.id;
            auto ends = [&](const std::string& s) {
                return id.size() >= s.size() && id.compare(id.size() - s.size(), s.size(), s) == 0;
            };
            if (id.rfind("loops/", 0) == 0 && ends("/I_dia") && std::isfinite(r.bound) && r.bound > 0) ++loops_dia;
            if (id.rfind("loops/", 0) == 0 && ends("/I_gd") && std::isfinite(r.bound) && r.bound > 0) ++loops_gd;
            if (ends("/as_printed")) ++plain;
            if (ends("/with_injection_heat")) ++injection;
            if (ends("/mu_minus_h") && id.find("/flow-work/") != std::string::npos) ++mu_flow;
            if (ends("/mu_minus_h") && id.find("/zero/") != std::string::npos) ++mu_zero;
        }
        const bool ok = out.errors.empty() && bad == 0 && loops_dia >= 26 && loops_dia == loops_gd && plain >= 1 &&
                        plain == injection && mu_flow >= 1 && mu_flow == mu_zero;
        report(10, ok,
               "adjudication rows: " + std::to_string(loops_dia) + " loops with I_dia and I_gd, " +
                   std::to_string(plain) + " partial pairs, " + std::to_string(mu_flow) +
                   " mu-h pairs, all measured");
    });

    criterion(11, [] {
        const fs::path work = fs::temp_directory_path() / ("opencarnot-acceptance-" + std::to_string(::getpid()));
        fs::remove_all(work);
        const std::string cfg = std::string(OPENCARNOT_CONFIG_DIR) + "/reference.yaml";
        const int a = run_cli("run " + cfg + " --suite experiments --seed 7 --out " + (work / "a").string());
        const int b = run_cli("run " + cfg + " --suite experiments --seed 7 --out " + (work / "b").string());
        bool identical = a == 0 && b == 0;
        int files = 0;
        if (identical) {
            for (const auto& entry : fs::directory_iterator(work / "a")) {
                ++files;
                identical = identical && slurp(entry.path()) == slurp(work / "b" / entry.path().filename());
            }
        }
        const int fault = run_cli("run " + std::string(OPENCARNOT_CONFIG_DIR) +
                                  "/fault_injection.yaml --suite fault --out " + (work / "fault").string());
        const int clean = run_cli("run " + std::string(OPENCARNOT_CONFIG_DIR) + "/minimal.yaml --suite smoke");
        fs::remove_all(work);
        report(11, identical && files >= 3 && fault == 1 && clean == 0,
               std::string("repeat runs ") + (identical ? "byte-identical" : "differ") + " over " +
                   std::to_string(files) + " files, exit codes clean=" + std::to_string(clean) +
                   " fault-injected=" + std::to_string(fault));
    });

    return failures == 0 ? 0 : 1;
}
