#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include <doctest.h>

#include "opencarnot/harness.hpp"

using namespace ocarnot;
using namespace ocarnot::harness;

namespace {

const char* kMinimal = R"(
cycles:
  - id: closed
    kind: C_iso
    reservoirs: {T1: 400, T2: 300}
    geometry: {ratio: 2, V: 1, m: {A: 0.01}}
suites:
  smoke:
    cycles: [closed]
)";

std::string config_error(const std::string& text) {
    try {
        parse_config(text, "t.yaml");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

std::set<std::string> allowed_tags() {
    std::set<std::string> t;
    for (int k = 1; k <= 34; ++k) {
        if (k != 29) t.insert("Eq." + std::to_string(k));
    }
    for (int k = 1; k <= 5; ++k) t.insert("Lemma" + std::to_string(k));
    for (int k = 1; k <= 3; ++k) t.insert("Thm" + std::to_string(k));
    return t;
}

}  // namespace

TEST_CASE("minimal config gets the default species and tolerances") {
    const auto cfg = parse_config(kMinimal);
    REQUIRE(cfg.roster.size() == 1);
    CHECK(cfg.roster[0].id() == "A");
    CHECK(cfg.roster[0].Rs() == 100.0);
    CHECK(cfg.ss.T0() == 300.0);
    CHECK(cfg.tol.carnot == 1e-8);
    CHECK(!cfg.seed);
    CHECK(cfg.cycles.count("closed") == 1);
}

TEST_CASE("config errors name the offending key") {
    const auto undeclared = config_error(R"(
cycles:
  - id: c
    kind: C_iso
    reservoirs: {T1: 400, T2: 300}
    geometry: {ratio: 2, V: 1, m: {X: 0.01}}
)");
    CHECK(contains(undeclared, "\"X\""));
    CHECK(contains(undeclared, "t.yaml:6:"));
    CHECK(contains(config_error("tolerances: {carnot: -1e-9}\n"), "tolerances.carnot"));
    CHECK(contains(config_error("tolerances: {carnot: 1e-3}\n"), "tighten"));
    CHECK(contains(config_error("tolerances: {nonsense: 1e-3}\n"), "tolerances.nonsense"));
    CHECK(contains(config_error("bogus: 1\n"), "bogus"));
    CHECK(contains(config_error("cycles: [\n"), "parse error"));
    CHECK(contains(config_error("suites: {s: {builtin: [nope]}}\n"), "nope"));
    CHECK(contains(config_error("species: [{id: A, Rs: 100}]\n"), "cv"));
    CHECK(contains(config_error(R"(
loops:
  - {id: f, family: fourier, base: {T: 400, V: 1, m: {A: 1}}, harmonics: 3, amplitude: 0.2}
staircases:
  - {id: s, loop: f, ladder: [8]}
)"),
                   "planar"));
    CHECK_THROWS_AS(load_config("/nonexistent/config.yaml"), ConfigError);
}

TEST_CASE("tighter tolerances are accepted") {
    const auto cfg = parse_config("tolerances: {carnot: 1e-9, ledger: 1e-10}\n");
    CHECK(cfg.tol.carnot == 1e-9);
    CHECK(cfg.tol.ledger == 1e-10);
}

TEST_CASE("shipped configs load") {
    for (const char* name : {"minimal.yaml", "reference.yaml", "fault_injection.yaml"}) {
        CHECK_NOTHROW(load_config(std::string(OPENCARNOT_CONFIG_DIR) + "/" + name));
    }
}

TEST_CASE("number formatting") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(1e-8) == "1e-08");
    CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
    std::ostringstream os;
    write_jsonl(os, {{"x", RowKind::Asserted, "Eq.19", std::numeric_limits<double>::quiet_NaN(), 1e-8, Verdict::Fail}});
    CHECK(os.str() ==
          "{\"id\":\"x\",\"kind\":\"asserted\",\"tag\":\"Eq.19\",\"value\":null,\"bound\":1e-08,\"verdict\":\"fail\"}\n");
    std::ostringstream csv;
    write_csv(csv, {{"a,b", RowKind::ReportOnly, "Thm3", 2.0, 0.5, Verdict::Measured}});
    CHECK(csv.str() == "id,kind,tag,value,bound,verdict\n\"a,b\",report-only,Thm3,2,0.5,measured\n");
}

TEST_CASE("config suite passes and is deterministic") {
    const auto cfg = parse_config(kMinimal);
    const auto a = run_suite(cfg, "smoke");
    const auto b = run_suite(cfg, "smoke");
    CHECK(!any_failure(a.rows));
    CHECK(a.errors.empty());
    std::ostringstream sa, sb;
    write_jsonl(sa, a.rows);
    write_jsonl(sb, b.rows);
    CHECK(sa.str() == sb.str());
    for (std::size_t k = 1; k < a.rows.size(); ++k) CHECK(a.rows[k - 1].id < a.rows[k].id);
}

TEST_CASE("fault injection produces an asserted failure") {
    auto text = std::string(kMinimal);
    text.insert(text.find("suites:"), "    corrupt_q2_scale: 1.001\n");
    const auto out = run_suite(parse_config(text), "smoke");
    CHECK(any_failure(out.rows));
    bool carnot_failed = false;
    for (const auto& r : out.rows) {
        if (r.id == "cycle/closed/carnot") carnot_failed = r.verdict == Verdict::Fail;
    }
    CHECK(carnot_failed);
}

TEST_CASE("module errors surface with the experiment id") {
    const auto cfg = parse_config(R"(
cycles:
  - id: broken
    kind: C_iso
    reservoirs: {T1: 400, T2: 300}
    start: {T: 400, V: 1, m: {A: 0.01}}
    segments:
      - isotherm: {V: 2}
      - adiabat: {T: 300}
      - isotherm: {V: 2}
      - adiabat: {T: 400}
suites:
  s: {cycles: [broken]}
)");
    const auto out = run_suite(cfg, "s");
    CHECK(any_failure(out.rows));
    REQUIRE(out.errors.size() == 1);
    CHECK(contains(out.errors[0], "cycle/broken"));
}

TEST_CASE("randomized suites need a seed") {
    const auto cfg = parse_config(kMinimal);
    CHECK_THROWS_AS(run_suite(cfg, "loops"), ConfigError);
    CHECK_THROWS_AS(run_suite(cfg, "no-such-suite"), ConfigError);
}

TEST_CASE("loops suite: theorem rows asserted, adjudicated rows measured") {
    const auto out = run_suite(parse_config(kMinimal), "loops", 11);
    CHECK(!any_failure(out.rows));
    int measured = 0;
    for (const auto& r : out.rows) {
        if (r.tag == "Thm3") {
            CHECK(r.kind == RowKind::ReportOnly);
            CHECK(r.verdict == Verdict::Measured);
            ++measured;
        }
        if (contains(r.id, "/clausius_total")) CHECK(r.kind == RowKind::Asserted);
    }
    CHECK(measured >= 26);
    const auto again = run_suite(parse_config(kMinimal), "loops", 11);
    std::ostringstream a, b;
    write_csv(a, out.rows);
    write_csv(b, again.rows);
    CHECK(a.str() == b.str());
    const auto other = run_suite(parse_config(kMinimal), "loops", 12);
    std::ostringstream c;
    write_csv(c, other.rows);
    CHECK(a.str() != c.str());
}

TEST_CASE("every row carries a known tag") {
    const auto tags = allowed_tags();
    for (const char* suite : {"carnot", "work_routes", "reciprocity", "staircase", "virtual_work", "scaling",
                              "adjudication"}) {
        const auto out = run_suite(parse_config(kMinimal), suite, 3);
        CHECK(!out.rows.empty());
        CHECK(!any_failure(out.rows));
        for (const auto& r : out.rows) CHECK_MESSAGE(tags.count(r.tag) == 1, r.id << " " << r.tag);
    }
}

TEST_CASE("cycle and loop reports") {
    const auto cfg = load_config(std::string(OPENCARNOT_CONFIG_DIR) + "/reference.yaml");
    CHECK(!any_failure(cycle_report(cfg, "iso-open").rows));
    const auto loop = loop_report(cfg, "ellipse", {8, 16});
    CHECK(!any_failure(loop.rows));
    CHECK(loop.tables.size() == 1);
    CHECK_THROWS_AS(cycle_report(cfg, "missing"), ConfigError);
}
