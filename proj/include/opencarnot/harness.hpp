#pragma once

// Experiment configuration, built-in verification suites and report emission.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "opencarnot/cycles.hpp"
#include "opencarnot/errors.hpp"
#include "opencarnot/fluid.hpp"
#include "opencarnot/paths.hpp"
#include "opencarnot/transfer.hpp"

namespace ocarnot::harness {

enum class RowKind { Asserted, ReportOnly };
enum class Verdict { Pass, Fail, Measured };

std::string to_string(RowKind k);
std::string to_string(Verdict v);

struct ReportRow {
    std::string id;
    RowKind kind = RowKind::Asserted;
    std::string tag;  ///< reference tag, e.g. "Eq.19"
    double value = 0.0;
    double bound = 0.0;
    Verdict verdict = Verdict::Measured;
};

/// Thrown for unreadable or invalid configuration; maps to exit code 2.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("config", what) {}
};

/// Default tolerances. Overrides may only tighten them.
struct Tolerances {
    double carnot = 1e-8;               ///< |Q1/T1 - Q2/T2| / |Q1/T1|
    double ledger = 1e-9;               ///< energy and closure residuals / max(1, |Q1|)
    double clausius = 1e-8;             ///< |I_tot| / loop integral of |dQ_tot|/T
    double identity_factor = 10.0;      ///< identity gaps / quadrature error estimate
    double work_routes = 1e-10;         ///< route gap / max(1, |value|)
    double reciprocity = 1e-6;          ///< relative mixed-partial asymmetry
    double virtual_work = 1e-8;         ///< per-cycle residual / |W_vir|
    double virtual_work_family = 1e-7;  ///< family residual / sum |W_vir|
    double scaling = 1e-10;             ///< convected entropy route agreement
    double closure = 1e-9;              ///< cycle closure per coordinate
    double quadrature = 1e-12;          ///< loop quadrature tolerance relative to loop scale
};

struct CycleEntry {
    CycleSpec spec;
    /// Multiplies the assembled Q2 before checks; a fault-injection hook.
    double corrupt_q2_scale = 1.0;
};

struct LoopEntry {
    LoopSpec loop;
    /// Randomized loops are rebuilt from the run seed when no own seed is given.
    bool needs_seed = false;
    std::size_t ordinal = 0;
    SystemState base;
    int harmonics = 0;
    double amplitude = 0.0;
};

struct StaircaseEntry {
    std::string id;
    std::string loop;
    std::vector<int> ladder;
};

struct SuiteEntry {
    std::vector<std::string> builtin;
    std::vector<std::string> cycles;
    std::vector<std::string> loops;
    std::vector<std::string> staircases;
};

struct ExperimentConfig {
    std::string source;
    Roster roster;
    StandardState ss = reference_standard_state();
    Tolerances tol;
    std::optional<std::uint64_t> seed;
    WssMode wss = WssMode::FlowWork;
    std::map<std::string, CycleEntry> cycles;
    std::map<std::string, LoopEntry> loops;
    std::map<std::string, StaircaseEntry> staircases;
    std::map<std::string, SuiteEntry> suites;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<string>");

const std::vector<std::string>& builtin_suites();

/// Convergence table emitted alongside the report.
struct ConvergenceTable {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

struct SuiteOutput {
    std::vector<ReportRow> rows;  ///< sorted by id
    std::vector<ConvergenceTable> tables;
    std::vector<std::string> errors;
};

/// Runs a config-defined suite, or a built-in one when no config suite has
/// that name. `seed` overrides the config seed. Throws ConfigError for an
/// unknown suite or a missing seed.
SuiteOutput run_suite(const ExperimentConfig& cfg, const std::string& suite, std::optional<std::uint64_t> seed = {});

/// Context for config cycles and loops: roster, standard state, tolerances.
CycleContext make_context(const ExperimentConfig& cfg);

/// Runs one config cycle with its fault-injection hook applied.
CycleLedger run_config_cycle(const ExperimentConfig& cfg, const std::string& id);

/// Config loop, seeded from the run seed when needed.
LoopSpec resolve_loop(const ExperimentConfig& cfg, const std::string& id, std::optional<std::uint64_t> seed = {});

/// Check rows for one config cycle (Carnot, ledgers, virtual work).
SuiteOutput cycle_report(const ExperimentConfig& cfg, const std::string& id);

/// Identity rows for one config loop; a non-empty ladder adds staircase rows.
SuiteOutput loop_report(const ExperimentConfig& cfg, const std::string& id, const std::vector<int>& ladder = {},
                        std::optional<std::uint64_t> seed = {});

bool any_failure(const std::vector<ReportRow>& rows);

void write_csv(std::ostream& os, const std::vector<ReportRow>& rows);
void write_jsonl(std::ostream& os, const std::vector<ReportRow>& rows);
void write_table(std::ostream& os, const std::vector<ReportRow>& rows);
void write_convergence_csv(std::ostream& os, const ConvergenceTable& t);

/// %.17g, or "nan"/"inf"/"-inf".
std::string format_double(double x);

}  // namespace ocarnot::harness
