#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "opencarnot/harness.hpp"

namespace fs = std::filesystem;
using namespace ocarnot;
using namespace ocarnot::harness;

namespace {

enum class Format { Csv, Jsonl, Table };

void emit(std::ostream& os, const std::vector<ReportRow>& rows, Format f) {
    switch (f) {
        case Format::Csv:
            write_csv(os, rows);
            break;
        case Format::Jsonl:
            write_jsonl(os, rows);
            break;
        case Format::Table:
            write_table(os, rows);
            break;
    }
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("io", "cannot write " + path.string());
    return os;
}

void write_outputs(const fs::path& dir, const SuiteOutput& out) {
    fs::create_directories(dir);
    auto csv = open_out(dir / "report.csv");
    write_csv(csv, out.rows);
    auto jsonl = open_out(dir / "report.jsonl");
    write_jsonl(jsonl, out.rows);
    for (const auto& t : out.tables) {
        auto os = open_out(dir / (t.name + ".csv"));
        write_convergence_csv(os, t);
    }
}

int finish(const SuiteOutput& out, Format f, const std::optional<std::string>& dir) {
    emit(std::cout, out.rows, f);
    if (dir) write_outputs(*dir, out);
    for (const auto& e : out.errors) std::cerr << "error: " << e << '\n';
    return any_failure(out.rows) ? 1 : 0;
}

void print_ledger(const CycleLedger& L) {
    std::cout << "cycle " << L.id << "  T1=" << format_double(L.reservoirs.T1)
              << "  T2=" << format_double(L.reservoirs.T2) << '\n';
    const std::vector<std::pair<const char*, double>> totals{
        {"W_tot", L.W_tot},       {"Q1_tot", L.Q1_tot},           {"Q2_tot", L.Q2_tot},
        {"dU_conv", L.dU_conv},   {"dU_boundary", L.dU_boundary}, {"Q_system", L.Q_system},
        {"W_on_system", L.W_on_system}, {"energy_residual", L.energy_residual},
        {"closure_residual", L.closure_residual}};
    for (const auto& [k, v] : totals) std::cout << "  " << k << " = " << format_double(v) << '\n';
    for (const auto& [k, v] : L.terms) std::cout << "  " << k << " = " << format_double(v) << '\n';
}

std::vector<int> parse_ladder(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        int n = 0;
        try {
            n = std::stoi(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || n < 1) throw ConfigError("--refine expects positive integers, got '" + item + "'");
        out.push_back(n);
    }
    if (out.empty()) throw ConfigError("--refine expects a comma-separated list");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Open-system Carnot cycle and entropy verification harness"};
    app.require_subcommand(1);

    std::string config;
    std::string suite;
    std::string id;
    std::string refine;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    Format format = Format::Table;
    const std::map<std::string, Format> formats{{"csv", Format::Csv}, {"jsonl", Format::Jsonl}, {"table", Format::Table}};

    auto* validate = app.add_subcommand("validate", "Parse and validate a config file");
    validate->add_option("config", config, "Config file")->required();

    auto* run = app.add_subcommand("run", "Run a suite and emit the residual report");
    run->add_option("config", config, "Config file")->required();
    run->add_option("--suite", suite, "Suite name (config-defined or built-in)")->required();
    run->add_option("--seed", seed, "Seed for randomized suites, overrides the config seed");
    run->add_option("--out", out_dir, "Directory for report.csv, report.jsonl and convergence tables");
    run->add_option("--format", format, "Output format on stdout")
        ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));

    auto* cycle = app.add_subcommand("cycle", "Run one config cycle and print its ledger and checks");
    cycle->add_option("config", config, "Config file")->required();
    cycle->add_option("--id", id, "Cycle id")->required();

    auto* loop = app.add_subcommand("loop", "Evaluate loop integrals for one config loop");
    loop->add_option("config", config, "Config file")->required();
    loop->add_option("--id", id, "Loop id")->required();
    loop->add_option("--refine", refine, "Staircase ladder, e.g. 8,16,32");
    loop->add_option("--seed", seed, "Seed for a randomized loop");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const auto cfg = load_config(config);
        if (*validate) {
            std::cout << "valid: " << cfg.source << " (" << cfg.roster.size() << " species, " << cfg.cycles.size()
                      << " cycles, " << cfg.loops.size() << " loops, " << cfg.staircases.size() << " staircases, "
                      << cfg.suites.size() << " suites)\n";
            return 0;
        }
        if (*run) return finish(run_suite(cfg, suite, seed), format, out_dir);
        if (*cycle) {
            print_ledger(run_config_cycle(cfg, id));
            return finish(cycle_report(cfg, id), Format::Table, std::nullopt);
        }
        if (*loop) {
            const auto ladder = refine.empty() ? std::vector<int>{} : parse_ladder(refine);
            const auto out = loop_report(cfg, id, ladder, seed);
            for (const auto& t : out.tables) {
                std::cout << t.name << '\n';
                write_convergence_csv(std::cout, t);
            }
            return finish(out, Format::Table, std::nullopt);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
