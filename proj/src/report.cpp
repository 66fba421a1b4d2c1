#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <ostream>

#include <json.hpp>

#include "opencarnot/harness.hpp"

namespace ocarnot::harness {

namespace {

std::string json_number(double x) { return std::isfinite(x) ? format_double(x) : "null"; }

std::string json_string(const std::string& s) { return nlohmann::json(s).dump(); }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::string to_string(RowKind k) { return k == RowKind::Asserted ? "asserted" : "report-only"; }

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass:
            return "pass";
        case Verdict::Fail:
            return "fail";
        case Verdict::Measured:
            return "measured";
    }
    return "measured";
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_csv(std::ostream& os, const std::vector<ReportRow>& rows) {
    os << "id,kind,tag,value,bound,verdict\n";
    for (const auto& r : rows) {
        os << csv_field(r.id) << ',' << to_string(r.kind) << ',' << r.tag << ',' << format_double(r.value) << ','
           << format_double(r.bound) << ',' << to_string(r.verdict) << '\n';
    }
}

void write_jsonl(std::ostream& os, const std::vector<ReportRow>& rows) {
    for (const auto& r : rows) {
        os << "{\"id\":" << json_string(r.id) << ",\"kind\":" << json_string(to_string(r.kind))
           << ",\"tag\":" << json_string(r.tag) << ",\"value\":" << json_number(r.value)
           << ",\"bound\":" << json_number(r.bound) << ",\"verdict\":" << json_string(to_string(r.verdict)) << "}\n";
    }
}

void write_table(std::ostream& os, const std::vector<ReportRow>& rows) {
    std::size_t width = 2;
    for (const auto& r : rows) width = std::max(width, r.id.size());
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-*s  %-11s  %-6s  %-24s  %-24s  %s\n", static_cast<int>(width), "id", "kind",
                  "tag", "value", "bound", "verdict");
    os << buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-*s  %-11s  %-6s  %-24s  %-24s  %s\n", static_cast<int>(width),
                      r.id.c_str(), to_string(r.kind).c_str(), r.tag.c_str(), format_double(r.value).c_str(),
                      format_double(r.bound).c_str(), to_string(r.verdict).c_str());
        os << buf;
    }
    std::size_t pass = 0, fail = 0, measured = 0;
    for (const auto& r : rows) {
        if (r.verdict == Verdict::Pass) ++pass;
        else if (r.verdict == Verdict::Fail) ++fail;
        else ++measured;
    }
    os << rows.size() << " rows: " << pass << " pass, " << fail << " fail, " << measured << " measured\n";
}

void write_convergence_csv(std::ostream& os, const ConvergenceTable& t) {
    for (std::size_t k = 0; k < t.header.size(); ++k) os << (k ? "," : "") << t.header[k];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << format_double(row[k]);
        os << '\n';
    }
}

}  // namespace ocarnot::harness
