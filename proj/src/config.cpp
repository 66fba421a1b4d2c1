#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "opencarnot/harness.hpp"

namespace ocarnot::harness {

namespace {

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& n, const std::string& path, const std::string& msg) const {
        std::ostringstream os;
        os << source_;
        if (n.IsDefined() && n.Mark().line >= 0) os << ":" << n.Mark().line + 1 << ":" << n.Mark().column + 1;
        os << ": '" << path << "': " << msg;
        throw ConfigError(os.str());
    }

    void keys(const YAML::Node& n, const std::string& path, const std::set<std::string>& allowed) const {
        if (!n.IsMap()) fail(n, path, "expected a mapping");
        for (const auto& kv : n) {
            const auto k = kv.first.as<std::string>();
            if (!allowed.count(k)) fail(kv.first, path + "." + k, "unknown key");
        }
    }

    const YAML::Node need(const YAML::Node& n, const std::string& key, const std::string& path) const {
        const YAML::Node v = n[key];
        if (!v.IsDefined() || v.IsNull()) fail(n, path + "." + key, "required key missing");
        return v;
    }

    double number(const YAML::Node& n, const std::string& path) const {
        if (!n.IsScalar()) fail(n, path, "expected a number");
        double x = 0.0;
        try {
            x = n.as<double>();
        } catch (const YAML::Exception&) {
            fail(n, path, "expected a number, got '" + n.Scalar() + "'");
        }
        if (!std::isfinite(x)) fail(n, path, "must be finite");
        return x;
    }

    double positive(const YAML::Node& n, const std::string& path) const {
        const double x = number(n, path);
        if (!(x > 0.0)) fail(n, path, "must be positive");
        return x;
    }

    std::string text(const YAML::Node& n, const std::string& path) const {
        if (!n.IsScalar()) fail(n, path, "expected a string");
        return n.Scalar();
    }

    std::uint64_t u64(const YAML::Node& n, const std::string& path) const {
        if (!n.IsScalar()) fail(n, path, "expected a non-negative integer");
        try {
            const auto& s = n.Scalar();
            if (s.empty() || s[0] == '-') throw std::invalid_argument("negative");
            std::size_t used = 0;
            const auto v = std::stoull(s, &used, 0);
            if (used != s.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            fail(n, path, "expected a non-negative integer, got '" + n.Scalar() + "'");
        }
    }

    int integer(const YAML::Node& n, const std::string& path) const {
        if (!n.IsScalar()) fail(n, path, "expected an integer");
        try {
            return n.as<int>();
        } catch (const YAML::Exception&) {
            fail(n, path, "expected an integer, got '" + n.Scalar() + "'");
        }
    }

    bool boolean(const YAML::Node& n, const std::string& path) const {
        try {
            return n.as<bool>();
        } catch (const YAML::Exception&) {
            fail(n, path, "expected true or false");
        }
    }

    std::vector<std::string> names(const YAML::Node& n, const std::string& path) const {
        std::vector<std::string> out;
        if (!n.IsDefined() || n.IsNull()) return out;
        if (!n.IsSequence()) fail(n, path, "expected a list");
        for (std::size_t i = 0; i < n.size(); ++i) out.push_back(text(n[i], path + "[" + std::to_string(i) + "]"));
        return out;
    }

    const std::string& source() const { return source_; }

private:
    std::string source_;
};

std::size_t species_index(const Reader& r, const Roster& roster, const YAML::Node& n, const std::string& path) {
    const auto id = r.text(n, path);
    for (std::size_t i = 0; i < roster.size(); ++i) {
        if (roster[i].id() == id) return i;
    }
    r.fail(n, path, "undeclared species \"" + id + "\"");
}

std::vector<double> masses(const Reader& r, const Roster& roster, const YAML::Node& n, const std::string& path) {
    if (!n.IsMap()) r.fail(n, path, "expected a mapping of species id to mass");
    std::vector<double> m(roster.size(), 0.0);
    for (const auto& kv : n) {
        const std::string key = kv.first.as<std::string>();
        const auto i = species_index(r, roster, kv.first, path);
        const double x = r.number(kv.second, path + "." + key);
        if (x < 0.0) r.fail(kv.second, path + "." + key, "mass must be >= 0");
        m[i] = x;
    }
    return m;
}

SystemState state(const Reader& r, const Roster& roster, const YAML::Node& n, const std::string& path) {
    r.keys(n, path, {"T", "V", "m"});
    SystemState s;
    s.T = r.positive(r.need(n, "T", path), path + ".T");
    s.V = r.positive(r.need(n, "V", path), path + ".V");
    s.m = masses(r, roster, r.need(n, "m", path), path + ".m");
    try {
        validate_state(s, roster);
    } catch (const Error& e) {
        r.fail(n, path, e.what());
    }
    return s;
}

PumpReservoir pump(const Reader& r, const YAML::Node& n, const std::string& path) {
    const auto s = r.text(n, path);
    if (s == "auto") return PumpReservoir::Auto;
    if (s == "hot") return PumpReservoir::Hot;
    if (s == "cold") return PumpReservoir::Cold;
    r.fail(n, path, "expected auto, hot or cold");
}

SegmentSpec segment(const Reader& r, const Roster& roster, const YAML::Node& n, const std::string& path) {
    if (!n.IsMap() || n.size() != 1) r.fail(n, path, "a segment is a single-key mapping such as {isotherm: {V: 2}}");
    const auto kind = n.begin()->first.as<std::string>();
    const YAML::Node body = n.begin()->second;
    const std::string p = path + "." + kind;
    if (kind == "isotherm") {
        r.keys(body, p, {"V"});
        return SegmentSpec::isotherm(r.positive(r.need(body, "V", p), p + ".V"));
    }
    if (kind == "adiabat") {
        r.keys(body, p, {"T"});
        return SegmentSpec::adiabat(r.positive(r.need(body, "T", p), p + ".T"));
    }
    if (kind == "isothermal_exchange") {
        r.keys(body, p, {"species", "dm"});
        return SegmentSpec::isothermal_exchange(species_index(r, roster, r.need(body, "species", p), p + ".species"),
                                                r.number(r.need(body, "dm", p), p + ".dm"));
    }
    if (kind == "adiabatic_exchange") {
        r.keys(body, p, {"species", "dm", "pump"});
        return SegmentSpec::adiabatic_exchange(
            species_index(r, roster, r.need(body, "species", p), p + ".species"),
            r.number(r.need(body, "dm", p), p + ".dm"),
            body["pump"].IsDefined() ? pump(r, body["pump"], p + ".pump") : PumpReservoir::Auto);
    }
    r.fail(n, path, "unknown segment kind '" + kind + "'");
}

CycleEntry cycle(const Reader& r, const ExperimentConfig& cfg, const YAML::Node& n, const std::string& path) {
    r.keys(n, path, {"id", "kind", "reservoirs", "geometry", "start", "segments", "corrupt_q2_scale"});
    CycleEntry e;
    auto& c = e.spec;
    c.id = r.text(r.need(n, "id", path), path + ".id");
    const std::string p = "cycles." + c.id;
    try {
        c.kind = cycle_kind_from_string(r.text(r.need(n, "kind", p), p + ".kind"));
    } catch (const Error& ex) {
        r.fail(n["kind"], p + ".kind", ex.what());
    }
    const YAML::Node res = r.need(n, "reservoirs", p);
    r.keys(res, p + ".reservoirs", {"T1", "T2"});
    c.reservoirs.T1 = r.positive(r.need(res, "T1", p + ".reservoirs"), p + ".reservoirs.T1");
    c.reservoirs.T2 = r.positive(r.need(res, "T2", p + ".reservoirs"), p + ".reservoirs.T2");
    if (!(c.reservoirs.T1 > c.reservoirs.T2)) r.fail(res, p + ".reservoirs", "T1 must exceed T2");

    const bool has_geometry = n["geometry"].IsDefined();
    const bool has_segments = n["segments"].IsDefined() || n["start"].IsDefined();
    if (has_geometry == has_segments) r.fail(n, p, "give either 'geometry' or 'start' with 'segments'");
    if (has_geometry) {
        const YAML::Node g = n["geometry"];
        const std::string gp = p + ".geometry";
        r.keys(g, gp, {"ratio", "V", "m", "species", "dm"});
        CarnotGeometry geo;
        geo.id = c.id;
        geo.T1 = c.reservoirs.T1;
        geo.T2 = c.reservoirs.T2;
        geo.ratio = r.positive(r.need(g, "ratio", gp), gp + ".ratio");
        geo.V_start = r.positive(r.need(g, "V", gp), gp + ".V");
        geo.m_start = masses(r, cfg.roster, r.need(g, "m", gp), gp + ".m");
        if (g["species"].IsDefined()) geo.species = species_index(r, cfg.roster, g["species"], gp + ".species");
        if (g["dm"].IsDefined()) geo.dm = r.number(g["dm"], gp + ".dm");
        const auto kind = c.kind;
        try {
            c = make_cycle(kind, geo, cfg.roster);
        } catch (const Error& ex) {
            r.fail(g, gp, ex.what());
        }
    } else {
        c.start = state(r, cfg.roster, r.need(n, "start", p), p + ".start");
        const YAML::Node segs = r.need(n, "segments", p);
        if (!segs.IsSequence() || segs.size() == 0) r.fail(segs, p + ".segments", "expected a non-empty list");
        for (std::size_t i = 0; i < segs.size(); ++i) {
            c.segments.push_back(segment(r, cfg.roster, segs[i], p + ".segments[" + std::to_string(i) + "]"));
        }
    }
    if (n["corrupt_q2_scale"].IsDefined()) {
        e.corrupt_q2_scale = r.number(n["corrupt_q2_scale"], p + ".corrupt_q2_scale");
    }
    try {
        validate_cycle(c, CycleContext(cfg.roster, cfg.ss));
    } catch (const Error& ex) {
        r.fail(n, p, ex.what());
    }
    return e;
}

LoopEntry loop(const Reader& r, const ExperimentConfig& cfg, const YAML::Node& n, const std::string& path,
               std::size_t ordinal) {
    if (!n.IsMap()) r.fail(n, path, "expected a mapping");
    LoopEntry e;
    e.ordinal = ordinal;
    const std::string id = r.text(r.need(n, "id", path), path + ".id");
    const std::string p = "loops." + id;
    const std::string family = r.text(r.need(n, "family", p), p + ".family");
    try {
        if (family == "ellipse_tm") {
            r.keys(n, p, {"id", "family", "center", "species", "aT", "am", "clockwise"});
            const auto c = state(r, cfg.roster, r.need(n, "center", p), p + ".center");
            const auto j = species_index(r, cfg.roster, r.need(n, "species", p), p + ".species");
            const bool cw = n["clockwise"].IsDefined() && r.boolean(n["clockwise"], p + ".clockwise");
            e.loop = LoopSpec::ellipse_tm(id, c, j, r.positive(r.need(n, "aT", p), p + ".aT"),
                                          r.positive(r.need(n, "am", p), p + ".am"), cw);
        } else if (family == "polygon_tm") {
            r.keys(n, p, {"id", "family", "base", "species", "vertices"});
            const auto b = state(r, cfg.roster, r.need(n, "base", p), p + ".base");
            const auto j = species_index(r, cfg.roster, r.need(n, "species", p), p + ".species");
            const YAML::Node vs = r.need(n, "vertices", p);
            if (!vs.IsSequence()) r.fail(vs, p + ".vertices", "expected a list of [T, m] pairs");
            std::vector<std::pair<double, double>> v;
            for (std::size_t i = 0; i < vs.size(); ++i) {
                const std::string vp = p + ".vertices[" + std::to_string(i) + "]";
                if (!vs[i].IsSequence() || vs[i].size() != 2) r.fail(vs[i], vp, "expected [T, m]");
                v.emplace_back(r.number(vs[i][0], vp), r.number(vs[i][1], vp));
            }
            e.loop = LoopSpec::polygon_tm(id, b, j, v);
        } else if (family == "fourier") {
            r.keys(n, p, {"id", "family", "base", "harmonics", "amplitude", "seed"});
            e.base = state(r, cfg.roster, r.need(n, "base", p), p + ".base");
            e.harmonics = r.integer(r.need(n, "harmonics", p), p + ".harmonics");
            e.amplitude = r.positive(r.need(n, "amplitude", p), p + ".amplitude");
            if (n["seed"].IsDefined()) {
                e.loop = LoopSpec::fourier(id, e.base, e.harmonics, e.amplitude, r.u64(n["seed"], p + ".seed"));
            } else {
                e.needs_seed = true;
                e.loop = LoopSpec::fourier(id, e.base, e.harmonics, e.amplitude, 0);
            }
        } else if (family == "scaling") {
            r.keys(n, p, {"id", "family", "base", "k_max"});
            const auto b = state(r, cfg.roster, r.need(n, "base", p), p + ".base");
            e.loop = LoopSpec::scaling(id, b, r.positive(r.need(n, "k_max", p), p + ".k_max"));
        } else {
            r.fail(n["family"], p + ".family", "unknown loop family '" + family + "'");
        }
        validate_loop(e.loop, cfg.roster);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& ex) {
        r.fail(n, p, ex.what());
    }
    return e;
}

void tolerances(const Reader& r, const YAML::Node& n, Tolerances& t) {
    const std::map<std::string, double*> slots{
        {"carnot", &t.carnot},
        {"ledger", &t.ledger},
        {"clausius", &t.clausius},
        {"identity_factor", &t.identity_factor},
        {"work_routes", &t.work_routes},
        {"reciprocity", &t.reciprocity},
        {"virtual_work", &t.virtual_work},
        {"virtual_work_family", &t.virtual_work_family},
        {"scaling", &t.scaling},
        {"closure", &t.closure},
        {"quadrature", &t.quadrature},
    };
    if (!n.IsMap()) r.fail(n, "tolerances", "expected a mapping");
    for (const auto& kv : n) {
        const auto k = kv.first.as<std::string>();
        const auto it = slots.find(k);
        if (it == slots.end()) r.fail(kv.first, "tolerances." + k, "unknown tolerance");
        const double x = r.number(kv.second, "tolerances." + k);
        if (!(x > 0.0)) r.fail(kv.second, "tolerances." + k, "tolerance must be positive");
        if (x > *it->second) {
            r.fail(kv.second, "tolerances." + k, "overrides may only tighten the default of " + format_double(*it->second));
        }
        *it->second = x;
    }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
    const Reader r(source);
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                          ": parse error: " + e.msg);
    }
    if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
    r.keys(root, "<root>", {"seed", "wss_mode", "standard_state", "species", "tolerances", "cycles", "loops",
                            "staircases", "suites"});

    ExperimentConfig cfg;
    cfg.source = source;
    if (root["seed"].IsDefined()) cfg.seed = r.u64(root["seed"], "seed");
    if (root["wss_mode"].IsDefined()) {
        const auto m = r.text(root["wss_mode"], "wss_mode");
        if (m == "flow-work") {
            cfg.wss = WssMode::FlowWork;
        } else if (m == "zero") {
            cfg.wss = WssMode::Zero;
        } else {
            r.fail(root["wss_mode"], "wss_mode", "expected flow-work or zero");
        }
    }
    if (root["standard_state"].IsDefined()) {
        const auto n = root["standard_state"];
        r.keys(n, "standard_state", {"T0", "p0"});
        cfg.ss = StandardState(r.positive(r.need(n, "T0", "standard_state"), "standard_state.T0"),
                               r.positive(r.need(n, "p0", "standard_state"), "standard_state.p0"));
    }
    if (root["species"].IsDefined()) {
        const auto n = root["species"];
        if (!n.IsSequence() || n.size() == 0) r.fail(n, "species", "expected a non-empty list");
        std::set<std::string> seen;
        for (std::size_t i = 0; i < n.size(); ++i) {
            const std::string p = "species[" + std::to_string(i) + "]";
            r.keys(n[i], p, {"id", "Rs", "cv", "Uss"});
            const auto id = r.text(r.need(n[i], "id", p), p + ".id");
            if (!seen.insert(id).second) r.fail(n[i], p + ".id", "duplicate species \"" + id + "\"");
            const double Uss = n[i]["Uss"].IsDefined() ? r.number(n[i]["Uss"], p + ".Uss") : 0.0;
            cfg.roster.emplace_back(id, r.positive(r.need(n[i], "Rs", p), p + ".Rs"),
                                    r.positive(r.need(n[i], "cv", p), p + ".cv"), Uss);
        }
    } else {
        cfg.roster = {reference_species()};
    }
    if (root["tolerances"].IsDefined()) tolerances(r, root["tolerances"], cfg.tol);

    auto list = [&](const char* key) {
        const YAML::Node n = root[key];
        if (n.IsDefined() && !n.IsNull() && !n.IsSequence()) r.fail(n, key, "expected a list");
        return n;
    };
    if (const auto n = list("cycles"); n.IsDefined()) {
        for (std::size_t i = 0; i < n.size(); ++i) {
            auto e = cycle(r, cfg, n[i], std::string("cycles[") + std::to_string(i) + "]");
            const auto id = e.spec.id;
            if (!cfg.cycles.emplace(id, std::move(e)).second) r.fail(n[i], "cycles." + id, "duplicate cycle id");
        }
    }
    if (const auto n = list("loops"); n.IsDefined()) {
        for (std::size_t i = 0; i < n.size(); ++i) {
            auto e = loop(r, cfg, n[i], std::string("loops[") + std::to_string(i) + "]", i);
            const auto id = e.loop.id;
            if (!cfg.loops.emplace(id, std::move(e)).second) r.fail(n[i], "loops." + id, "duplicate loop id");
        }
    }
    if (const auto n = list("staircases"); n.IsDefined()) {
        for (std::size_t i = 0; i < n.size(); ++i) {
            const std::string p = "staircases[" + std::to_string(i) + "]";
            r.keys(n[i], p, {"id", "loop", "ladder"});
            StaircaseEntry s;
            s.id = r.text(r.need(n[i], "id", p), p + ".id");
            s.loop = r.text(r.need(n[i], "loop", p), p + ".loop");
            const auto it = cfg.loops.find(s.loop);
            if (it == cfg.loops.end()) r.fail(n[i]["loop"], p + ".loop", "undeclared loop \"" + s.loop + "\"");
            if (!it->second.loop.planar) r.fail(n[i]["loop"], p + ".loop", "staircases need a planar (T, m) loop");
            const YAML::Node ladder = r.need(n[i], "ladder", p);
            if (!ladder.IsSequence() || ladder.size() == 0) r.fail(ladder, p + ".ladder", "expected a non-empty list");
            for (std::size_t k = 0; k < ladder.size(); ++k) {
                const int N = r.integer(ladder[k], p + ".ladder");
                if (N < 1) r.fail(ladder[k], p + ".ladder", "N must be >= 1");
                s.ladder.push_back(N);
            }
            const auto id = s.id;
            if (!cfg.staircases.emplace(id, std::move(s)).second) r.fail(n[i], "staircases." + id, "duplicate id");
        }
    }
    if (root["suites"].IsDefined()) {
        const auto n = root["suites"];
        if (!n.IsMap()) r.fail(n, "suites", "expected a mapping of suite name to contents");
        const auto& known = builtin_suites();
        for (const auto& kv : n) {
            const auto name = kv.first.as<std::string>();
            const std::string p = "suites." + name;
            r.keys(kv.second, p, {"builtin", "cycles", "loops", "staircases"});
            SuiteEntry s;
            s.builtin = r.names(kv.second["builtin"], p + ".builtin");
            s.cycles = r.names(kv.second["cycles"], p + ".cycles");
            s.loops = r.names(kv.second["loops"], p + ".loops");
            s.staircases = r.names(kv.second["staircases"], p + ".staircases");
            for (const auto& b : s.builtin) {
                if (std::find(known.begin(), known.end(), b) == known.end()) {
                    r.fail(kv.second["builtin"], p + ".builtin", "unknown built-in suite \"" + b + "\"");
                }
            }
            for (const auto& c : s.cycles) {
                if (!cfg.cycles.count(c)) r.fail(kv.second["cycles"], p + ".cycles", "undeclared cycle \"" + c + "\"");
            }
            for (const auto& l : s.loops) {
                if (!cfg.loops.count(l)) r.fail(kv.second["loops"], p + ".loops", "undeclared loop \"" + l + "\"");
            }
            for (const auto& st : s.staircases) {
                if (!cfg.staircases.count(st)) {
                    r.fail(kv.second["staircases"], p + ".staircases", "undeclared staircase \"" + st + "\"");
                }
            }
            cfg.suites.emplace(name, std::move(s));
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

}  // namespace ocarnot::harness
