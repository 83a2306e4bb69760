#include "wegnerlab/config.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "wegnerlab/errors.hpp"

namespace wegnerlab {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void schema(const std::string& path, const std::string& msg) {
    fail(ErrorKind::schema_violation, path + ": " + msg);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void only_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    if (!obj.is_object()) schema(path.empty() ? "<root>" : path, "expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) schema(join(path, it.key()), "unknown key");
}

const json* find(const json& obj, const std::string& key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

const json& need(const json& obj, const std::string& path, const std::string& key) {
    const json* v = find(obj, key);
    if (!v) schema(join(path, key), "required key missing");
    return *v;
}

double as_real(const json& v, const std::string& path) {
    if (!v.is_number()) schema(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) schema(path, "expected a finite number");
    return x;
}

long long as_int(const json& v, const std::string& path) {
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_number_float()) {
        const double x = v.get<double>();
        if (std::isfinite(x) && x == std::floor(x) && std::abs(x) < 9e15) return static_cast<long long>(x);
    }
    schema(path, "expected an integer");
}

std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) schema(path, "expected a string");
    return v.get<std::string>();
}

bool as_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) schema(path, "expected true or false");
    return v.get<bool>();
}

std::vector<double> as_reals(const json& v, const std::string& path) {
    if (!v.is_array()) schema(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_real(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

Site as_site(const json& v, const std::string& path, int d) {
    if (!v.is_array() || v.size() != static_cast<std::size_t>(d)) schema(path, "expected " + std::to_string(d) + " integer coordinates");
    Site s{0, 0};
    for (int k = 0; k < d; ++k) s[static_cast<std::size_t>(k)] = static_cast<int>(as_int(v[static_cast<std::size_t>(k)], path + "[" + std::to_string(k) + "]"));
    return s;
}

json site_json(const Site& s, int d) {
    json a = json::array();
    for (int k = 0; k < d; ++k) a.push_back(s[static_cast<std::size_t>(k)]);
    return a;
}

template <class T>
void opt_real(const json& obj, const std::string& path, const std::string& key, T& out) {
    if (const json* v = find(obj, key)) out = static_cast<T>(as_real(*v, join(path, key)));
}

template <class T>
void opt_int(const json& obj, const std::string& path, const std::string& key, T& out) {
    if (const json* v = find(obj, key)) out = static_cast<T>(as_int(*v, join(path, key)));
}

const char* support_name(SupportKind k) {
    switch (k) {
        case SupportKind::full: return "full";
        case SupportKind::half_space: return "half-space";
        case SupportKind::surface: return "surface";
        case SupportKind::delone: return "delone";
        case SupportKind::finite_holes: return "finite-holes";
    }
    return "full";
}

SupportKind support_from(const std::string& s, const std::string& path) {
    for (auto k : {SupportKind::full, SupportKind::half_space, SupportKind::surface, SupportKind::delone,
                   SupportKind::finite_holes})
        if (s == support_name(k)) return k;
    schema(path, "unknown support kind '" + s + "'");
}

Support parse_support(const json& j, const std::string& path, int d) {
    Support s;
    s.kind = support_from(as_string(need(j, path, "kind"), join(path, "kind")), join(path, "kind"));
    switch (s.kind) {
        case SupportKind::full:
            only_keys(j, path, {"kind"});
            break;
        case SupportKind::half_space:
            only_keys(j, path, {"kind", "axis", "threshold"});
            opt_int(j, path, "axis", s.axis);
            opt_real(j, path, "threshold", s.threshold);
            break;
        case SupportKind::surface:
            only_keys(j, path, {"kind", "surface_dims"});
            opt_int(j, path, "surface_dims", s.surface_dims);
            break;
        case SupportKind::delone:
            only_keys(j, path, {"kind", "cell", "seed", "periodic"});
            opt_int(j, path, "cell", s.cell);
            if (const json* v = find(j, "seed")) {
                if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0))
                    schema(join(path, "seed"), "expected a non-negative integer");
                s.seed = v->get<std::uint64_t>();
            }
            if (const json* v = find(j, "periodic")) s.periodic = as_bool(*v, join(path, "periodic"));
            break;
        case SupportKind::finite_holes:
            only_keys(j, path, {"kind", "holes"});
            if (const json* v = find(j, "holes")) {
                if (!v->is_array()) schema(join(path, "holes"), "expected an array of sites");
                for (std::size_t i = 0; i < v->size(); ++i)
                    s.holes.push_back(as_site((*v)[i], join(path, "holes") + "[" + std::to_string(i) + "]", d));
            }
            break;
    }
    return s;
}

json support_json(const Support& s, int d) {
    json j;
    j["kind"] = support_name(s.kind);
    switch (s.kind) {
        case SupportKind::full: break;
        case SupportKind::half_space:
            j["axis"] = s.axis;
            j["threshold"] = s.threshold;
            break;
        case SupportKind::surface: j["surface_dims"] = s.surface_dims; break;
        case SupportKind::delone:
            j["cell"] = s.cell;
            j["seed"] = s.seed;
            j["periodic"] = s.periodic;
            break;
        case SupportKind::finite_holes: {
            json h = json::array();
            for (const auto& x : s.holes) h.push_back(site_json(x, d));
            j["holes"] = h;
            break;
        }
    }
    return j;
}

DisorderSpec parse_disorder(const json& j, const std::string& path) {
    DisorderSpec s;
    s.kind = as_string(need(j, path, "kind"), join(path, "kind"));
    if (s.kind == "uniform") {
        only_keys(j, path, {"kind", "lo", "hi", "mc_samples"});
        s.lo = as_real(need(j, path, "lo"), join(path, "lo"));
        s.hi = as_real(need(j, path, "hi"), join(path, "hi"));
    } else if (s.kind == "atomic") {
        only_keys(j, path, {"kind", "points", "weights", "mc_samples"});
        s.points = as_reals(need(j, path, "points"), join(path, "points"));
        s.weights = as_reals(need(j, path, "weights"), join(path, "weights"));
        double total = 0.0;
        for (double w : s.weights) total += w;
        if (s.weights.size() != s.points.size() || std::abs(total - 1.0) > 1e-9)
            schema(path, "atomic weights must match the points and sum to 1");
    } else if (s.kind == "cantor") {
        only_keys(j, path, {"kind", "level", "mc_samples"});
        opt_int(j, path, "level", s.level);
    } else if (s.kind == "polynomial") {
        only_keys(j, path, {"kind", "lo", "hi", "coeffs", "mc_samples"});
        s.lo = as_real(need(j, path, "lo"), join(path, "lo"));
        s.hi = as_real(need(j, path, "hi"), join(path, "hi"));
        s.coeffs = as_reals(need(j, path, "coeffs"), join(path, "coeffs"));
    } else if (s.kind == "markov") {
        only_keys(j, path, {"kind", "lo", "hi", "rho", "mc_samples"});
        s.lo = as_real(need(j, path, "lo"), join(path, "lo"));
        s.hi = as_real(need(j, path, "hi"), join(path, "hi"));
        opt_real(j, path, "rho", s.rho);
    } else {
        schema(join(path, "kind"), "unknown disorder kind '" + s.kind + "'");
    }
    opt_int(j, path, "mc_samples", s.mc_samples);
    if (s.mc_samples < 1) schema(join(path, "mc_samples"), "must be >= 1");
    // measure construction errors are reported against the disorder block
    try {
        (void)s.model(1);
    } catch (const Error& e) {
        schema(path, e.what());
    }
    return s;
}

json disorder_json(const DisorderSpec& s) {
    json j;
    j["kind"] = s.kind;
    j["mc_samples"] = s.mc_samples;
    if (s.kind == "uniform" || s.kind == "polynomial" || s.kind == "markov") {
        j["lo"] = s.lo;
        j["hi"] = s.hi;
    }
    if (s.kind == "atomic") {
        j["points"] = s.points;
        j["weights"] = s.weights;
    }
    if (s.kind == "cantor") j["level"] = s.level;
    if (s.kind == "polynomial") j["coeffs"] = s.coeffs;
    if (s.kind == "markov") j["rho"] = s.rho;
    return j;
}

void parse_lattice_model(const json& j, const std::string& path, ExperimentConfig& c) {
    only_keys(j, path, {"d", "n", "v0_period", "v0_values", "radius", "profile", "support", "centers", "half_side",
                        "zeta", "gamma"});
    auto& m = c.lattice;
    opt_int(j, path, "d", m.d);
    opt_int(j, path, "n", m.n);
    if (m.d < 1 || m.d > 2) schema(join(path, "d"), "must be 1 or 2");
    if (m.n < 1 || m.n > 2) schema(join(path, "n"), "must be 1 or 2");
    if (const json* v = find(j, "v0_period")) {
        const auto p = as_reals(*v, join(path, "v0_period"));
        if (p.size() != static_cast<std::size_t>(m.d)) schema(join(path, "v0_period"), "expected d entries");
        m.v0_period = {1, 1};
        for (int k = 0; k < m.d; ++k) m.v0_period[static_cast<std::size_t>(k)] = static_cast<int>(as_int((*v)[static_cast<std::size_t>(k)], join(path, "v0_period")));
    }
    if (const json* v = find(j, "v0_values")) m.v0_values = as_reals(*v, join(path, "v0_values"));
    opt_int(j, path, "radius", m.radius);
    if (const json* v = find(j, "profile")) m.profile = as_reals(*v, join(path, "profile"));
    if (const json* v = find(j, "support")) m.support = parse_support(*v, join(path, "support"), m.d);
    c.centers.assign(static_cast<std::size_t>(m.n), Site{0, 0});
    if (const json* v = find(j, "centers")) {
        if (!v->is_array() || v->size() != static_cast<std::size_t>(m.n)) schema(join(path, "centers"), "expected one site per particle");
        for (std::size_t i = 0; i < v->size(); ++i)
            c.centers[i] = as_site((*v)[i], join(path, "centers") + "[" + std::to_string(i) + "]", m.d);
    }
    opt_int(j, path, "half_side", c.half_side);
    if (c.half_side < 0) schema(join(path, "half_side"), "must be >= 0");
    opt_real(j, path, "zeta", c.zeta);
    if (const json* v = find(j, "gamma")) c.gamma = as_real(*v, join(path, "gamma"));
    try {
        m.validate();
    } catch (const Error& e) {
        schema(path, e.what());
    }
}

void parse_graph_model(const json& j, const std::string& path, ExperimentConfig& c) {
    only_keys(j, path, {"d", "side", "l_min", "l_max", "length", "alpha", "dirichlet_boundary", "zeta"});
    auto& g = c.graph;
    opt_int(j, path, "d", g.d);
    opt_int(j, path, "side", g.side);
    opt_real(j, path, "l_min", g.l_min);
    opt_real(j, path, "l_max", g.l_max);
    opt_real(j, path, "length", g.length);
    opt_real(j, path, "alpha", g.alpha);
    opt_real(j, path, "zeta", c.zeta);
    if (const json* v = find(j, "dirichlet_boundary")) g.dirichlet_boundary = as_bool(*v, join(path, "dirichlet_boundary"));
    if (g.d < 1 || g.d > 2) schema(join(path, "d"), "must be 1 or 2");
    if (g.side < 2) schema(join(path, "side"), "must be >= 2");
}

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
    only_keys(j, "", {"name", "scenario", "theorem", "model", "interval", "disorder", "samples", "seed", "boundary", "q"});
    ExperimentConfig c;
    if (const json* v = find(j, "name")) c.name = as_string(*v, "name");
    const std::string scenario = as_string(need(j, "", "scenario"), "scenario");
    const std::string theorem = as_string(need(j, "", "theorem"), "theorem");
    try {
        c.scenario = scenario_from_string(scenario);
    } catch (const Error& e) {
        schema("scenario", e.what());
    }
    try {
        c.theorem = theorem_from_string(theorem);
    } catch (const Error& e) {
        schema("theorem", e.what());
    }
    const json& model = need(j, "", "model");
    if (c.scenario == ScenarioKind::lattice)
        parse_lattice_model(model, "model", c);
    else
        parse_graph_model(model, "model", c);
    const json& iv = need(j, "", "interval");
    if (!iv.is_array() || iv.size() != 2) schema("interval", "expected [E1, E2]");
    c.interval = {as_real(iv[0], "interval[0]"), as_real(iv[1], "interval[1]")};
    c.disorder = parse_disorder(need(j, "", "disorder"), "disorder");
    opt_int(j, "", "samples", c.samples);
    if (const json* v = find(j, "seed")) {
        if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0))
            schema("seed", "expected a non-negative integer");
        c.seed = v->get<std::uint64_t>();
    }
    if (const json* v = find(j, "boundary")) {
        try {
            c.boundary = boundary_from_string(as_string(*v, "boundary"));
        } catch (const Error& e) {
            schema("boundary", e.what());
        }
    }
    if (const json* v = find(j, "q"))
        if (!v->is_null()) c.q = as_real(*v, "q");
    return c;
}

ExperimentConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        schema("<root>", std::string("not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::schema_violation, path + ": cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    auto c = parse_config_text(ss.str());
    return c;
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["name"] = c.name;
    j["scenario"] = to_string(c.scenario);
    j["theorem"] = to_string(c.theorem);
    json m;
    if (c.scenario == ScenarioKind::lattice) {
        const auto& l = c.lattice;
        m["d"] = l.d;
        m["n"] = l.n;
        json per = json::array();
        for (int k = 0; k < l.d; ++k) per.push_back(l.v0_period[static_cast<std::size_t>(k)]);
        m["v0_period"] = per;
        m["v0_values"] = l.v0_values;
        m["radius"] = l.radius;
        m["profile"] = l.profile;
        m["support"] = support_json(l.support, l.d);
        json centers = json::array();
        for (const auto& s : c.centers) centers.push_back(site_json(s, l.d));
        m["centers"] = centers;
        m["half_side"] = c.half_side;
        if (c.gamma) m["gamma"] = *c.gamma;
    } else {
        const auto& g = c.graph;
        m["d"] = g.d;
        m["side"] = g.side;
        m["l_min"] = g.l_min;
        m["l_max"] = g.l_max;
        m["length"] = g.length;
        m["alpha"] = g.alpha;
        m["dirichlet_boundary"] = g.dirichlet_boundary;
    }
    m["zeta"] = c.zeta;
    j["model"] = m;
    j["interval"] = {c.interval.lo, c.interval.hi};
    j["disorder"] = disorder_json(c.disorder);
    j["samples"] = c.samples;
    j["seed"] = c.seed;
    j["boundary"] = to_string(c.boundary);
    if (c.q) j["q"] = *c.q;
    return j;
}

std::string canonical_config(const ExperimentConfig& c) { return config_to_json(c).dump(2) + "\n"; }

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string config_digest(const ExperimentConfig& c) { return fnv1a_hex(canonical_config(c)); }

json report_to_json(const BoundReport& r) {
    json j;
    j["scenario"] = r.scenario;
    j["theorem"] = r.theorem;
    j["interval_lo"] = r.interval_lo;
    j["interval_hi"] = r.interval_hi;
    j["interval_length"] = r.interval_length;
    j["mean"] = r.mean;
    j["se"] = r.se;
    j["rhs"] = r.rhs;
    j["margin"] = r.margin;
    j["trivial_bound"] = r.trivial_bound;
    j["vacuous"] = r.vacuous;
    j["verdict"] = to_string(r.verdict);
    j["s_f"] = r.s_f;
    j["s_f_se"] = r.s_f_se;
    j["s_f_eps"] = r.s_f_eps;
    j["gamma"] = r.gamma;
    j["k_or_dim"] = r.k_or_dim;
    j["i_f"] = r.i_f;
    j["j_eff"] = r.j_eff;
    j["c_fin"] = r.c_fin;
    j["c_u"] = r.c_u;
    j["hit_frequency"] = r.hit_frequency;
    j["samples"] = r.samples;
    j["checks"] = r.checks;
    j["check_failures"] = r.check_failures;
    j["seed"] = r.seed;
    j["digest"] = r.digest;
    j["note"] = r.note;
    json ing = json::array();
    for (const auto& i : r.ingredients) ing.push_back({{"name", i.name}, {"value", i.value}, {"source", i.source}});
    j["ingredients"] = ing;
    return j;
}

BoundReport report_from_json(const json& j) {
    BoundReport r;
    try {
        r.scenario = j.at("scenario").get<std::string>();
        r.theorem = j.at("theorem").get<std::string>();
        r.interval_lo = j.at("interval_lo").get<double>();
        r.interval_hi = j.at("interval_hi").get<double>();
        r.interval_length = j.at("interval_length").get<double>();
        r.mean = j.at("mean").get<double>();
        r.se = j.at("se").get<double>();
        r.rhs = j.at("rhs").get<double>();
        r.margin = j.at("margin").get<double>();
        r.trivial_bound = j.at("trivial_bound").get<double>();
        r.vacuous = j.at("vacuous").get<bool>();
        const auto v = j.at("verdict").get<std::string>();
        bool found = false;
        for (auto k : {Verdict::verified, Verdict::violated, Verdict::inconclusive, Verdict::hypothesis_failed})
            if (v == to_string(k)) {
                r.verdict = k;
                found = true;
            }
        if (!found) schema("report.verdict", "unknown verdict '" + v + "'");
        r.s_f = j.at("s_f").get<double>();
        r.s_f_se = j.at("s_f_se").get<double>();
        r.s_f_eps = j.at("s_f_eps").get<double>();
        r.gamma = j.at("gamma").get<double>();
        r.k_or_dim = j.at("k_or_dim").get<double>();
        r.i_f = j.at("i_f").get<double>();
        r.j_eff = j.at("j_eff").get<double>();
        r.c_fin = j.at("c_fin").get<double>();
        r.c_u = j.at("c_u").get<double>();
        r.hit_frequency = j.at("hit_frequency").get<double>();
        r.samples = j.at("samples").get<long>();
        r.checks = j.at("checks").get<long>();
        r.check_failures = j.at("check_failures").get<long>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.digest = j.at("digest").get<std::string>();
        r.note = j.at("note").get<std::string>();
        for (const auto& i : j.at("ingredients"))
            r.ingredients.push_back({i.at("name").get<std::string>(), i.at("value").get<double>(), i.at("source").get<std::string>()});
    } catch (const json::exception& e) {
        schema("report", e.what());
    }
    return r;
}

json record_to_json(const RunRecord& r) {
    return {{"digest", r.digest}, {"config", r.config},     {"report", report_to_json(r.report)},
            {"started", r.started}, {"finished", r.finished}, {"version", r.version}};
}

RunRecord record_from_json(const json& j) {
    RunRecord r;
    try {
        r.digest = j.at("digest").get<std::string>();
        r.config = j.at("config");
        r.report = report_from_json(j.at("report"));
        r.started = j.at("started").get<std::string>();
        r.finished = j.at("finished").get<std::string>();
        r.version = j.at("version").get<std::string>();
    } catch (const json::exception& e) {
        schema("record", e.what());
    }
    return r;
}

ResultStore::ResultStore(std::string dir) : dir_(std::move(dir)) {}

void ResultStore::append(const RunRecord& r) {
    fs::create_directories(fs::path(dir_) / "configs");
    const std::string bytes = r.config.dump(2) + "\n";
    const fs::path cfg = fs::path(dir_) / "configs" / (r.digest + ".json");
    if (fs::exists(cfg)) {
        std::ifstream in(cfg);
        std::stringstream ss;
        ss << in.rdbuf();
        if (ss.str() != bytes)
            fail(ErrorKind::invariant_violation, "digest " + r.digest + " already stored with different config bytes");
    } else {
        std::ofstream out(cfg);
        out << bytes;
    }
    std::ofstream log(fs::path(dir_) / "records.jsonl", std::ios::app);
    if (!log) fail(ErrorKind::invalid_argument, "cannot write to store " + dir_);
    log << record_to_json(r).dump() << "\n";
}

std::vector<RunRecord> ResultStore::load() const {
    std::vector<RunRecord> out;
    std::ifstream in(fs::path(dir_) / "records.jsonl");
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(record_from_json(json::parse(line)));
        } catch (const json::parse_error& e) {
            schema("records.jsonl", e.what());
        }
    }
    return out;
}

std::vector<std::string> report_columns() {
    return {"scenario", "theorem", "interval_length", "s_f",  "gamma",   "k_or_dim", "i_f", "j_eff",
            "mean",     "se",      "rhs",             "margin", "verdict", "vacuous",  "seed"};
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

std::string format_real(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return fmt17(x);
}

std::string report_csv(const std::vector<RunRecord>& records) {
    std::ostringstream os;
    const auto cols = report_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << "\r\n";
    for (const auto& rec : records) {
        const auto& r = rec.report;
        os << csv_escape(r.scenario) << ',' << csv_escape(r.theorem) << ',' << format_real(r.interval_length) << ','
           << format_real(r.s_f) << ',' << format_real(r.gamma) << ',' << format_real(r.k_or_dim) << ','
           << format_real(r.i_f) << ',' << format_real(r.j_eff) << ',' << format_real(r.mean) << ','
           << format_real(r.se) << ',' << format_real(r.rhs) << ',' << format_real(r.margin) << ','
           << to_string(r.verdict) << ',' << (r.vacuous ? "true" : "false") << ',' << r.seed << "\r\n";
    }
    return os.str();
}

std::string report_jsonl(const std::vector<RunRecord>& records) {
    // hand-written so every real carries 17 significant digits
    auto num = [](double x) { return std::isfinite(x) ? fmt17(x) : std::string("null"); };
    std::ostringstream os;
    for (const auto& rec : records) {
        const auto& r = rec.report;
        os << "{\"scenario\":" << json(r.scenario).dump() << ",\"theorem\":" << json(r.theorem).dump()
           << ",\"interval_length\":" << num(r.interval_length) << ",\"s_f\":" << num(r.s_f)
           << ",\"gamma\":" << num(r.gamma) << ",\"k_or_dim\":" << num(r.k_or_dim) << ",\"i_f\":" << num(r.i_f)
           << ",\"j_eff\":" << num(r.j_eff) << ",\"mean\":" << num(r.mean) << ",\"se\":" << num(r.se)
           << ",\"rhs\":" << num(r.rhs) << ",\"margin\":" << num(r.margin) << ",\"verdict\":\""
           << to_string(r.verdict) << "\",\"vacuous\":" << (r.vacuous ? "true" : "false") << ",\"seed\":" << r.seed
           << ",\"digest\":" << json(rec.digest).dump() << "}\n";
    }
    return os.str();
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace wegnerlab
