#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "wegnerlab/config.hpp"
#include "wegnerlab/errors.hpp"

using namespace wegnerlab;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"({
  "scenario": "lattice",
  "theorem": "thm-3.1",
  "model": {"d": 1, "half_side": 25},
  "interval": [1.9, 1.901],
  "disorder": {"kind": "uniform", "lo": 0, "hi": 1}
})";

std::string schema_message(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::schema_violation);
        return e.what();
    }
    FAIL("expected a schema violation");
    return "";
}

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("wegnerlab_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cli(const std::string& args, const fs::path& out = {}) {
    std::string cmd = std::string(WEGNERLAB_CLI_PATH) + " " + args;
    cmd += out.empty() ? " > /dev/null 2>&1" : " > '" + out.string() + "' 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::vector<fs::path> shipped() {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(WEGNERLAB_SCENARIO_DIR))
        if (e.path().extension() == ".json") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

RunRecord sample_record(const std::string& name) {
    RunRecord rec;
    auto c = parse_config_text(kMinimal);
    c.name = name;
    rec.config = config_to_json(c);
    rec.digest = config_digest(c);
    rec.report.scenario = name;
    rec.report.theorem = "thm-3.1";
    rec.report.mean = 0.1 + 0.2;
    rec.report.se = 1.0 / 3.0;
    rec.report.rhs = 0.306;
    rec.report.margin = rec.report.rhs - rec.report.mean - 3 * rec.report.se;
    rec.report.verdict = Verdict::inconclusive;
    rec.report.seed = 18446744073709551615ULL;
    rec.report.ingredients.push_back({"gamma", 1.0, "computed"});
    rec.started = rec.finished = "2026-01-01T00:00:00Z";
    return rec;
}

}  // namespace

TEST_CASE("minimal config gets the documented defaults") {
    auto c = parse_config_text(kMinimal);
    CHECK(c.samples == 2000);
    CHECK(c.seed == 0);
    CHECK(c.boundary == Boundary::simple);
    CHECK(!c.q);
    CHECK(c.half_side == 25);
    CHECK(c.lattice.support.kind == SupportKind::full);
    CHECK(c.disorder.mc_samples == 4096);
    c.validate();
}

TEST_CASE("schema violations carry the field path") {
    CHECK(schema_message(R"({"scenario":"lattice","theorem":"thm-3.1","model":{"d":1,"foo":1},"interval":[0,1],"disorder":{"kind":"uniform","lo":0,"hi":1}})")
              .rfind("model.foo:", 0) == 0);
    CHECK(schema_message(R"({"scenario":"lattice","theorem":"thm-3.1","model":{},"interval":[0,1],"disorder":{"kind":"uniform","lo":0,"hi":1},"extra":2})")
              .rfind("extra:", 0) == 0);
    CHECK(schema_message(R"({"scenario":"lattice","theorem":"thm-3.1","model":{},"interval":[0,1],"disorder":{"kind":"uniform","hi":1}})")
              .rfind("disorder.lo:", 0) == 0);
    CHECK(schema_message(R"({"scenario":"lattice","theorem":"thm-3.1","model":{},"interval":[0,1],"disorder":{"kind":"uniform","lo":0,"hi":1},"samples":"many"})")
              .rfind("samples:", 0) == 0);
    CHECK(schema_message(R"({"scenario":"lattice","theorem":"thm-3.1","model":{"support":{"kind":"half-space","cell":2}},"interval":[0,1],"disorder":{"kind":"uniform","lo":0,"hi":1}})")
              .rfind("model.support.cell:", 0) == 0);
    CHECK(schema_message(R"({"scenario":"lattice","theorem":"thm-7","model":{},"interval":[0,1],"disorder":{"kind":"uniform","lo":0,"hi":1}})")
              .rfind("theorem:", 0) == 0);
    CHECK(schema_message(R"({"scenario":"lattice","theorem":"thm-3.1","model":{},"interval":[0],"disorder":{"kind":"uniform","lo":0,"hi":1}})")
              .rfind("interval:", 0) == 0);
    CHECK(schema_message("{not json").rfind("<root>:", 0) == 0);
    CHECK(schema_message(R"({"scenario":"lattice","theorem":"thm-3.1","model":{},"interval":[0,1],"disorder":{"kind":"atomic","points":[0,1],"weights":[0.5,0.2]}})")
              .rfind("disorder:", 0) == 0);
}

TEST_CASE("thm-2.4 with E_2 above E_q fails validation as a precondition") {
    auto c = parse_config_text(R"({"scenario":"lattice","theorem":"thm-2.4","model":{"d":1},"interval":[-0.5,0.1],
        "disorder":{"kind":"uniform","lo":-1,"hi":-0.5},"q":0,"boundary":"dirichlet"})");
    try {
        c.validate();
        FAIL("expected precondition_violated");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::precondition_violated);
        CHECK(std::string(e.what()).find("E_2 < E_q") != std::string::npos);
    }
}

TEST_CASE("canonical serialization is idempotent") {
    for (const auto& p : shipped()) {
        auto c = parse_config_file(p.string());
        const std::string once = canonical_config(c);
        const std::string twice = canonical_config(parse_config_text(once));
        CHECK(once == twice);
        CHECK(config_digest(c) == fnv1a_hex(once));
    }
    // key order and whitespace do not change the canonical form
    auto a = parse_config_text(kMinimal);
    auto b = parse_config_text(R"({"disorder":{"hi":1,"lo":0,"kind":"uniform"},"interval":[1.9,1.901],
        "model":{"half_side":25,"d":1},"theorem":"thm-3.1","scenario":"lattice"})");
    CHECK(canonical_config(a) == canonical_config(b));
    b.seed = 1;
    CHECK(config_digest(a) != config_digest(b));
}

TEST_CASE("FNV-1a reference values") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
    CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("report json round trip is exact") {
    auto rec = sample_record("x");
    auto back = report_from_json(report_to_json(rec.report));
    CHECK(back.mean == rec.report.mean);
    CHECK(back.se == rec.report.se);
    CHECK(back.seed == rec.report.seed);
    CHECK(back.verdict == Verdict::inconclusive);
    CHECK(back.ingredients.size() == 1);
    auto r2 = record_from_json(json::parse(record_to_json(rec).dump()));
    CHECK(r2.digest == rec.digest);
    CHECK(r2.config == rec.config);
}

TEST_CASE("csv report") {
    auto rec = sample_record("a,b \"quoted\"");
    const std::string csv = report_csv({rec});
    std::istringstream in(csv);
    std::string header, row, extra;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(!std::getline(in, extra));
    CHECK(header.rfind("scenario,theorem,interval_length,s_f,gamma,k_or_dim,i_f,j_eff,mean,se,rhs,margin,verdict", 0) == 0);
    CHECK(row.rfind("\"a,b \"\"quoted\"\"\",thm-3.1,", 0) == 0);
    CHECK(csv_escape("plain") == "plain");
    CHECK(csv_escape("line\nbreak") == "\"line\nbreak\"");
    CHECK(row.find("0.30000000000000004") != std::string::npos);
}

TEST_CASE("jsonl report has 17 significant digits") {
    auto rec = sample_record("y");
    const std::string line = report_jsonl({rec});
    CHECK(std::count(line.begin(), line.end(), '\n') == 1);
    auto j = json::parse(line);
    CHECK(j["mean"].get<double>() == rec.report.mean);
    CHECK(j["se"].get<double>() == rec.report.se);
    CHECK(j["margin"].get<double>() == rec.report.margin);
    CHECK(j["seed"].get<std::uint64_t>() == rec.report.seed);
    CHECK(line.find("\"se\":0.33333333333333331") != std::string::npos);
    CHECK(format_real(0.1) == "0.10000000000000001");
}

TEST_CASE("result store is append only") {
    auto dir = scratch("store");
    ResultStore s(dir.string());
    CHECK(s.load().empty());
    auto rec = sample_record("z");
    s.append(rec);
    s.append(rec);
    auto all = s.load();
    CHECK(all.size() == 2);
    CHECK(all[0].report.mean == rec.report.mean);
    CHECK(fs::exists(dir / "configs" / (rec.digest + ".json")));
    auto clash = rec;
    clash.config["seed"] = 99;
    try {
        s.append(clash);
        FAIL("expected invariant_violation");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::invariant_violation);
    }
    CHECK(s.load().size() == 2);
    fs::remove_all(dir);
}

TEST_CASE("command line exit codes") {
    auto dir = scratch("cli");
    const std::string store = "--store '" + (dir / "store").string() + "'";
    std::string all;
    for (const auto& p : shipped()) all += " '" + p.string() + "'";
    CHECK(shipped().size() >= 6);
    CHECK(cli("run" + all + " " + store + " --threads 2") == 0);
    CHECK(cli("report --format csv " + store, dir / "report.csv") == 0);
    std::istringstream rows(slurp(dir / "report.csv"));
    std::string line;
    int n = 0;
    while (std::getline(rows, line)) ++n;
    CHECK(n == static_cast<int>(shipped().size()) + 1);
    CHECK(cli("report --format jsonl " + store) == 0);
    CHECK(cli("report --format xml " + store) == 2);
    CHECK(cli("report --store '" + (dir / "nothing").string() + "'") == 1);
    CHECK(cli("list-scenarios") == 0);

    const std::string covering = "'" + std::string(WEGNERLAB_SCENARIO_DIR) + "/anderson-covering-thm31.json'";
    CHECK(cli("run " + covering + " --testing-rhs-divisor 1e6 --store '" + (dir / "forced").string() + "'") == 5);
    CHECK(cli("validate " + covering) == 0);

    write(dir / "schema.json", R"({"scenario":"lattice","theorem":"thm-3.1","model":{"d":1,"foo":1},"interval":[0,1],"disorder":{"kind":"uniform","lo":0,"hi":1}})");
    CHECK(cli("validate '" + (dir / "schema.json").string() + "'", dir / "schema.txt") == 2);
    CHECK(slurp(dir / "schema.txt").find("model.foo") != std::string::npos);
    CHECK(cli("run '" + (dir / "schema.json").string() + "' " + store) == 2);

    write(dir / "pre.json", R"({"scenario":"lattice","theorem":"thm-2.4","model":{"d":1},"interval":[-0.5,0.1],"disorder":{"kind":"uniform","lo":-1,"hi":-0.5},"q":0,"boundary":"dirichlet"})");
    CHECK(cli("validate '" + (dir / "pre.json").string() + "'", dir / "pre.txt") == 3);
    CHECK(slurp(dir / "pre.txt").find("E_2 < E_q") != std::string::npos);

    // half-space support with simple boundary and no E_q: no uncertainty principle
    write(dir / "hyp.json", R"({"scenario":"lattice","theorem":"thm-3.1","model":{"d":1,"support":{"kind":"half-space"},"centers":[[5]],"half_side":4},"interval":[1,1.1],"disorder":{"kind":"uniform","lo":0,"hi":1},"samples":20})");
    CHECK(cli("run '" + (dir / "hyp.json").string() + "' --store '" + (dir / "hyp").string() + "'") == 4);
    fs::remove_all(dir);
}

TEST_CASE("same run twice gives identical records apart from timestamps") {
    auto dir = scratch("twice");
    const std::string cfg = "'" + std::string(WEGNERLAB_SCENARIO_DIR) + "/anderson-2d-markov-thm22.json'";
    const std::string store = "--store '" + dir.string() + "'";
    CHECK(cli("run " + cfg + " --samples 300 --seed 9 --threads 1 " + store) == 0);
    CHECK(cli("run " + cfg + " --samples 300 --seed 9 --threads 3 " + store) == 0);
    auto recs = ResultStore(dir.string()).load();
    REQUIRE(recs.size() == 2);
    auto a = record_to_json(recs[0]), b = record_to_json(recs[1]);
    for (auto* j : {&a, &b}) {
        j->erase("started");
        j->erase("finished");
    }
    CHECK(a.dump() == b.dump());
    CHECK(recs[0].report.seed == 9);
    CHECK(recs[0].report.samples == 300);
    fs::remove_all(dir);
}
