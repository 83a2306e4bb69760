// wegnerlab: run Wegner-estimate experiments from JSON configs and tabulate the stored reports.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "wegnerlab/config.hpp"
#include "wegnerlab/errors.hpp"

#ifndef WEGNERLAB_SCENARIO_DIR
#define WEGNERLAB_SCENARIO_DIR "scenarios"
#endif

using namespace wegnerlab;
namespace fs = std::filesystem;

namespace {

enum Exit { ok = 0, not_all_verified = 1, schema_error = 2, precondition = 3, hypothesis = 4, violated = 5 };

int exit_for(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::schema_violation:
        case ErrorKind::invalid_argument: return schema_error;
        case ErrorKind::hypothesis_failed: return hypothesis;
        default: return precondition;
    }
}

int exit_for(Verdict v) {
    switch (v) {
        case Verdict::verified: return ok;
        case Verdict::inconclusive: return not_all_verified;
        case Verdict::hypothesis_failed: return hypothesis;
        case Verdict::violated: return violated;
    }
    return not_all_verified;
}

// Parse, apply overrides and validate. Returns an exit code, 0 on success.
int load(const std::string& path, std::optional<std::uint64_t> seed, std::optional<long> samples, ExperimentConfig& out) {
    try {
        out = parse_config_file(path);
        if (seed) out.seed = *seed;
        if (samples) out.samples = *samples;
        out.validate();
    } catch (const Error& e) {
        std::fprintf(stderr, "%s: %s: %s\n", path.c_str(), to_string(e.kind()), e.what());
        return exit_for(e);
    }
    return ok;
}

int cmd_run(const std::vector<std::string>& paths, std::optional<std::uint64_t> seed, std::optional<long> samples,
            int threads, const std::string& store_dir, double rhs_divisor) {
    std::vector<ExperimentConfig> cfgs(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i)
        if (int code = load(paths[i], seed, samples, cfgs[i])) return code;
    ResultStore store(store_dir);
    int worst = ok;
    for (std::size_t i = 0; i < cfgs.size(); ++i) {
        auto& cfg = cfgs[i];
        cfg.rhs_scale = 1.0 / rhs_divisor;
        RunRecord rec;
        rec.config = config_to_json(cfg);
        rec.digest = config_digest(cfg);
        rec.started = utc_timestamp();
        try {
            rec.report = run_experiment(cfg, threads);
        } catch (const Error& e) {
            std::fprintf(stderr, "%s: %s: %s\n", paths[i].c_str(), to_string(e.kind()), e.what());
            worst = std::max(worst, exit_for(e));
            continue;
        }
        rec.finished = utc_timestamp();
        rec.report.digest = rec.digest;
        store.append(rec);
        const auto& r = rec.report;
        std::printf("%-17s %s [%s] mean=%.6g se=%.3g rhs=%.6g margin=%.6g%s\n", to_string(r.verdict), cfg.name.c_str(),
                    r.theorem.c_str(), r.mean, r.se, r.rhs, r.margin, r.vacuous ? " vacuous" : "");
        if (!r.note.empty()) std::printf("    note: %s\n", r.note.c_str());
        worst = std::max(worst, exit_for(r.verdict));
    }
    return worst;
}

int cmd_report(const std::string& store_dir, const std::string& format) {
    std::vector<RunRecord> recs;
    try {
        recs = ResultStore(store_dir).load();
    } catch (const Error& e) {
        std::fprintf(stderr, "%s: %s\n", store_dir.c_str(), e.what());
        return schema_error;
    }
    if (recs.empty()) {
        std::fprintf(stderr, "store %s is empty\n", store_dir.c_str());
        return not_all_verified;
    }
    std::cout << (format == "csv" ? report_csv(recs) : report_jsonl(recs));
    return ok;
}

int cmd_list(const std::string& dir) {
    if (!fs::is_directory(dir)) {
        std::fprintf(stderr, "no scenario directory %s\n", dir.c_str());
        return schema_error;
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    int worst = ok;
    for (const auto& f : files) {
        try {
            auto c = parse_config_file(f.string());
            std::printf("%-34s %-24s %-14s %s\n", c.name.c_str(), to_string(c.scenario), to_string(c.theorem),
                        f.string().c_str());
        } catch (const Error& e) {
            std::fprintf(stderr, "%s: %s\n", f.string().c_str(), e.what());
            worst = schema_error;
        }
    }
    return worst;
}

int cmd_validate(const std::string& path, bool canonical) {
    ExperimentConfig c;
    if (int code = load(path, std::nullopt, std::nullopt, c)) return code;
    if (canonical)
        std::cout << canonical_config(c);
    else
        std::printf("ok %s %s\n", config_digest(c).c_str(), c.name.c_str());
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo checks of Wegner estimates for random lattice and quantum graph operators"};
    app.require_subcommand(1);

    std::string store_dir = "wegnerlab-store";

    auto* run = app.add_subcommand("run", "run experiments and append their reports to the store");
    std::vector<std::string> paths;
    std::optional<std::uint64_t> seed;
    std::optional<long> samples;
    int threads = 0;
    double rhs_divisor = 1.0;
    run->add_option("configs", paths, "experiment config files")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", seed, "override the master seed");
    run->add_option("--samples", samples, "override the sample count")->check(CLI::PositiveNumber);
    run->add_option("--threads", threads, "worker threads (default: WEGNERLAB_THREADS, else hardware)")
        ->check(CLI::NonNegativeNumber);
    run->add_option("--store", store_dir, "result store directory");
    run->add_option("--testing-rhs-divisor", rhs_divisor, "divide every rhs by this factor (testing only)")
        ->check(CLI::PositiveNumber)
        ->group("");

    auto* report = app.add_subcommand("report", "print stored reports as a table");
    std::string format = "csv";
    report->add_option("--format", format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
    report->add_option("--store", store_dir, "result store directory");

    auto* list = app.add_subcommand("list-scenarios", "list the shipped scenario configs");
    std::string scen_dir = WEGNERLAB_SCENARIO_DIR;
    list->add_option("--dir", scen_dir, "scenario directory");

    auto* validate = app.add_subcommand("validate", "check a config against the schema and theorem preconditions");
    std::string vpath;
    bool canonical = false;
    validate->add_option("config", vpath, "experiment config file")->required();
    validate->add_flag("--canonical", canonical, "print the canonical serialization");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : schema_error;
    }

    try {
        if (*run) return cmd_run(paths, seed, samples, threads, store_dir, rhs_divisor);
        if (*report) return cmd_report(store_dir, format);
        if (*list) return cmd_list(scen_dir);
        if (*validate) return cmd_validate(vpath, canonical);
    } catch (const Error& e) {
        std::fprintf(stderr, "%s: %s\n", to_string(e.kind()), e.what());
        return exit_for(e);
    }
    return ok;
}
