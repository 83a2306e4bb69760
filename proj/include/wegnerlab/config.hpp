#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "wegnerlab/verify.hpp"

namespace wegnerlab {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.3.0";

// Parse with defaults applied. Schema problems throw schema_violation with the field path in the message;
// theorem preconditions are left to ExperimentConfig::validate().
ExperimentConfig parse_config(const json& j);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Fully resolved form; dumping it is the canonical serialization.
json config_to_json(const ExperimentConfig& c);
std::string canonical_config(const ExperimentConfig& c);
// FNV-1a 64 of the canonical bytes, 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);
std::string config_digest(const ExperimentConfig& c);

json report_to_json(const BoundReport& r);
BoundReport report_from_json(const json& j);

struct RunRecord {
    std::string digest;
    json config;
    BoundReport report;
    std::string started;
    std::string finished;
    std::string version = kToolVersion;
};
json record_to_json(const RunRecord& r);
RunRecord record_from_json(const json& j);

// Directory holding records.jsonl (one record per line, append only) and configs/<digest>.json.
class ResultStore {
public:
    explicit ResultStore(std::string dir);
    // Throws invariant_violation if the digest is already stored with different config bytes.
    void append(const RunRecord& r);
    std::vector<RunRecord> load() const;
    const std::string& dir() const { return dir_; }

private:
    std::string dir_;
};

// Report table: scenario, theorem, |I|, s_F, gamma, K or dim, |I_F|, |J_eff|, mean, SE, rhs, margin, verdict,
// vacuous, seed.
std::vector<std::string> report_columns();
std::string csv_escape(const std::string& field);
std::string format_real(double x);  // %.17g, with inf/nan spelled out
std::string report_csv(const std::vector<RunRecord>& records);
std::string report_jsonl(const std::vector<RunRecord>& records);

std::string utc_timestamp();

}  // namespace wegnerlab
