#pragma once

#include "finslab/bench.hpp"
#include "finslab/core.hpp"
#include "finslab/operators.hpp"
#include "finslab/table.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace finslab {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

std::string sha256_hex(std::string_view data);

/// Header row plus data rows, comma separated, "\n" line ends. Cells holding a
/// comma, quote or newline are quoted.
std::string csv_text(const Table& t);

/// $FINSLAB_OUTPUT_ROOT, or ./finslab_out when unset or empty.
std::filesystem::path default_output_root();

/// Parses a JSON configuration file (ConfigError on failure).
Json load_config(const std::filesystem::path& path);
/// Applies "a.b=value"; the value is read as JSON when it parses, else as a string.
void apply_override(Json& config, const std::string& assignment);

/// {"name": ..., "generators": [[...], ...]}.
PolyhedralNorm load_norm_file(const std::filesystem::path& path);
/// Built-in name or path to a norm file.
PolyhedralNorm resolve_norm(const std::string& spec, int dim);
/// {"name": ..., "edges": [[...], ...]}.
EdgeSet load_edge_file(const std::filesystem::path& path);
EdgeSet resolve_edges(const std::string& spec);

/// Hash of the report name and its sorted configuration echo.
std::string config_hash(const BenchReport& r);
/// One row per check: report, check, value, tolerance, pass, config_hash.
Table summary_table(const std::vector<BenchReport>& reports);

/// Writes the files of one run into `dir` and, once, its manifest.json.
class RunRecorder {
public:
    RunRecorder(std::filesystem::path dir, std::string command, Json config);

    const std::filesystem::path& dir() const { return dir_; }
    /// Writes name (relative to dir) and returns its SHA-256.
    std::string write_csv(const std::string& name, const Table& t);
    void add_timing(const std::string& what, double seconds);
    const std::vector<std::pair<std::string, std::string>>& outputs() const { return outputs_; }
    void write_manifest(int exit_code);

private:
    std::filesystem::path dir_;
    std::string command_;
    Json config_;
    std::vector<std::pair<std::string, std::string>> outputs_;  // file, sha256
    std::vector<std::uint64_t> sizes_;
    Json timings_ = Json::object();
    bool written_ = false;
};

}  // namespace finslab
