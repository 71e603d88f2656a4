#include "finslab/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>

namespace finslab {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view data) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
        throw Error("sha256: digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

namespace {

void append_cell(std::string& out, const std::string& cell) {
    if (cell.find_first_of(",\"\n\r") == std::string::npos) {
        out += cell;
        return;
    }
    out += '"';
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
}

void append_row(std::string& out, const std::vector<std::string>& row) {
    for (size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        append_cell(out, row[i]);
    }
    out += '\n';
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json parse_json_file(const fs::path& path) {
    const std::string text = read_file(path);
    try {
        return Json::parse(text);
    } catch (const Json::exception& e) {
        throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

std::vector<Vec> read_vectors(const Json& arr, const std::string& what, const fs::path& path) {
    if (!arr.is_array() || arr.empty()) throw ConfigError(path.string() + ": '" + what + "' must be a non-empty array");
    std::vector<Vec> out;
    for (const Json& row : arr) {
        if (!row.is_array() || row.empty()) throw ConfigError(path.string() + ": each entry of '" + what + "' must be an array");
        Vec v(static_cast<Eigen::Index>(row.size()));
        for (size_t i = 0; i < row.size(); ++i) {
            if (!row[i].is_number()) throw ConfigError(path.string() + ": non-numeric coordinate in '" + what + "'");
            v[static_cast<Eigen::Index>(i)] = row[i].get<double>();
        }
        if (!out.empty() && v.size() != out.front().size())
            throw ConfigError(path.string() + ": entries of '" + what + "' differ in dimension");
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace

std::string csv_text(const Table& t) {
    std::string out;
    append_row(out, t.columns);
    for (const auto& row : t.rows) append_row(out, row);
    return out;
}

fs::path default_output_root() {
    const char* env = std::getenv("FINSLAB_OUTPUT_ROOT");
    if (env && *env) return fs::path(env);
    return fs::path("finslab_out");
}

Json load_config(const fs::path& path) {
    Json j = parse_json_file(path);
    if (!j.is_object()) throw ConfigError("'" + path.string() + "': configuration must be a JSON object");
    return j;
}

void apply_override(Json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    Json value = Json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    Json* node = &config;
    size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("override '" + assignment + "' has an empty key segment");
        if (!node->is_object()) *node = Json::object();
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

PolyhedralNorm load_norm_file(const fs::path& path) {
    const Json j = parse_json_file(path);
    if (!j.is_object() || !j.contains("generators")) throw ConfigError(path.string() + ": missing 'generators'");
    const std::string name = j.value("name", path.stem().string());
    return PolyhedralNorm(read_vectors(j["generators"], "generators", path), name);
}

PolyhedralNorm resolve_norm(const std::string& spec, int dim) {
    if (is_builtin_norm(spec)) return builtin_norm(spec, dim);
    if (fs::exists(spec)) return load_norm_file(spec);
    throw ConfigError("unknown norm '" + spec + "' (not a built-in name or a file)");
}

EdgeSet load_edge_file(const fs::path& path) {
    const Json j = parse_json_file(path);
    if (!j.is_object() || !j.contains("edges")) throw ConfigError(path.string() + ": missing 'edges'");
    return EdgeSet(read_vectors(j["edges"], "edges", path), j.value("name", path.stem().string()));
}

EdgeSet resolve_edges(const std::string& spec) {
    if (fs::exists(spec) && fs::is_regular_file(spec)) return load_edge_file(spec);
    try {
        return builtin_edges(spec);
    } catch (const InputError&) {
        throw ConfigError("unknown edge set '" + spec + "' (not a built-in name or a file)");
    }
}

std::string config_hash(const BenchReport& r) {
    auto cfg = r.config;
    std::sort(cfg.begin(), cfg.end());
    std::string text = r.name + "\n";
    for (const auto& [k, v] : cfg) text += k + "=" + v + "\n";
    return sha256_hex(text);
}

Table summary_table(const std::vector<BenchReport>& reports) {
    Table t;
    t.columns = {"report", "check", "value", "tolerance", "pass", "config_hash"};
    for (const BenchReport& r : reports) {
        const std::string h = config_hash(r);
        for (const Check& c : r.checks)
            t.add_row((RowBuilder() << r.name << c.name << c.value << c.tolerance << c.pass << h).take());
    }
    return t;
}

RunRecorder::RunRecorder(fs::path dir, std::string command, Json config)
    : dir_(std::move(dir)), command_(std::move(command)), config_(std::move(config)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir_.string() + "': " + ec.message());
}

std::string RunRecorder::write_csv(const std::string& name, const Table& t) {
    for (const auto& o : outputs_)
        if (o.first == name) throw InputError("output '" + name + "' written twice");
    const std::string text = csv_text(t);
    const fs::path path = dir_ / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << text;
    if (!out.flush()) throw ConfigError("write failed for '" + path.string() + "'");
    const std::string sha = sha256_hex(text);
    outputs_.emplace_back(name, sha);
    sizes_.push_back(text.size());
    return sha;
}

void RunRecorder::add_timing(const std::string& what, double seconds) { timings_[what] = seconds; }

void RunRecorder::write_manifest(int exit_code) {
    if (written_) throw InputError("manifest already written");
    Json m = Json::object();
    m["command"] = command_;
    m["config"] = config_;
    m["versions"] = {{"finslab", kVersion},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)}};
    Json files = Json::array();
    for (size_t i = 0; i < outputs_.size(); ++i)
        files.push_back({{"file", outputs_[i].first}, {"sha256", outputs_[i].second}, {"bytes", sizes_[i]}});
    m["outputs"] = files;
    m["timings_s"] = timings_;
    m["exit_code"] = exit_code;
    std::ofstream out(dir_ / "manifest.json", std::ios::binary);
    if (!out) throw ConfigError("cannot write manifest in '" + dir_.string() + "'");
    out << m.dump(2) << '\n';
    written_ = true;
}

}  // namespace finslab
