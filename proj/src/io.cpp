#include "kronex/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "kronex/error.hpp"

namespace kronex {

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw DataError("format_double failed");
    return {buf, ptr};
}

double parse_double(std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
        throw DataError("bad decimal value '" + std::string(s) + "'");
    return v;
}

namespace {

constexpr std::string_view kSparseMagic = "kronex-sparse 1";
constexpr std::string_view kReducedMagic = "kronex-reduced 1";

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

std::string next_line(std::istream& in, const std::filesystem::path& path) {
    std::string line;
    if (!std::getline(in, line))
        throw DataError(path.string() + ": truncated file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && s[i] == ' ') ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

std::int64_t parse_i64(std::string_view s, const std::filesystem::path& path) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
        throw DataError(path.string() + ": bad integer '" + std::string(s) + "'");
    return v;
}

}  // namespace

void write_sparse(const std::filesystem::path& path, const SparseInteractions& m,
                  const RatingScale& scale) {
    std::ofstream out = open_out(path);
    out << kSparseMagic << '\n'
        << m.n_rows() << ' ' << m.n_cols() << ' ' << m.nnz() << '\n'
        << format_double(scale.global_mean) << ' ' << format_double(scale.divisor)
        << '\n';
    std::string buf;
    buf.reserve(1 << 20);
    for (std::int64_t i = 0; i < m.n_rows(); ++i) {
        auto cols = m.row_cols(i);
        auto vals = m.row_values(i);
        for (std::size_t t = 0; t < cols.size(); ++t) {
            buf += std::to_string(i);
            buf += ' ';
            buf += std::to_string(cols[t]);
            buf += ' ';
            buf += format_double(vals[t]);
            buf += '\n';
            if (buf.size() > (1 << 20)) {
                out << buf;
                buf.clear();
            }
        }
    }
    out << buf;
    if (!out) throw IoError("write failed for " + path.string());
}

namespace {

SparseHeader read_sparse_header_stream(std::istream& in,
                                       const std::filesystem::path& path) {
    if (next_line(in, path) != kSparseMagic)
        throw DataError(path.string() + ": not a kronex-sparse file");
    SparseHeader h;
    const std::string dims_line = next_line(in, path);
    auto dims = split_ws(dims_line);
    if (dims.size() != 3) throw DataError(path.string() + ": bad dims line");
    h.rows = parse_i64(dims[0], path);
    h.cols = parse_i64(dims[1], path);
    h.nnz = parse_i64(dims[2], path);
    const std::string scale_line = next_line(in, path);
    auto sc = split_ws(scale_line);
    if (sc.size() != 2) throw DataError(path.string() + ": bad scale line");
    h.scale.global_mean = parse_double(sc[0]);
    h.scale.divisor = parse_double(sc[1]);
    return h;
}

}  // namespace

SparseHeader read_sparse_header(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    return read_sparse_header_stream(in, path);
}

SparseFile read_sparse(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    const SparseHeader h = read_sparse_header_stream(in, path);
    std::vector<Entry> entries;
    entries.reserve(static_cast<std::size_t>(h.nnz));
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto f = split_ws(line);
        if (f.size() != 3) throw DataError(path.string() + ": bad entry line '" + line + "'");
        entries.push_back({parse_i64(f[0], path), parse_i64(f[1], path), parse_double(f[2])});
    }
    if (static_cast<std::int64_t>(entries.size()) != h.nnz)
        throw DataError(path.string() + ": header claims " + std::to_string(h.nnz) +
                        " entries, found " + std::to_string(entries.size()));
    return SparseFile{SparseInteractions(h.rows, h.cols, std::move(entries)), h.scale};
}

void write_reduced(const std::filesystem::path& path, const ReducedMatrix& r) {
    std::ofstream out = open_out(path);
    out << kReducedMagic << '\n'
        << r.matrix.rows() << ' ' << r.matrix.cols() << '\n'
        << r.k << ' ' << r.source_rows << ' ' << r.source_cols << ' ' << r.resize_method
        << ' ' << format_double(r.rescale_min) << ' ' << format_double(r.rescale_max)
        << '\n';
    for (std::int64_t i = 0; i < r.matrix.rows(); ++i) {
        for (std::int64_t j = 0; j < r.matrix.cols(); ++j) {
            if (j) out << ' ';
            out << format_double(r.matrix(i, j));
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

ReducedMatrix read_reduced(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    if (next_line(in, path) != kReducedMagic)
        throw DataError(path.string() + ": not a kronex-reduced file");
    ReducedMatrix r;
    const std::string dims_line = next_line(in, path);
    auto dims = split_ws(dims_line);
    if (dims.size() != 2) throw DataError(path.string() + ": bad dims line");
    const std::int64_t rows = parse_i64(dims[0], path);
    const std::int64_t cols = parse_i64(dims[1], path);
    if (rows < 1 || cols < 1) throw DataError(path.string() + ": bad dims");
    const std::string prov_line = next_line(in, path);
    auto prov = split_ws(prov_line);
    if (prov.size() != 6) throw DataError(path.string() + ": bad provenance line");
    r.k = parse_i64(prov[0], path);
    r.source_rows = parse_i64(prov[1], path);
    r.source_cols = parse_i64(prov[2], path);
    r.resize_method = std::string(prov[3]);
    r.rescale_min = parse_double(prov[4]);
    r.rescale_max = parse_double(prov[5]);
    r.matrix.resize(rows, cols);
    for (std::int64_t i = 0; i < rows; ++i) {
        const std::string row_line = next_line(in, path);
        auto f = split_ws(row_line);
        if (static_cast<std::int64_t>(f.size()) != cols)
            throw DataError(path.string() + ": row " + std::to_string(i) + " has " +
                            std::to_string(f.size()) + " values, expected " +
                            std::to_string(cols));
        for (std::int64_t j = 0; j < cols; ++j) {
            const double v = parse_double(f[j]);
            if (!(v >= -1.0 && v <= 1.0))
                throw DataError(path.string() + ": value " + std::string(f[j]) +
                                " outside [-1, 1]");
            r.matrix(i, j) = v;
        }
    }
    return r;
}

namespace {

std::string hex64(std::uint64_t v) {
    char buf[19] = "0x";
    static const char* digits = "0123456789abcdef";
    for (int i = 0; i < 16; ++i)
        buf[2 + i] = digits[(v >> (60 - 4 * i)) & 0xF];
    return {buf, 18};
}

std::uint64_t parse_hex64(const std::string& s) {
    if (s.size() != 18 || s[0] != '0' || s[1] != 'x')
        throw DataError("bad checksum '" + s + "'");
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data() + 2, s.data() + 18, v, 16);
    if (ec != std::errc{} || ptr != s.data() + 18)
        throw DataError("bad checksum '" + s + "'");
    return v;
}

}  // namespace

std::string manifest_to_json(const Manifest& m) {
    nlohmann::ordered_json j;
    j["format"] = "kronex-manifest";
    j["version"] = m.version;
    j["variant"] = to_string(m.variant);
    j["master_seed"] = m.master_seed;
    j["dims"] = {{"rows", m.rows}, {"cols", m.cols}};
    j["nnz_total"] = m.nnz_total;
    j["block_dims"] = {{"reduced_rows", m.reduced_rows},
                       {"reduced_cols", m.reduced_cols},
                       {"base_rows", m.base_rows},
                       {"base_cols", m.base_cols}};
    j["base_nnz"] = m.base_nnz;
    if (m.variant == Variant::sketch)
        j["sketch_dims"] = {{"rows", m.sketch.rows}, {"cols", m.sketch.cols}};
    j["rating_scale"] = {{"mean", m.scale.global_mean}, {"divisor", m.scale.divisor}};
    j["prng"] = {{"mixer", "splitmix64-2round"},
                 {"constants", {hex64(kMixGamma), hex64(kMixMul1), hex64(kMixMul2),
                                hex64(kMixColSalt)}}};
    j["inputs"] = {{"reduced", m.reduced_path}, {"base", m.base_path}};
    j["dry_run"] = m.dry_run;
    j["complete"] = m.complete;
    j["skipped_zero_blocks"] = m.skipped_zero_blocks;
    nlohmann::ordered_json shards = nlohmann::ordered_json::array();
    for (const ShardInfo& s : m.shards) {
        nlohmann::ordered_json e;
        e["name"] = s.name;
        e["nnz"] = s.nnz;
        e["checksum"] = hex64(s.checksum);
        e["complete"] = s.complete;
        shards.push_back(std::move(e));
    }
    j["shards"] = std::move(shards);
    if (m.variant == Variant::sketch) {
        nlohmann::ordered_json seeds = nlohmann::ordered_json::array();
        for (const auto& row : m.sketch_block_seeds) {
            nlohmann::ordered_json r = nlohmann::ordered_json::array();
            for (std::uint64_t s : row) r.push_back(hex64(s));
            seeds.push_back(std::move(r));
        }
        j["sketch_block_seeds"] = std::move(seeds);
    }
    return j.dump(2) + "\n";
}

Manifest manifest_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("manifest: invalid JSON: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "kronex-manifest")
            throw DataError("manifest: wrong format tag");
        Manifest m;
        m.version = j.at("version").get<int>();
        m.variant = variant_from_string(j.at("variant").get<std::string>());
        m.master_seed = j.at("master_seed").get<std::uint64_t>();
        m.rows = j.at("dims").at("rows").get<std::int64_t>();
        m.cols = j.at("dims").at("cols").get<std::int64_t>();
        m.nnz_total = j.at("nnz_total").get<std::int64_t>();
        const auto& bd = j.at("block_dims");
        m.reduced_rows = bd.at("reduced_rows").get<std::int64_t>();
        m.reduced_cols = bd.at("reduced_cols").get<std::int64_t>();
        m.base_rows = bd.at("base_rows").get<std::int64_t>();
        m.base_cols = bd.at("base_cols").get<std::int64_t>();
        m.base_nnz = j.at("base_nnz").get<std::int64_t>();
        if (j.contains("sketch_dims")) {
            m.sketch.rows = j["sketch_dims"].at("rows").get<std::int64_t>();
            m.sketch.cols = j["sketch_dims"].at("cols").get<std::int64_t>();
        }
        m.scale.global_mean = j.at("rating_scale").at("mean").get<double>();
        m.scale.divisor = j.at("rating_scale").at("divisor").get<double>();
        m.reduced_path = j.at("inputs").at("reduced").get<std::string>();
        m.base_path = j.at("inputs").at("base").get<std::string>();
        m.dry_run = j.at("dry_run").get<bool>();
        m.complete = j.at("complete").get<bool>();
        m.skipped_zero_blocks = j.at("skipped_zero_blocks").get<std::int64_t>();
        for (const auto& e : j.at("shards")) {
            ShardInfo s;
            s.name = e.at("name").get<std::string>();
            s.nnz = e.at("nnz").get<std::int64_t>();
            s.checksum = parse_hex64(e.at("checksum").get<std::string>());
            s.complete = e.at("complete").get<bool>();
            m.shards.push_back(std::move(s));
        }
        if (j.contains("sketch_block_seeds")) {
            for (const auto& row : j["sketch_block_seeds"]) {
                std::vector<std::uint64_t> r;
                for (const auto& s : row) r.push_back(parse_hex64(s.get<std::string>()));
                m.sketch_block_seeds.push_back(std::move(r));
            }
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("manifest: missing or mistyped field: ") + e.what());
    }
}

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
    std::ofstream out = open_out(path);
    out << manifest_to_json(m);
    if (!out) throw IoError("write failed for " + path.string());
}

Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return manifest_from_json(ss.str());
}

ArtifactKind detect_artifact(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line == kSparseMagic) return ArtifactKind::sparse;
    if (line == kReducedMagic) return ArtifactKind::reduced;
    if (!line.empty() && line[0] == '{') return ArtifactKind::manifest;
    return ArtifactKind::unknown;
}

}  // namespace kronex
