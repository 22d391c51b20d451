#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "kronex/expand.hpp"
#include "kronex/ratings.hpp"
#include "kronex/reduce.hpp"
#include "kronex/sparse.hpp"

namespace kronex {

// Shortest text that round-trips a 64-bit double exactly.
std::string format_double(double v);
double parse_double(std::string_view s);

// Sparse interaction file ("kronex-sparse 1"): dims, nnz and rating scale in
// the header, then one "row col value" line per entry.
void write_sparse(const std::filesystem::path& path, const SparseInteractions& m,
                  const RatingScale& scale);

struct SparseFile {
    SparseInteractions matrix;
    RatingScale scale;
};
SparseFile read_sparse(const std::filesystem::path& path);

// Header only; used by dry runs, which need dims and nnz but no entries.
struct SparseHeader {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::int64_t nnz = 0;
    RatingScale scale;
};
SparseHeader read_sparse_header(const std::filesystem::path& path);

// Reduced matrix file ("kronex-reduced 1"): dims and provenance in the
// header, then row-major values, one matrix row per line.
void write_reduced(const std::filesystem::path& path, const ReducedMatrix& r);
ReducedMatrix read_reduced(const std::filesystem::path& path);

std::string manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const std::string& text);
void write_manifest(const std::filesystem::path& path, const Manifest& m);
Manifest read_manifest(const std::filesystem::path& path);

// First-line sniffing for CLI inputs.
enum class ArtifactKind { sparse, reduced, manifest, unknown };
ArtifactKind detect_artifact(const std::filesystem::path& path);

}  // namespace kronex
