// Command-line surface for building, expanding and auditing synthetic
// rating datasets. Subcommands: ingest, reduce, expand, stats, sample,
// verify. Exit codes: 0 success, 1 usage error, 2 data error,
// 3 verification failure.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "kronex/checksum.hpp"
#include "kronex/error.hpp"
#include "kronex/expand.hpp"
#include "kronex/io.hpp"
#include "kronex/ratings.hpp"
#include "kronex/reduce.hpp"
#include "kronex/stats.hpp"
#include "kronex/svd.hpp"

namespace fs = std::filesystem;
using namespace kronex;

namespace {

struct IngestArgs {
    std::string input, output, report;
};

void cmd_ingest(const IngestArgs& args) {
    const RawRatings raw = read_movielens_csv(args.input);
    const CenterResult res = center_and_rescale(raw);
    write_sparse(args.output, res.matrix, res.scale);

    auto write_map = [](const fs::path& path, const std::vector<std::int64_t>& ids) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open " + path.string());
        for (std::size_t i = 0; i < ids.size(); ++i) out << i << '\t' << ids[i] << '\n';
        if (!out) throw IoError("write failed for " + path.string());
    };
    write_map(args.output + ".users.tsv", res.user_ids);
    write_map(args.output + ".items.tsv", res.item_ids);

    nlohmann::ordered_json report;
    report["input"] = args.input;
    report["users"] = res.matrix.n_rows();
    report["items"] = res.matrix.n_cols();
    report["nnz"] = res.matrix.nnz();
    report["global_mean"] = res.scale.global_mean;
    report["divisor"] = res.scale.divisor;
    report["dropped_at_mean"] = res.dropped_at_mean;
    const std::string report_path = args.report.empty() ? args.output + ".json" : args.report;
    std::ofstream out(report_path, std::ios::binary);
    if (!out) throw IoError("cannot open " + report_path);
    out << report.dump(2) << '\n';

    std::cout << "ingested " << res.matrix.n_rows() << " users x " << res.matrix.n_cols()
              << " items, " << res.matrix.nnz() << " interactions\n"
              << "global mean " << format_double(res.scale.global_mean) << ", divisor "
              << format_double(res.scale.divisor) << ", dropped at mean "
              << res.dropped_at_mean << "\n"
              << "wrote " << args.output << "\n";
}

struct ReduceArgs {
    std::string input, output;
    std::int64_t rows = 0, cols = 0;
    std::uint64_t seed = 0;
    double tol = 1e-6;
    int max_iter = 300;
};

void cmd_reduce(const ReduceArgs& args) {
    const SparseFile f = read_sparse(args.input);
    SvdOptions svd;
    svd.seed = args.seed;
    svd.tol = args.tol;
    svd.max_iter = args.max_iter;
    const ReducedMatrix reduced = reduce(f.matrix, args.rows, args.cols, svd);
    write_reduced(args.output, reduced);

    nlohmann::ordered_json sidecar;
    sidecar["input"] = args.input;
    sidecar["rows"] = args.rows;
    sidecar["cols"] = args.cols;
    sidecar["k"] = reduced.k;
    sidecar["seed"] = args.seed;
    sidecar["tol"] = args.tol;
    sidecar["max_iter"] = args.max_iter;
    sidecar["rescale_min"] = reduced.rescale_min;
    sidecar["rescale_max"] = reduced.rescale_max;
    std::ofstream out(args.output + ".json", std::ios::binary);
    if (!out) throw IoError("cannot open " + args.output + ".json");
    out << sidecar.dump(2) << '\n';

    std::cout << "reduced " << reduced.source_rows << "x" << reduced.source_cols
              << " to " << args.rows << "x" << args.cols << " at rank " << reduced.k
              << "\nwrote " << args.output << "\n";
}

struct ExpandArgs {
    std::string reduced, base, out_dir;
    std::string variant = "plain";
    std::uint64_t seed = 0;
    int workers = 1;
    bool dry_run = false;
    std::int64_t sketch_rows = 0, sketch_cols = 0;
};

void cmd_expand(const ExpandArgs& args) {
    const ReducedMatrix reduced = read_reduced(args.reduced);

    ExpansionPlan plan;
    plan.variant = variant_from_string(args.variant);
    plan.master_seed = args.seed;
    plan.workers = args.workers;
    plan.dry_run = args.dry_run;
    plan.sketch = {args.sketch_rows, args.sketch_cols};
    plan.reduced_path = args.reduced;
    plan.base_path = args.base;
    plan.reduced = &reduced;

    Manifest manifest;
    if (args.dry_run && plan.variant != Variant::sketch) {
        // Dry runs only need the base header, so arbitrarily large bases
        // can be planned without their data.
        const SparseHeader h = read_sparse_header(args.base);
        plan.scale = h.scale;
        manifest = dry_run_manifest(reduced, h.rows, h.cols, h.nnz, plan);
        DirectoryShardSink sink(args.out_dir);
        sink.write_manifest(manifest_to_json(manifest));
    } else {
        const SparseFile base = read_sparse(args.base);
        plan.base = &base.matrix;
        plan.scale = base.scale;
        DirectoryShardSink sink(args.out_dir);
        manifest = expand(plan, sink);
    }

    std::cout << (manifest.dry_run ? "planned" : "expanded") << " " << manifest.rows
              << " x " << manifest.cols << " with " << manifest.nnz_total
              << " interactions across " << manifest.shards.size() << " shards ("
              << manifest.skipped_zero_blocks << " zero blocks skipped)\n"
              << "manifest " << (fs::path(args.out_dir) / "manifest.json").string()
              << "\n";
}

struct StatsArgs {
    std::string input, out_dir;
    std::string mode = "analytic";
    std::int64_t rank = 0;
    std::uint64_t seed = 0;
    double tol = 1e-6;
    int max_iter = 300;
    std::int64_t memory_budget = std::int64_t{4} << 30;
    std::int64_t sample_count = 0;
    std::int64_t top = 1'000'000;
    bool keep_nonpositive = false;
};

fs::path resolve_near(const fs::path& anchor, const std::string& recorded) {
    const fs::path p(recorded);
    if (p.is_absolute() || fs::exists(p)) return p;
    return anchor.parent_path() / p;
}

std::vector<double> nonzero_spectrum(const DenseMatrix& m) {
    std::vector<double> sigma = singular_values(m);
    const double floor = sigma.empty() ? 0.0 : 1e-12 * sigma.front();
    std::vector<double> out;
    for (double v : sigma)
        if (v > floor) out.push_back(v);
    return out;
}

StatReport stats_for_matrix(const SparseFile& f, const StatsArgs& args) {
    StatReport report;
    report.source = "original";
    report.row_sums = f.matrix.row_sums();
    report.col_sums = f.matrix.col_sums();
    if (args.rank > 0) {
        SvdOptions svd{args.tol, args.max_iter, args.seed, 8};
        const std::int64_t k =
            std::min(args.rank, std::min(f.matrix.n_rows(), f.matrix.n_cols()));
        const SvdTriplet t = truncated_svd(f.matrix, k, svd);
        report.singular_values.assign(t.sigma.data(), t.sigma.data() + t.sigma.size());
        report.spectrum_truncated = k < std::min(f.matrix.n_rows(), f.matrix.n_cols());
    }
    std::sort(report.row_sums.begin(), report.row_sums.end(), std::greater<>());
    std::sort(report.col_sums.begin(), report.col_sums.end(), std::greater<>());
    return report;
}

StatReport stats_for_reduced(const ReducedMatrix& r) {
    StatReport report;
    report.source = "reduced";
    for (std::int64_t i = 0; i < r.matrix.rows(); ++i)
        report.row_sums.push_back(r.matrix.row(i).sum());
    for (std::int64_t j = 0; j < r.matrix.cols(); ++j)
        report.col_sums.push_back(r.matrix.col(j).sum());
    report.singular_values = nonzero_spectrum(r.matrix);
    std::sort(report.row_sums.begin(), report.row_sums.end(), std::greater<>());
    std::sort(report.col_sums.begin(), report.col_sums.end(), std::greater<>());
    return report;
}

StatReport stats_analytic(const fs::path& manifest_path, const Manifest& manifest,
                          const StatsArgs& args) {
    const ReducedMatrix reduced =
        read_reduced(resolve_near(manifest_path, manifest.reduced_path));
    const SparseFile base =
        read_sparse(resolve_near(manifest_path, manifest.base_path));

    StatReport report;
    report.source = "analytic-expanded";

    std::vector<double> red_rows, red_cols;
    for (std::int64_t i = 0; i < reduced.matrix.rows(); ++i)
        red_rows.push_back(reduced.matrix.row(i).sum());
    for (std::int64_t j = 0; j < reduced.matrix.cols(); ++j)
        red_cols.push_back(reduced.matrix.col(j).sum());
    const std::vector<double> base_rows = base.matrix.row_sums();
    const std::vector<double> base_cols = base.matrix.col_sums();

    const auto combine = [&](const std::vector<double>& a, const std::vector<double>& b) {
        const std::int64_t total =
            static_cast<std::int64_t>(a.size()) * static_cast<std::int64_t>(b.size());
        if (total > kMinkowskiGuard) return minkowski_top_n(a, b, args.top);
        std::vector<double> full = minkowski_product(a, b);
        std::sort(full.begin(), full.end(), std::greater<>());
        return full;
    };
    report.row_sums = combine(red_rows, base_rows);
    report.col_sums = combine(red_cols, base_cols);

    if (args.rank > 0) {
        SvdOptions svd{args.tol, args.max_iter, args.seed, 8};
        const std::int64_t mindim = std::min(base.matrix.n_rows(), base.matrix.n_cols());
        const std::int64_t k = std::min(args.rank, mindim);
        const SvdTriplet t = truncated_svd(base.matrix, k, svd);
        // Numerically-zero values would drag the certificate bound to zero;
        // dropping them only shrinks the certified prefix.
        std::vector<double> sigma_base;
        for (std::int64_t i = 0; i < t.sigma.size(); ++i)
            if (t.sigma(i) > 1e-12 * t.sigma(0)) sigma_base.push_back(t.sigma(i));
        const SpectrumPrediction pred = predict_expanded_spectrum(
            nonzero_spectrum(reduced.matrix), sigma_base, k == mindim);
        report.singular_values = pred.values;
        report.spectrum_truncated = pred.truncated;
        report.spectrum_certified = pred.certified;
    }

    if (args.sample_count > 0)
        report.rating_values = sample_expanded_ratings(reduced.matrix, base.matrix,
                                                       args.sample_count, args.seed);
    return report;
}

void cmd_stats(const StatsArgs& args) {
    const fs::path input(args.input);
    StatReport report;
    switch (detect_artifact(input)) {
        case ArtifactKind::sparse:
            report = stats_for_matrix(read_sparse(input), args);
            break;
        case ArtifactKind::reduced:
            report = stats_for_reduced(read_reduced(input));
            break;
        case ArtifactKind::manifest: {
            const Manifest manifest = read_manifest(input);
            if (args.mode == "analytic") {
                report = stats_analytic(input, manifest, args);
            } else {
                EmpiricalOptions opts;
                opts.svd_rank = args.rank;
                opts.svd = SvdOptions{args.tol, args.max_iter, args.seed, 8};
                opts.memory_budget = args.memory_budget;
                report = empirical_stats(input.parent_path(), opts);
            }
            break;
        }
        default:
            throw DataError(args.input + ": unrecognized artifact");
    }

    write_stat_report(args.out_dir, report, !args.keep_nonpositive);
    std::cout << "stats (" << report.source << "): " << report.row_sums.size()
              << " row sums, " << report.col_sums.size() << " col sums";
    if (!report.singular_values.empty()) {
        std::cout << ", " << report.singular_values.size() << " singular values";
        if (report.spectrum_certified >= 0)
            std::cout << " (certified prefix " << report.spectrum_certified << ")";
    }
    std::cout << "\nwrote " << args.out_dir << "\n";
}

struct SampleArgs {
    std::string reduced, base, output;
    std::int64_t count = 0;
    std::uint64_t seed = 0;
};

void cmd_sample(const SampleArgs& args) {
    const ReducedMatrix reduced = read_reduced(args.reduced);
    const SparseFile base = read_sparse(args.base);
    const std::vector<double> samples =
        sample_expanded_ratings(reduced.matrix, base.matrix, args.count, args.seed);
    const RankedTable table = ranked_report(samples, false);
    std::ofstream out(args.output, std::ios::binary);
    if (!out) throw IoError("cannot open " + args.output);
    for (const auto& [rank, value] : table.rows)
        out << rank << '\t' << format_double(value) << '\n';
    if (!out) throw IoError("write failed for " + args.output);
    std::cout << "sampled " << args.count << " ratings (seed " << args.seed
              << ")\nwrote " << args.output << "\n";
}

struct VerifyArgs {
    std::string manifest;
    std::int64_t memory_budget = std::int64_t{4} << 30;
};

void cmd_verify(const VerifyArgs& args) {
    const fs::path manifest_path(args.manifest);
    const Manifest manifest = read_manifest(manifest_path);
    const fs::path dir = manifest_path.parent_path();
    if (manifest.dry_run)
        throw DataError("manifest is a dry-run plan; there is nothing to verify");

    std::vector<std::string> failures;
    if (!manifest.complete) failures.push_back("manifest flagged incomplete");

    std::int64_t total = 0;
    for (const ShardInfo& s : manifest.shards) {
        std::ifstream in(dir / s.name, std::ios::binary);
        if (!in) {
            failures.push_back("missing shard " + s.name);
            continue;
        }
        std::stringstream ss;
        ss << in.rdbuf();
        const std::string bytes = ss.str();
        const std::uint64_t checksum = fnv1a64(bytes);
        std::int64_t nnz = 0;
        bool in_line = false;
        for (char c : bytes) {
            if (c == '\n')
                in_line = false;
            else if (!in_line) {
                in_line = true;
                ++nnz;
            }
        }
        if (checksum != s.checksum)
            failures.push_back("checksum mismatch for " + s.name);
        else
            std::cout << "ok checksum " << s.name << "\n";
        if (nnz != s.nnz)
            failures.push_back("count mismatch for " + s.name + ": found " +
                               std::to_string(nnz) + ", manifest says " +
                               std::to_string(s.nnz));
        total += nnz;
    }
    if (total != manifest.nnz_total)
        failures.push_back("total count mismatch: shards hold " + std::to_string(total) +
                           ", manifest says " + std::to_string(manifest.nnz_total));
    else
        std::cout << "ok total count " << total << "\n";

    // Marginal-sum identity, plain variant only (shuffle moves marginals by
    // design and sketch has no closed form).
    const std::int64_t accum_bytes = (manifest.rows + manifest.cols) * 8;
    const fs::path reduced_path = resolve_near(manifest_path, manifest.reduced_path);
    const fs::path base_path = resolve_near(manifest_path, manifest.base_path);
    if (failures.empty() && manifest.variant == Variant::plain &&
        accum_bytes <= args.memory_budget && fs::exists(reduced_path) &&
        fs::exists(base_path)) {
        EmpiricalOptions opts;
        opts.memory_budget = args.memory_budget;
        const StatReport emp = empirical_stats(dir, opts);
        const ReducedMatrix reduced = read_reduced(reduced_path);
        const SparseFile base = read_sparse(base_path);
        SumPrediction pred = predict_expanded_sums(reduced.matrix, base.matrix);
        std::sort(pred.row_sums.begin(), pred.row_sums.end(), std::greater<>());
        std::sort(pred.col_sums.begin(), pred.col_sums.end(), std::greater<>());
        auto close = [](const std::vector<double>& a, const std::vector<double>& b) {
            if (a.size() != b.size()) return false;
            for (std::size_t i = 0; i < a.size(); ++i)
                if (std::abs(a[i] - b[i]) > 1e-9) return false;
            return true;
        };
        if (!close(emp.row_sums, pred.row_sums))
            failures.push_back("row sums diverge from the analytic prediction");
        else
            std::cout << "ok row sums match prediction\n";
        if (!close(emp.col_sums, pred.col_sums))
            failures.push_back("col sums diverge from the analytic prediction");
        else
            std::cout << "ok col sums match prediction\n";
    } else if (failures.empty()) {
        std::cout << "skip sum identity ("
                  << (manifest.variant != Variant::plain ? "non-plain variant"
                      : accum_bytes > args.memory_budget ? "over memory budget"
                                                         : "inputs unavailable")
                  << ")\n";
    }

    if (!failures.empty()) {
        std::string joined;
        for (const std::string& f : failures) joined += "\n  " + f;
        throw VerificationError("verification failed:" + joined);
    }
    std::cout << "verification passed\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fractal expansion of sparse rating datasets"};
    app.require_subcommand(1);

    IngestArgs ingest;
    CLI::App* ingest_cmd =
        app.add_subcommand("ingest", "Read a ratings CSV into a centered sparse matrix");
    ingest_cmd->add_option("--input", ingest.input, "ratings CSV")->required();
    ingest_cmd->add_option("--output", ingest.output, "output matrix file")->required();
    ingest_cmd->add_option("--report", ingest.report, "report JSON path");

    ReduceArgs reduce_args;
    CLI::App* reduce_cmd =
        app.add_subcommand("reduce", "Build a small dense surrogate of a sparse matrix");
    reduce_cmd->add_option("--input", reduce_args.input, "sparse matrix file")->required();
    reduce_cmd->add_option("--rows", reduce_args.rows, "target rows")->required();
    reduce_cmd->add_option("--cols", reduce_args.cols, "target cols")->required();
    reduce_cmd->add_option("--output", reduce_args.output, "output file")->required();
    reduce_cmd->add_option("--seed", reduce_args.seed, "solver seed");
    reduce_cmd->add_option("--tol", reduce_args.tol, "solver residual tolerance");
    reduce_cmd->add_option("--max-iter", reduce_args.max_iter, "solver iteration budget");

    ExpandArgs expand_args;
    CLI::App* expand_cmd =
        app.add_subcommand("expand", "Stream the block expansion to sharded CSV");
    expand_cmd->add_option("--reduced", expand_args.reduced, "reduced matrix file")->required();
    expand_cmd->add_option("--base", expand_args.base, "base sparse matrix file")->required();
    expand_cmd->add_option("--out-dir", expand_args.out_dir, "output directory")->required();
    expand_cmd->add_option("--variant", expand_args.variant, "plain | shuffle | sketch");
    expand_cmd->add_option("--seed", expand_args.seed, "master seed");
    expand_cmd->add_option("--workers", expand_args.workers, "worker threads");
    expand_cmd->add_flag("--dry-run", expand_args.dry_run, "write only the manifest");
    expand_cmd->add_option("--sketch-rows", expand_args.sketch_rows, "sketch block rows");
    expand_cmd->add_option("--sketch-cols", expand_args.sketch_cols, "sketch block cols");

    StatsArgs stats_args;
    CLI::App* stats_cmd =
        app.add_subcommand("stats", "Ranked marginal and spectral statistics");
    stats_cmd->add_option("--input", stats_args.input,
                          "matrix, reduced matrix or manifest")->required();
    stats_cmd->add_option("--out-dir", stats_args.out_dir, "report directory")->required();
    stats_cmd->add_option("--mode", stats_args.mode, "analytic | empirical (manifests)")
        ->check(CLI::IsMember({"analytic", "empirical"}));
    stats_cmd->add_option("--rank", stats_args.rank, "singular values to compute");
    stats_cmd->add_option("--seed", stats_args.seed, "solver / sampler seed");
    stats_cmd->add_option("--tol", stats_args.tol, "solver residual tolerance");
    stats_cmd->add_option("--max-iter", stats_args.max_iter, "solver iteration budget");
    stats_cmd->add_option("--memory-budget", stats_args.memory_budget,
                          "empirical-mode memory budget, bytes");
    stats_cmd->add_option("--sample-count", stats_args.sample_count,
                          "also sample this many ratings (analytic mode)");
    stats_cmd->add_option("--top", stats_args.top,
                          "ranked values kept when sums overflow the guard");
    stats_cmd->add_flag("--keep-nonpositive", stats_args.keep_nonpositive,
                        "keep non-positive sums in the tables");

    SampleArgs sample_args;
    CLI::App* sample_cmd =
        app.add_subcommand("sample", "Sample ratings of the expansion without building it");
    sample_cmd->add_option("--reduced", sample_args.reduced, "reduced matrix file")->required();
    sample_cmd->add_option("--base", sample_args.base, "base sparse matrix file")->required();
    sample_cmd->add_option("--count", sample_args.count, "number of draws")->required();
    sample_cmd->add_option("--seed", sample_args.seed, "sampler seed");
    sample_cmd->add_option("--output", sample_args.output, "output TSV")->required();

    VerifyArgs verify_args;
    CLI::App* verify_cmd =
        app.add_subcommand("verify", "Re-check checksums, counts and sum identities");
    verify_cmd->add_option("--manifest", verify_args.manifest, "manifest.json path")->required();
    verify_cmd->add_option("--memory-budget", verify_args.memory_budget,
                           "memory budget for the sum identity, bytes");

    try {
        app.parse(argc, argv);
        if (app.got_subcommand(ingest_cmd)) cmd_ingest(ingest);
        if (app.got_subcommand(reduce_cmd)) cmd_reduce(reduce_args);
        if (app.got_subcommand(expand_cmd)) cmd_expand(expand_args);
        if (app.got_subcommand(stats_cmd)) cmd_stats(stats_args);
        if (app.got_subcommand(sample_cmd)) cmd_sample(sample_args);
        if (app.got_subcommand(verify_cmd)) cmd_verify(verify_args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const VerificationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
