// Command-line front end: offline index construction, online filtering and
// the three benchmark experiments, all emitting CSV reports.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "cbir/bench.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
    std::string corpus;
    std::string layout = "auto";
    std::uint64_t seed = 1;
    std::string features = "0,0;2,0;2,2";
    std::string mode;
    int k = 20;
    int reps = 5;
    bool index_all = false;  // index every image instead of the train half
    bool pooled = false;     // pooled overall row instead of per-query means
    int threads = 0;
    std::string out;
};

cbir::CorpusLayout parse_layout(const std::string& text) {
    if (text == "auto") {
        return cbir::CorpusLayout::Auto;
    }
    if (text == "corel") {
        return cbir::CorpusLayout::CorelFlat;
    }
    return cbir::CorpusLayout::CategoryFolders;
}

cbir::BenchConfig to_config(const CommonOpts& opts) {
    cbir::BenchConfig config;
    config.corpus_root = opts.corpus;
    config.layout = parse_layout(opts.layout);
    config.seed = opts.seed;
    config.features = cbir::parse_feature_list(opts.features);
    config.mode = opts.mode;
    config.k = opts.k;
    config.reps = opts.reps;
    config.train_only = !opts.index_all;
    config.threads = opts.threads;
    config.out_dir = opts.out;
    return config;
}

void add_corpus_options(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--corpus", opts.corpus, "corpus root directory")->required();
    cmd->add_option("--layout", opts.layout, "corpus layout")
        ->check(CLI::IsMember({"auto", "corel", "folders"}));
    cmd->add_option("--features", opts.features, "moment indices, e.g. 0,0;2,0;2,2");
    cmd->add_option("--threads", opts.threads, "worker threads (0 = hardware)");
}

void add_split_options(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--seed", opts.seed, "train/test split seed");
    cmd->add_flag("--index-all", opts.index_all,
                  "index every image instead of the train half");
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path.string());
    }
    return out;
}

fs::path ensure_out_dir(const std::string& dir) {
    if (dir.empty()) {
        throw std::runtime_error("--out is required");
    }
    fs::create_directories(dir);
    return dir;
}

void emit_manifest(const fs::path& out_dir, const CommonOpts& opts,
                   const std::string& command) {
    auto out = open_out(out_dir / "run_manifest.json");
    cbir::write_manifest(out, to_config(opts), command);
}

std::string mode_file_tag(const std::string& label) {
    std::string tag = label;
    for (char& c : tag) {
        if (c == ':') {
            c = '_';
        }
    }
    return tag;
}

int run_extract(const CommonOpts& opts) {
    const fs::path out_dir = ensure_out_dir(opts.out);
    const cbir::Corpus corpus = cbir::load_corpus(opts.corpus, parse_layout(opts.layout));
    const std::vector<cbir::MomentIndex> features = cbir::parse_feature_list(opts.features);

    std::vector<int> all_ids(static_cast<std::size_t>(corpus.size()));
    for (int i = 0; i < corpus.size(); ++i) {
        all_ids[static_cast<std::size_t>(i)] = i + 1;
    }
    const auto rows = cbir::extract_feature_table(corpus, all_ids, features,
                                                  cbir::file_loader(), opts.threads);
    auto out = open_out(out_dir / "features.csv");
    cbir::write_feature_csv(out, features, rows);
    emit_manifest(out_dir, opts, "extract");
    std::cout << "wrote " << (out_dir / "features.csv").string() << " (" << rows.size()
              << " rows)\n";
    return 0;
}

int run_build_index(const CommonOpts& opts) {
    const fs::path out_dir = ensure_out_dir(opts.out);
    const cbir::Corpus corpus = cbir::load_corpus(opts.corpus, parse_layout(opts.layout));
    const cbir::Split split = cbir::make_split(corpus, opts.seed);
    const std::vector<cbir::MomentIndex> features = cbir::parse_feature_list(opts.features);
    const cbir::PrefilterIndex index = cbir::build_index(
        corpus, split, features, cbir::file_loader(), {!opts.index_all, opts.threads});

    const fs::path index_path = out_dir / "index.pzx";
    cbir::save_index(index, index_path);

    // offline statistics summary, one row per channel and category
    auto stats = open_out(out_dir / "index_stats.csv");
    stats << "feature,category_id,lower,upper,center,radius,max_radius\n";
    for (const cbir::FeatureChannelIndex& channel : index.channels) {
        for (const cbir::CategoryStats& s : channel.stats) {
            stats << cbir::feature_label(channel.feature) << ',' << s.category_id << ','
                  << cbir::format_double(s.lower) << ',' << cbir::format_double(s.upper)
                  << ',' << cbir::format_double(s.center) << ','
                  << cbir::format_double(s.radius) << ','
                  << cbir::format_double(channel.max_radius) << '\n';
        }
    }
    emit_manifest(out_dir, opts, "build-index");
    std::cout << "wrote " << index_path.string() << " (" << index.image_features.size()
              << " images, " << index.channels.size() << " channels)\n";
    return 0;
}

struct QueryArgs {
    std::string index_path;
    std::string image_path;
    bool verbose = false;
};

int run_reduce(const CommonOpts& opts, const QueryArgs& args, bool rank) {
    const cbir::PrefilterIndex index = cbir::load_index(args.index_path);
    const cbir::GrayImage image = cbir::load_gray(args.image_path);
    const cbir::FeatureVector query = cbir::extract_features(image, index.features);
    cbir::ModeSpec mode = cbir::parse_mode(opts.mode.empty() ? "all" : opts.mode,
                                           index.channel_count());
    mode.options.diagnostics = args.verbose;
    const cbir::CandidateSet candidates =
        cbir::filter_candidates(query, index, mode.options);

    if (args.verbose) {
        cbir::write_filter_diagnostics(std::cout, index, mode.options, candidates);
    }
    std::cout << "survivors " << candidates.image_ids.size() << "/"
              << index.image_features.size()
              << (candidates.used_fallback ? " (fallback to full set)" : "") << '\n';
    if (!rank) {
        for (int id : candidates.image_ids) {
            std::cout << id << '\n';
        }
        return 0;
    }

    const cbir::RetrievalResult result =
        cbir::retrieve(query, candidates, index, opts.k);
    cbir::write_ranking_csv(std::cout, /*query_id=*/0, result);
    return 0;
}

int run_bench_reduction(const CommonOpts& opts) {
    const fs::path out_dir = ensure_out_dir(opts.out);
    cbir::BenchConfig config = to_config(opts);
    const cbir::Corpus corpus = cbir::load_corpus(config.corpus_root, config.layout);
    const cbir::Split split = cbir::make_split(corpus, config.seed);
    const cbir::PrefilterIndex index =
        cbir::build_index(corpus, split, config.features, cbir::file_loader(),
                          {config.train_only, config.threads});

    std::vector<cbir::ModeSpec> modes;
    if (opts.mode.empty()) {
        modes = cbir::default_mode_sweep(index.channel_count());
    } else {
        modes.push_back(cbir::parse_mode(opts.mode, index.channel_count()));
    }

    for (const cbir::ModeSpec& mode : modes) {
        const cbir::ReductionReport report = cbir::reduction_experiment(
            corpus, split, index, cbir::file_loader(), mode, config.threads);
        const fs::path file = out_dir / ("reduction_" + mode_file_tag(mode.label) + ".csv");
        auto out = open_out(file);
        cbir::write_reduction_csv(out, report, opts.pooled);
        const double all = opts.pooled ? report.pooled_pct_all : report.overall_pct_all;
        const double rel = opts.pooled ? report.pooled_pct_relevant : report.overall_pct_relevant;
        std::cout << mode.label << ": all " << cbir::format_double(all) << "% relevant "
                  << cbir::format_double(rel) << "% -> " << file.string() << '\n';
    }
    emit_manifest(out_dir, opts, "bench-reduction");
    return 0;
}

int run_bench_time(const CommonOpts& opts) {
    const fs::path out_dir = ensure_out_dir(opts.out);
    const cbir::TimingReport report = cbir::run_timing_experiment(to_config(opts));
    {
        auto out = open_out(out_dir / "timing_queries.csv");
        cbir::write_timing_csv(out, report);
    }
    {
        auto out = open_out(out_dir / "timing_summary.csv");
        cbir::write_timing_summary_csv(out, report);
    }
    emit_manifest(out_dir, opts, "bench-time");
    std::cout << "median full " << report.median_full_ns << " ns, reduced "
              << report.median_reduced_ns << " ns, filter overhead "
              << report.median_filter_ns << " ns, survivor fraction "
              << cbir::format_double(report.mean_survivor_fraction) << '\n';
    return 0;
}

int run_bench_precision(const CommonOpts& opts) {
    const fs::path out_dir = ensure_out_dir(opts.out);
    const cbir::PrecisionExperimentReport report =
        cbir::run_precision_experiment(to_config(opts));
    auto out = open_out(out_dir / "precision.csv");
    cbir::write_precision_csv(out, report);
    emit_manifest(out_dir, opts, "bench-precision");
    std::cout << "mean precision full " << cbir::format_double(report.full.mean_precision)
              << ", reduced " << cbir::format_double(report.reduced.mean_precision)
              << ", diff " << cbir::format_double(report.mean_diff_pp) << " pp\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pseudo-Zernike interval prefilter for content-based image retrieval"};
    app.require_subcommand(1);
    app.set_version_flag("--version", cbir::kToolVersion);

    CommonOpts opts;
    QueryArgs query_args;

    CLI::App* extract = app.add_subcommand("extract", "extract features for every image");
    add_corpus_options(extract, opts);
    extract->add_option("--out", opts.out, "output directory")->required();

    CLI::App* build = app.add_subcommand("build-index", "build the offline prefilter index");
    add_corpus_options(build, opts);
    add_split_options(build, opts);
    build->add_option("--out", opts.out, "output directory")->required();

    CLI::App* query = app.add_subcommand("query", "filter and rank against an index");
    query->add_option("--index", query_args.index_path, "index file")->required();
    query->add_option("--image", query_args.image_path, "query image")->required();
    query->add_option("--mode", opts.mode, "single:<i>, all or union");
    query->add_option("--k", opts.k, "retrieval depth");
    query->add_flag("--verbose", query_args.verbose, "per-channel diagnostics");

    CLI::App* reduce = app.add_subcommand("reduce", "filter only; print surviving ids");
    reduce->add_option("--index", query_args.index_path, "index file")->required();
    reduce->add_option("--image", query_args.image_path, "query image")->required();
    reduce->add_option("--mode", opts.mode, "single:<i>, all or union");
    reduce->add_flag("--verbose", query_args.verbose, "per-channel diagnostics");

    CLI::App* bench_reduction =
        app.add_subcommand("bench-reduction", "database-reduction percentages");
    add_corpus_options(bench_reduction, opts);
    add_split_options(bench_reduction, opts);
    bench_reduction->add_option("--mode", opts.mode,
                                "one mode only (default: sweep singles + all)");
    bench_reduction->add_flag("--pooled", opts.pooled,
                              "overall row pools counts instead of averaging "
                              "per-query percentages");
    bench_reduction->add_option("--out", opts.out, "output directory")->required();

    CLI::App* bench_time = app.add_subcommand("bench-time", "ranking time full vs reduced");
    add_corpus_options(bench_time, opts);
    add_split_options(bench_time, opts);
    bench_time->add_option("--mode", opts.mode, "single:<i>, all or union");
    bench_time->add_option("--k", opts.k, "retrieval depth");
    bench_time->add_option("--reps", opts.reps, "timing repetitions per query");
    bench_time->add_option("--out", opts.out, "output directory")->required();

    CLI::App* bench_precision =
        app.add_subcommand("bench-precision", "precision@K full vs reduced");
    add_corpus_options(bench_precision, opts);
    add_split_options(bench_precision, opts);
    bench_precision->add_option("--mode", opts.mode, "single:<i>, all or union");
    bench_precision->add_option("--k", opts.k, "retrieval depth");
    bench_precision->add_option("--out", opts.out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (extract->parsed()) {
            return run_extract(opts);
        }
        if (build->parsed()) {
            return run_build_index(opts);
        }
        if (query->parsed()) {
            return run_reduce(opts, query_args, /*rank=*/true);
        }
        if (reduce->parsed()) {
            return run_reduce(opts, query_args, /*rank=*/false);
        }
        if (bench_reduction->parsed()) {
            return run_bench_reduction(opts);
        }
        if (bench_time->parsed()) {
            return run_bench_time(opts);
        }
        if (bench_precision->parsed()) {
            return run_bench_precision(opts);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
