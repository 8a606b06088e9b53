#include "cbir/bench.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string_view>

#include "cbir/parallel.hpp"

namespace cbir {

namespace {

// strict integer parse: the whole token must be consumed
bool parse_int(std::string_view text, int& out) {
    const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    return res.ec == std::errc{} && res.ptr == text.data() + text.size();
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::string feature_label(const MomentIndex& index) {
    return "A" + std::to_string(index.order) + "_" + std::to_string(index.repetition);
}

std::vector<MomentIndex> parse_feature_list(const std::string& text) {
    std::vector<MomentIndex> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find(';', pos);
        if (end == std::string::npos) {
            end = text.size();
        }
        const std::string item = text.substr(pos, end - pos);
        const std::size_t comma = item.find(',');
        if (comma == std::string::npos) {
            throw std::invalid_argument("bad feature spec '" + item +
                                        "' (want p,q pairs separated by ';')");
        }
        MomentIndex mi;
        const std::string_view sv = item;
        if (!parse_int(sv.substr(0, comma), mi.order) ||
            !parse_int(sv.substr(comma + 1), mi.repetition)) {
            throw std::invalid_argument("bad feature spec '" + item + "'");
        }
        if (mi.order < 0 || mi.order > kMaxOrder || std::abs(mi.repetition) > mi.order) {
            throw std::invalid_argument("invalid moment index " + feature_label(mi));
        }
        out.push_back(mi);
        if (end == text.size()) {
            break;
        }
        pos = end + 1;
    }
    if (out.empty()) {
        throw std::invalid_argument("empty feature list");
    }
    return out;
}

ModeSpec parse_mode(const std::string& text, int channel_count) {
    ModeSpec spec;
    spec.label = text;
    if (text == "all") {
        spec.options.combine = CombineMode::Intersect;
        return spec;
    }
    if (text == "union") {
        spec.options.combine = CombineMode::Union;
        return spec;
    }
    if (text.rfind("single:", 0) == 0) {
        int ch = -1;
        if (!parse_int(std::string_view(text).substr(7), ch)) {
            throw std::invalid_argument("bad mode '" + text + "'");
        }
        if (ch < 0 || ch >= channel_count) {
            throw std::invalid_argument("mode '" + text + "': channel outside [0, " +
                                        std::to_string(channel_count) + ")");
        }
        spec.options.channels = {ch};
        return spec;
    }
    throw std::invalid_argument("unknown mode '" + text + "' (want single:<i>, all or union)");
}

std::vector<ModeSpec> default_mode_sweep(int channel_count) {
    std::vector<ModeSpec> sweep;
    for (int ch = 0; ch < channel_count; ++ch) {
        sweep.push_back(parse_mode("single:" + std::to_string(ch), channel_count));
    }
    sweep.push_back(parse_mode("all", channel_count));
    return sweep;
}

namespace {

std::vector<FeatureVector> query_features(const Corpus& corpus, const Split& split,
                                          const PrefilterIndex& index,
                                          const ImageLoader& loader, int threads) {
    const std::vector<FeatureRow> rows = extract_feature_table(
        corpus, split.test_ids, index.features, loader, threads);
    if (rows.empty()) {
        throw std::runtime_error("the split produced no test queries");
    }
    std::vector<FeatureVector> features(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        features[i] = {index.features, rows[i].values};
    }
    return features;
}

std::map<int, int> indexed_count_per_category(const PrefilterIndex& index) {
    std::map<int, int> counts;
    for (const FeatureRow& row : index.image_features) {
        ++counts[row.category_id];
    }
    return counts;
}

CandidateSet full_candidate_set(const PrefilterIndex& index) {
    CandidateSet cs;
    cs.image_ids.reserve(index.image_features.size());
    for (const FeatureRow& row : index.image_features) {
        cs.image_ids.push_back(row.image_id);
    }
    return cs;
}

std::int64_t lower_median(std::vector<std::int64_t> values) {
    const std::size_t mid = (values.size() - 1) / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                     values.end());
    return values[mid];
}

}  // namespace

ReductionReport reduction_experiment(const Corpus& corpus, const Split& split,
                                     const PrefilterIndex& index,
                                     const ImageLoader& loader, const ModeSpec& mode,
                                     int threads) {
    const std::vector<FeatureVector> queries =
        query_features(corpus, split, index, loader, threads);
    const std::map<int, int> category_counts = indexed_count_per_category(index);
    const double db_size = static_cast<double>(index.image_features.size());

    ReductionReport report;
    report.mode_label = mode.label;
    report.per_query_pct_all.resize(queries.size());
    report.per_query_pct_relevant.resize(queries.size());
    std::vector<std::int64_t> survivor_count(queries.size());
    std::vector<std::int64_t> relevant_count(queries.size());

    parallel_for(static_cast<int>(queries.size()), threads, [&](int i) {
        const int query_id = split.test_ids[static_cast<std::size_t>(i)];
        const int category = corpus.category_of(query_id);
        const auto cat_count = category_counts.find(category);
        if (cat_count == category_counts.end()) {
            throw std::runtime_error("reduction: query category " + std::to_string(category) +
                                     " has no indexed images");
        }
        const CandidateSet cs =
            filter_candidates(queries[static_cast<std::size_t>(i)], index, mode.options);
        int relevant = 0;
        for (int id : cs.image_ids) {
            const int pos = index.row_of(id);
            if (index.image_features[static_cast<std::size_t>(pos)].category_id == category) {
                ++relevant;
            }
        }
        survivor_count[static_cast<std::size_t>(i)] =
            static_cast<std::int64_t>(cs.image_ids.size());
        relevant_count[static_cast<std::size_t>(i)] = relevant;
        report.per_query_pct_all[static_cast<std::size_t>(i)] =
            100.0 * static_cast<double>(cs.image_ids.size()) / db_size;
        report.per_query_pct_relevant[static_cast<std::size_t>(i)] =
            100.0 * relevant / cat_count->second;
    });

    // per-category means over each category's queries, then the overall
    // per-query means
    std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_category;
    double sum_all = 0.0;
    double sum_rel = 0.0;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const int category = corpus.category_of(split.test_ids[i]);
        by_category[category].first.push_back(report.per_query_pct_all[i]);
        by_category[category].second.push_back(report.per_query_pct_relevant[i]);
        sum_all += report.per_query_pct_all[i];
        sum_rel += report.per_query_pct_relevant[i];
    }
    for (const auto& [category, values] : by_category) {
        ReductionRow row;
        row.category_id = category;
        for (double v : values.first) {
            row.mean_pct_all += v;
        }
        row.mean_pct_all /= static_cast<double>(values.first.size());
        for (double v : values.second) {
            row.mean_pct_relevant += v;
        }
        row.mean_pct_relevant /= static_cast<double>(values.second.size());
        report.per_category.push_back(row);
    }
    report.overall_pct_all = sum_all / static_cast<double>(queries.size());
    report.overall_pct_relevant = sum_rel / static_cast<double>(queries.size());

    // pooled alternative: totals across queries, not a mean of percentages
    std::int64_t total_survivors = 0;
    std::int64_t total_relevant = 0;
    std::int64_t total_possible = 0;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        total_survivors += survivor_count[i];
        total_relevant += relevant_count[i];
        total_possible += category_counts.at(corpus.category_of(split.test_ids[i]));
    }
    report.pooled_pct_all = 100.0 * static_cast<double>(total_survivors) /
                            (db_size * static_cast<double>(queries.size()));
    report.pooled_pct_relevant =
        100.0 * static_cast<double>(total_relevant) / static_cast<double>(total_possible);
    return report;
}

TimingReport timing_experiment(const Corpus& corpus, const Split& split,
                               const PrefilterIndex& index, const ImageLoader& loader,
                               const ModeSpec& mode, int k, int reps, int threads) {
    if (reps < 1) {
        throw std::invalid_argument("timing: reps must be >= 1");
    }
    const std::vector<FeatureVector> queries =
        query_features(corpus, split, index, loader, threads);
    const CandidateSet full = full_candidate_set(index);
    const double db_size = static_cast<double>(index.image_features.size());

    TimingReport report;
    report.mode_label = mode.label;
    double survivor_fraction_sum = 0.0;

    // timing runs stay on one thread so measurements are comparable
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const FeatureVector& fv = queries[i];
        TimingRow row;
        row.query_id = split.test_ids[i];
        row.category_id = corpus.category_of(row.query_id);

        std::vector<std::int64_t> filter_ns(static_cast<std::size_t>(reps));
        std::vector<std::int64_t> reduced_ns(static_cast<std::size_t>(reps));
        std::vector<std::int64_t> full_ns(static_cast<std::size_t>(reps));
        CandidateSet cs;
        for (int r = 0; r < reps; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            cs = filter_candidates(fv, index, mode.options);
            const auto t1 = std::chrono::steady_clock::now();
            filter_ns[static_cast<std::size_t>(r)] =
                std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
            reduced_ns[static_cast<std::size_t>(r)] = retrieve(fv, cs, index, k).elapsed.count();
            full_ns[static_cast<std::size_t>(r)] = retrieve(fv, full, index, k).elapsed.count();
        }
        row.filter_ns = lower_median(std::move(filter_ns));
        row.reduced_ns = lower_median(std::move(reduced_ns));
        row.full_ns = lower_median(std::move(full_ns));
        row.survivors = static_cast<int>(cs.image_ids.size());
        survivor_fraction_sum += static_cast<double>(cs.image_ids.size()) / db_size;
        report.per_query.push_back(row);
    }

    std::vector<std::int64_t> fulls, reduceds, filters;
    for (const TimingRow& row : report.per_query) {
        fulls.push_back(row.full_ns);
        reduceds.push_back(row.reduced_ns);
        filters.push_back(row.filter_ns);
    }
    report.median_full_ns = lower_median(std::move(fulls));
    report.median_reduced_ns = lower_median(std::move(reduceds));
    report.median_filter_ns = lower_median(std::move(filters));
    report.mean_survivor_fraction =
        survivor_fraction_sum / static_cast<double>(queries.size());
    return report;
}

PrecisionExperimentReport precision_experiment(const Corpus& corpus, const Split& split,
                                               const PrefilterIndex& index,
                                               const ImageLoader& loader,
                                               const ModeSpec& mode, int k, int threads) {
    const std::vector<FeatureVector> queries =
        query_features(corpus, split, index, loader, threads);
    const CandidateSet full = full_candidate_set(index);

    std::vector<double> precision_full(queries.size());
    std::vector<double> precision_reduced(queries.size());
    parallel_for(static_cast<int>(queries.size()), threads, [&](int i) {
        const std::size_t qi = static_cast<std::size_t>(i);
        const int query_id = split.test_ids[qi];
        const int category = corpus.category_of(query_id);
        const CandidateSet reduced = filter_candidates(queries[qi], index, mode.options);
        precision_full[qi] =
            precision_at_k(retrieve(queries[qi], full, index, k), category, corpus, k);
        precision_reduced[qi] =
            precision_at_k(retrieve(queries[qi], reduced, index, k), category, corpus, k);
    });

    std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_category;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const int category = corpus.category_of(split.test_ids[i]);
        by_category[category].first.push_back(precision_full[i]);
        by_category[category].second.push_back(precision_reduced[i]);
    }

    PrecisionExperimentReport report;
    report.mode_label = mode.label;
    report.full.k = k;
    report.reduced.k = k;
    double mean_full = 0.0;
    double mean_reduced = 0.0;
    for (const auto& [category, values] : by_category) {
        double f = 0.0;
        for (double v : values.first) {
            f += v;
        }
        f /= static_cast<double>(values.first.size());
        double r = 0.0;
        for (double v : values.second) {
            r += v;
        }
        r /= static_cast<double>(values.second.size());
        report.full.per_category.emplace_back(category, f);
        report.reduced.per_category.emplace_back(category, r);
        mean_full += f;
        mean_reduced += r;
    }
    const double n = static_cast<double>(by_category.size());
    report.full.mean_precision = mean_full / n;
    report.reduced.mean_precision = mean_reduced / n;
    report.mean_diff_pp =
        std::abs(report.full.mean_precision - report.reduced.mean_precision) * 100.0;
    return report;
}

namespace {

void validate_config(const BenchConfig& config) {
    if (config.corpus_root.empty()) {
        throw std::invalid_argument("config: corpus path is required");
    }
    if (config.k < 1) {
        throw std::invalid_argument("config: k must be >= 1");
    }
    if (config.reps < 1) {
        throw std::invalid_argument("config: reps must be >= 1");
    }
}

struct BenchSetup {
    Corpus corpus;
    Split split;
    PrefilterIndex index;
    ModeSpec mode;
};

BenchSetup prepare(const BenchConfig& config) {
    validate_config(config);
    BenchSetup setup;
    setup.corpus = load_corpus(config.corpus_root, config.layout);
    setup.split = make_split(setup.corpus, config.seed);
    const std::vector<MomentIndex> features =
        config.features.empty() ? default_feature_set() : config.features;
    setup.index = build_index(setup.corpus, setup.split, features, file_loader(),
                              {config.train_only, config.threads});
    setup.mode = parse_mode(config.mode.empty() ? "all" : config.mode,
                            setup.index.channel_count());
    return setup;
}

}  // namespace

ReductionReport run_reduction_experiment(const BenchConfig& config) {
    const BenchSetup setup = prepare(config);
    return reduction_experiment(setup.corpus, setup.split, setup.index, file_loader(),
                                setup.mode, config.threads);
}

TimingReport run_timing_experiment(const BenchConfig& config) {
    const BenchSetup setup = prepare(config);
    return timing_experiment(setup.corpus, setup.split, setup.index, file_loader(),
                             setup.mode, config.k, config.reps, config.threads);
}

PrecisionExperimentReport run_precision_experiment(const BenchConfig& config) {
    const BenchSetup setup = prepare(config);
    return precision_experiment(setup.corpus, setup.split, setup.index, file_loader(),
                                setup.mode, config.k, config.threads);
}

void write_reduction_csv(std::ostream& out, const ReductionReport& report, bool pooled) {
    out << "category_id,mean_pct_all_images_remaining,mean_pct_relevant_remaining\n";
    for (const ReductionRow& row : report.per_category) {
        out << row.category_id << ',' << format_double(row.mean_pct_all) << ','
            << format_double(row.mean_pct_relevant) << '\n';
    }
    const double all = pooled ? report.pooled_pct_all : report.overall_pct_all;
    const double rel = pooled ? report.pooled_pct_relevant : report.overall_pct_relevant;
    out << "overall," << format_double(all) << ',' << format_double(rel) << '\n';
}

void write_timing_csv(std::ostream& out, const TimingReport& report) {
    out << "query_id,category_id,full_ns,reduced_ns,filter_ns,survivors\n";
    for (const TimingRow& row : report.per_query) {
        out << row.query_id << ',' << row.category_id << ',' << row.full_ns << ','
            << row.reduced_ns << ',' << row.filter_ns << ',' << row.survivors << '\n';
    }
}

void write_timing_summary_csv(std::ostream& out, const TimingReport& report) {
    out << "median_full_ns,median_reduced_ns,median_filter_ns,mean_survivor_fraction\n";
    out << report.median_full_ns << ',' << report.median_reduced_ns << ','
        << report.median_filter_ns << ',' << format_double(report.mean_survivor_fraction)
        << '\n';
}

void write_precision_csv(std::ostream& out, const PrecisionExperimentReport& report) {
    out << "scope,precision_full,precision_reduced,diff_pp\n";
    for (std::size_t i = 0; i < report.full.per_category.size(); ++i) {
        const auto& [category, full] = report.full.per_category[i];
        const double reduced = report.reduced.per_category[i].second;
        out << category << ',' << format_double(full) << ',' << format_double(reduced) << ','
            << format_double(std::abs(full - reduced) * 100.0) << '\n';
    }
    out << "mean," << format_double(report.full.mean_precision) << ','
        << format_double(report.reduced.mean_precision) << ','
        << format_double(report.mean_diff_pp) << '\n';
}

void write_manifest(std::ostream& out, const BenchConfig& config,
                    const std::string& command) {
    nlohmann::json j;
    j["tool_version"] = kToolVersion;
    j["command"] = command;
    nlohmann::json c;
    c["corpus"] = config.corpus_root.string();
    switch (config.layout) {
        case CorpusLayout::Auto: c["layout"] = "auto"; break;
        case CorpusLayout::CorelFlat: c["layout"] = "corel"; break;
        case CorpusLayout::CategoryFolders: c["layout"] = "folders"; break;
    }
    c["seed"] = config.seed;
    std::string features;
    const std::vector<MomentIndex> list =
        config.features.empty() ? default_feature_set() : config.features;
    for (std::size_t i = 0; i < list.size(); ++i) {
        if (i > 0) {
            features += ';';
        }
        features += std::to_string(list[i].order) + "," + std::to_string(list[i].repetition);
    }
    c["features"] = features;
    c["mode"] = config.mode.empty() ? "all" : config.mode;
    c["k"] = config.k;
    c["reps"] = config.reps;
    c["train_only"] = config.train_only;
    c["threads"] = config.threads;
    c["out"] = config.out_dir.string();
    j["config"] = c;
    out << j.dump(2) << '\n';
}

}  // namespace cbir
