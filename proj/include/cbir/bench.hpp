#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cbir/retrieval.hpp"

namespace cbir {

/// One filtering configuration of an experiment: a label for reports plus
/// the channel combination it stands for.
struct ModeSpec {
    std::string label;      // "single:<i>", "all" or "union"
    FilterOptions options;
};

// Parses "single:<i>" | "all" | "union". Throws std::invalid_argument on
// anything else or a channel position outside [0, channel_count).
ModeSpec parse_mode(const std::string& text, int channel_count);

// The default sweep: one single-channel mode per feature, then "all".
std::vector<ModeSpec> default_mode_sweep(int channel_count);

/// Experiment configuration; validated before any computation.
struct BenchConfig {
    std::filesystem::path corpus_root;
    CorpusLayout layout = CorpusLayout::Auto;
    std::uint64_t seed = 1;
    std::vector<MomentIndex> features;  // empty -> default {A00, A20, A22}
    std::string mode;                   // empty -> sweep (reduction) / "all"
    int k = 20;
    int reps = 5;                       // timing repetitions per query
    bool train_only = true;
    int threads = 0;
    std::filesystem::path out_dir;
};

struct ReductionRow {
    int category_id = 0;
    double mean_pct_all = 0;       // survivors / |DB| * 100, averaged over queries
    double mean_pct_relevant = 0;  // surviving own-category / category DB count * 100
};

/// Database-reduction percentages for one channel mode.
struct ReductionReport {
    std::string mode_label;
    std::vector<ReductionRow> per_category;
    double overall_pct_all = 0;       // mean over all queries
    double overall_pct_relevant = 0;
    // Pooled alternative: summed survivor counts over summed possible counts
    // across every query. Deviates from the per-query means only when
    // category sizes are unbalanced.
    double pooled_pct_all = 0;
    double pooled_pct_relevant = 0;
    // Per test query, in test_ids order (consistency checks, diagnostics).
    std::vector<double> per_query_pct_all;
    std::vector<double> per_query_pct_relevant;
};

struct TimingRow {
    int query_id = 0;
    int category_id = 0;
    std::int64_t full_ns = 0;     // median over reps, ranking only
    std::int64_t reduced_ns = 0;
    std::int64_t filter_ns = 0;   // median over reps
    int survivors = 0;
};

/// Ranking times with and without database reduction.
struct TimingReport {
    std::string mode_label;
    std::vector<TimingRow> per_query;
    std::int64_t median_full_ns = 0;
    std::int64_t median_reduced_ns = 0;
    std::int64_t median_filter_ns = 0;
    double mean_survivor_fraction = 0;
};

/// Paired precision@K, full versus reduced database.
struct PrecisionExperimentReport {
    std::string mode_label;
    PrecisionReport full;
    PrecisionReport reduced;
    double mean_diff_pp = 0;  // |mean_full - mean_reduced| in percentage points
};

// Programmatic cores over an in-memory corpus. Queries are the test half of
// the split; the searched database is the indexed id set.
ReductionReport reduction_experiment(const Corpus& corpus, const Split& split,
                                     const PrefilterIndex& index,
                                     const ImageLoader& loader,
                                     const ModeSpec& mode, int threads = 0);

TimingReport timing_experiment(const Corpus& corpus, const Split& split,
                               const PrefilterIndex& index,
                               const ImageLoader& loader, const ModeSpec& mode,
                               int k, int reps, int threads = 0);

PrecisionExperimentReport precision_experiment(const Corpus& corpus,
                                               const Split& split,
                                               const PrefilterIndex& index,
                                               const ImageLoader& loader,
                                               const ModeSpec& mode, int k,
                                               int threads = 0);

// Config-driven entry points: load the corpus, build the index and run one
// experiment for the configured mode (default "all").
ReductionReport run_reduction_experiment(const BenchConfig& config);
TimingReport run_timing_experiment(const BenchConfig& config);
PrecisionExperimentReport run_precision_experiment(const BenchConfig& config);

// CSV writers (UTF-8, header row, '\n' line ends, shortest round-trip
// number formatting; byte-identical for identical reports). The reduction
// writer's overall row carries the per-query means, or the pooled totals
// when pooled is set.
void write_reduction_csv(std::ostream& out, const ReductionReport& report,
                         bool pooled = false);
void write_timing_csv(std::ostream& out, const TimingReport& report);
void write_timing_summary_csv(std::ostream& out, const TimingReport& report);
void write_precision_csv(std::ostream& out, const PrecisionExperimentReport& report);

// Run manifest: full config echo plus the tool version, as JSON.
void write_manifest(std::ostream& out, const BenchConfig& config,
                    const std::string& command);

inline constexpr const char* kToolVersion = "0.1.0";

// Shortest round-trip decimal formatting used by every report writer.
std::string format_double(double value);

std::string feature_label(const MomentIndex& index);  // e.g. "A2_2"
std::vector<MomentIndex> parse_feature_list(const std::string& text);  // "0,0;2,0;2,2"

}  // namespace cbir
