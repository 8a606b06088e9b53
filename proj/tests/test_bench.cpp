#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "cbir/bench.hpp"
#include "support/synthetic.hpp"

namespace fs = std::filesystem;
using cbir::BenchConfig;
using cbir::CombineMode;
using cbir::Corpus;
using cbir::ModeSpec;
using cbir::PrefilterIndex;
using cbir::Split;
using doctest::Approx;

namespace {

struct TempDir {
    fs::path path;

    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() /
               ("cbir_test_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

// every image identical: degenerate intervals, zero reduction
cbir::ImageLoader constant_loader(double value) {
    return [value](const cbir::ImageEntry&) {
        return cbir::GrayImage(8, 8, std::vector<double>(64, value));
    };
}

// constant intensity per category: disjoint degenerate intervals
cbir::ImageLoader separable_loader() {
    return [](const cbir::ImageEntry& entry) {
        const double value = 0.2 + 0.3 * (entry.category_id - 1);
        return cbir::GrayImage(8, 8, std::vector<double>(64, value));
    };
}

struct Fixture {
    Corpus corpus;
    Split split;
    PrefilterIndex index;
    cbir::ImageLoader loader;
};

Fixture make_fixture(const cbir::testing::SyntheticSpec& spec, cbir::ImageLoader loader,
                     std::uint64_t seed = 1) {
    Fixture f;
    f.corpus = cbir::testing::make_synthetic_corpus(spec);
    f.split = cbir::make_split(f.corpus, seed);
    f.loader = std::move(loader);
    f.index = cbir::build_index(f.corpus, f.split, cbir::default_feature_set(), f.loader);
    return f;
}

}  // namespace

TEST_CASE("mode parsing") {
    const ModeSpec all = cbir::parse_mode("all", 3);
    CHECK(all.label == "all");
    CHECK(all.options.combine == CombineMode::Intersect);
    CHECK(all.options.channels.empty());

    const ModeSpec u = cbir::parse_mode("union", 3);
    CHECK(u.options.combine == CombineMode::Union);

    const ModeSpec single = cbir::parse_mode("single:1", 3);
    CHECK(single.options.channels == std::vector<int>{1});
    CHECK(single.label == "single:1");

    CHECK_THROWS_AS(cbir::parse_mode("single:3", 3), std::invalid_argument);
    CHECK_THROWS_AS(cbir::parse_mode("single:-1", 3), std::invalid_argument);
    CHECK_THROWS_AS(cbir::parse_mode("bogus", 3), std::invalid_argument);
    CHECK_THROWS_AS(cbir::parse_mode("single:", 3), std::invalid_argument);

    const auto sweep = cbir::default_mode_sweep(3);
    REQUIRE(sweep.size() == 4);
    CHECK(sweep[0].label == "single:0");
    CHECK(sweep[2].label == "single:2");
    CHECK(sweep[3].label == "all");
}

TEST_CASE("feature list parsing and labels") {
    const auto list = cbir::parse_feature_list("0,0;2,0;2,2");
    REQUIRE(list.size() == 3);
    CHECK(list[0] == cbir::MomentIndex{0, 0});
    CHECK(list[2] == cbir::MomentIndex{2, 2});
    CHECK(cbir::feature_label(list[2]) == "A2_2");
    CHECK(cbir::feature_label({3, -1}) == "A3_-1");

    CHECK_THROWS_AS(cbir::parse_feature_list(""), std::invalid_argument);
    CHECK_THROWS_AS(cbir::parse_feature_list("1"), std::invalid_argument);
    CHECK_THROWS_AS(cbir::parse_feature_list("2,3"), std::invalid_argument);  // |q| > p
    CHECK_THROWS_AS(cbir::parse_feature_list("a,b"), std::invalid_argument);
}

TEST_CASE("format_double is shortest round-trip") {
    CHECK(cbir::format_double(0.5) == "0.5");
    CHECK(cbir::format_double(100.0) == "100");
    CHECK(cbir::format_double(0.1) == "0.1");
    const double v = 0.12345678901234567;
    CHECK(std::stod(cbir::format_double(v)) == v);
}

TEST_CASE("degenerate corpus keeps everything") {
    const cbir::testing::SyntheticSpec spec{3, 4, 8, 1};
    const Fixture f = make_fixture(spec, constant_loader(0.5));

    const auto report = cbir::reduction_experiment(f.corpus, f.split, f.index, f.loader,
                                                   cbir::parse_mode("all", 3), 2);
    CHECK(report.overall_pct_all == Approx(100.0).epsilon(1e-12));
    CHECK(report.overall_pct_relevant == Approx(100.0).epsilon(1e-12));
    for (const auto& row : report.per_category) {
        CHECK(row.mean_pct_all == Approx(100.0).epsilon(1e-12));
        CHECK(row.mean_pct_relevant == Approx(100.0).epsilon(1e-12));
    }

    SUBCASE("no pruning: precision reports are identical") {
        const auto pr = cbir::precision_experiment(f.corpus, f.split, f.index, f.loader,
                                                   cbir::parse_mode("all", 3), 2, 2);
        CHECK(pr.mean_diff_pp == 0.0);
        REQUIRE(pr.full.per_category.size() == pr.reduced.per_category.size());
        for (std::size_t i = 0; i < pr.full.per_category.size(); ++i) {
            CHECK(pr.full.per_category[i].second == pr.reduced.per_category[i].second);
        }
        CHECK(pr.full.mean_precision == pr.reduced.mean_precision);
    }
    SUBCASE("timing on a no-reduction corpus reports full survivor fraction") {
        const auto tr = cbir::timing_experiment(f.corpus, f.split, f.index, f.loader,
                                                cbir::parse_mode("all", 3), 2, 3);
        CHECK(tr.mean_survivor_fraction == Approx(1.0).epsilon(1e-12));
        for (const auto& row : tr.per_query) {
            CHECK(row.survivors == static_cast<int>(f.index.image_features.size()));
            CHECK(row.full_ns >= 0);
            CHECK(row.reduced_ns >= 0);
        }
    }
}

TEST_CASE("separable corpus") {
    const cbir::testing::SyntheticSpec spec{3, 4, 8, 1};
    const Fixture f = make_fixture(spec, separable_loader());

    SUBCASE("relevant stays, others are pruned") {
        const auto report = cbir::reduction_experiment(f.corpus, f.split, f.index, f.loader,
                                                       cbir::parse_mode("all", 3), 2);
        CHECK(report.overall_pct_relevant == Approx(100.0).epsilon(1e-12));
        // each query keeps exactly its own category: 2 of 6 indexed images
        CHECK(report.overall_pct_all == Approx(100.0 / 3.0).epsilon(1e-9));
    }
    SUBCASE("both precisions are perfect") {
        const auto pr = cbir::precision_experiment(f.corpus, f.split, f.index, f.loader,
                                                   cbir::parse_mode("all", 3), 2, 2);
        CHECK(pr.full.mean_precision == Approx(1.0).epsilon(1e-12));
        CHECK(pr.reduced.mean_precision == Approx(1.0).epsilon(1e-12));
        CHECK(pr.mean_diff_pp == Approx(0.0).epsilon(1e-12));
    }
}

// Unbalanced corpus where the small category's test images sit past the big
// category's interval: the per-query mean and the pooled total of the
// relevant-remaining percentage genuinely diverge.
TEST_CASE("pooled aggregation on an unbalanced corpus") {
    Corpus corpus;
    corpus.categories.push_back({1, "small", {1, 2, 3, 4}});
    corpus.categories.push_back({2, "big", {5, 6, 7, 8, 9, 10, 11, 12}});
    for (int id = 1; id <= 12; ++id) {
        corpus.images.push_back({id, id <= 4 ? 1 : 2, ""});
    }
    const Split split = cbir::make_split(corpus, 1);
    // small: train at 0.2, test out at 0.9; big spreads over [0.5, 0.78]
    const cbir::ImageLoader loader = [&split](const cbir::ImageEntry& entry) {
        double v = 0.5 + 0.04 * (entry.id - 5);
        if (entry.category_id == 1) {
            v = split.is_train(entry.id) ? 0.2 : 0.9;
        }
        return cbir::GrayImage(8, 8, std::vector<double>(64, v));
    };
    const PrefilterIndex index =
        cbir::build_index(corpus, split, cbir::default_feature_set(), loader);
    const auto report = cbir::reduction_experiment(corpus, split, index, loader,
                                                   cbir::parse_mode("single:0", 3), 2);

    // every query keeps exactly the big train half (4 of 6 indexed images):
    // small queries lose their whole category, big queries keep all of theirs
    REQUIRE(report.per_category.size() == 2);
    CHECK(report.per_category[0].mean_pct_relevant == Approx(0.0).epsilon(1e-12));
    CHECK(report.per_category[1].mean_pct_relevant == Approx(100.0).epsilon(1e-12));
    CHECK(report.overall_pct_all == Approx(100.0 * 4 / 6).epsilon(1e-9));
    CHECK(report.pooled_pct_all == Approx(report.overall_pct_all).epsilon(1e-12));

    // mean over queries: (2 * 0% + 4 * 100%) / 6; pooled: 16 kept of 20 possible
    CHECK(report.overall_pct_relevant == Approx(100.0 * 4 / 6).epsilon(1e-9));
    CHECK(report.pooled_pct_relevant == Approx(80.0).epsilon(1e-9));

    std::ostringstream plain;
    std::ostringstream pooled;
    cbir::write_reduction_csv(plain, report);
    cbir::write_reduction_csv(pooled, report, /*pooled=*/true);
    CHECK(plain.str().find("overall," + cbir::format_double(report.overall_pct_all) + "," +
                           cbir::format_double(report.overall_pct_relevant) + "\n") !=
          std::string::npos);
    CHECK(pooled.str().find("overall," + cbir::format_double(report.pooled_pct_all) +
                            ",80\n") != std::string::npos);
}

TEST_CASE("reduction report is consistent with its per-query values") {
    const cbir::testing::SyntheticSpec spec{5, 8, 16, 21};
    const Fixture f = make_fixture(spec, cbir::testing::synthetic_loader(spec), 3);

    const auto report = cbir::reduction_experiment(f.corpus, f.split, f.index, f.loader,
                                                   cbir::parse_mode("all", 3), 4);
    REQUIRE(report.per_query_pct_all.size() == f.split.test_ids.size());

    const double mean_all =
        std::accumulate(report.per_query_pct_all.begin(), report.per_query_pct_all.end(), 0.0) /
        static_cast<double>(report.per_query_pct_all.size());
    const double mean_rel = std::accumulate(report.per_query_pct_relevant.begin(),
                                            report.per_query_pct_relevant.end(), 0.0) /
                            static_cast<double>(report.per_query_pct_relevant.size());
    CHECK(report.overall_pct_all == Approx(mean_all).epsilon(1e-12));
    CHECK(report.overall_pct_relevant == Approx(mean_rel).epsilon(1e-12));

    SUBCASE("pooled values recompute from the per-query values") {
        // pct_all has a constant denominator, so pooling cannot move it
        CHECK(report.pooled_pct_all == Approx(mean_all).epsilon(1e-12));

        std::map<int, int> train_counts;
        for (const auto& row : f.index.image_features) {
            ++train_counts[row.category_id];
        }
        double kept = 0;
        double possible = 0;
        for (std::size_t i = 0; i < f.split.test_ids.size(); ++i) {
            const int n = train_counts.at(f.corpus.category_of(f.split.test_ids[i]));
            kept += report.per_query_pct_relevant[i] / 100.0 * n;
            possible += n;
        }
        CHECK(report.pooled_pct_relevant == Approx(100.0 * kept / possible).epsilon(1e-9));
    }
    SUBCASE("per-category rows recompute from the per-query values") {
        for (const auto& row : report.per_category) {
            double sum = 0;
            int n = 0;
            for (std::size_t i = 0; i < f.split.test_ids.size(); ++i) {
                if (f.corpus.category_of(f.split.test_ids[i]) == row.category_id) {
                    sum += report.per_query_pct_all[i];
                    ++n;
                }
            }
            REQUIRE(n > 0);
            CHECK(row.mean_pct_all == Approx(sum / n).epsilon(1e-12));
        }
    }
    SUBCASE("percentages stay in range") {
        for (double v : report.per_query_pct_all) {
            CHECK(v >= 0.0);
            CHECK(v <= 100.0);
        }
        for (double v : report.per_query_pct_relevant) {
            CHECK(v >= 0.0);
            CHECK(v <= 100.0);
        }
    }
}

TEST_CASE("parallel experiments are deterministic") {
    const cbir::testing::SyntheticSpec spec{4, 8, 16, 33};
    const Fixture f = make_fixture(spec, cbir::testing::synthetic_loader(spec), 2);

    const auto a = cbir::reduction_experiment(f.corpus, f.split, f.index, f.loader,
                                              cbir::parse_mode("all", 3), 1);
    const auto b = cbir::reduction_experiment(f.corpus, f.split, f.index, f.loader,
                                              cbir::parse_mode("all", 3), 4);
    CHECK(a.per_query_pct_all == b.per_query_pct_all);
    CHECK(a.per_query_pct_relevant == b.per_query_pct_relevant);
    CHECK(a.overall_pct_all == b.overall_pct_all);

    std::ostringstream out_a;
    std::ostringstream out_b;
    cbir::write_reduction_csv(out_a, a);
    cbir::write_reduction_csv(out_b, b);
    CHECK(out_a.str() == out_b.str());
    CHECK(out_a.str().find("category_id,") != std::string::npos);
    CHECK(out_a.str().find("overall") != std::string::npos);
}

TEST_CASE("csv writers emit headers and rows") {
    const cbir::testing::SyntheticSpec spec{3, 6, 16, 7};
    const Fixture f = make_fixture(spec, cbir::testing::synthetic_loader(spec), 2);
    const ModeSpec mode = cbir::parse_mode("all", 3);

    SUBCASE("timing") {
        const auto tr =
            cbir::timing_experiment(f.corpus, f.split, f.index, f.loader, mode, 3, 3);
        std::ostringstream rows;
        cbir::write_timing_csv(rows, tr);
        CHECK(rows.str().starts_with(
            "query_id,category_id,full_ns,reduced_ns,filter_ns,survivors\n"));
        std::ostringstream summary;
        cbir::write_timing_summary_csv(summary, tr);
        CHECK(summary.str().find("median_full_ns") != std::string::npos);
        CHECK(tr.per_query.size() == f.split.test_ids.size());
    }
    SUBCASE("precision") {
        const auto pr =
            cbir::precision_experiment(f.corpus, f.split, f.index, f.loader, mode, 3, 2);
        std::ostringstream out;
        cbir::write_precision_csv(out, pr);
        CHECK(out.str().starts_with("scope,precision_full,precision_reduced,diff_pp\n"));
        CHECK(out.str().find("mean,") != std::string::npos);
    }
}

TEST_CASE("config-driven runs over an on-disk tree") {
    const cbir::testing::SyntheticSpec spec{3, 6, 16, 13};
    TempDir dir("bench_cfg");
    cbir::testing::write_corpus_tree(spec, dir.path / "corpus");

    BenchConfig config;
    config.corpus_root = dir.path / "corpus";
    config.layout = cbir::CorpusLayout::CategoryFolders;
    config.seed = 2;
    config.mode = "all";
    config.k = 3;
    config.reps = 2;
    config.threads = 2;

    const auto reduction = cbir::run_reduction_experiment(config);
    CHECK(reduction.mode_label == "all");
    CHECK(reduction.per_category.size() == 3);
    CHECK(reduction.overall_pct_all > 0.0);
    CHECK(reduction.overall_pct_all <= 100.0);

    const auto precision = cbir::run_precision_experiment(config);
    CHECK(precision.full.k == 3);
    CHECK(precision.full.per_category.size() == 3);

    SUBCASE("config validation") {
        BenchConfig bad = config;
        bad.k = 0;
        CHECK_THROWS_AS(cbir::run_reduction_experiment(bad), std::invalid_argument);
        bad = config;
        bad.reps = 0;
        CHECK_THROWS_AS(cbir::run_timing_experiment(bad), std::invalid_argument);
        bad = config;
        bad.corpus_root.clear();
        CHECK_THROWS(cbir::run_reduction_experiment(bad));
        bad = config;
        bad.mode = "nonsense";
        CHECK_THROWS_AS(cbir::run_reduction_experiment(bad), std::invalid_argument);
    }
}

TEST_CASE("manifest echoes the configuration") {
    BenchConfig config;
    config.corpus_root = "/data/corpus";
    config.seed = 42;
    config.mode = "union";
    config.k = 7;
    config.out_dir = "/tmp/out";

    std::ostringstream out;
    cbir::write_manifest(out, config, "bench-reduction");
    const auto manifest = nlohmann::json::parse(out.str());
    CHECK(manifest.at("tool_version").get<std::string>() == cbir::kToolVersion);
    CHECK(manifest.at("command").get<std::string>() == "bench-reduction");
    CHECK(manifest.at("config").at("seed").get<std::uint64_t>() == 42);
    CHECK(manifest.at("config").at("mode").get<std::string>() == "union");
    CHECK(manifest.at("config").at("k").get<int>() == 7);
    CHECK(manifest.at("config").at("corpus").get<std::string>() == "/data/corpus");
}
