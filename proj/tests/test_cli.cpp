#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "cbir/index.hpp"
#include "support/synthetic.hpp"

namespace fs = std::filesystem;

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

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd =
        std::string(CBIR_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

std::string slurp(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("cli round trip on a small corpus tree") {
    const cbir::testing::SyntheticSpec spec{3, 6, 16, 17};
    TempDir dir("cli");
    const fs::path corpus = dir.path / "corpus";
    cbir::testing::write_corpus_tree(spec, corpus);
    const fs::path log = dir.path / "log.txt";

    const fs::path index_dir = dir.path / "index";
    REQUIRE(run_cli("build-index --corpus " + corpus.string() +
                        " --layout folders --seed 1 --out " + index_dir.string(),
                    log) == 0);
    CHECK(fs::exists(index_dir / "index.pzx"));
    CHECK(fs::exists(index_dir / "index_stats.csv"));
    CHECK(fs::exists(index_dir / "run_manifest.json"));

    const cbir::PrefilterIndex index = cbir::load_index(index_dir / "index.pzx");
    CHECK(index.split_seed == 1);
    CHECK(index.channels.size() == 3);
    CHECK(index.image_features.size() == 9);  // ceil(6/2) * 3 categories

    const std::string stats = slurp(index_dir / "index_stats.csv");
    CHECK(stats.starts_with("feature,category_id,lower,upper,center,radius,max_radius\n"));

    SUBCASE("query ranks against the index") {
        const fs::path image = corpus / "cat_01" / "000.pgm";
        REQUIRE(run_cli("query --index " + (index_dir / "index.pzx").string() +
                            " --image " + image.string() + " --mode all --k 3",
                        log) == 0);
        const std::string out = slurp(log);
        CHECK(out.find("survivors ") != std::string::npos);
        CHECK(out.find("query_id,rank,image_id,distance") != std::string::npos);
    }

    SUBCASE("reduce prints surviving ids") {
        const fs::path image = corpus / "cat_02" / "001.pgm";
        REQUIRE(run_cli("reduce --index " + (index_dir / "index.pzx").string() +
                            " --image " + image.string() + " --verbose",
                        log) == 0);
        const std::string out = slurp(log);
        CHECK(out.find("channel,feature,s1_lower") != std::string::npos);
        CHECK(out.find("survivors ") != std::string::npos);
    }

    SUBCASE("extract writes a feature table") {
        const fs::path out_dir = dir.path / "features";
        REQUIRE(run_cli("extract --corpus " + corpus.string() + " --layout folders --out " +
                            out_dir.string(),
                        log) == 0);
        const std::string csv = slurp(out_dir / "features.csv");
        CHECK(csv.starts_with("image_id,category_id,"));
        // 18 images + header
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 19);
    }

    SUBCASE("bench-reduction sweeps the modes by default") {
        const fs::path out_dir = dir.path / "reduction";
        REQUIRE(run_cli("bench-reduction --corpus " + corpus.string() +
                            " --layout folders --seed 1 --out " + out_dir.string(),
                        log) == 0);
        for (const char* name : {"reduction_single_0.csv", "reduction_single_1.csv",
                                 "reduction_single_2.csv", "reduction_all.csv"}) {
            CHECK(fs::exists(out_dir / name));
        }
        CHECK(fs::exists(out_dir / "run_manifest.json"));

        // equal-size categories: the pooled overall row matches the default one
        const std::string plain = slurp(out_dir / "reduction_all.csv");
        const fs::path pooled_dir = dir.path / "reduction_pooled";
        REQUIRE(run_cli("bench-reduction --corpus " + corpus.string() +
                            " --layout folders --seed 1 --mode all --pooled --out " +
                            pooled_dir.string(),
                        log) == 0);
        const std::string pooled = slurp(pooled_dir / "reduction_all.csv");
        CHECK(plain.substr(0, plain.find("overall")) ==
              pooled.substr(0, pooled.find("overall")));
        CHECK(pooled.find("overall,") != std::string::npos);
    }

    SUBCASE("bench-time and bench-precision emit reports") {
        const fs::path time_dir = dir.path / "time";
        REQUIRE(run_cli("bench-time --corpus " + corpus.string() +
                            " --layout folders --seed 1 --reps 2 --k 3 --out " +
                            time_dir.string(),
                        log) == 0);
        CHECK(fs::exists(time_dir / "timing_queries.csv"));
        CHECK(fs::exists(time_dir / "timing_summary.csv"));

        const fs::path prec_dir = dir.path / "precision";
        REQUIRE(run_cli("bench-precision --corpus " + corpus.string() +
                            " --layout folders --seed 1 --k 3 --out " + prec_dir.string(),
                        log) == 0);
        CHECK(fs::exists(prec_dir / "precision.csv"));
    }
}

TEST_CASE("cli failure modes exit nonzero with a diagnostic") {
    TempDir dir("cli_fail");
    const fs::path log = dir.path / "log.txt";

    SUBCASE("missing corpus directory") {
        CHECK(run_cli("build-index --corpus " + (dir.path / "absent").string() +
                          " --out " + (dir.path / "out").string(),
                      log) == 1);
        CHECK(slurp(log).find("error:") != std::string::npos);
    }
    SUBCASE("bad mode string") {
        const cbir::testing::SyntheticSpec spec{2, 2, 8, 5};
        cbir::testing::write_corpus_tree(spec, dir.path / "corpus");
        CHECK(run_cli("bench-reduction --corpus " + (dir.path / "corpus").string() +
                          " --mode sideways --out " + (dir.path / "out").string(),
                      log) == 1);
        CHECK(slurp(log).find("error:") != std::string::npos);
    }
    SUBCASE("unknown subcommand is rejected by the parser") {
        CHECK(run_cli("frobnicate", log) != 0);
    }
    SUBCASE("version flag") {
        CHECK(run_cli("--version", log) == 0);
        CHECK(slurp(log).find("0.1.0") != std::string::npos);
    }
}
