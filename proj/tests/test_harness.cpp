#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "perfusion/deconv.hpp"
#include "perfusion/errors.hpp"
#include "perfusion/harness.hpp"

using namespace perfusion;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

ExperimentSpec tiny_sweep_spec() {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::NoiseSweep;
    spec.target = Target::Tmax;
    spec.sigmas = {0.5, 2.0};
    spec.train_size = 300;
    spec.test_size = 100;
    spec.n_iterations = 12;
    spec.batch_size = 64;
    spec.tune_subsample = 100;
    spec.seeds = StageSeeds::from_base(5);
    return spec;
}

} // namespace

TEST_CASE("noise sweep emits one row per method and sigma") {
    const auto rows = run_noise_sweep(tiny_sweep_spec());
    REQUIRE(rows.size() == 4); // 2 sigmas x 2 methods

    int nn = 0, deconv = 0;
    for (const ResultRow& r : rows) {
        CHECK(r.target == Target::Tmax);
        CHECK(r.mad >= 0.0);
        if (r.method == "nn") {
            ++nn;
            CHECK_FALSE(r.lambda_rel.has_value());
        } else if (r.method == "deconv") {
            ++deconv;
            REQUIRE(r.lambda_rel.has_value());
            bool in_grid = false;
            for (double l : lambda_grid()) in_grid = in_grid || l == *r.lambda_rel;
            CHECK(in_grid);
        }
    }
    CHECK(nn == 2);
    CHECK(deconv == 2);
}

TEST_CASE("data size run emits augmented and plain rows per cell") {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::DataSize;
    spec.target = Target::Cbf;
    spec.size_grid = {{5, 2}, {10, 2}};
    spec.test_size = 80;
    spec.n_iterations = 10;
    spec.batch_size = 32;
    spec.augment.factor = 3;
    spec.seeds = StageSeeds::from_base(6);

    const auto rows = run_data_size(spec);
    REQUIRE(rows.size() == 4);
    int augmented = 0;
    for (const ResultRow& r : rows) {
        CHECK(r.method == "nn");
        CHECK(r.sigma == 1.0);
        if (r.augmented) ++augmented;
    }
    CHECK(augmented == 2);
}

TEST_CASE("experiment artifacts and resume") {
    TempDir dir("perfusion_harness_test");
    ExperimentSpec spec = tiny_sweep_spec();
    spec.sigmas = {1.0};
    spec.out_dir = dir.path.string();

    const auto rows1 = run_noise_sweep(spec);
    CHECK(fs::exists(dir.path / "sweep_results_tmax.csv"));
    CHECK(fs::exists(dir.path / "train_tmax_s1.pben"));
    CHECK(fs::exists(dir.path / "test_tmax_s1.pben"));
    CHECK(fs::exists(dir.path / "lambda_tmax_s1.txt"));
    CHECK(fs::exists(dir.path / "model_tmax_s1.pmlp"));
    CHECK(fs::exists(dir.path / "scatter_nn_tmax_s1.csv"));
    CHECK(fs::exists(dir.path / "scatter_deconv_tmax_s1.csv"));

    const std::string results1 = read_file(dir.path / "sweep_results_tmax.csv");

    // Rerun with artifacts in place: reuses them, identical results file.
    const auto rows2 = run_noise_sweep(spec);
    CHECK(read_file(dir.path / "sweep_results_tmax.csv") == results1);
    REQUIRE(rows2.size() == rows1.size());
    for (std::size_t i = 0; i < rows1.size(); ++i) CHECK(rows1[i].mad == rows2[i].mad);

    // Results CSV round trip.
    const auto parsed = read_results_csv((dir.path / "sweep_results_tmax.csv").string());
    REQUIRE(parsed.size() == rows1.size());
    for (std::size_t i = 0; i < rows1.size(); ++i) {
        CHECK(parsed[i].method == rows1[i].method);
        CHECK(parsed[i].mad == rows1[i].mad);
        CHECK(parsed[i].optimal_scale == rows1[i].optimal_scale);
    }
}

TEST_CASE("scatter export identity self-test") {
    TempDir dir("perfusion_scatter_test");
    const std::vector<double> truths{1.0, 2.0, 3.5};
    const auto path = (dir.path / "scatter.csv").string();
    scatter_export(truths, truths, "identity", Target::Cbf, 1.0, 1.0, path);

    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line.rfind("# method=identity", 0) == 0);
    CHECK(line.find("optimal_scale=1") != std::string::npos);
    REQUIRE(std::getline(in, line));
    CHECK(line == "sample_idx,truth,estimate");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string idx, t, e;
        std::getline(ls, idx, ',');
        std::getline(ls, t, ',');
        std::getline(ls, e, ',');
        CHECK(t == e);
        ++rows;
    }
    CHECK(rows == truths.size());

    SUBCASE("renders to svg") {
        const auto svg = (dir.path / "scatter.svg").string();
        render_scatter_plot(path, svg);
        CHECK(fs::file_size(svg) > 200);
    }
}

TEST_CASE("plots") {
    TempDir dir("perfusion_plot_test");
    std::vector<ResultRow> rows;
    for (double sigma : {0.1, 0.2, 0.4, 0.8, 1.6, 3.2}) {
        rows.push_back({"nn", Target::Cbf, sigma, 1000, 1, false, 2.0 + sigma, 1.0, std::nullopt});
        rows.push_back({"deconv", Target::Cbf, sigma, 1000, 1, false, 3.0 + sigma, 1.1, 0.04});
    }

    SUBCASE("sweep figure renders and is deterministic") {
        const auto p1 = (dir.path / "sweep1.svg").string();
        const auto p2 = (dir.path / "sweep2.svg").string();
        render_sweep_plot(rows, Target::Cbf, p1);
        render_sweep_plot(rows, Target::Cbf, p2);
        CHECK(read_file(p1) == read_file(p2));
        CHECK(read_file(p1).find("polyline") != std::string::npos);
    }
    SUBCASE("missing method is an error that names it") {
        std::vector<ResultRow> nn_only;
        for (const ResultRow& r : rows)
            if (r.method == "nn") nn_only.push_back(r);
        try {
            render_sweep_plot(nn_only, Target::Cbf, (dir.path / "x.svg").string());
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("deconv") != std::string::npos);
        }
    }
    SUBCASE("datasize figure") {
        std::vector<ResultRow> drows;
        for (const std::size_t aifs : {10u, 30u, 100u})
            for (const bool aug : {false, true})
                drows.push_back({"nn", Target::Tmax, 1.0, aifs, 10, aug,
                                 5.0 / static_cast<double>(aifs) * (aug ? 0.5 : 1.0), 1.0,
                                 std::nullopt});
        const auto path = (dir.path / "datasize.svg").string();
        render_datasize_plot(drows, Target::Tmax, path);
        CHECK(fs::file_size(path) > 200);
    }
    SUBCASE("histograms") {
        SimConfig cfg;
        cfg.rng_seed = 12;
        const Dataset ds = generate_dataset(cfg, 200, 1);
        const auto path = (dir.path / "hist.svg").string();
        render_histograms(ds, path);
        CHECK(fs::file_size(path) > 500);
    }
}

TEST_CASE("spec validation") {
    ExperimentSpec spec;
    spec.sigmas.clear();
    CHECK_THROWS_AS(run_noise_sweep(spec), std::invalid_argument);
    ExperimentSpec dspec;
    dspec.kind = ExperimentKind::DataSize;
    dspec.size_grid.clear();
    CHECK_THROWS_AS(run_data_size(dspec), std::invalid_argument);
}
