// Experiment runner: the noise sweep (tuned deconvolution vs trained network
// across noise levels) and the training-set-size grid with and without
// augmentation. Emits one result row per evaluated cell, with all artifacts
// (datasets, models, tuned lambdas, per-sample scatter CSVs) checkpointed to
// the output directory so runs resume idempotently.
//
// Every run is a pure function of its spec and seeds: rerunning writes
// byte-identical files. Wall-clock timings therefore go to the log stream,
// not into the results CSV.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "perfusion/augment.hpp"
#include "perfusion/sample.hpp"
#include "perfusion/simulate.hpp"

namespace perfusion {

enum class ExperimentKind { NoiseSweep, DataSize };

// Per-stage RNG seeds, derived from one base value so that no two stages
// (and in particular train and test data) share a stream.
struct StageSeeds {
    std::uint64_t train_data = 0;
    std::uint64_t test_data = 0;
    std::uint64_t model_init = 0;
    std::uint64_t train_stream = 0;
    std::uint64_t tune = 0;
    std::uint64_t augment = 0;

    static StageSeeds from_base(std::uint64_t base);
};

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::NoiseSweep;
    Target target = Target::Cbf;

    std::vector<double> sigmas{0.1, 0.2, 0.4, 0.8, 1.6, 3.2}; // noise sweep
    std::vector<std::pair<std::size_t, std::size_t>> size_grid{
        {10, 1},  {10, 10},  {10, 100},  {30, 1},  {30, 10},  {30, 100},
        {100, 1}, {100, 10}, {100, 100}, {300, 1}, {300, 10}, {300, 100}}; // (n_aifs, tccs_per_aif)

    AugmentConfig augment{}; // used by the augmented arm of the data-size runs

    std::size_t train_size = 100000; // desk profile; the full profile uses 1M
    std::size_t test_size = 10000;

    long n_iterations = 488; // fixed iteration budget (one epoch over 1M at batch 2048)
    int batch_size = 2048;
    double learning_rate = 0.01;
    double momentum = 0.9;

    AcquisitionGrid grid{};
    double fine_dt = 0.01;
    std::size_t tune_subsample = 10000;

    StageSeeds seeds = StageSeeds::from_base(1);

    std::string out_dir; // empty: in-memory only, no artifacts
    bool write_scatter = true;

    void validate() const;
};

struct ResultRow {
    std::string method; // "nn" or "deconv"
    Target target = Target::Cbf;
    double sigma = 0.0;
    std::size_t n_aifs = 0;
    std::size_t tccs_per_aif = 0;
    bool augmented = false;
    double mad = 0.0;
    double optimal_scale = 1.0;
    std::optional<double> lambda_rel; // deconv only
};

// Per noise level: generate train/test sets, tune lambda on the training set
// and evaluate the deconvolution on the test set, train the network and
// evaluate it on the same test set. Rows are flushed to results CSV as they
// complete.
std::vector<ResultRow> run_noise_sweep(const ExperimentSpec& spec);

// Fixed sigma = 1: for every (n_aifs, tccs_per_aif) cell, train the network
// on the plain set and on its 10x augmented expansion (same iteration budget
// and same initialization) and evaluate both against a shared test set.
std::vector<ResultRow> run_data_size(const ExperimentSpec& spec);

void write_results_csv(const std::vector<ResultRow>& rows, const std::string& path);
std::vector<ResultRow> read_results_csv(const std::string& path);

// Per-sample (truth, estimate) pairs for plotting. Estimates are raw
// (pre-scaling); the scale that the metric applied is recorded in the
// comment header.
void scatter_export(std::span<const double> truths, std::span<const double> estimates,
                    const std::string& method, Target target, double sigma, double applied_scale,
                    const std::string& path);

// Figure renderers (SVG). They read only the CSV-backed data passed in, so
// re-rendering from the same inputs is byte-identical.
void render_sweep_plot(const std::vector<ResultRow>& rows, Target target, const std::string& path);
void render_datasize_plot(const std::vector<ResultRow>& rows, Target target,
                          const std::string& path);
void render_scatter_plot(const std::string& scatter_csv, const std::string& path);

// Convenience histogram figure of the simulated parameter distributions
// (CBF, CBV, MTT = CBV over CBF in consistent units, Tmax).
void render_histograms(const Dataset& ds, const std::string& path);

} // namespace perfusion
