#include "perfusion/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "perfusion/dataset_io.hpp"
#include "perfusion/deconv.hpp"
#include "perfusion/errors.hpp"
#include "perfusion/io_util.hpp"
#include "perfusion/metrics.hpp"
#include "perfusion/neuralnet.hpp"
#include "perfusion/svg_plot.hpp"

namespace fs = std::filesystem;

namespace perfusion {

namespace {

// Stage tags for deriving the per-stage seeds from one base value.
constexpr std::uint64_t kSeedStageTag = 0x737461676573ULL;

double now_s() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

void log_kv(std::initializer_list<std::pair<const char*, std::string>> kvs) {
    bool first = true;
    for (const auto& [k, v] : kvs) {
        if (!first) std::cout << " ";
        std::cout << k << "=" << v;
        first = false;
    }
    std::cout << "\n" << std::flush;
}

std::string sigma_token(double sigma) { return fmt_short(sigma); }

// Incremental results file: header once, one flushed line per row.
class ResultWriter {
public:
    ResultWriter(const std::string& dir, const std::string& filename) {
        if (dir.empty()) return;
        fs::create_directories(dir);
        path_ = (fs::path(dir) / filename).string();
        out_.open(path_, std::ios::trunc);
        if (!out_) throw DataError("cannot open for writing: " + path_);
        out_ << "method,target,sigma,n_aifs,tccs_per_aif,augmented,mad,optimal_scale,lambda_rel\n";
        out_.flush();
    }

    void add(const ResultRow& r) {
        rows_.push_back(r);
        if (!out_.is_open()) return;
        out_ << r.method << "," << target_name(r.target) << "," << fmt_f64(r.sigma) << ","
             << r.n_aifs << "," << r.tccs_per_aif << "," << (r.augmented ? "true" : "false") << ","
             << fmt_f64(r.mad) << "," << fmt_f64(r.optimal_scale) << ","
             << (r.lambda_rel ? fmt_f64(*r.lambda_rel) : std::string{}) << "\n";
        out_.flush();
    }

    const std::vector<ResultRow>& rows() const { return rows_; }

private:
    std::string path_;
    std::ofstream out_;
    std::vector<ResultRow> rows_;
};

Dataset load_or_generate(const SimConfig& cfg, std::size_t n_aifs, std::size_t tccs,
                         const std::string& path) {
    if (!path.empty() && fs::exists(path)) {
        Dataset ds = load_dataset(path);
        if (ds.size() == n_aifs * tccs && ds.grid == cfg.grid) {
            log_kv({{"stage", "dataset"}, {"action", "reuse"}, {"file", path}});
            return ds;
        }
        log_kv({{"stage", "dataset"}, {"action", "regenerate"}, {"file", path}});
    }
    const double t0 = now_s();
    Dataset ds = generate_dataset(cfg, n_aifs, tccs);
    log_kv({{"stage", "dataset"},
            {"n", std::to_string(ds.size())},
            {"sigma", fmt_short(cfg.noise_sigma)},
            {"runtime_s", fmt_short(now_s() - t0)}});
    if (!path.empty()) save_dataset(ds, path);
    return ds;
}

EvalResult evaluate_target(Target target, std::span<const double> estimates,
                           std::span<const double> truths) {
    if (target == Target::Cbf) return scaled_cbf_mad(estimates, truths);
    EvalResult r;
    r.mad = mad(estimates, truths);
    r.optimal_scale = 1.0;
    r.n = truths.size();
    return r;
}

std::vector<double> truths_of(const Dataset& ds, Target target) {
    std::vector<double> t(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i)
        t[i] = target == Target::Cbf ? ds.samples[i].cbf_true : ds.samples[i].tmax_true;
    return t;
}

std::string join_path(const std::string& dir, const std::string& name) {
    return dir.empty() ? std::string{} : (fs::path(dir) / name).string();
}

} // namespace

StageSeeds StageSeeds::from_base(std::uint64_t base) {
    StageSeeds s;
    s.train_data = derive_stream(base, kSeedStageTag, 1);
    s.test_data = derive_stream(base, kSeedStageTag, 2);
    s.model_init = derive_stream(base, kSeedStageTag, 3);
    s.train_stream = derive_stream(base, kSeedStageTag, 4);
    s.tune = derive_stream(base, kSeedStageTag, 5);
    s.augment = derive_stream(base, kSeedStageTag, 6);
    return s;
}

void ExperimentSpec::validate() const {
    grid.validate();
    augment.validate();
    if (kind == ExperimentKind::NoiseSweep && sigmas.empty())
        throw std::invalid_argument("ExperimentSpec: noise sweep needs at least one sigma");
    if (kind == ExperimentKind::DataSize && size_grid.empty())
        throw std::invalid_argument("ExperimentSpec: data-size run needs a non-empty grid");
    if (train_size < 1 || test_size < 1)
        throw std::invalid_argument("ExperimentSpec: train/test sizes must be >= 1");
    if (n_iterations < 1) throw std::invalid_argument("ExperimentSpec: n_iterations must be >= 1");
}

std::vector<ResultRow> run_noise_sweep(const ExperimentSpec& spec) {
    spec.validate();
    const std::string tname = target_name(spec.target);
    ResultWriter writer(spec.out_dir, "sweep_results_" + tname + ".csv");

    SimConfig base;
    base.grid = spec.grid;
    base.fine_dt = spec.fine_dt;
    base.cbv_range = cbv_range_for(spec.target);

    for (std::size_t si = 0; si < spec.sigmas.size(); ++si) {
        const double sigma = spec.sigmas[si];
        const std::string stoken = sigma_token(sigma);

        SimConfig train_cfg = base;
        train_cfg.noise_sigma = sigma;
        train_cfg.rng_seed = derive_stream(spec.seeds.train_data, seed_tag::train_data, si);
        SimConfig test_cfg = base;
        test_cfg.noise_sigma = sigma;
        test_cfg.rng_seed = derive_stream(spec.seeds.test_data, seed_tag::test_data, si);

        // Every training sample is a distinct acquisition (one TCC per AIF).
        const Dataset train_set = load_or_generate(
            train_cfg, spec.train_size, 1,
            join_path(spec.out_dir, "train_" + tname + "_s" + stoken + ".pben"));
        const Dataset test_set =
            load_or_generate(test_cfg, spec.test_size, 1,
                             join_path(spec.out_dir, "test_" + tname + "_s" + stoken + ".pben"));
        const std::vector<double> test_truths = truths_of(test_set, spec.target);

        // Deconvolution arm: tune on train, evaluate on test.
        {
            const double t0 = now_s();
            double lambda = 0.0;
            const std::string lpath =
                join_path(spec.out_dir, "lambda_" + tname + "_s" + stoken + ".txt");
            bool from_cache = false;
            if (!lpath.empty() && fs::exists(lpath)) {
                std::ifstream in(lpath);
                if (in >> lambda) from_cache = true;
            }
            if (!from_cache) {
                lambda = tune_lambda(train_set, spec.target, lambda_grid(), spec.tune_subsample,
                                     derive_stream(spec.seeds.tune, seed_tag::tune_subsample, si));
                if (!lpath.empty()) {
                    std::ofstream out(lpath, std::ios::trunc);
                    out << fmt_f64(lambda) << "\n";
                }
            }

            DeconvConfig dcfg;
            dcfg.lambda_rel = lambda;
            dcfg.grid = spec.grid;
            dcfg.spline_refine = true;
            const std::vector<double> estimates = deconvolve_dataset(test_set, dcfg, spec.target);
            const EvalResult eval = evaluate_target(spec.target, estimates, test_truths);

            if (spec.write_scatter && !spec.out_dir.empty())
                scatter_export(test_truths, estimates, "deconv", spec.target, sigma,
                               eval.optimal_scale,
                               join_path(spec.out_dir,
                                         "scatter_deconv_" + tname + "_s" + stoken + ".csv"));

            ResultRow row{"deconv", spec.target, sigma, spec.train_size, 1,
                          false,    eval.mad,    eval.optimal_scale, lambda};
            writer.add(row);
            log_kv({{"stage", "deconv"},
                    {"target", tname},
                    {"sigma", stoken},
                    {"lambda_rel", fmt_short(lambda)},
                    {"mad", fmt_short(eval.mad)},
                    {"scale", fmt_short(eval.optimal_scale)},
                    {"runtime_s", fmt_short(now_s() - t0)}});
        }

        // Network arm: train, evaluate on the same test set.
        {
            const double t0 = now_s();
            const std::string mpath =
                join_path(spec.out_dir, "model_" + tname + "_s" + stoken + ".pmlp");
            MlpModel model(2 * spec.grid.n_samples);
            if (!mpath.empty() && fs::exists(mpath)) {
                model = load_model(mpath);
                log_kv({{"stage", "train"}, {"action", "reuse"}, {"file", mpath}});
            } else {
                Rng init_rng(derive_stream(spec.seeds.model_init, seed_tag::model_init, si));
                model = init_model(2 * spec.grid.n_samples, init_rng);
                TrainConfig tcfg;
                tcfg.learning_rate = spec.learning_rate;
                tcfg.momentum = spec.momentum;
                tcfg.batch_size = spec.batch_size;
                tcfg.n_iterations = spec.n_iterations;
                tcfg.shuffle_seed = derive_stream(spec.seeds.train_stream, seed_tag::train_stream, si);
                tcfg.target = spec.target;
                const std::vector<double> trace = train(model, train_set, tcfg);
                if (!mpath.empty()) save_model(model, mpath);
                log_kv({{"stage", "train"},
                        {"target", tname},
                        {"sigma", stoken},
                        {"iterations", std::to_string(spec.n_iterations)},
                        {"final_loss", fmt_short(trace.empty() ? 0.0 : trace.back())},
                        {"runtime_s", fmt_short(now_s() - t0)}});
            }

            const std::vector<double> estimates = predict_dataset(model, test_set);
            const EvalResult eval = evaluate_target(spec.target, estimates, test_truths);

            if (spec.write_scatter && !spec.out_dir.empty())
                scatter_export(test_truths, estimates, "nn", spec.target, sigma,
                               eval.optimal_scale,
                               join_path(spec.out_dir, "scatter_nn_" + tname + "_s" + stoken + ".csv"));

            writer.add({"nn", spec.target, sigma, spec.train_size, 1, false, eval.mad,
                        eval.optimal_scale, std::nullopt});
            log_kv({{"stage", "nn"},
                    {"target", tname},
                    {"sigma", stoken},
                    {"mad", fmt_short(eval.mad)},
                    {"scale", fmt_short(eval.optimal_scale)},
                    {"runtime_s", fmt_short(now_s() - t0)}});
        }
    }
    return writer.rows();
}

std::vector<ResultRow> run_data_size(const ExperimentSpec& spec) {
    spec.validate();
    const std::string tname = target_name(spec.target);
    ResultWriter writer(spec.out_dir, "datasize_results_" + tname + ".csv");
    constexpr double kSigma = 1.0;

    SimConfig base;
    base.grid = spec.grid;
    base.fine_dt = spec.fine_dt;
    base.cbv_range = cbv_range_for(spec.target);
    base.noise_sigma = kSigma;

    SimConfig test_cfg = base;
    test_cfg.rng_seed = derive_stream(spec.seeds.test_data, seed_tag::test_data, 0);
    const Dataset test_set = load_or_generate(
        test_cfg, spec.test_size, 1, join_path(spec.out_dir, "test_" + tname + "_datasize.pben"));
    const std::vector<double> test_truths = truths_of(test_set, spec.target);

    for (std::size_t ci = 0; ci < spec.size_grid.size(); ++ci) {
        const auto [n_aifs, tccs] = spec.size_grid[ci];
        const std::string cell = std::to_string(n_aifs) + "x" + std::to_string(tccs);

        SimConfig train_cfg = base;
        train_cfg.rng_seed = derive_stream(spec.seeds.train_data, seed_tag::train_data, ci);
        const Dataset train_base =
            load_or_generate(train_cfg, n_aifs, tccs,
                             join_path(spec.out_dir, "train_" + tname + "_" + cell + ".pben"));

        for (const bool augmented : {false, true}) {
            const double t0 = now_s();
            const std::string mpath = join_path(
                spec.out_dir,
                "model_" + tname + "_" + cell + (augmented ? "_aug" : "_plain") + ".pmlp");

            MlpModel model(2 * spec.grid.n_samples);
            if (!mpath.empty() && fs::exists(mpath)) {
                model = load_model(mpath);
                log_kv({{"stage", "train"}, {"action", "reuse"}, {"file", mpath}});
            } else {
                // Same initialization for both arms of a cell.
                Rng init_rng(derive_stream(spec.seeds.model_init, seed_tag::model_init, ci));
                model = init_model(2 * spec.grid.n_samples, init_rng);

                Dataset train_set = train_base;
                if (augmented) {
                    AugmentConfig acfg = spec.augment;
                    acfg.rng_seed = derive_stream(spec.seeds.augment, seed_tag::augment, ci);
                    train_set = expand_dataset(train_base, acfg);
                }

                TrainConfig tcfg;
                tcfg.learning_rate = spec.learning_rate;
                tcfg.momentum = spec.momentum;
                tcfg.batch_size = spec.batch_size;
                tcfg.n_iterations = spec.n_iterations; // fixed budget, cycling epochs
                tcfg.shuffle_seed = derive_stream(spec.seeds.train_stream, seed_tag::train_stream,
                                                  2 * ci + (augmented ? 1 : 0));
                tcfg.target = spec.target;
                train(model, train_set, tcfg);
                if (!mpath.empty()) save_model(model, mpath);
            }

            const std::vector<double> estimates = predict_dataset(model, test_set);
            const EvalResult eval = evaluate_target(spec.target, estimates, test_truths);
            writer.add({"nn", spec.target, kSigma, n_aifs, tccs, augmented, eval.mad,
                        eval.optimal_scale, std::nullopt});
            log_kv({{"stage", "datasize"},
                    {"target", tname},
                    {"cell", cell},
                    {"augmented", augmented ? "true" : "false"},
                    {"mad", fmt_short(eval.mad)},
                    {"runtime_s", fmt_short(now_s() - t0)}});
        }
    }
    return writer.rows();
}

void write_results_csv(const std::vector<ResultRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "method,target,sigma,n_aifs,tccs_per_aif,augmented,mad,optimal_scale,lambda_rel\n";
    for (const ResultRow& r : rows) {
        out << r.method << "," << target_name(r.target) << "," << fmt_f64(r.sigma) << "," << r.n_aifs
            << "," << r.tccs_per_aif << "," << (r.augmented ? "true" : "false") << ","
            << fmt_f64(r.mad) << "," << fmt_f64(r.optimal_scale) << ","
            << (r.lambda_rel ? fmt_f64(*r.lambda_rel) : std::string{}) << "\n";
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

} // namespace

std::vector<ResultRow> read_results_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open results: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty results file: " + path);

    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() < 8) throw DataError("malformed results row: " + line);
        ResultRow r;
        r.method = f[0];
        r.target = parse_target(f[1]);
        r.sigma = std::stod(f[2]);
        r.n_aifs = static_cast<std::size_t>(std::stoull(f[3]));
        r.tccs_per_aif = static_cast<std::size_t>(std::stoull(f[4]));
        r.augmented = f[5] == "true";
        r.mad = std::stod(f[6]);
        r.optimal_scale = std::stod(f[7]);
        if (f.size() > 8 && !f[8].empty()) r.lambda_rel = std::stod(f[8]);
        rows.push_back(std::move(r));
    }
    return rows;
}

void scatter_export(std::span<const double> truths, std::span<const double> estimates,
                    const std::string& method, Target target, double sigma, double applied_scale,
                    const std::string& path) {
    if (truths.size() != estimates.size())
        throw std::invalid_argument("scatter_export: length mismatch");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path);
    // Estimates are raw; the header records the scale the metric applied.
    out << "# method=" << method << " target=" << target_name(target)
        << " sigma=" << fmt_f64(sigma) << " optimal_scale=" << fmt_f64(applied_scale) << "\n";
    out << "sample_idx,truth,estimate\n";
    for (std::size_t i = 0; i < truths.size(); ++i)
        out << i << "," << fmt_f64(truths[i]) << "," << fmt_f64(estimates[i]) << "\n";
}

void render_sweep_plot(const std::vector<ResultRow>& rows, Target target, const std::string& path) {
    svg::LineChart chart;
    chart.title = std::string("Test MAD vs noise level (") + target_name(target) + ")";
    chart.x_label = "noise sigma (HU)";
    chart.y_label = target == Target::Cbf ? "MAD (ml/100g/min)" : "MAD (s)";
    chart.log_x = true;

    for (const char* method : {"nn", "deconv"}) {
        svg::Series s;
        s.label = method;
        s.color = std::string(method) == "nn" ? "#d62728" : "#1f77b4";
        for (const ResultRow& r : rows)
            if (r.method == method && r.target == target) s.points.emplace_back(r.sigma, r.mad);
        if (s.points.empty())
            throw DataError(std::string("render_sweep_plot: results contain no rows for method ") +
                            method);
        std::sort(s.points.begin(), s.points.end());
        chart.series.push_back(std::move(s));
    }
    svg::write_file(path, chart.render());
}

void render_datasize_plot(const std::vector<ResultRow>& rows, Target target,
                          const std::string& path) {
    svg::LineChart chart;
    chart.title = std::string("Test MAD vs training set size (") + target_name(target) + ")";
    chart.x_label = "training samples (n_aifs x tccs_per_aif)";
    chart.y_label = target == Target::Cbf ? "MAD (ml/100g/min)" : "MAD (s)";
    chart.log_x = true;

    // One series per (tccs_per_aif, augmented) combination.
    std::vector<std::pair<std::size_t, bool>> combos;
    for (const ResultRow& r : rows) {
        if (r.method != "nn" || r.target != target) continue;
        const std::pair<std::size_t, bool> combo{r.tccs_per_aif, r.augmented};
        if (std::find(combos.begin(), combos.end(), combo) == combos.end())
            combos.push_back(combo);
    }
    if (combos.empty()) throw DataError("render_datasize_plot: results contain no rows for method nn");
    std::sort(combos.begin(), combos.end());

    const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::size_t color_idx = 0;
    for (const auto& [tccs, augmented] : combos) {
        svg::Series s;
        s.label = "tccs=" + std::to_string(tccs) + (augmented ? " aug" : "");
        s.color = palette[color_idx / 2 % 6];
        s.dashed = augmented;
        ++color_idx;
        for (const ResultRow& r : rows)
            if (r.method == "nn" && r.target == target && r.tccs_per_aif == tccs &&
                r.augmented == augmented)
                s.points.emplace_back(static_cast<double>(r.n_aifs * r.tccs_per_aif), r.mad);
        std::sort(s.points.begin(), s.points.end());
        chart.series.push_back(std::move(s));
    }
    svg::write_file(path, chart.render());
}

void render_scatter_plot(const std::string& scatter_csv, const std::string& path) {
    std::ifstream in(scatter_csv);
    if (!in) throw DataError("cannot open scatter CSV: " + scatter_csv);
    std::string line;
    std::string header_info;
    svg::ScatterChart chart;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.front() == '#') {
            header_info = line.substr(1);
            continue;
        }
        if (line.rfind("sample_idx", 0) == 0) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 3) throw DataError("malformed scatter row: " + line);
        chart.points.emplace_back(std::stod(f[1]), std::stod(f[2]));
    }
    chart.title = "Truth vs estimate (" + header_info + ")";
    chart.x_label = "truth";
    chart.y_label = "estimate";
    svg::write_file(path, chart.render());
}

void render_histograms(const Dataset& ds, const std::string& path) {
    if (ds.empty()) throw DataError("render_histograms: empty dataset");
    svg::Histogram cbf{"CBF (ml/100g/min)", {}, 40};
    svg::Histogram cbv{"CBV", {}, 40};
    svg::Histogram mtt{"MTT (s)", {}, 40};
    svg::Histogram tmax{"Tmax (s)", {}, 40};
    for (const Sample& s : ds.samples) {
        cbf.values.push_back(s.cbf_true);
        cbv.values.push_back(s.cbv_true);
        // CBV over CBF in matching units: the IRF peak is cbf*rho/6000 in 1/s.
        mtt.values.push_back(s.cbv_true / (s.cbf_true * kTissueDensity / kCbfUnitFactor));
        tmax.values.push_back(s.tmax_true);
    }
    svg::write_file(path, svg::render_histogram_row(
                              {cbf, cbv, mtt, tmax}, "Simulated perfusion parameter distributions"));
}

} // namespace perfusion
