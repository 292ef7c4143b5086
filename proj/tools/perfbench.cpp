// perfbench: command-line entry point for the perfusion simulation and
// benchmarking toolkit. One binary, subcommand style; experiment parameters
// come from a key = value config file with every field overridable by flag.
//
// Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numerical
// failure. Log output is line-oriented key=value pairs.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "perfusion/augment.hpp"
#include "perfusion/config.hpp"
#include "perfusion/dataset_io.hpp"
#include "perfusion/deconv.hpp"
#include "perfusion/errors.hpp"
#include "perfusion/harness.hpp"
#include "perfusion/io_util.hpp"
#include "perfusion/metrics.hpp"
#include "perfusion/neuralnet.hpp"
#include "perfusion/parallel.hpp"
#include "perfusion/simulate.hpp"

namespace fs = std::filesystem;
using namespace perfusion;

namespace {

std::uint64_t resolve_seed(std::optional<std::uint64_t> seed) {
    if (seed) {
        std::cout << "seed=" << *seed << " source=flag\n";
        return *seed;
    }
    const auto t = static_cast<std::uint64_t>(
        std::chrono::system_clock::now().time_since_epoch().count());
    const std::uint64_t derived = splitmix64(t);
    std::cout << "seed=" << derived << " source=time\n";
    return derived;
}

std::string default_out_dir() {
    const char* env = std::getenv("PERFBENCH_OUT");
    return env ? env : "out";
}

std::vector<std::pair<std::size_t, std::size_t>> parse_size_grid(const std::string& text) {
    std::vector<std::pair<std::size_t, std::size_t>> grid;
    std::string cleaned = text;
    for (char& c : cleaned)
        if (c == ',') c = ' ';
    std::istringstream words(cleaned);
    std::string token;
    while (words >> token) {
        const auto x = token.find('x');
        if (x == std::string::npos)
            throw DataError("size grid cell must look like 10x10, got: " + token);
        grid.emplace_back(std::stoull(token.substr(0, x)), std::stoull(token.substr(x + 1)));
    }
    if (grid.empty()) throw DataError("empty size grid");
    return grid;
}

struct ExperimentFlags {
    std::string config_path;
    std::string out_dir;
    std::string target = "both";
    std::string profile;
    std::optional<std::uint64_t> seed;
    std::vector<double> sigmas;
    std::string size_grid;
    std::optional<long> train_size, test_size, iterations, batch_size, tune_subsample;
    std::optional<long> grid_n;
    std::optional<double> learning_rate, momentum, span, fine_dt;
    bool no_scatter = false;
};

// Config file values fill the spec first; explicit flags win.
ExperimentSpec build_spec(const ExperimentFlags& fl, ExperimentKind kind, Target target) {
    const std::string section = kind == ExperimentKind::NoiseSweep ? "sweep" : "datasize";
    ConfigFile cfg;
    if (!fl.config_path.empty()) cfg = ConfigFile::parse_file(fl.config_path);

    ExperimentSpec spec;
    spec.kind = kind;
    spec.target = target;

    const std::string profile =
        fl.profile.empty() ? cfg.get_string(section, "profile", "desk") : fl.profile;
    if (profile == "full") {
        spec.train_size = 1000000;
        spec.n_iterations = 488; // one epoch over the full training set
    } else if (profile == "desk") {
        // Smaller stream, same protocol: more passes to reach an equivalent
        // optimization point. Data-size runs keep the fixed 488 budget.
        if (kind == ExperimentKind::NoiseSweep) spec.n_iterations = 1952;
    } else {
        throw DataError("unknown profile: " + profile + " (expected desk or full)");
    }

    spec.train_size = static_cast<std::size_t>(
        cfg.get_long(section, "train_size", static_cast<long>(spec.train_size)));
    spec.test_size = static_cast<std::size_t>(
        cfg.get_long(section, "test_size", static_cast<long>(spec.test_size)));
    spec.n_iterations = cfg.get_long(section, "iterations", spec.n_iterations);
    spec.batch_size = static_cast<int>(cfg.get_long(section, "batch_size", spec.batch_size));
    spec.learning_rate = cfg.get_double(section, "learning_rate", spec.learning_rate);
    spec.momentum = cfg.get_double(section, "momentum", spec.momentum);
    spec.grid.n_samples = static_cast<int>(cfg.get_long(section, "grid_n", spec.grid.n_samples));
    spec.grid.span = cfg.get_double(section, "span", spec.grid.span);
    spec.fine_dt = cfg.get_double(section, "fine_dt", spec.fine_dt);
    spec.tune_subsample = static_cast<std::size_t>(
        cfg.get_long(section, "tune_subsample", static_cast<long>(spec.tune_subsample)));
    spec.sigmas = cfg.get_double_list(section, "sigmas", spec.sigmas);
    if (cfg.has(section, "size_grid"))
        spec.size_grid = parse_size_grid(*cfg.get(section, "size_grid"));
    spec.write_scatter = cfg.get_bool(section, "scatter", spec.write_scatter);

    spec.augment.factor = static_cast<int>(cfg.get_long("augment", "factor", spec.augment.factor));
    spec.augment.shift_lo =
        static_cast<int>(cfg.get_long("augment", "shift_lo", spec.augment.shift_lo));
    spec.augment.shift_hi =
        static_cast<int>(cfg.get_long("augment", "shift_hi", spec.augment.shift_hi));
    spec.augment.scale_lo = cfg.get_double("augment", "scale_lo", spec.augment.scale_lo);
    spec.augment.scale_hi = cfg.get_double("augment", "scale_hi", spec.augment.scale_hi);

    std::uint64_t base_seed = static_cast<std::uint64_t>(cfg.get_long(section, "seed", 1));
    if (fl.seed) base_seed = *fl.seed;
    spec.seeds = StageSeeds::from_base(base_seed);
    std::cout << "seed=" << base_seed << " source=" << (fl.seed ? "flag" : "config") << "\n";

    spec.out_dir =
        fl.out_dir.empty() ? cfg.get_string(section, "out_dir", default_out_dir()) : fl.out_dir;

    if (!fl.sigmas.empty()) spec.sigmas = fl.sigmas;
    if (!fl.size_grid.empty()) spec.size_grid = parse_size_grid(fl.size_grid);
    if (fl.train_size) spec.train_size = static_cast<std::size_t>(*fl.train_size);
    if (fl.test_size) spec.test_size = static_cast<std::size_t>(*fl.test_size);
    if (fl.iterations) spec.n_iterations = *fl.iterations;
    if (fl.batch_size) spec.batch_size = static_cast<int>(*fl.batch_size);
    if (fl.tune_subsample) spec.tune_subsample = static_cast<std::size_t>(*fl.tune_subsample);
    if (fl.grid_n) spec.grid.n_samples = static_cast<int>(*fl.grid_n);
    if (fl.learning_rate) spec.learning_rate = *fl.learning_rate;
    if (fl.momentum) spec.momentum = *fl.momentum;
    if (fl.span) spec.grid.span = *fl.span;
    if (fl.fine_dt) spec.fine_dt = *fl.fine_dt;
    if (fl.no_scatter) spec.write_scatter = false;
    return spec;
}

std::vector<Target> targets_of(const std::string& name) {
    if (name == "both") return {Target::Cbf, Target::Tmax};
    return {parse_target(name)};
}

std::vector<double> dataset_truths(const Dataset& ds, Target target) {
    std::vector<double> truths(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i)
        truths[i] = target == Target::Cbf ? ds.samples[i].cbf_true : ds.samples[i].tmax_true;
    return truths;
}

int run(int argc, char** argv) {
    CLI::App app{"Synthetic CT-perfusion benchmarking toolkit"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads, "Worker thread cap (default: all cores, 1 = serial)");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset");
    struct {
        std::size_t n = 0, aifs = 0, tccs = 1;
        double sigma = 1.0;
        std::optional<std::uint64_t> seed;
        std::string out, csv, target = "cbf";
        int grid_n = 19;
        double span = 40.0, fine_dt = 0.01;
    } sim_args;
    sim->add_option("--n", sim_args.n, "Sample count (distinct AIF per sample)");
    sim->add_option("--aifs", sim_args.aifs, "Number of distinct AIFs");
    sim->add_option("--tccs-per-aif", sim_args.tccs, "Samples per AIF");
    sim->add_option("--sigma", sim_args.sigma, "Gaussian noise level (HU)");
    sim->add_option("--seed", sim_args.seed, "RNG seed");
    sim->add_option("--out", sim_args.out, "Output dataset file")->required();
    sim->add_option("--csv", sim_args.csv, "Also write a lossless CSV export");
    sim->add_option("--target", sim_args.target, "cbf or tmax (selects the CBV range)");
    sim->add_option("--grid-n", sim_args.grid_n, "Samples per curve");
    sim->add_option("--span", sim_args.span, "Acquisition span (s)");
    sim->add_option("--fine-dt", sim_args.fine_dt, "Convolution resolution (s)");

    // augment
    auto* aug = app.add_subcommand("augment", "Expand a dataset with shift/scale augmentation");
    struct {
        std::string in, out;
        int factor = 10;
        std::optional<std::uint64_t> seed;
    } aug_args;
    aug->add_option("--in", aug_args.in, "Input dataset")->required();
    aug->add_option("--out", aug_args.out, "Output dataset")->required();
    aug->add_option("--factor", aug_args.factor, "Augmented copies per sample");
    aug->add_option("--seed", aug_args.seed, "RNG seed");

    // deconv
    auto* dec = app.add_subcommand("deconv", "Deconvolve a dataset and write per-sample estimates");
    struct {
        std::string dataset, out, target = "cbf";
        double lambda_rel = 0.01;
        bool no_spline = false;
    } dec_args;
    dec->add_option("--dataset", dec_args.dataset, "Dataset file")->required();
    dec->add_option("--lambda-rel", dec_args.lambda_rel, "Relative regularization");
    dec->add_option("--target", dec_args.target, "cbf or tmax");
    dec->add_option("--out", dec_args.out, "Output CSV (sample_idx, truth, estimate)")->required();
    dec->add_flag("--no-spline", dec_args.no_spline, "Disable quadratic Tmax refinement");

    // train
    auto* trn = app.add_subcommand("train", "Train the regression network");
    struct {
        std::string dataset, out, trace, target = "cbf";
        long iterations = 488;
        int batch = 2048;
        double lr = 0.01, momentum = 0.9;
        std::optional<std::uint64_t> seed;
        bool augment = false;
    } trn_args;
    trn->add_option("--dataset", trn_args.dataset, "Training dataset")->required();
    trn->add_option("--target", trn_args.target, "cbf or tmax");
    trn->add_option("--iterations", trn_args.iterations, "Minibatch iterations");
    trn->add_option("--batch", trn_args.batch, "Batch size");
    trn->add_option("--lr", trn_args.lr, "Learning rate");
    trn->add_option("--momentum", trn_args.momentum, "Nesterov momentum");
    trn->add_option("--seed", trn_args.seed, "RNG seed (init + shuffling)");
    trn->add_option("--out", trn_args.out, "Output model checkpoint")->required();
    trn->add_option("--loss-trace", trn_args.trace, "Per-iteration loss CSV");
    trn->add_flag("--augment", trn_args.augment, "Apply shift/scale augmentation on the fly");

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Evaluate a model checkpoint on a dataset");
    struct {
        std::string model, dataset, target = "cbf";
    } ev_args;
    ev->add_option("--model", ev_args.model, "Model checkpoint")->required();
    ev->add_option("--dataset", ev_args.dataset, "Dataset file")->required();
    ev->add_option("--target", ev_args.target, "cbf or tmax");

    // sweep / datasize
    ExperimentFlags sw_flags, ds_flags;
    auto* sw = app.add_subcommand("sweep", "Run the noise-sweep comparison experiment");
    sw->add_option("--config", sw_flags.config_path, "Config file (key = value sections)");
    sw->add_option("--out", sw_flags.out_dir, "Output directory");
    sw->add_option("--target", sw_flags.target, "cbf, tmax or both");
    sw->add_option("--profile", sw_flags.profile, "desk (100k train) or full (1M train)");
    sw->add_option("--sigmas", sw_flags.sigmas, "Noise levels")->delimiter(',');
    sw->add_option("--train-size", sw_flags.train_size, "Training samples per noise level");
    sw->add_option("--test-size", sw_flags.test_size, "Test samples per noise level");
    sw->add_option("--iterations", sw_flags.iterations, "Training iterations");
    sw->add_option("--seed", sw_flags.seed, "Base seed");
    sw->add_flag("--no-scatter", sw_flags.no_scatter, "Skip per-sample scatter CSVs");
    sw->add_option("--batch-size", sw_flags.batch_size, "Minibatch size");
    sw->add_option("--lr", sw_flags.learning_rate, "Learning rate");
    sw->add_option("--momentum", sw_flags.momentum, "Nesterov momentum");
    sw->add_option("--grid-n", sw_flags.grid_n, "Samples per curve");
    sw->add_option("--span", sw_flags.span, "Acquisition span (s)");
    sw->add_option("--fine-dt", sw_flags.fine_dt, "Convolution resolution (s)");
    sw->add_option("--tune-subsample", sw_flags.tune_subsample, "Training subsample for lambda tuning");

    auto* dsz = app.add_subcommand("datasize", "Run the training-size x augmentation experiment");
    dsz->add_option("--config", ds_flags.config_path, "Config file");
    dsz->add_option("--out", ds_flags.out_dir, "Output directory");
    dsz->add_option("--target", ds_flags.target, "cbf, tmax or both");
    dsz->add_option("--grid", ds_flags.size_grid, "Cells as AIFSxTCCS, e.g. 10x1,10x10");
    dsz->add_option("--test-size", ds_flags.test_size, "Shared test set size");
    dsz->add_option("--iterations", ds_flags.iterations, "Training iterations per run");
    dsz->add_option("--seed", ds_flags.seed, "Base seed");
    dsz->add_option("--batch-size", ds_flags.batch_size, "Minibatch size");
    dsz->add_option("--lr", ds_flags.learning_rate, "Learning rate");
    dsz->add_option("--momentum", ds_flags.momentum, "Nesterov momentum");
    dsz->add_option("--grid-n", ds_flags.grid_n, "Samples per curve");
    dsz->add_option("--span", ds_flags.span, "Acquisition span (s)");
    dsz->add_option("--fine-dt", ds_flags.fine_dt, "Convolution resolution (s)");

    // plot
    auto* plt = app.add_subcommand("plot", "Render figures from result CSVs or datasets");
    struct {
        std::string results, kind = "sweep", out_dir;
        std::string scatter, histograms, out_file;
    } plt_args;
    plt->add_option("--results", plt_args.results, "Results CSV to plot");
    plt->add_option("--kind", plt_args.kind, "sweep or datasize");
    plt->add_option("--out-dir", plt_args.out_dir, "Directory for figure files");
    plt->add_option("--scatter", plt_args.scatter, "Scatter CSV to plot");
    plt->add_option("--histograms", plt_args.histograms, "Dataset for parameter histograms");
    plt->add_option("--out", plt_args.out_file, "Output SVG (scatter/histogram modes)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e); // prints the help text or error message
        return code == 0 ? 0 : 1;    // usage errors exit 1, --help exits 0
    }

    if (threads > 0) set_parallel_threads(threads);

    if (sim->parsed()) {
        SimConfig cfg;
        cfg.grid = {sim_args.grid_n, sim_args.span};
        cfg.fine_dt = sim_args.fine_dt;
        cfg.noise_sigma = sim_args.sigma;
        cfg.cbv_range = cbv_range_for(parse_target(sim_args.target));
        cfg.rng_seed = resolve_seed(sim_args.seed);
        std::size_t aifs = sim_args.aifs, tccs = sim_args.tccs;
        if (sim_args.n > 0) {
            if (sim_args.aifs > 0) throw DataError("--n and --aifs are mutually exclusive");
            aifs = sim_args.n;
            tccs = 1;
        }
        if (aifs == 0) throw DataError("need --n or --aifs");
        const Dataset ds = generate_dataset(cfg, aifs, tccs);
        save_dataset(ds, sim_args.out);
        std::cout << "written=" << sim_args.out << " n=" << ds.size() << "\n";
        if (!sim_args.csv.empty()) {
            export_dataset_csv(ds, sim_args.csv);
            std::cout << "written=" << sim_args.csv << "\n";
        }
        return 0;
    }

    if (aug->parsed()) {
        AugmentConfig cfg;
        cfg.factor = aug_args.factor;
        cfg.rng_seed = resolve_seed(aug_args.seed);
        const Dataset ds = load_dataset(aug_args.in);
        const Dataset expanded = expand_dataset(ds, cfg);
        save_dataset(expanded, aug_args.out);
        std::cout << "written=" << aug_args.out << " n=" << expanded.size() << "\n";
        return 0;
    }

    if (dec->parsed()) {
        const Target target = parse_target(dec_args.target);
        const Dataset ds = load_dataset(dec_args.dataset);
        DeconvConfig cfg;
        cfg.lambda_rel = dec_args.lambda_rel;
        cfg.grid = ds.grid;
        cfg.spline_refine = !dec_args.no_spline;
        const std::vector<double> estimates = deconvolve_dataset(ds, cfg, target);

        std::ofstream out(dec_args.out, std::ios::trunc);
        if (!out) throw DataError("cannot open for writing: " + dec_args.out);
        out << "sample_idx,truth,estimate\n";
        const std::vector<double> truths = dataset_truths(ds, target);
        for (std::size_t i = 0; i < estimates.size(); ++i)
            out << i << "," << fmt_f64(truths[i]) << "," << fmt_f64(estimates[i]) << "\n";
        const double score = target == Target::Cbf ? scaled_cbf_mad(estimates, truths).mad
                                                   : mad(estimates, truths);
        std::cout << "written=" << dec_args.out << " mad=" << fmt_short(score) << "\n";
        return 0;
    }

    if (trn->parsed()) {
        const Dataset ds = load_dataset(trn_args.dataset);
        const std::uint64_t seed = resolve_seed(trn_args.seed);
        Rng init_rng(derive_stream(seed, seed_tag::model_init, 0));
        MlpModel model = init_model(2 * ds.grid.n_samples, init_rng);

        TrainConfig cfg;
        cfg.learning_rate = trn_args.lr;
        cfg.momentum = trn_args.momentum;
        cfg.batch_size = trn_args.batch;
        cfg.n_iterations = trn_args.iterations;
        cfg.shuffle_seed = seed;
        cfg.target = parse_target(trn_args.target);

        std::vector<double> trace;
        if (trn_args.augment) {
            const AugmentConfig acfg; // defaults
            const SampleTransform transform = [acfg](const Sample& s, Rng& rng) {
                return augment_sample(s, acfg, rng);
            };
            trace = train(model, ds, cfg, &transform);
        } else {
            trace = train(model, ds, cfg);
        }
        save_model(model, trn_args.out);
        std::cout << "written=" << trn_args.out
                  << " final_loss=" << fmt_short(trace.empty() ? 0.0 : trace.back()) << "\n";
        if (!trn_args.trace.empty()) {
            std::ofstream out(trn_args.trace, std::ios::trunc);
            if (!out) throw DataError("cannot open for writing: " + trn_args.trace);
            out << "iteration,loss\n";
            for (std::size_t i = 0; i < trace.size(); ++i)
                out << i << "," << fmt_f64(trace[i]) << "\n";
            std::cout << "written=" << trn_args.trace << "\n";
        }
        return 0;
    }

    if (ev->parsed()) {
        const Target target = parse_target(ev_args.target);
        const MlpModel model = load_model(ev_args.model);
        const Dataset ds = load_dataset(ev_args.dataset);
        const std::vector<double> estimates = predict_dataset(model, ds);
        const std::vector<double> truths = dataset_truths(ds, target);
        if (target == Target::Cbf) {
            const EvalResult r = scaled_cbf_mad(estimates, truths);
            std::cout << "mad=" << fmt_short(r.mad) << " scale=" << fmt_short(r.optimal_scale)
                      << " n=" << r.n << "\n";
        } else {
            std::cout << "mad=" << fmt_short(mad(estimates, truths)) << " scale=1 n=" << ds.size()
                      << "\n";
        }
        return 0;
    }

    if (sw->parsed()) {
        for (Target target : targets_of(sw_flags.target)) {
            const ExperimentSpec spec = build_spec(sw_flags, ExperimentKind::NoiseSweep, target);
            const auto rows = run_noise_sweep(spec);
            if (!spec.out_dir.empty())
                render_sweep_plot(rows, target,
                                  (fs::path(spec.out_dir) /
                                   ("sweep_" + std::string(target_name(target)) + ".svg"))
                                      .string());
        }
        return 0;
    }

    if (dsz->parsed()) {
        for (Target target : targets_of(ds_flags.target)) {
            const ExperimentSpec spec = build_spec(ds_flags, ExperimentKind::DataSize, target);
            const auto rows = run_data_size(spec);
            if (!spec.out_dir.empty())
                render_datasize_plot(rows, target,
                                     (fs::path(spec.out_dir) /
                                      ("datasize_" + std::string(target_name(target)) + ".svg"))
                                         .string());
        }
        return 0;
    }

    if (plt->parsed()) {
        bool did_something = false;
        if (!plt_args.results.empty()) {
            const std::string dir = plt_args.out_dir.empty() ? default_out_dir() : plt_args.out_dir;
            fs::create_directories(dir);
            const auto rows = read_results_csv(plt_args.results);
            for (Target target : {Target::Cbf, Target::Tmax}) {
                const bool any = std::any_of(rows.begin(), rows.end(),
                                             [&](const ResultRow& r) { return r.target == target; });
                if (!any) continue;
                const std::string path =
                    (fs::path(dir) / (plt_args.kind + "_" + target_name(target) + ".svg")).string();
                if (plt_args.kind == "sweep")
                    render_sweep_plot(rows, target, path);
                else if (plt_args.kind == "datasize")
                    render_datasize_plot(rows, target, path);
                else
                    throw DataError("unknown plot kind: " + plt_args.kind);
                std::cout << "written=" << path << "\n";
            }
            did_something = true;
        }
        if (!plt_args.scatter.empty()) {
            if (plt_args.out_file.empty()) throw DataError("--scatter needs --out");
            render_scatter_plot(plt_args.scatter, plt_args.out_file);
            std::cout << "written=" << plt_args.out_file << "\n";
            did_something = true;
        }
        if (!plt_args.histograms.empty()) {
            if (plt_args.out_file.empty()) throw DataError("--histograms needs --out");
            render_histograms(load_dataset(plt_args.histograms), plt_args.out_file);
            std::cout << "written=" << plt_args.out_file << "\n";
            did_something = true;
        }
        if (!did_something) throw DataError("plot: need --results, --scatter or --histograms");
        return 0;
    }

    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const NumericError& e) {
        std::cerr << "error=numerical message=\"" << e.what() << "\"\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error=data message=\"" << e.what() << "\"\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error=usage message=\"" << e.what() << "\"\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error=data message=\"" << e.what() << "\"\n";
        return 2;
    }
}
