#include "perfusion/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "perfusion/errors.hpp"
#include "perfusion/io_util.hpp"
#include "perfusion/parallel.hpp"

namespace perfusion {

namespace {

inline double sign0(double r) { return r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0); }

// PReLU forward and the two backward factors, element-wise over a matrix.
// At z = 0 both branches give h = 0; the z-derivative uses the slope a.
Eigen::MatrixXd prelu(const Eigen::MatrixXd& z, const Eigen::VectorXd& slopes) {
    Eigen::MatrixXd h = z;
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        const double a = slopes(j);
        for (Eigen::Index i = 0; i < z.rows(); ++i)
            if (z(i, j) <= 0.0) h(i, j) = a * z(i, j);
    }
    return h;
}

} // namespace

MlpModel::MlpModel(int input_dim) : input_dim_(input_dim) {
    if (input_dim < 1) throw std::invalid_argument("MlpModel: input_dim must be >= 1");
    off_w1_ = 0;
    off_b1_ = off_w1_ + static_cast<Eigen::Index>(input_dim) * kHiddenUnits;
    off_a1_ = off_b1_ + kHiddenUnits;
    off_w2_ = off_a1_ + kHiddenUnits;
    off_b2_ = off_w2_ + kHiddenUnits * kHiddenUnits;
    off_a2_ = off_b2_ + kHiddenUnits;
    off_wout_ = off_a2_ + kHiddenUnits;
    off_bout_ = off_wout_ + kHiddenUnits;
    params = Eigen::VectorXd::Zero(off_bout_ + 1);
}

MlpModel init_model(int input_dim, Rng& rng) {
    MlpModel m(input_dim);
    const auto fill_uniform = [&rng](MlpModel::MatView w, int fan_in, int fan_out) {
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (Eigen::Index i = 0; i < w.size(); ++i) // column-major storage order
            w.data()[i] = rng.uniform(-bound, bound);
    };
    fill_uniform(m.w1(), input_dim, kHiddenUnits);
    fill_uniform(m.w2(), kHiddenUnits, kHiddenUnits);
    {
        auto w = m.w_out();
        const double bound = std::sqrt(6.0 / (kHiddenUnits + 1));
        for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.uniform(-bound, bound);
    }
    m.a1().setConstant(0.25);
    m.a2().setConstant(0.25);
    return m;
}

double forward(const MlpModel& m, std::span<const double> aif, std::span<const double> tcc) {
    const auto half = static_cast<std::size_t>(m.input_dim()) / 2;
    if (aif.size() != half || tcc.size() != half)
        throw std::invalid_argument("forward: input length does not match model input_dim");

    Eigen::VectorXd x(m.input_dim());
    for (std::size_t i = 0; i < half; ++i)
        x(static_cast<Eigen::Index>(i)) = aif[i] / kAifInputScale;
    for (std::size_t i = 0; i < half; ++i)
        x(static_cast<Eigen::Index>(half + i)) = tcc[i] / kTccInputScale;

    Eigen::VectorXd z1 = m.w1().transpose() * x + m.b1();
    for (Eigen::Index j = 0; j < z1.size(); ++j)
        if (z1(j) <= 0.0) z1(j) *= m.a1()(j);
    Eigen::VectorXd z2 = m.w2().transpose() * z1 + m.b2();
    for (Eigen::Index j = 0; j < z2.size(); ++j)
        if (z2(j) <= 0.0) z2(j) *= m.a2()(j);
    return m.w_out().dot(z2) + m.b_out();
}

double l1_loss(std::span<const double> predictions, std::span<const double> truths) {
    if (predictions.empty()) throw std::invalid_argument("l1_loss: empty input");
    if (predictions.size() != truths.size())
        throw std::invalid_argument("l1_loss: prediction/truth length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        acc += std::abs(predictions[i] - truths[i]);
    return acc / static_cast<double>(predictions.size());
}

Eigen::MatrixXd batch_inputs(const std::vector<const Sample*>& batch) {
    if (batch.empty()) throw std::invalid_argument("batch_inputs: empty batch");
    const auto n = static_cast<Eigen::Index>(batch.front()->aif.size());
    Eigen::MatrixXd x(static_cast<Eigen::Index>(batch.size()), 2 * n);
    for (std::size_t r = 0; r < batch.size(); ++r) {
        const Sample& s = *batch[r];
        for (Eigen::Index i = 0; i < n; ++i) {
            x(static_cast<Eigen::Index>(r), i) = s.aif[static_cast<std::size_t>(i)] / kAifInputScale;
            x(static_cast<Eigen::Index>(r), n + i) =
                s.tcc[static_cast<std::size_t>(i)] / kTccInputScale;
        }
    }
    return x;
}

Eigen::VectorXd batch_targets(const std::vector<const Sample*>& batch, Target target) {
    Eigen::VectorXd t(static_cast<Eigen::Index>(batch.size()));
    for (std::size_t r = 0; r < batch.size(); ++r)
        t(static_cast<Eigen::Index>(r)) =
            target == Target::Cbf ? batch[r]->cbf_true : batch[r]->tmax_true;
    return t;
}

BatchGradient backward(const MlpModel& m, const Eigen::MatrixXd& inputs,
                       const Eigen::VectorXd& targets) {
    const Eigen::Index batch = inputs.rows();
    if (batch == 0) throw std::invalid_argument("backward: empty batch");
    if (inputs.cols() != m.input_dim() || targets.size() != batch)
        throw std::invalid_argument("backward: shape mismatch");

    // Forward with cached pre-activations.
    const Eigen::MatrixXd z1 =
        (inputs * m.w1()).rowwise() + m.b1().transpose();
    const Eigen::MatrixXd h1 = prelu(z1, m.a1());
    const Eigen::MatrixXd z2 = (h1 * m.w2()).rowwise() + m.b2().transpose();
    const Eigen::MatrixXd h2 = prelu(z2, m.a2());
    const Eigen::VectorXd y = (h2 * m.w_out()).array() + m.b_out();

    const Eigen::VectorXd residual = y - targets;
    double loss = 0.0;
    Eigen::VectorXd gy(batch);
    const double inv_b = 1.0 / static_cast<double>(batch);
    for (Eigen::Index i = 0; i < batch; ++i) {
        loss += std::abs(residual(i));
        gy(i) = sign0(residual(i)) * inv_b;
    }
    loss *= inv_b;

    MlpModel grads(m.input_dim()); // zero-initialized, same layout

    grads.b_out() = gy.sum();
    grads.w_out() = h2.transpose() * gy;

    // Layer 2 PReLU backward.
    Eigen::MatrixXd gz2 = gy * m.w_out().transpose(); // gradient w.r.t. h2 first
    {
        auto ga2 = grads.a2();
        for (Eigen::Index j = 0; j < kHiddenUnits; ++j) {
            const double a = m.a2()(j);
            for (Eigen::Index i = 0; i < batch; ++i) {
                const double z = z2(i, j);
                if (z <= 0.0) {
                    ga2(j) += gz2(i, j) * z;
                    gz2(i, j) *= a;
                }
            }
        }
    }
    grads.b2() = gz2.colwise().sum().transpose();
    grads.w2() = h1.transpose() * gz2;

    // Layer 1 PReLU backward.
    Eigen::MatrixXd gz1 = gz2 * m.w2().transpose();
    {
        auto ga1 = grads.a1();
        for (Eigen::Index j = 0; j < kHiddenUnits; ++j) {
            const double a = m.a1()(j);
            for (Eigen::Index i = 0; i < batch; ++i) {
                const double z = z1(i, j);
                if (z <= 0.0) {
                    ga1(j) += gz1(i, j) * z;
                    gz1(i, j) *= a;
                }
            }
        }
    }
    grads.b1() = gz1.colwise().sum().transpose();
    grads.w1() = inputs.transpose() * gz1;

    return {std::move(grads.params), loss};
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) && learning_rate != 0.0)
        throw std::invalid_argument("TrainConfig: learning_rate must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw std::invalid_argument("TrainConfig: momentum must be in [0, 1)");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (n_iterations < 0) throw std::invalid_argument("TrainConfig: n_iterations must be >= 0");
}

std::vector<double> train(MlpModel& model, const Dataset& data, const TrainConfig& cfg,
                          const SampleTransform* transform) {
    cfg.validate();
    if (data.empty()) throw std::invalid_argument("train: empty dataset");
    if (2 * data.grid.n_samples != model.input_dim())
        throw DataError("train: dataset grid does not match model input_dim");

    Rng rng(derive_stream(cfg.shuffle_seed, seed_tag::train_stream, 0));
    const std::size_t n = data.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t pos = n; // triggers a shuffle before the first draw

    Eigen::VectorXd theta = model.params;
    Eigen::VectorXd velocity = Eigen::VectorXd::Zero(theta.size());
    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(cfg.n_iterations));

    std::vector<Sample> transformed; // storage for on-the-fly variants
    std::vector<const Sample*> batch(static_cast<std::size_t>(cfg.batch_size));

    for (long it = 0; it < cfg.n_iterations; ++it) {
        if (transform) {
            transformed.clear();
            transformed.reserve(static_cast<std::size_t>(cfg.batch_size));
        }
        for (int b = 0; b < cfg.batch_size; ++b) {
            if (pos == n) {
                // Fisher-Yates reshuffle at every epoch boundary.
                for (std::size_t i = 0; i + 1 < n; ++i) {
                    const auto j =
                        i + static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(n - 1 - i)));
                    std::swap(order[i], order[j]);
                }
                pos = 0;
            }
            const Sample& s = data.samples[order[pos++]];
            if (transform) {
                transformed.push_back((*transform)(s, rng));
                batch[static_cast<std::size_t>(b)] = &transformed.back();
            } else {
                batch[static_cast<std::size_t>(b)] = &s;
            }
        }

        const Eigen::MatrixXd inputs = batch_inputs(batch);
        const Eigen::VectorXd targets = batch_targets(batch, cfg.target);

        model.params = theta + cfg.momentum * velocity; // lookahead point
        BatchGradient g = backward(model, inputs, targets);
        if (!std::isfinite(g.loss))
            throw NumericError("train: non-finite batch loss at iteration " + std::to_string(it));

        velocity = cfg.momentum * velocity - cfg.learning_rate * g.grad;
        theta += velocity;
        trace.push_back(g.loss);
    }

    model.params = theta;
    return trace;
}

std::vector<double> predict_dataset(const MlpModel& m, const Dataset& ds) {
    if (!ds.empty() && 2 * ds.grid.n_samples != m.input_dim())
        throw DataError("predict_dataset: dataset grid does not match model input_dim");
    std::vector<double> out(ds.size());
    parallel_for(ds.size(), [&](std::size_t i) {
        out[i] = forward(m, ds.samples[i].aif, ds.samples[i].tcc);
    });
    return out;
}

namespace {

constexpr char kModelMagic[4] = {'P', 'M', 'L', 'P'};

struct BlockSpec {
    const char* name;
    Eigen::Index rows;
    Eigen::Index cols;
};

std::vector<BlockSpec> model_blocks(int input_dim) {
    return {
        {"layer1.weight", input_dim, kHiddenUnits},
        {"layer1.bias", kHiddenUnits, 1},
        {"layer1.prelu", kHiddenUnits, 1},
        {"layer2.weight", kHiddenUnits, kHiddenUnits},
        {"layer2.bias", kHiddenUnits, 1},
        {"layer2.prelu", kHiddenUnits, 1},
        {"output.weight", kHiddenUnits, 1},
        {"output.bias", 1, 1},
    };
}

} // namespace

void save_model(const MlpModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);

    out.write(kModelMagic, 4);
    write_le<std::uint16_t>(out, kModelFormatVersion);
    write_le<std::uint16_t>(out, static_cast<std::uint16_t>(m.input_dim()));

    const double* cursor = m.params.data();
    for (const BlockSpec& block : model_blocks(m.input_dim())) {
        const std::string name = block.name;
        write_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(block.rows));
        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(block.cols));
        const Eigen::Index count = block.rows * block.cols;
        for (Eigen::Index i = 0; i < count; ++i) write_le_f64(out, cursor[i]);
        cursor += count;
    }
    if (!out) throw DataError("write failed: " + path);
}

MlpModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model: " + path);

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kModelMagic, 4) != 0)
        throw DataError("not a model file (bad magic): " + path);
    const auto version = read_le<std::uint16_t>(in);
    if (version != kModelFormatVersion)
        throw DataError("unsupported model version " + std::to_string(version) + ": " + path);
    const int input_dim = read_le<std::uint16_t>(in);

    MlpModel m(input_dim);
    double* cursor = m.params.data();
    for (const BlockSpec& block : model_blocks(input_dim)) {
        const auto name_len = read_le<std::uint16_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in || name != block.name)
            throw DataError("model block mismatch, expected " + std::string(block.name));
        const auto rows = read_le<std::uint32_t>(in);
        const auto cols = read_le<std::uint32_t>(in);
        if (rows != static_cast<std::uint32_t>(block.rows) ||
            cols != static_cast<std::uint32_t>(block.cols))
            throw DataError("model block " + name + " has unexpected shape");
        const Eigen::Index count = block.rows * block.cols;
        for (Eigen::Index i = 0; i < count; ++i) cursor[i] = read_le_f64(in);
        cursor += count;
    }
    return m;
}

} // namespace perfusion
