// The regression network: concatenated AIF+TCC input, two 30-unit fully
// connected layers with per-unit learnable PReLU slopes, linear scalar
// output. Trained with mean absolute error by SGD with Nesterov momentum.
// Forward and backward passes are written out explicitly; all arithmetic
// is in double precision.
//
// Parameters live in one flat vector (block order: w1, b1, a1, w2, b2, a2,
// w_out, b_out; matrices column-major). The optimizer and the checkpoint
// format both work on that layout.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "perfusion/rng.hpp"
#include "perfusion/sample.hpp"
#include "perfusion/simulate.hpp"

namespace perfusion {

// Fixed divisors applied to the two input branches before the first layer.
// Keeps the network a pure function (no dataset statistics) while bringing
// both branches into a comparable trainable range: AIF peaks reach ~500 HU,
// TCC amplitudes only ~CBV times that, so a shared divisor would leave the
// TCC signal an order of magnitude weaker than the AIF features and the
// first layer spends thousands of iterations re-amplifying it. Targets are
// used raw.
inline constexpr double kAifInputScale = 100.0;
inline constexpr double kTccInputScale = 10.0;

inline constexpr int kHiddenUnits = 30;
inline constexpr std::uint16_t kModelFormatVersion = 1;

class MlpModel {
public:
    explicit MlpModel(int input_dim);

    int input_dim() const { return input_dim_; }
    Eigen::VectorXd params; // flat parameter vector, layout as documented above

    using MatView = Eigen::Map<Eigen::MatrixXd>;
    using VecView = Eigen::Map<Eigen::VectorXd>;
    using ConstMatView = Eigen::Map<const Eigen::MatrixXd>;
    using ConstVecView = Eigen::Map<const Eigen::VectorXd>;

    MatView w1() { return {params.data() + off_w1_, input_dim_, kHiddenUnits}; }
    VecView b1() { return {params.data() + off_b1_, kHiddenUnits}; }
    VecView a1() { return {params.data() + off_a1_, kHiddenUnits}; }
    MatView w2() { return {params.data() + off_w2_, kHiddenUnits, kHiddenUnits}; }
    VecView b2() { return {params.data() + off_b2_, kHiddenUnits}; }
    VecView a2() { return {params.data() + off_a2_, kHiddenUnits}; }
    VecView w_out() { return {params.data() + off_wout_, kHiddenUnits}; }
    double& b_out() { return params(off_bout_); }

    ConstMatView w1() const { return {params.data() + off_w1_, input_dim_, kHiddenUnits}; }
    ConstVecView b1() const { return {params.data() + off_b1_, kHiddenUnits}; }
    ConstVecView a1() const { return {params.data() + off_a1_, kHiddenUnits}; }
    ConstMatView w2() const { return {params.data() + off_w2_, kHiddenUnits, kHiddenUnits}; }
    ConstVecView b2() const { return {params.data() + off_b2_, kHiddenUnits}; }
    ConstVecView a2() const { return {params.data() + off_a2_, kHiddenUnits}; }
    ConstVecView w_out() const { return {params.data() + off_wout_, kHiddenUnits}; }
    double b_out() const { return params(off_bout_); }

private:
    int input_dim_;
    Eigen::Index off_w1_, off_b1_, off_a1_, off_w2_, off_b2_, off_a2_, off_wout_, off_bout_;
};

// Fan-based uniform init for the weight matrices (bound sqrt(6/(fan_in +
// fan_out)), filled in storage order w1, w2, w_out), zero biases, PReLU
// slopes 0.25.
MlpModel init_model(int input_dim, Rng& rng);

// Single-sample prediction. Throws on input length mismatch.
double forward(const MlpModel& m, std::span<const double> aif, std::span<const double> tcc);

// Mean absolute error. Throws on empty or mismatched inputs.
double l1_loss(std::span<const double> predictions, std::span<const double> truths);

// Build the (batch x input_dim) matrix and target vector for a set of
// samples; rows are concat(aif / kAifInputScale, tcc / kTccInputScale).
Eigen::MatrixXd batch_inputs(const std::vector<const Sample*>& batch);
Eigen::VectorXd batch_targets(const std::vector<const Sample*>& batch, Target target);

struct BatchGradient {
    Eigen::VectorXd grad; // same flat layout as MlpModel::params
    double loss;
};

// Exact mean-L1 gradients for a batch, including the PReLU slopes.
// Subgradient conventions: d|r|/dr = 0 at r = 0; PReLU uses the negative-
// branch slope at z = 0.
BatchGradient backward(const MlpModel& m, const Eigen::MatrixXd& inputs,
                       const Eigen::VectorXd& targets);

// Optional per-sample transform applied on the fly as batches are drawn.
using SampleTransform = std::function<Sample(const Sample&, Rng&)>;

struct TrainConfig {
    double learning_rate = 0.01;
    double momentum = 0.9; // Nesterov
    int batch_size = 2048;
    long n_iterations = 488; // one epoch over 1M samples at batch 2048
    std::uint64_t shuffle_seed = 0;
    Target target = Target::Cbf;

    void validate() const;
};

// Minibatch SGD with Nesterov momentum in lookahead form:
//   v <- mu*v - lr*grad(theta + mu*v);  theta <- theta + v
//
// Batches are drawn from a stream of seeded reshuffled epochs (the run
// cycles epochs when n_iterations exceeds one pass; a final partial epoch
// batch never occurs since the stream is continuous). When a transform is
// supplied, every drawn sample is replaced by transform(sample, rng) using
// the same stream rng (draw order: shuffles at epoch boundaries, then per
// drawn sample the transform's own draws).
//
// Returns the per-iteration mean batch loss. Throws NumericError if the
// loss turns non-finite.
std::vector<double> train(MlpModel& model, const Dataset& data, const TrainConfig& cfg,
                          const SampleTransform* transform = nullptr);

// Order-preserving per-sample prediction. Throws DataError on grid mismatch.
std::vector<double> predict_dataset(const MlpModel& m, const Dataset& ds);

// Checkpoint format: magic "PMLP" | version u16 | input_dim u16 | named
// parameter blocks (name_len u16, name, rows u32, cols u32, f64 data,
// column-major), little-endian, blocks in flat-layout order.
void save_model(const MlpModel& m, const std::string& path);
MlpModel load_model(const std::string& path);

} // namespace perfusion
