// SPDX-License-Identifier: Apache-2.0
//
// Small differentiable toolkit with explicit backward passes. Every layer is
// a set of indices into a ParamStore; forward passes read the store, backward
// passes accumulate into a Gradients object of the same layout. Batches are
// column-major: one sample per column.
#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "multilog/common.hpp"

namespace multilog::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

class ParamStore {
public:
    std::size_t add(std::string name, Matrix init);

    Matrix& value(std::size_t i) { return params_[i].value; }
    const Matrix& value(std::size_t i) const { return params_[i].value; }
    const std::string& name(std::size_t i) const { return params_[i].name; }
    std::size_t size() const { return params_.size(); }
    std::optional<std::size_t> find(const std::string& name) const;
    std::size_t scalar_count() const;

private:
    struct Param {
        std::string name;
        Matrix value;
    };
    std::vector<Param> params_;
};

class Gradients {
public:
    explicit Gradients(const ParamStore& store);

    Matrix& operator[](std::size_t i) { return grads_[i]; }
    const Matrix& operator[](std::size_t i) const { return grads_[i]; }
    std::size_t size() const { return grads_.size(); }

    void zero();
    double norm() const;
    void scale(double s);

private:
    std::vector<Matrix> grads_;
};

/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Matrix uniform_fan_in(Index rows, Index cols, Index fan_in, Rng& rng);

// Elementwise activations and their derivatives expressed through the output.
Matrix relu(const Matrix& x);
Matrix relu_backward(const Matrix& y, const Matrix& dy);
Matrix sigmoid(const Matrix& x);

/// Numerically stable softmax (max subtracted first).
Vector softmax(const Vector& scores);
/// Softmax down each column.
Matrix softmax_columns(const Matrix& scores);

struct Dense {
    std::size_t weight = 0;
    std::size_t bias = 0;
    Index in = 0;
    Index out = 0;

    static Dense create(ParamStore& store, const std::string& name, Index in, Index out, Rng& rng);
    Matrix forward(const ParamStore& store, const Matrix& x) const;
    /// Accumulates dW, db; returns dL/dx.
    Matrix backward(const ParamStore& store, const Matrix& x, const Matrix& dy, Gradients& grads) const;
};

struct Lstm {
    std::size_t w_input = 0;   // 4H x in, gate order i, f, g, o
    std::size_t w_hidden = 0;  // 4H x H
    std::size_t bias = 0;      // 4H x 1
    Index in = 0;
    Index hidden = 0;

    struct Cache {
        std::vector<Matrix> x;
        std::vector<Matrix> h;  // h[0] is the zero initial state
        std::vector<Matrix> c;
        std::vector<Matrix> i, f, g, o;

        /// Hidden states h_1..h_M.
        std::vector<Matrix> states() const { return {h.begin() + 1, h.end()}; }
    };

    static Lstm create(ParamStore& store, const std::string& name, Index in, Index hidden, Rng& rng);
    Cache forward(const ParamStore& store, const std::vector<Matrix>& xs) const;
    /// dh[t] is the loss gradient flowing into h_{t+1} from outside the
    /// recurrence. Returns dL/dx per step.
    std::vector<Matrix> backward(const ParamStore& store, const Cache& cache,
                                 const std::vector<Matrix>& dh, Gradients& grads) const;
};

/// Bilinear self-attention over a hidden-state sequence against its last
/// state: score_m = h_m^T W h_M, alpha = softmax(score), c = sum alpha_m h_m,
/// output [c; h_M].
struct Attention {
    std::size_t weight = 0;
    Index dim = 0;

    struct Cache {
        std::vector<Matrix> h;
        Matrix u;      // W h_M, dim x B
        Matrix alpha;  // M x B
    };

    static Attention create(ParamStore& store, const std::string& name, Index dim, Rng& rng);
    Matrix forward(const ParamStore& store, const std::vector<Matrix>& h, Cache* cache) const;
    std::vector<Matrix> backward(const ParamStore& store, const Cache& cache, const Matrix& d_out,
                                 Gradients& grads) const;
};

/// Attention weights for a single sequence; h is dim x M.
Vector attention_weights(const Matrix& h, const Matrix& w);

struct LossResult {
    double loss = 0.0;
    Matrix grad;  // dL/d(input), same shape as the input
};

/// Mean binary cross-entropy on logits (1 x B). `pos_weight` multiplies the
/// terms of positive targets.
LossResult bce_with_logits(const Matrix& logits, const Vector& targets, double pos_weight = 1.0);
/// Mean softmax cross-entropy; logits are K x B, labels in [0, K).
LossResult softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels);
/// Mean of squared differences over all entries.
LossResult mean_squared_error(const Matrix& prediction, const Matrix& target);

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    std::uint64_t seed = 42;
    double clip_norm = 5.0;

    void validate() const;
};

class Adam {
public:
    explicit Adam(const ParamStore& store, double lr = 1e-3, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8);
    void step(ParamStore& store, const Gradients& grads);
    double learning_rate() const { return lr_; }

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Matrix> m_, v_;
};

/// Rescales grads so the global L2 norm is at most max_norm; returns the
/// norm before clipping.
double clip_gradients(Gradients& grads, double max_norm);

/// One optimizer step. `loss_and_grad` fills the (zeroed) gradients and
/// returns the batch loss; a non-finite loss throws Error naming `what`.
template <typename LossFn>
double train_step(ParamStore& store, Adam& opt, Gradients& grads, const TrainConfig& cfg,
                  LossFn&& loss_and_grad, const char* what = "model") {
    grads.zero();
    const double loss = loss_and_grad(grads);
    if (!std::isfinite(loss)) {
        throw Error(std::string(what) + ": non-finite loss during training (value " +
                    std::to_string(loss) + ")");
    }
    clip_gradients(grads, cfg.clip_norm);
    if (cfg.learning_rate > 0.0) opt.step(store, grads);
    return loss;
}

/// Deterministic Fisher-Yates shuffle of 0..n-1.
std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng);

/// Named arrays plus string metadata. Values are stored as hexadecimal
/// floating point so a reload is bit-exact.
struct Checkpoint {
    std::map<std::string, std::string> meta;
    std::vector<std::pair<std::string, Matrix>> arrays;

    void save(const std::filesystem::path& path) const;
    static Checkpoint load(const std::filesystem::path& path);

    const std::string& require(const std::string& key) const;
    void put_store(const ParamStore& store);
    /// Copies arrays into a store with the same names and shapes.
    void get_store(ParamStore& store) const;
};

}  // namespace multilog::nn
