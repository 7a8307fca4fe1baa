// SPDX-License-Identifier: Apache-2.0
#include "multilog/nn.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <fmt/core.h>

#include "multilog/text.hpp"

namespace multilog::nn {

std::size_t ParamStore::add(std::string name, Matrix init) {
    if (find(name)) throw Error(fmt::format("duplicate parameter name '{}'", name));
    params_.push_back(Param{std::move(name), std::move(init)});
    return params_.size() - 1;
}

std::optional<std::size_t> ParamStore::find(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name == name) return i;
    }
    return std::nullopt;
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
    return n;
}

Gradients::Gradients(const ParamStore& store) {
    grads_.reserve(store.size());
    for (std::size_t i = 0; i < store.size(); ++i) {
        grads_.push_back(Matrix::Zero(store.value(i).rows(), store.value(i).cols()));
    }
}

void Gradients::zero() {
    for (auto& g : grads_) g.setZero();
}

double Gradients::norm() const {
    double sq = 0.0;
    for (const auto& g : grads_) sq += g.squaredNorm();
    return std::sqrt(sq);
}

void Gradients::scale(double s) {
    for (auto& g : grads_) g *= s;
}

Matrix uniform_fan_in(Index rows, Index cols, Index fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Index>(fan_in, 1)));
    Matrix m(rows, cols);
    // column-major fill order is part of the determinism contract
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(-bound, bound);
    }
    return m;
}

Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }

Matrix relu_backward(const Matrix& y, const Matrix& dy) {
    return (y.array() > 0.0).select(dy, 0.0);
}

Matrix sigmoid(const Matrix& x) {
    return x.unaryExpr([](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
    });
}

Vector softmax(const Vector& scores) {
    if (scores.size() == 0) return scores;
    const Vector e = (scores.array() - scores.maxCoeff()).exp();
    return e / e.sum();
}

Matrix softmax_columns(const Matrix& scores) {
    Matrix out(scores.rows(), scores.cols());
    for (Index j = 0; j < scores.cols(); ++j) out.col(j) = softmax(scores.col(j));
    return out;
}

// Dense ---------------------------------------------------------------------

Dense Dense::create(ParamStore& store, const std::string& name, Index in, Index out, Rng& rng) {
    Dense d;
    d.in = in;
    d.out = out;
    d.weight = store.add(name + ".weight", uniform_fan_in(out, in, in, rng));
    d.bias = store.add(name + ".bias", Matrix::Zero(out, 1));
    return d;
}

Matrix Dense::forward(const ParamStore& store, const Matrix& x) const {
    if (x.rows() != in) {
        throw Error(fmt::format("dense layer expects {} inputs, got {}", in, x.rows()));
    }
    Matrix y = store.value(weight) * x;
    y.colwise() += store.value(bias).col(0);
    return y;
}

Matrix Dense::backward(const ParamStore& store, const Matrix& x, const Matrix& dy,
                       Gradients& grads) const {
    grads[weight].noalias() += dy * x.transpose();
    grads[bias].col(0) += dy.rowwise().sum();
    return store.value(weight).transpose() * dy;
}

// LSTM ----------------------------------------------------------------------

Lstm Lstm::create(ParamStore& store, const std::string& name, Index in, Index hidden, Rng& rng) {
    Lstm l;
    l.in = in;
    l.hidden = hidden;
    l.w_input = store.add(name + ".w_input", uniform_fan_in(4 * hidden, in, hidden, rng));
    l.w_hidden = store.add(name + ".w_hidden", uniform_fan_in(4 * hidden, hidden, hidden, rng));
    l.bias = store.add(name + ".bias", Matrix::Zero(4 * hidden, 1));
    return l;
}

Lstm::Cache Lstm::forward(const ParamStore& store, const std::vector<Matrix>& xs) const {
    const Matrix& wx = store.value(w_input);
    const Matrix& wh = store.value(w_hidden);
    const auto b = store.value(bias).col(0);
    const Index batch = xs.empty() ? 0 : xs.front().cols();
    const Index H = hidden;

    Cache cache;
    cache.x = xs;
    cache.h.reserve(xs.size() + 1);
    cache.c.reserve(xs.size() + 1);
    cache.h.push_back(Matrix::Zero(H, batch));
    cache.c.push_back(Matrix::Zero(H, batch));
    Matrix z(4 * H, batch);
    for (const auto& x : xs) {
        if (x.rows() != in || x.cols() != batch) {
            throw Error(fmt::format("lstm expects {}x{} steps, got {}x{}", in, batch, x.rows(), x.cols()));
        }
        z.noalias() = wx * x;
        z.noalias() += wh * cache.h.back();
        z.colwise() += b;
        Matrix i = sigmoid(z.topRows(H));
        Matrix f = sigmoid(z.middleRows(H, H));
        Matrix g = z.middleRows(2 * H, H).array().tanh().matrix();
        Matrix o = sigmoid(z.bottomRows(H));
        Matrix c = f.cwiseProduct(cache.c.back()) + i.cwiseProduct(g);
        Matrix h = o.cwiseProduct(c.array().tanh().matrix());
        cache.i.push_back(std::move(i));
        cache.f.push_back(std::move(f));
        cache.g.push_back(std::move(g));
        cache.o.push_back(std::move(o));
        cache.c.push_back(std::move(c));
        cache.h.push_back(std::move(h));
    }
    return cache;
}

std::vector<Matrix> Lstm::backward(const ParamStore& store, const Cache& cache,
                                   const std::vector<Matrix>& dh, Gradients& grads) const {
    const Matrix& wx = store.value(w_input);
    const Matrix& wh = store.value(w_hidden);
    const std::size_t steps = cache.x.size();
    const Index batch = steps == 0 ? 0 : cache.x.front().cols();
    const Index H = hidden;

    std::vector<Matrix> dx(steps);
    Matrix dh_next = Matrix::Zero(H, batch);
    Matrix dc_next = Matrix::Zero(H, batch);
    Matrix dz(4 * H, batch);
    for (std::size_t s = steps; s-- > 0;) {
        const Matrix& i = cache.i[s];
        const Matrix& f = cache.f[s];
        const Matrix& g = cache.g[s];
        const Matrix& o = cache.o[s];
        const Matrix tc = cache.c[s + 1].array().tanh().matrix();

        const Matrix dh_total = dh[s] + dh_next;
        const Matrix d_o = dh_total.cwiseProduct(tc);
        const Matrix dc = dc_next + dh_total.cwiseProduct(o).cwiseProduct(
                                        (1.0 - tc.array().square()).matrix());
        const Matrix d_i = dc.cwiseProduct(g);
        const Matrix d_g = dc.cwiseProduct(i);
        const Matrix d_f = dc.cwiseProduct(cache.c[s]);
        dc_next = dc.cwiseProduct(f);

        dz.topRows(H) = (d_i.array() * i.array() * (1.0 - i.array())).matrix();
        dz.middleRows(H, H) = (d_f.array() * f.array() * (1.0 - f.array())).matrix();
        dz.middleRows(2 * H, H) = (d_g.array() * (1.0 - g.array().square())).matrix();
        dz.bottomRows(H) = (d_o.array() * o.array() * (1.0 - o.array())).matrix();

        grads[w_input].noalias() += dz * cache.x[s].transpose();
        grads[w_hidden].noalias() += dz * cache.h[s].transpose();
        grads[bias].col(0) += dz.rowwise().sum();
        dx[s].noalias() = wx.transpose() * dz;
        dh_next.noalias() = wh.transpose() * dz;
    }
    return dx;
}

// Attention -----------------------------------------------------------------

Attention Attention::create(ParamStore& store, const std::string& name, Index dim, Rng& rng) {
    Attention a;
    a.dim = dim;
    a.weight = store.add(name + ".weight", uniform_fan_in(dim, dim, dim, rng));
    return a;
}

Matrix Attention::forward(const ParamStore& store, const std::vector<Matrix>& h, Cache* cache) const {
    if (h.empty()) throw Error("attention over an empty sequence");
    const Matrix& w = store.value(weight);
    const Matrix& last = h.back();
    const Index batch = last.cols();
    const auto steps = static_cast<Index>(h.size());

    Matrix u = w * last;
    Matrix scores(steps, batch);
    for (Index m = 0; m < steps; ++m) {
        scores.row(m) = h[static_cast<std::size_t>(m)].cwiseProduct(u).colwise().sum();
    }
    Matrix alpha = softmax_columns(scores);

    Matrix out(2 * dim, batch);
    auto context = out.topRows(dim);
    context.setZero();
    for (Index m = 0; m < steps; ++m) {
        context += (h[static_cast<std::size_t>(m)].array().rowwise() * alpha.row(m).array()).matrix();
    }
    out.bottomRows(dim) = last;
    if (cache) {
        cache->h = h;
        cache->u = std::move(u);
        cache->alpha = std::move(alpha);
    }
    return out;
}

std::vector<Matrix> Attention::backward(const ParamStore& store, const Cache& cache,
                                        const Matrix& d_out, Gradients& grads) const {
    const Matrix& w = store.value(weight);
    const auto steps = static_cast<Index>(cache.h.size());
    const Matrix d_context = d_out.topRows(dim);
    const Matrix& alpha = cache.alpha;
    const Index batch = alpha.cols();

    Matrix d_alpha(steps, batch);
    for (Index m = 0; m < steps; ++m) {
        d_alpha.row(m) = cache.h[static_cast<std::size_t>(m)].cwiseProduct(d_context).colwise().sum();
    }
    const Eigen::RowVectorXd weighted = alpha.cwiseProduct(d_alpha).colwise().sum();
    const Matrix d_scores = alpha.cwiseProduct(d_alpha - weighted.replicate(steps, 1));

    std::vector<Matrix> dh(cache.h.size());
    Matrix du = Matrix::Zero(dim, batch);
    for (Index m = 0; m < steps; ++m) {
        const auto& hm = cache.h[static_cast<std::size_t>(m)];
        dh[static_cast<std::size_t>(m)] =
            (d_context.array().rowwise() * alpha.row(m).array() +
             cache.u.array().rowwise() * d_scores.row(m).array())
                .matrix();
        du += (hm.array().rowwise() * d_scores.row(m).array()).matrix();
    }
    const Matrix& last = cache.h.back();
    grads[weight].noalias() += du * last.transpose();
    dh.back() += w.transpose() * du + d_out.bottomRows(dim);
    return dh;
}

Vector attention_weights(const Matrix& h, const Matrix& w) {
    const Vector u = w * h.col(h.cols() - 1);
    return softmax(h.transpose() * u);
}

// Losses --------------------------------------------------------------------

LossResult bce_with_logits(const Matrix& logits, const Vector& targets, double pos_weight) {
    if (logits.rows() != 1 || logits.cols() != targets.size()) {
        throw Error("bce_with_logits: logits must be 1 x B matching the targets");
    }
    const Index n = logits.cols();
    LossResult r;
    r.grad.resize(1, n);
    double total = 0.0;
    for (Index j = 0; j < n; ++j) {
        const double z = logits(0, j);
        const double y = targets(j);
        // log(1 + e^-z) and log(1 + e^z), stable for large |z|
        const double softplus_neg = std::max(-z, 0.0) + std::log1p(std::exp(-std::abs(z)));
        const double softplus_pos = softplus_neg + z;
        const double w_pos = pos_weight * y;
        const double w_neg = 1.0 - y;
        total += w_pos * softplus_neg + w_neg * softplus_pos;
        const double p = 1.0 / (1.0 + std::exp(-z));
        r.grad(0, j) = (-w_pos * (1.0 - p) + w_neg * p) / static_cast<double>(n);
    }
    r.loss = n > 0 ? total / static_cast<double>(n) : 0.0;
    return r;
}

LossResult softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
    if (logits.cols() != static_cast<Index>(labels.size())) {
        throw Error("softmax_cross_entropy: label count differs from batch size");
    }
    const Index n = logits.cols();
    LossResult r;
    r.grad = softmax_columns(logits);
    double total = 0.0;
    for (Index j = 0; j < n; ++j) {
        const int y = labels[static_cast<std::size_t>(j)];
        if (y < 0 || y >= logits.rows()) throw Error("softmax_cross_entropy: label out of range");
        const double shift = logits.col(j).maxCoeff();
        const double lse = shift + std::log((logits.col(j).array() - shift).exp().sum());
        total += lse - logits(y, j);
        r.grad(y, j) -= 1.0;
    }
    if (n > 0) {
        r.grad /= static_cast<double>(n);
        r.loss = total / static_cast<double>(n);
    }
    return r;
}

LossResult mean_squared_error(const Matrix& prediction, const Matrix& target) {
    if (prediction.rows() != target.rows() || prediction.cols() != target.cols()) {
        throw Error("mean_squared_error: shape mismatch");
    }
    LossResult r;
    const Matrix diff = prediction - target;
    const auto count = static_cast<double>(std::max<Index>(diff.size(), 1));
    r.loss = diff.squaredNorm() / count;
    r.grad = 2.0 * diff / count;
    return r;
}

// Optimization --------------------------------------------------------------

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw Error("learning rate must be non-negative");
    if (batch_size == 0) throw Error("batch size must be positive");
    if (!(clip_norm > 0.0)) throw Error("gradient clipping norm must be positive");
}

Adam::Adam(const ParamStore& store, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (std::size_t i = 0; i < store.size(); ++i) {
        m_.push_back(Matrix::Zero(store.value(i).rows(), store.value(i).cols()));
        v_.push_back(Matrix::Zero(store.value(i).rows(), store.value(i).cols()));
    }
}

void Adam::step(ParamStore& store, const Gradients& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t k = 0; k < store.size(); ++k) {
        m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * grads[k];
        v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * grads[k].cwiseProduct(grads[k]);
        store.value(k).array() -=
            lr_ * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + eps_);
    }
}

double clip_gradients(Gradients& grads, double max_norm) {
    const double n = grads.norm();
    if (n > max_norm) grads.scale(max_norm / n);
    return n;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    return idx;
}

// Checkpoints ---------------------------------------------------------------

namespace {
constexpr std::string_view kCheckpointMagic = "multilog-checkpoint 1";
}

void Checkpoint::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write checkpoint {}", path.string()));
    out << kCheckpointMagic << '\n';
    for (const auto& [k, v] : meta) {
        if (k.find_first_of(" \t\n") != std::string::npos || v.find('\n') != std::string::npos) {
            throw Error(fmt::format("checkpoint meta key '{}' is not storable", k));
        }
        out << "meta " << k << ' ' << v << '\n';
    }
    for (const auto& [name, m] : arrays) {
        out << "array " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
        for (Index i = 0; i < m.rows(); ++i) {
            for (Index j = 0; j < m.cols(); ++j) {
                if (j) out << ' ';
                out << fmt::format("{:a}", m(i, j));
            }
            out << '\n';
        }
    }
    if (!out) throw Error(fmt::format("write failed for {}", path.string()));
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot read checkpoint {}", path.string()));
    std::string line;
    if (!std::getline(in, line) || trim(line) != kCheckpointMagic) {
        throw Error(fmt::format("{} is not a checkpoint file", path.string()));
    }
    Checkpoint ck;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        if (line.starts_with("meta ")) {
            const auto rest = std::string_view(line).substr(5);
            const auto sp = rest.find(' ');
            const auto key = std::string(rest.substr(0, sp));
            ck.meta[key] = sp == std::string_view::npos ? std::string() : std::string(rest.substr(sp + 1));
        } else if (line.starts_with("array ")) {
            const auto parts = split_whitespace(line);
            if (parts.size() != 4) throw Error(fmt::format("{}: malformed array header", path.string()));
            const Index rows = std::stol(parts[2]);
            const Index cols = std::stol(parts[3]);
            Matrix m(rows, cols);
            for (Index i = 0; i < rows; ++i) {
                if (!std::getline(in, line)) {
                    throw Error(fmt::format("{}: truncated array {}", path.string(), parts[1]));
                }
                const auto values = split_whitespace(line);
                if (static_cast<Index>(values.size()) != cols) {
                    throw Error(fmt::format("{}: array {} row {} has {} values, expected {}",
                                            path.string(), parts[1], i, values.size(), cols));
                }
                for (Index j = 0; j < cols; ++j) {
                    m(i, j) = std::strtod(values[static_cast<std::size_t>(j)].c_str(), nullptr);
                }
            }
            ck.arrays.emplace_back(parts[1], std::move(m));
        } else {
            throw Error(fmt::format("{}: unexpected line '{}'", path.string(), line));
        }
    }
    return ck;
}

const std::string& Checkpoint::require(const std::string& key) const {
    const auto it = meta.find(key);
    if (it == meta.end()) throw Error(fmt::format("checkpoint lacks '{}'", key));
    return it->second;
}

void Checkpoint::put_store(const ParamStore& store) {
    for (std::size_t i = 0; i < store.size(); ++i) arrays.emplace_back(store.name(i), store.value(i));
}

void Checkpoint::get_store(ParamStore& store) const {
    std::size_t matched = 0;
    for (const auto& [name, m] : arrays) {
        const auto idx = store.find(name);
        if (!idx) continue;
        auto& dst = store.value(*idx);
        if (dst.rows() != m.rows() || dst.cols() != m.cols()) {
            throw Error(fmt::format("checkpoint array {} is {}x{}, model expects {}x{}", name,
                                    m.rows(), m.cols(), dst.rows(), dst.cols()));
        }
        dst = m;
        ++matched;
    }
    if (matched != store.size()) {
        throw Error(fmt::format("checkpoint provides {} of {} parameters", matched, store.size()));
    }
}

}  // namespace multilog::nn
