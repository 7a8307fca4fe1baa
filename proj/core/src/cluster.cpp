// SPDX-License-Identifier: Apache-2.0
#include "multilog/cluster.hpp"

#include <algorithm>

#include <fmt/core.h>

namespace multilog {

using nn::Index;
using nn::Matrix;
using nn::Vector;

std::vector<double> fix_length(std::span<const double> list, std::size_t beta) {
    std::vector<double> out(beta, 0.0);
    const std::size_t keep = std::min(beta, list.size());
    std::copy(list.end() - static_cast<std::ptrdiff_t>(keep), list.end(),
              out.end() - static_cast<std::ptrdiff_t>(keep));
    return out;
}

void AutoencoderConfig::validate() const {
    if (beta < 1 || mu < 1 || width1 < 1 || width2 < 1) {
        throw Error("autoencoder sizes must be positive");
    }
}

ProbAutoencoder::ProbAutoencoder(AutoencoderConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    const Index widths[4] = {static_cast<Index>(cfg_.beta), cfg_.width1, cfg_.width2, cfg_.mu};
    for (int k = 0; k < 3; ++k) {
        enc_[k] = nn::Dense::create(store_, fmt::format("encoder.{}", k), widths[k], widths[k + 1], rng);
    }
    for (int k = 0; k < 3; ++k) {
        dec_[k] = nn::Dense::create(store_, fmt::format("decoder.{}", k), widths[3 - k],
                                    widths[2 - k], rng);
    }
}

Matrix ProbAutoencoder::encode_batch(const Matrix& inputs) const {
    Matrix a = nn::relu(enc_[0].forward(store_, inputs));
    a = nn::relu(enc_[1].forward(store_, a));
    return enc_[2].forward(store_, a);
}

Matrix ProbAutoencoder::reconstruct_batch(const Matrix& inputs) const {
    Matrix a = nn::relu(dec_[0].forward(store_, encode_batch(inputs)));
    a = nn::relu(dec_[1].forward(store_, a));
    return dec_[2].forward(store_, a);
}

Vector ProbAutoencoder::encode(std::span<const double> list) const {
    const auto fixed = fix_length(list, cfg_.beta);
    const Matrix x = Eigen::Map<const Vector>(fixed.data(), static_cast<Index>(fixed.size()));
    return encode_batch(x).col(0);
}

Vector ProbAutoencoder::decode(const Vector& latent) const {
    Matrix a = nn::relu(dec_[0].forward(store_, latent));
    a = nn::relu(dec_[1].forward(store_, a));
    return dec_[2].forward(store_, a).col(0);
}

double ProbAutoencoder::loss_and_grad(const Matrix& inputs, nn::Gradients& grads) const {
    // forward with every activation kept for the backward pass
    Matrix acts[7];
    acts[0] = inputs;
    acts[1] = nn::relu(enc_[0].forward(store_, acts[0]));
    acts[2] = nn::relu(enc_[1].forward(store_, acts[1]));
    acts[3] = enc_[2].forward(store_, acts[2]);
    acts[4] = nn::relu(dec_[0].forward(store_, acts[3]));
    acts[5] = nn::relu(dec_[1].forward(store_, acts[4]));
    acts[6] = dec_[2].forward(store_, acts[5]);
    const auto loss = nn::mean_squared_error(acts[6], inputs);

    Matrix d = dec_[2].backward(store_, acts[5], loss.grad, grads);
    d = dec_[1].backward(store_, acts[4], nn::relu_backward(acts[5], d), grads);
    d = dec_[0].backward(store_, acts[3], nn::relu_backward(acts[4], d), grads);
    d = enc_[2].backward(store_, acts[2], d, grads);
    d = enc_[1].backward(store_, acts[1], nn::relu_backward(acts[2], d), grads);
    enc_[0].backward(store_, acts[0], nn::relu_backward(acts[1], d), grads);
    return loss.loss;
}

void ProbAutoencoder::save(const std::filesystem::path& path) const {
    nn::Checkpoint ck;
    ck.meta["kind"] = "autoencoder";
    ck.meta["beta"] = std::to_string(cfg_.beta);
    ck.meta["mu"] = std::to_string(cfg_.mu);
    ck.meta["width1"] = std::to_string(cfg_.width1);
    ck.meta["width2"] = std::to_string(cfg_.width2);
    ck.put_store(store_);
    ck.save(path);
}

ProbAutoencoder ProbAutoencoder::load(const std::filesystem::path& path) {
    const auto ck = nn::Checkpoint::load(path);
    if (ck.require("kind") != "autoencoder") {
        throw Error(fmt::format("{} is not an autoencoder checkpoint", path.string()));
    }
    AutoencoderConfig cfg;
    cfg.beta = std::stoul(ck.require("beta"));
    cfg.mu = std::stol(ck.require("mu"));
    cfg.width1 = std::stol(ck.require("width1"));
    cfg.width2 = std::stol(ck.require("width2"));
    ProbAutoencoder ae(cfg, 0);
    ck.get_store(ae.store_);
    return ae;
}

TrainReport train_autoencoder(ProbAutoencoder& ae, std::span<const ProbabilityList> lists,
                              const nn::TrainConfig& cfg) {
    cfg.validate();
    if (lists.empty()) throw Error("autoencoder training needs at least one probability list");
    const auto beta = ae.config().beta;
    Matrix data(static_cast<Index>(beta), static_cast<Index>(lists.size()));
    for (std::size_t j = 0; j < lists.size(); ++j) {
        const auto fixed = fix_length(lists[j], beta);
        data.col(static_cast<Index>(j)) = Eigen::Map<const Vector>(fixed.data(), static_cast<Index>(beta));
    }

    TrainReport report;
    nn::Adam opt(ae.params(), cfg.learning_rate);
    nn::Gradients grads(ae.params());
    Rng rng(cfg.seed);
    Matrix batch;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto order = nn::shuffled_indices(lists.size(), rng);
        double total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            batch.resize(static_cast<Index>(beta), static_cast<Index>(stop - start));
            for (std::size_t k = start; k < stop; ++k) {
                batch.col(static_cast<Index>(k - start)) = data.col(static_cast<Index>(order[k]));
            }
            total += static_cast<double>(stop - start) *
                     nn::train_step(ae.params(), opt, grads, cfg,
                                    [&](nn::Gradients& g) { return ae.loss_and_grad(batch, g); },
                                    "autoencoder");
        }
        report.epoch_loss.push_back(total / static_cast<double>(lists.size()));
    }
    return report;
}

MetaClassifier::MetaClassifier(std::size_t n_nodes, Index mu, Index hidden, std::uint64_t seed)
    : n_nodes_(n_nodes), mu_(mu), hidden_(hidden) {
    if (n_nodes_ == 0 || mu_ <= 0 || hidden_ <= 0) throw Error("meta-classifier sizes must be positive");
    Rng rng(seed);
    hidden_layer_ = nn::Dense::create(store_, "meta.hidden", static_cast<Index>(n_nodes_) * mu_, hidden_, rng);
    output_layer_ = nn::Dense::create(store_, "meta.output", hidden_, 2, rng);
}

Matrix MetaClassifier::logits(const Matrix& inputs) const {
    return output_layer_.forward(store_, nn::relu(hidden_layer_.forward(store_, inputs)));
}

ClusterVerdict MetaClassifier::classify(std::span<const Vector> latents) const {
    if (latents.size() != n_nodes_) {
        throw Error(fmt::format("meta-classifier expects {} node latents, got {}", n_nodes_, latents.size()));
    }
    for (const auto& z : latents) {
        if (z.size() != mu_) {
            throw Error(fmt::format("node latent has length {}, expected {}", z.size(), mu_));
        }
    }
    const Vector p = nn::softmax(logits(concat_latents(latents)).col(0));
    return ClusterVerdict{p(0), p(1)};
}

double MetaClassifier::loss_and_grad(const Matrix& inputs, const std::vector<int>& labels,
                                     nn::Gradients& grads) const {
    const Matrix hidden = nn::relu(hidden_layer_.forward(store_, inputs));
    const Matrix out = output_layer_.forward(store_, hidden);
    const auto loss = nn::softmax_cross_entropy(out, labels);
    const Matrix d_hidden = output_layer_.backward(store_, hidden, loss.grad, grads);
    hidden_layer_.backward(store_, inputs, nn::relu_backward(hidden, d_hidden), grads);
    return loss.loss;
}

void MetaClassifier::save(const std::filesystem::path& path) const {
    nn::Checkpoint ck;
    ck.meta["kind"] = "meta";
    ck.meta["n_nodes"] = std::to_string(n_nodes_);
    ck.meta["mu"] = std::to_string(mu_);
    ck.meta["hidden"] = std::to_string(hidden_);
    ck.put_store(store_);
    ck.save(path);
}

MetaClassifier MetaClassifier::load(const std::filesystem::path& path, std::size_t expected_nodes) {
    const auto ck = nn::Checkpoint::load(path);
    if (ck.require("kind") != "meta") {
        throw Error(fmt::format("{} is not a meta-classifier checkpoint", path.string()));
    }
    const auto n = std::stoul(ck.require("n_nodes"));
    if (n != expected_nodes) {
        throw Error(fmt::format("meta-classifier was trained for {} nodes, dataset has {}", n,
                                expected_nodes));
    }
    MetaClassifier meta(n, std::stol(ck.require("mu")), std::stol(ck.require("hidden")), 0);
    ck.get_store(meta.store_);
    return meta;
}

Vector concat_latents(std::span<const Vector> latents) {
    Index total = 0;
    for (const auto& z : latents) total += z.size();
    Vector out(total);
    Index at = 0;
    for (const auto& z : latents) {
        out.segment(at, z.size()) = z;
        at += z.size();
    }
    return out;
}

std::vector<Vector> window_latents(const ProbAutoencoder& ae, std::span<const ProbabilityList> node_lists) {
    std::vector<Vector> out;
    out.reserve(node_lists.size());
    for (const auto& list : node_lists) {
        if (list.empty()) {
            out.push_back(Vector::Zero(ae.config().mu));
        } else {
            out.push_back(ae.encode(list));
        }
    }
    return out;
}

TrainReport train_meta(MetaClassifier& meta, std::span<const MetaSample> samples,
                       const nn::TrainConfig& cfg) {
    cfg.validate();
    std::size_t pos = 0;
    for (const auto& s : samples) pos += s.anomalous ? 1 : 0;
    if (pos == 0 || pos == samples.size()) {
        throw Error(fmt::format("meta-classifier training set has a single class ({} anomalous of {})",
                                pos, samples.size()));
    }
    const Index dim = static_cast<Index>(meta.n_nodes()) * meta.mu();
    for (const auto& s : samples) {
        if (s.features.size() != dim) throw Error("meta sample has the wrong feature length");
    }

    TrainReport report;
    nn::Adam opt(meta.params(), cfg.learning_rate);
    nn::Gradients grads(meta.params());
    Rng rng(cfg.seed);
    Matrix batch;
    std::vector<int> labels;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto order = nn::shuffled_indices(samples.size(), rng);
        double total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            batch.resize(dim, static_cast<Index>(stop - start));
            labels.clear();
            for (std::size_t k = start; k < stop; ++k) {
                batch.col(static_cast<Index>(k - start)) = samples[order[k]].features;
                labels.push_back(samples[order[k]].anomalous ? 1 : 0);
            }
            total += static_cast<double>(stop - start) *
                     nn::train_step(meta.params(), opt, grads, cfg,
                                    [&](nn::Gradients& g) { return meta.loss_and_grad(batch, labels, g); },
                                    "meta-classifier");
        }
        report.epoch_loss.push_back(total / static_cast<double>(samples.size()));
    }
    return report;
}

}  // namespace multilog
