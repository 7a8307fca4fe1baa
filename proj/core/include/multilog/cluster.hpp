// SPDX-License-Identifier: Apache-2.0
//
// Cluster-level classification: an autoencoder standardizes each node's
// variable-length probability list into a fixed latent, and a one-hidden-layer
// meta-classifier reads the node latents concatenated in node order.
#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "multilog/nn.hpp"
#include "multilog/standalone.hpp"

namespace multilog {

/// Keeps the last `beta` entries of a longer list; left-pads a shorter one
/// with 0.0.
std::vector<double> fix_length(std::span<const double> list, std::size_t beta);

struct AutoencoderConfig {
    std::size_t beta = 128;
    nn::Index mu = 32;
    nn::Index width1 = 96;
    nn::Index width2 = 64;

    void validate() const;
};

class ProbAutoencoder {
public:
    ProbAutoencoder(AutoencoderConfig cfg, std::uint64_t seed);

    /// Latent Z_i of length mu.
    nn::Vector encode(std::span<const double> list) const;
    /// Reconstruction of length beta.
    nn::Vector decode(const nn::Vector& latent) const;

    /// Columns of `inputs` are fixed-length lists (beta x B).
    nn::Matrix encode_batch(const nn::Matrix& inputs) const;
    nn::Matrix reconstruct_batch(const nn::Matrix& inputs) const;
    /// MSE between inputs and their reconstruction; accumulates gradients.
    double loss_and_grad(const nn::Matrix& inputs, nn::Gradients& grads) const;

    const AutoencoderConfig& config() const { return cfg_; }
    nn::ParamStore& params() { return store_; }
    const nn::ParamStore& params() const { return store_; }

    void save(const std::filesystem::path& path) const;
    static ProbAutoencoder load(const std::filesystem::path& path);

private:
    AutoencoderConfig cfg_;
    nn::ParamStore store_;
    nn::Dense enc_[3];
    nn::Dense dec_[3];
};

/// Lists must be non-empty; each is fixed to beta before training.
TrainReport train_autoencoder(ProbAutoencoder& ae, std::span<const ProbabilityList> lists,
                              const nn::TrainConfig& cfg);

struct ClusterVerdict {
    double p_normal = 0.5;
    double p_anomalous = 0.5;

    bool anomalous() const { return p_anomalous > p_normal; }
};

class MetaClassifier {
public:
    MetaClassifier(std::size_t n_nodes, nn::Index mu, nn::Index hidden, std::uint64_t seed);

    /// Exactly n_nodes latents of length mu; throws Error otherwise.
    ClusterVerdict classify(std::span<const nn::Vector> latents) const;
    /// Columns are concatenated latents (n_nodes * mu x B); rows of the
    /// result are (normal, anomalous) logits.
    nn::Matrix logits(const nn::Matrix& inputs) const;
    double loss_and_grad(const nn::Matrix& inputs, const std::vector<int>& labels,
                         nn::Gradients& grads) const;

    std::size_t n_nodes() const { return n_nodes_; }
    nn::Index mu() const { return mu_; }
    nn::ParamStore& params() { return store_; }
    const nn::ParamStore& params() const { return store_; }

    void save(const std::filesystem::path& path) const;
    /// Throws Error when the stored node count differs from `expected_nodes`.
    static MetaClassifier load(const std::filesystem::path& path, std::size_t expected_nodes);

private:
    std::size_t n_nodes_;
    nn::Index mu_;
    nn::Index hidden_;
    nn::ParamStore store_;
    nn::Dense hidden_layer_, output_layer_;
};

/// Concatenates latents in node order.
nn::Vector concat_latents(std::span<const nn::Vector> latents);

/// Latents for one window: encode(P_i) per node, zero for nodes without groups.
std::vector<nn::Vector> window_latents(const ProbAutoencoder& ae,
                                       std::span<const ProbabilityList> node_lists);

struct MetaSample {
    nn::Vector features;  // concatenated latents
    bool anomalous = false;
};

/// Cross-entropy training; the autoencoder is not involved. Throws Error on a
/// single-class sample set.
TrainReport train_meta(MetaClassifier& meta, std::span<const MetaSample> samples,
                       const nn::TrainConfig& cfg);

}  // namespace multilog
