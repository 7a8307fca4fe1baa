// SPDX-License-Identifier: Apache-2.0
//
// Per-node group estimator: three LSTM branches (sequential, quantitative,
// semantic), each followed by bilinear self-attention, concatenated into a
// small dense head that emits the anomaly probability of one group.
#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "multilog/embeddings.hpp"
#include "multilog/nn.hpp"
#include "multilog/windowing.hpp"

namespace multilog {

using ProbabilityList = std::vector<double>;

struct StandaloneConfig {
    nn::Index event_dim = 32;    // d_e
    nn::Index hidden = 64;       // d_h of every branch LSTM
    nn::Index projection = 64;   // C and V inputs are projected to this width
    nn::Index head_hidden = 64;  // first dense layer of the head

    void validate() const;
};

/// The three views of one group; columns are positions.
struct GroupEmbeddings {
    nn::Matrix sequential;    // d_e x M
    nn::Matrix quantitative;  // (templates + 1) x M
    nn::Matrix semantic;      // d x M
};

struct TrainReport {
    std::vector<double> epoch_loss;
    double pos_weight = 1.0;
};

class StandaloneModel {
public:
    StandaloneModel(EventSpace space, nn::Matrix semantic_table, StandaloneConfig cfg,
                    std::uint64_t seed);

    GroupEmbeddings embed(const Group& g) const;
    /// p in (0, 1) for one group.
    double estimate_group(const GroupEmbeddings& emb) const;
    double estimate_group(const Group& g) const { return estimate_group(embed(g)); }
    /// Batched inference; same values as estimate_group per element.
    std::vector<double> estimate(std::span<const Group* const> groups) const;

    /// Mean weighted BCE over the batch; accumulates parameter gradients.
    double loss_and_grad(std::span<const Group* const> groups, double pos_weight,
                         nn::Gradients& grads) const;

    nn::ParamStore& params() { return store_; }
    const nn::ParamStore& params() const { return store_; }
    const StandaloneConfig& config() const { return cfg_; }
    EventSpace space() const { return space_; }
    const nn::Matrix& semantic_table() const { return semantic_; }
    std::size_t event_table_param() const { return table_; }

    /// Stores hyperparameters and parameters; the semantic table is rebuilt
    /// by the caller from the registry and passed to load().
    void save(const std::filesystem::path& path) const;
    static StandaloneModel load(const std::filesystem::path& path, nn::Matrix semantic_table);

private:
    struct Branch {
        nn::Lstm lstm;
        nn::Attention attention;
    };
    struct BranchCache {
        nn::Matrix projected;  // input to the LSTM, rows x (M*B)
        nn::Lstm::Cache lstm;
        nn::Attention::Cache attention;
    };
    struct ForwardCache {
        std::size_t batch = 0;
        std::size_t steps = 0;
        nn::Matrix seq_input, count_input, sem_input;  // rows x (M*B), step-major
        BranchCache branch[3];
        nn::Matrix features, hidden, logits;
    };

    void build_inputs(std::span<const Group* const> groups, ForwardCache& fc) const;
    void forward(ForwardCache& fc) const;
    static std::vector<nn::Matrix> split_steps(const nn::Matrix& stacked, std::size_t steps,
                                               std::size_t batch);

    EventSpace space_;
    nn::Matrix semantic_;
    StandaloneConfig cfg_;
    nn::ParamStore store_;
    std::size_t table_ = 0;
    nn::Dense count_proj_, sem_proj_;
    Branch branches_[3];
    nn::Dense head1_, head2_;
};

/// Positive-class weight: negatives / positives, capped at 20.
double positive_weight(std::size_t negatives, std::size_t positives);

/// Trains on the pooled groups with weighted BCE. Throws Error when the
/// training set holds a single class.
TrainReport train_standalone(StandaloneModel& model, std::span<const Group* const> groups,
                             const nn::TrainConfig& cfg);

/// Probabilities of one node's groups in one window, in group order.
ProbabilityList probability_list(const StandaloneModel& model, std::span<const Group> groups);

}  // namespace multilog
