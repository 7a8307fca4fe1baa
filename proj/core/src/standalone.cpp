// SPDX-License-Identifier: Apache-2.0
#include "multilog/standalone.hpp"

#include <algorithm>
#include <string>

#include <fmt/core.h>

namespace multilog {

using nn::Index;
using nn::Matrix;

namespace {
const char* const kBranchNames[3] = {"sequential", "quantitative", "semantic"};
}

void StandaloneConfig::validate() const {
    if (event_dim <= 0 || hidden <= 0 || projection <= 0 || head_hidden <= 0) {
        throw Error("standalone model dimensions must be positive");
    }
}

StandaloneModel::StandaloneModel(EventSpace space, Matrix semantic_table, StandaloneConfig cfg,
                                 std::uint64_t seed)
    : space_(space), semantic_(std::move(semantic_table)), cfg_(cfg) {
    cfg_.validate();
    if (semantic_.cols() != static_cast<Index>(space_.table_size())) {
        throw Error(fmt::format("semantic table has {} columns, event space needs {}",
                                semantic_.cols(), space_.table_size()));
    }
    Rng rng(seed);
    Matrix table = nn::uniform_fan_in(cfg_.event_dim, static_cast<Index>(space_.table_size()),
                                      cfg_.event_dim, rng);
    table.col(space_.pad()).setZero();
    table_ = store_.add("event_table", std::move(table));
    count_proj_ = nn::Dense::create(store_, "quantitative.projection",
                                    static_cast<Index>(space_.count_size()), cfg_.projection, rng);
    sem_proj_ = nn::Dense::create(store_, "semantic.projection", semantic_.rows(), cfg_.projection, rng);
    const Index inputs[3] = {cfg_.event_dim, cfg_.projection, cfg_.projection};
    for (int k = 0; k < 3; ++k) {
        const std::string name = kBranchNames[k];
        branches_[k].lstm = nn::Lstm::create(store_, name + ".lstm", inputs[k], cfg_.hidden, rng);
        branches_[k].attention = nn::Attention::create(store_, name + ".attention", cfg_.hidden, rng);
    }
    head1_ = nn::Dense::create(store_, "head.hidden", 6 * cfg_.hidden, cfg_.head_hidden, rng);
    head2_ = nn::Dense::create(store_, "head.output", cfg_.head_hidden, 1, rng);
}

GroupEmbeddings StandaloneModel::embed(const Group& g) const {
    return GroupEmbeddings{sequential_embed(g, store_.value(table_), space_),
                           quantitative_embed(g, space_), semantic_embed(g, semantic_)};
}

std::vector<Matrix> StandaloneModel::split_steps(const Matrix& stacked, std::size_t steps,
                                                 std::size_t batch) {
    std::vector<Matrix> out;
    out.reserve(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        out.push_back(stacked.middleCols(static_cast<Index>(t * batch), static_cast<Index>(batch)));
    }
    return out;
}

void StandaloneModel::build_inputs(std::span<const Group* const> groups, ForwardCache& fc) const {
    const std::size_t batch = groups.size();
    const std::size_t steps = batch == 0 ? 0 : groups.front()->events.size();
    fc.batch = batch;
    fc.steps = steps;
    const auto cols = static_cast<Index>(batch * steps);
    const Matrix& table = store_.value(table_);
    fc.seq_input.resize(cfg_.event_dim, cols);
    fc.count_input.resize(static_cast<Index>(space_.count_size()), cols);
    fc.sem_input.resize(semantic_.rows(), cols);
    for (std::size_t b = 0; b < batch; ++b) {
        const Group& g = *groups[b];
        if (g.events.size() != steps) throw Error("groups in one batch must share their length");
        Eigen::VectorXd running = Eigen::VectorXd::Zero(static_cast<Index>(space_.count_size()));
        for (std::size_t t = 0; t < steps; ++t) {
            const EventId id = g.events[t];
            if (id >= space_.table_size()) {
                throw Error(fmt::format("event id {} outside the event space", id));
            }
            const auto col = static_cast<Index>(t * batch + b);
            if (id == space_.pad()) {
                fc.seq_input.col(col).setZero();
            } else {
                fc.seq_input.col(col) = table.col(id);
                running(id) += 1.0;
            }
            fc.count_input.col(col) = running;
            fc.sem_input.col(col) = semantic_.col(id);
        }
    }
}

void StandaloneModel::forward(ForwardCache& fc) const {
    fc.branch[0].projected = fc.seq_input;
    fc.branch[1].projected = count_proj_.forward(store_, fc.count_input);
    fc.branch[2].projected = sem_proj_.forward(store_, fc.sem_input);
    const Index H = cfg_.hidden;
    fc.features.resize(6 * H, static_cast<Index>(fc.batch));
    for (int k = 0; k < 3; ++k) {
        auto& bc = fc.branch[k];
        bc.lstm = branches_[k].lstm.forward(store_, split_steps(bc.projected, fc.steps, fc.batch));
        fc.features.middleRows(2 * H * k, 2 * H) =
            branches_[k].attention.forward(store_, bc.lstm.states(), &bc.attention);
    }
    fc.hidden = nn::relu(head1_.forward(store_, fc.features));
    fc.logits = head2_.forward(store_, fc.hidden);
}

double StandaloneModel::estimate_group(const GroupEmbeddings& emb) const {
    const Index steps = emb.sequential.cols();
    const Index expected_rows[3] = {cfg_.event_dim, static_cast<Index>(space_.count_size()),
                                    semantic_.rows()};
    const Matrix* views[3] = {&emb.sequential, &emb.quantitative, &emb.semantic};
    for (int k = 0; k < 3; ++k) {
        if (views[k]->rows() != expected_rows[k] || views[k]->cols() != steps || steps == 0) {
            throw Error(fmt::format("{} branch: embedding is {}x{}, expected {}x{}", kBranchNames[k],
                                    views[k]->rows(), views[k]->cols(), expected_rows[k], steps));
        }
    }
    ForwardCache fc;
    fc.batch = 1;
    fc.steps = static_cast<std::size_t>(steps);
    fc.seq_input = emb.sequential;
    fc.count_input = emb.quantitative;
    fc.sem_input = emb.semantic;
    forward(fc);
    return nn::sigmoid(fc.logits)(0, 0);
}

std::vector<double> StandaloneModel::estimate(std::span<const Group* const> groups) const {
    std::vector<double> out;
    out.reserve(groups.size());
    constexpr std::size_t kChunk = 256;
    for (std::size_t start = 0; start < groups.size(); start += kChunk) {
        const auto chunk = groups.subspan(start, std::min(kChunk, groups.size() - start));
        ForwardCache fc;
        build_inputs(chunk, fc);
        forward(fc);
        const Matrix p = nn::sigmoid(fc.logits);
        for (Index j = 0; j < p.cols(); ++j) out.push_back(p(0, j));
    }
    return out;
}

double StandaloneModel::loss_and_grad(std::span<const Group* const> groups, double pos_weight,
                                      nn::Gradients& grads) const {
    if (groups.empty()) return 0.0;
    ForwardCache fc;
    build_inputs(groups, fc);
    forward(fc);

    Eigen::VectorXd targets(static_cast<Index>(groups.size()));
    for (std::size_t b = 0; b < groups.size(); ++b) {
        targets(static_cast<Index>(b)) = groups[b]->anomalous ? 1.0 : 0.0;
    }
    const auto loss = nn::bce_with_logits(fc.logits, targets, pos_weight);

    const Matrix d_hidden = head2_.backward(store_, fc.hidden, loss.grad, grads);
    const Matrix d_features =
        head1_.backward(store_, fc.features, nn::relu_backward(fc.hidden, d_hidden), grads);

    const Index H = cfg_.hidden;
    const auto cols = static_cast<Index>(fc.batch * fc.steps);
    for (int k = 0; k < 3; ++k) {
        auto& bc = fc.branch[k];
        const auto dh = branches_[k].attention.backward(store_, bc.attention,
                                                        d_features.middleRows(2 * H * k, 2 * H), grads);
        const auto dx = branches_[k].lstm.backward(store_, bc.lstm, dh, grads);
        Matrix d_input(bc.projected.rows(), cols);
        for (std::size_t t = 0; t < fc.steps; ++t) {
            d_input.middleCols(static_cast<Index>(t * fc.batch), static_cast<Index>(fc.batch)) = dx[t];
        }
        if (k == 0) {
            Matrix& d_table = grads[table_];
            for (std::size_t b = 0; b < fc.batch; ++b) {
                for (std::size_t t = 0; t < fc.steps; ++t) {
                    const EventId id = groups[b]->events[t];
                    if (id == space_.pad()) continue;
                    d_table.col(id) += d_input.col(static_cast<Index>(t * fc.batch + b));
                }
            }
        } else if (k == 1) {
            count_proj_.backward(store_, fc.count_input, d_input, grads);
        } else {
            sem_proj_.backward(store_, fc.sem_input, d_input, grads);
        }
    }
    return loss.loss;
}

void StandaloneModel::save(const std::filesystem::path& path) const {
    nn::Checkpoint ck;
    ck.meta["kind"] = "standalone";
    ck.meta["templates"] = std::to_string(space_.templates);
    ck.meta["event_dim"] = std::to_string(cfg_.event_dim);
    ck.meta["hidden"] = std::to_string(cfg_.hidden);
    ck.meta["projection"] = std::to_string(cfg_.projection);
    ck.meta["head_hidden"] = std::to_string(cfg_.head_hidden);
    ck.meta["semantic_dim"] = std::to_string(semantic_.rows());
    ck.put_store(store_);
    ck.save(path);
}

StandaloneModel StandaloneModel::load(const std::filesystem::path& path, Matrix semantic_table) {
    const auto ck = nn::Checkpoint::load(path);
    if (ck.require("kind") != "standalone") {
        throw Error(fmt::format("{} is not a standalone-estimator checkpoint", path.string()));
    }
    StandaloneConfig cfg;
    cfg.event_dim = std::stol(ck.require("event_dim"));
    cfg.hidden = std::stol(ck.require("hidden"));
    cfg.projection = std::stol(ck.require("projection"));
    cfg.head_hidden = std::stol(ck.require("head_hidden"));
    const EventSpace space{std::stoul(ck.require("templates"))};
    if (std::stol(ck.require("semantic_dim")) != semantic_table.rows()) {
        throw Error("semantic table dimension differs from the checkpoint");
    }
    StandaloneModel model(space, std::move(semantic_table), cfg, 0);
    ck.get_store(model.store_);
    return model;
}

double positive_weight(std::size_t negatives, std::size_t positives) {
    if (positives == 0) return 1.0;
    return std::min(20.0, static_cast<double>(negatives) / static_cast<double>(positives));
}

TrainReport train_standalone(StandaloneModel& model, std::span<const Group* const> groups,
                             const nn::TrainConfig& cfg) {
    cfg.validate();
    std::size_t pos = 0;
    for (const Group* g : groups) pos += g->anomalous ? 1 : 0;
    const std::size_t neg = groups.size() - pos;
    if (pos == 0 || neg == 0) {
        throw Error(fmt::format("standalone training set has a single class ({} anomalous, {} normal)",
                                pos, neg));
    }
    TrainReport report;
    report.pos_weight = positive_weight(neg, pos);

    nn::Adam opt(model.params(), cfg.learning_rate);
    nn::Gradients grads(model.params());
    Rng rng(cfg.seed);
    std::vector<const Group*> batch;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto order = nn::shuffled_indices(groups.size(), rng);
        double total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            for (std::size_t k = start; k < stop; ++k) batch.push_back(groups[order[k]]);
            const double loss = nn::train_step(
                model.params(), opt, grads, cfg,
                [&](nn::Gradients& g) { return model.loss_and_grad(batch, report.pos_weight, g); },
                "standalone estimator");
            total += loss * static_cast<double>(batch.size());
        }
        report.epoch_loss.push_back(total / static_cast<double>(groups.size()));
    }
    return report;
}

ProbabilityList probability_list(const StandaloneModel& model, std::span<const Group> groups) {
    std::vector<const Group*> ptrs;
    ptrs.reserve(groups.size());
    for (const auto& g : groups) ptrs.push_back(&g);
    return model.estimate(ptrs);
}

}  // namespace multilog
