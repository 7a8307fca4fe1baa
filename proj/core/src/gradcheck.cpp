// SPDX-License-Identifier: Apache-2.0
#include "multilog/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "multilog/cluster.hpp"
#include "multilog/standalone.hpp"

namespace multilog::gradcheck {

using nn::Index;
using nn::Matrix;

namespace {

Matrix random_matrix(Index rows, Index cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(lo, hi);
    }
    return m;
}

// steps matrices of rows x batch packed side by side
std::vector<Matrix> unpack(const Matrix& packed, std::size_t steps, Index batch) {
    std::vector<Matrix> out;
    for (std::size_t t = 0; t < steps; ++t) out.push_back(packed.middleCols(static_cast<Index>(t) * batch, batch));
    return out;
}

Matrix pack(const std::vector<Matrix>& parts) {
    Matrix out(parts.front().rows(), parts.front().cols() * static_cast<Index>(parts.size()));
    for (std::size_t t = 0; t < parts.size(); ++t) {
        out.middleCols(static_cast<Index>(t) * parts[t].cols(), parts[t].cols()) = parts[t];
    }
    return out;
}

double weighted_sum(const Matrix& r, const Matrix& y) { return r.cwiseProduct(y).sum(); }

Result merge(const std::string& name, const Result& a, const Result& b) {
    return {name, std::max(a.max_rel_error, b.max_rel_error), a.checked + b.checked};
}

}  // namespace

double relative_error(double analytic, double numeric, double floor) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

Result check_parameters(const std::string& name, nn::ParamStore& store,
                        const std::function<double(nn::Gradients&)>& loss, double eps) {
    nn::Gradients analytic(store);
    analytic.zero();
    loss(analytic);
    nn::Gradients scratch(store);
    Result r{name, 0.0, 0};
    for (std::size_t p = 0; p < store.size(); ++p) {
        Matrix& w = store.value(p);
        for (Index k = 0; k < w.size(); ++k) {
            const double keep = w.data()[k];
            w.data()[k] = keep + eps;
            scratch.zero();
            const double up = loss(scratch);
            w.data()[k] = keep - eps;
            scratch.zero();
            const double down = loss(scratch);
            w.data()[k] = keep;
            const double numeric = (up - down) / (2.0 * eps);
            r.max_rel_error = std::max(r.max_rel_error, relative_error(analytic[p].data()[k], numeric));
            ++r.checked;
        }
    }
    return r;
}

Result check_input(const std::string& name, Matrix& x, const std::function<double()>& loss,
                   const Matrix& analytic, double eps) {
    if (analytic.rows() != x.rows() || analytic.cols() != x.cols()) {
        throw Error("check_input: analytic gradient shape differs from the input");
    }
    Result r{name, 0.0, 0};
    for (Index k = 0; k < x.size(); ++k) {
        const double keep = x.data()[k];
        x.data()[k] = keep + eps;
        const double up = loss();
        x.data()[k] = keep - eps;
        const double down = loss();
        x.data()[k] = keep;
        r.max_rel_error = std::max(r.max_rel_error, relative_error(analytic.data()[k], (up - down) / (2.0 * eps)));
        ++r.checked;
    }
    return r;
}

void randomize(nn::ParamStore& store, Rng& rng, double scale) {
    for (std::size_t p = 0; p < store.size(); ++p) {
        Matrix& w = store.value(p);
        w = random_matrix(w.rows(), w.cols(), rng, -scale, scale);
    }
}

std::vector<Result> run_suite(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Result> out;

    {
        nn::ParamStore store;
        const auto dense = nn::Dense::create(store, "dense", 5, 4, rng);
        randomize(store, rng);
        Matrix x = random_matrix(5, 3, rng);
        const Matrix r = random_matrix(4, 3, rng);
        auto params = check_parameters("dense", store, [&](nn::Gradients& g) {
            dense.backward(store, x, r, g);
            return weighted_sum(r, dense.forward(store, x));
        });
        nn::Gradients g(store);
        const Matrix dx = dense.backward(store, x, r, g);
        auto input = check_input("dense", x, [&] { return weighted_sum(r, dense.forward(store, x)); }, dx);
        out.push_back(merge("dense", params, input));
    }

    {
        nn::ParamStore store;
        const std::size_t steps = 5;
        const Index batch = 2;
        const auto lstm = nn::Lstm::create(store, "lstm", 3, 4, rng);
        randomize(store, rng);
        Matrix xs = random_matrix(3, static_cast<Index>(steps) * batch, rng);
        std::vector<Matrix> rs;
        for (std::size_t t = 0; t < steps; ++t) rs.push_back(random_matrix(4, batch, rng));
        const auto forward_loss = [&] {
            const auto cache = lstm.forward(store, unpack(xs, steps, batch));
            double s = 0.0;
            const auto h = cache.states();
            for (std::size_t t = 0; t < steps; ++t) s += weighted_sum(rs[t], h[t]);
            return s;
        };
        auto params = check_parameters("lstm", store, [&](nn::Gradients& g) {
            const auto cache = lstm.forward(store, unpack(xs, steps, batch));
            lstm.backward(store, cache, rs, g);
            return forward_loss();
        });
        nn::Gradients g(store);
        const auto dx = lstm.backward(store, lstm.forward(store, unpack(xs, steps, batch)), rs, g);
        auto input = check_input("lstm", xs, forward_loss, pack(dx));
        out.push_back(merge("lstm", params, input));
    }

    {
        nn::ParamStore store;
        const std::size_t steps = 5;
        const Index batch = 2;
        const auto att = nn::Attention::create(store, "attention", 4, rng);
        randomize(store, rng);
        Matrix hs = random_matrix(4, static_cast<Index>(steps) * batch, rng);
        const Matrix r = random_matrix(8, batch, rng);
        const auto forward_loss = [&] { return weighted_sum(r, att.forward(store, unpack(hs, steps, batch), nullptr)); };
        auto params = check_parameters("attention", store, [&](nn::Gradients& g) {
            nn::Attention::Cache cache;
            const double l = weighted_sum(r, att.forward(store, unpack(hs, steps, batch), &cache));
            att.backward(store, cache, r, g);
            return l;
        });
        nn::Gradients g(store);
        nn::Attention::Cache cache;
        att.forward(store, unpack(hs, steps, batch), &cache);
        const auto dh = att.backward(store, cache, r, g);
        auto input = check_input("attention", hs, forward_loss, pack(dh));
        out.push_back(merge("attention", params, input));
    }

    {
        Matrix logits = random_matrix(1, 4, rng, -2.0, 2.0);
        const nn::Vector targets = (nn::Vector(4) << 1, 0, 1, 0).finished();
        const auto grad = nn::bce_with_logits(logits, targets, 3.0).grad;
        out.push_back(check_input("bce_with_logits", logits,
                                  [&] { return nn::bce_with_logits(logits, targets, 3.0).loss; }, grad));
    }
    {
        Matrix logits = random_matrix(3, 4, rng, -2.0, 2.0);
        const std::vector<int> labels = {0, 2, 1, 2};
        const auto grad = nn::softmax_cross_entropy(logits, labels).grad;
        out.push_back(check_input("softmax_cross_entropy", logits,
                                  [&] { return nn::softmax_cross_entropy(logits, labels).loss; }, grad));
    }
    {
        Matrix pred = random_matrix(3, 4, rng);
        const Matrix target = random_matrix(3, 4, rng);
        const auto grad = nn::mean_squared_error(pred, target).grad;
        out.push_back(check_input("mean_squared_error", pred,
                                  [&] { return nn::mean_squared_error(pred, target).loss; }, grad));
    }

    {
        ProbAutoencoder ae(AutoencoderConfig{8, 3, 6, 5}, rng.next_u64());
        randomize(ae.params(), rng);
        const Matrix inputs = random_matrix(8, 4, rng, 0.0, 1.0);
        out.push_back(check_parameters("autoencoder", ae.params(),
                                       [&](nn::Gradients& g) { return ae.loss_and_grad(inputs, g); }));
    }

    {
        MetaClassifier meta(2, 3, 5, rng.next_u64());
        randomize(meta.params(), rng);
        const Matrix inputs = random_matrix(6, 4, rng);
        const std::vector<int> labels = {0, 1, 1, 0};
        out.push_back(check_parameters("meta_classifier", meta.params(),
                                       [&](nn::Gradients& g) { return meta.loss_and_grad(inputs, labels, g); }));
    }

    {
        const EventSpace space{3};
        Matrix table = random_matrix(4, static_cast<Index>(space.table_size()), rng);
        table.col(space.oov()).setZero();
        table.col(space.pad()).setZero();
        StandaloneModel model(space, table, StandaloneConfig{3, 4, 4, 4}, rng.next_u64());
        randomize(model.params(), rng);
        std::vector<Group> groups(3);
        for (std::size_t k = 0; k < groups.size(); ++k) {
            auto& g = groups[k];
            g.anomalous = k != 1;
            for (std::size_t m = 0; m < 6; ++m) g.events.push_back(static_cast<EventId>(rng.below(4)));
        }
        std::fill(groups[2].events.begin() + 4, groups[2].events.end(), space.pad());
        model.params().value(model.event_table_param()).col(space.pad()).setZero();
        std::vector<const Group*> ptrs;
        for (const auto& g : groups) ptrs.push_back(&g);
        out.push_back(check_parameters("standalone", model.params(),
                                       [&](nn::Gradients& g) { return model.loss_and_grad(ptrs, 2.0, g); }));
    }
    return out;
}

}  // namespace multilog::gradcheck
