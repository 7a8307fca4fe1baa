// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "multilog/standalone.hpp"
#include "test_support.hpp"

using namespace multilog;

namespace {

const EventSpace kSpace{4};
const StandaloneConfig kTiny{8, 8, 8, 16};

nn::Matrix toy_semantic(std::uint64_t seed) {
    Rng rng(seed);
    nn::Matrix t(5, static_cast<nn::Index>(kSpace.table_size()));
    for (nn::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-1.0, 1.0);
    t.col(kSpace.oov()).setZero();
    t.col(kSpace.pad()).setZero();
    return t;
}

// anomalous groups contain event 3, normal ones only events 0..2
std::vector<Group> toy_groups(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Group> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        auto& g = out[k];
        g.anomalous = k % 2 == 0;
        const std::size_t real = 3 + rng.below(4);
        for (std::size_t m = 0; m < 6; ++m) {
            g.events.push_back(m < real ? static_cast<EventId>(rng.below(3)) : kSpace.pad());
        }
        if (g.anomalous) g.events[rng.below(real)] = 3;
    }
    return out;
}

std::vector<const Group*> pointers(const std::vector<Group>& groups) {
    std::vector<const Group*> out;
    for (const auto& g : groups) out.push_back(&g);
    return out;
}

double accuracy(const StandaloneModel& model, const std::vector<Group>& groups) {
    std::size_t ok = 0;
    for (const auto& g : groups) ok += (model.estimate_group(g) >= 0.5) == g.anomalous;
    return static_cast<double>(ok) / static_cast<double>(groups.size());
}

}  // namespace

TEST_SUITE("standalone-estimator") {

TEST_CASE("all-PAD group with zero head bias gives p = 0.5") {
    const StandaloneModel model(kSpace, toy_semantic(1), kTiny, 3);
    Group g;
    g.events.assign(6, kSpace.pad());
    CHECK(model.estimate_group(g) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("estimates are deterministic probabilities and batching changes nothing") {
    const StandaloneModel model(kSpace, toy_semantic(1), kTiny, 3);
    const auto groups = toy_groups(20, 2);
    const auto batch = model.estimate(pointers(groups));
    REQUIRE(batch.size() == groups.size());
    for (std::size_t k = 0; k < groups.size(); ++k) {
        const double p = model.estimate_group(groups[k]);
        CHECK(p > 0.0);
        CHECK(p < 1.0);
        CHECK(p == model.estimate_group(groups[k]));
        CHECK(std::abs(batch[k] - p) < 1e-12);
    }
}

TEST_CASE("probability_list follows group order") {
    const StandaloneModel model(kSpace, toy_semantic(1), kTiny, 3);
    const auto groups = toy_groups(3, 4);
    const auto list = probability_list(model, groups);
    REQUIRE(list.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(list[k] - model.estimate_group(groups[k])) < 1e-12);
    CHECK(probability_list(model, std::span<const Group>()).empty());
}

TEST_CASE("shape mismatches name the branch") {
    const StandaloneModel model(kSpace, toy_semantic(1), kTiny, 3);
    Group g;
    g.events = {0, 1, 2};
    auto emb = model.embed(g);
    emb.semantic = nn::Matrix::Zero(2, 3);
    try {
        model.estimate_group(emb);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("semantic") != std::string::npos);
    }
    CHECK_THROWS_AS(StandaloneModel(kSpace, nn::Matrix::Zero(5, 3), kTiny, 1), Error);
}

TEST_CASE("positive-class weight is neg/pos capped at 20") {
    CHECK(positive_weight(90, 10) == 9.0);
    CHECK(positive_weight(1000, 10) == 20.0);
    CHECK(positive_weight(5, 10) == 0.5);
}

TEST_CASE("training") {
    const auto groups = toy_groups(20, 7);
    const auto ptrs = pointers(groups);
    nn::TrainConfig cfg;
    cfg.learning_rate = 0.02;
    cfg.epochs = 60;
    cfg.batch_size = 5;

    SUBCASE("toy set is fitted to accuracy 1 and loss falls") {
        StandaloneModel model(kSpace, toy_semantic(1), kTiny, 3);
        const auto report = train_standalone(model, ptrs, cfg);
        CHECK(report.epoch_loss.size() == 60);
        CHECK(report.epoch_loss[4] <= report.epoch_loss[0]);
        CHECK(accuracy(model, groups) == 1.0);
    }
    SUBCASE("another seed starts elsewhere and still reaches accuracy 1") {
        StandaloneModel a(kSpace, toy_semantic(1), kTiny, 3);
        StandaloneModel b(kSpace, toy_semantic(1), kTiny, 4);
        nn::Gradients ga(a.params()), gb(b.params());
        CHECK(a.loss_and_grad(ptrs, 1.0, ga) != b.loss_and_grad(ptrs, 1.0, gb));
        train_standalone(b, ptrs, cfg);
        CHECK(accuracy(b, groups) == 1.0);
    }
    SUBCASE("zero learning rate leaves the model unchanged") {
        StandaloneModel model(kSpace, toy_semantic(1), kTiny, 3);
        const auto before = model.estimate(ptrs);
        auto zero = cfg;
        zero.learning_rate = 0.0;
        zero.epochs = 2;
        train_standalone(model, ptrs, zero);
        CHECK(model.estimate(ptrs) == before);
    }
    SUBCASE("single-class training set aborts") {
        StandaloneModel model(kSpace, toy_semantic(1), kTiny, 3);
        std::vector<const Group*> normals;
        for (const auto& g : groups) {
            if (!g.anomalous) normals.push_back(&g);
        }
        CHECK_THROWS_AS(train_standalone(model, normals, cfg), Error);
    }
    SUBCASE("same seed, same trajectory") {
        StandaloneModel a(kSpace, toy_semantic(1), kTiny, 3);
        StandaloneModel b(kSpace, toy_semantic(1), kTiny, 3);
        auto short_cfg = cfg;
        short_cfg.epochs = 3;
        CHECK(train_standalone(a, ptrs, short_cfg).epoch_loss == train_standalone(b, ptrs, short_cfg).epoch_loss);
        CHECK(a.estimate(ptrs) == b.estimate(ptrs));
    }
}

TEST_CASE("PAD column stays zero through training") {
    const auto groups = toy_groups(10, 9);
    StandaloneModel model(kSpace, toy_semantic(1), kTiny, 3);
    nn::TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.epochs = 3;
    train_standalone(model, pointers(groups), cfg);
    CHECK(model.params().value(model.event_table_param()).col(kSpace.pad()).isZero(0.0));
}

TEST_CASE("checkpoint reload reproduces outputs exactly") {
    const auto groups = toy_groups(8, 10);
    StandaloneModel model(kSpace, toy_semantic(1), kTiny, 3);
    nn::TrainConfig cfg;
    cfg.epochs = 2;
    train_standalone(model, pointers(groups), cfg);
    multilog::testing::TempDir dir("standalone");
    model.save(dir / "m.ckpt");
    const auto back = StandaloneModel::load(dir / "m.ckpt", toy_semantic(1));
    CHECK(back.estimate(pointers(groups)) == model.estimate(pointers(groups)));
    CHECK_THROWS_AS(StandaloneModel::load(dir / "m.ckpt", nn::Matrix::Zero(7, 6)), Error);
}

}
