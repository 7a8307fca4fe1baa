// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "multilog/experiment.hpp"
#include "test_support.hpp"

using namespace multilog;
namespace mt = multilog::testing;

namespace {

ExperimentConfig tiny() {
    ExperimentConfig cfg;
    for (const auto& [k, v] : std::vector<std::pair<std::string, std::string>>{
             {"n_nodes", "3"},         {"duration_s", "740"},      {"base_rate", "4"},
             {"anomaly_set", "1,3,11"}, {"noise_rate", "0.02"},    {"group_len", "10"},
             {"beta", "16"},           {"mu", "4"},                {"ae_width1", "12"},
             {"ae_width2", "8"},       {"event_dim", "6"},         {"hidden", "8"},
             {"projection", "6"},      {"head_hidden", "8"},       {"meta_hidden", "8"},
             {"word_dim", "8"},        {"epochs", "1"},            {"ae_epochs", "4"},
             {"meta_epochs", "4"},     {"meta_permutations", "2"}, {"lr", "0.003"}}) {
        cfg.set(k, v);
    }
    return cfg;
}

const char* const kCsvFiles[] = {"cluster_metrics.csv", "node_metrics.csv", "windows.csv", "loss_curves.csv"};

}  // namespace

TEST_SUITE("eval-cli") {

TEST_CASE("config keys, files and round trip") {
    mt::TempDir dir("conf");
    ExperimentConfig cfg;
    cfg.set("beta", "64");
    cfg.set("scenario", "Multi2Single");
    cfg.set("anomaly_set", "2,5");
    cfg.set("per_node_models", "true");
    CHECK(cfg.autoencoder.beta == 64);
    CHECK(cfg.generator.scenario == Scenario::Multi2Single);
    CHECK(cfg.generator.anomaly_set == std::vector<int>{2, 5});
    CHECK(cfg.per_node_models);

    mt::write_file(dir / "a.conf", cfg.to_text());
    ExperimentConfig back;
    back.load_file(dir / "a.conf");
    CHECK(back.to_text() == cfg.to_text());

    try {
        cfg.set("no_such_key", "1");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("no_such_key") != std::string::npos);
    }
    CHECK_THROWS_AS(cfg.set("beta", "many"), Error);

    mt::write_file(dir / "bad.conf", "# comment\nbeta = 32\nbogus = 1\n");
    try {
        back.load_file(dir / "bad.conf");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("bad.conf:3") != std::string::npos);
    }
}

TEST_CASE("temporal split") {
    const auto cfg = tiny();
    const auto ds = load_or_generate(cfg);
    auto data = prepare(ds, cfg);
    CHECK(data.windows.size() == window_count(ds, cfg.window));
    CHECK(data.train_windows == static_cast<std::size_t>(cfg.split * static_cast<double>(data.windows.size())));
    CHECK(data.registry->frozen());
    CHECK_NOTHROW(check_temporal_split(data));

    // a training group reaching into the test range is reported
    auto& last_train = data.windows[data.train_windows - 1];
    for (auto& node : last_train.groups) {
        if (!node.empty()) {
            node.back().t1 = data.windows[data.train_windows].t1;
            break;
        }
    }
    CHECK_THROWS_AS(check_temporal_split(data), Error);
}

TEST_CASE("stage failures name the stage") {
    auto cfg = tiny();
    cfg.set("split", "0.05");  // training range ends before the first injection
    const auto data = prepare(load_or_generate(cfg), cfg);
    try {
        train_pipeline(data, cfg);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("stage 1") != std::string::npos);
    }
}

TEST_CASE("end to end on a small cluster") {
    const auto cfg = tiny();
    const auto ds = load_or_generate(cfg);
    const auto data = prepare(ds, cfg);
    const auto pipeline = train_pipeline(data, cfg);
    const auto report = evaluate(pipeline, data, cfg);

    SUBCASE("method rows are consistent with their counts") {
        REQUIRE(report.cluster.size() == 4);
        CHECK(report.cluster[0].method == "MultiLog");
        for (const auto& m : report.cluster) {
            const auto& c = m.counts;
            CHECK(c.total() == report.test_windows);
            const double p = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
            const double r = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
            CHECK(m.scores.precision == doctest::Approx(p));
            CHECK(m.scores.recall == doctest::Approx(r));
            CHECK(m.scores.f1 == doctest::Approx(p + r > 0 ? 2 * p * r / (p + r) : 0.0));
        }
    }
    SUBCASE("baselines follow the per-window node labels") {
        REQUIRE(report.windows.size() == report.test_windows);
        ConfusionCounts sp, vb;
        for (const auto& w : report.windows) {
            CHECK(w.single_point == single_point(w.node_labels));
            CHECK(w.vote_based == vote_based(w.node_labels));
            CHECK(w.best_node == w.node_labels[report.best_node]);
            CHECK(w.multilog == (w.p_anomalous > 0.5));
            sp.add(w.single_point, w.truth);
            vb.add(w.vote_based, w.truth);
        }
        CHECK(sp == report.method("Single-Point").counts);
        CHECK(vb == report.method("Vote-Based").counts);
    }
    SUBCASE("Best-Node equals the best per-node window F1") {
        double best = -1.0;
        for (const auto& n : report.nodes) best = std::max(best, prf1(n.window_counts).f1);
        CHECK(report.method("Best-Node").scores.f1 == doctest::Approx(best));
        CHECK(report.method("Best-Node").counts == report.nodes[report.best_node].window_counts);
        CHECK_THROWS_AS(report.method("Oracle"), Error);
    }
    SUBCASE("a saved pipeline evaluates identically") {
        mt::TempDir dir("pipeline");
        pipeline.save(dir.path(), cfg);
        ExperimentConfig stored;
        const auto loaded = TrainedPipeline::load(dir.path(), stored);
        CHECK(stored.to_text() == cfg.to_text());
        const auto data2 = prepare(ds, stored, loaded.registry);
        const auto again = evaluate(loaded, data2, stored);
        mt::TempDir a("eval_a"), b("eval_b");
        report.write_csv(a.path());
        again.write_csv(b.path());
        CHECK(mt::read_file(a / "windows.csv") == mt::read_file(b / "windows.csv"));
        CHECK(mt::read_file(a / "cluster_metrics.csv") == mt::read_file(b / "cluster_metrics.csv"));
    }
    SUBCASE("same config, same bytes") {
        const auto second = run_experiment(cfg);
        mt::TempDir a("det_a"), b("det_b");
        report.write_csv(a.path());
        second.write_csv(b.path());
        for (const char* f : kCsvFiles) {
            CAPTURE(f);
            CHECK(mt::read_file(a / f).size() > 0);
            CHECK(mt::read_file(a / f) == mt::read_file(b / f));
        }
        CHECK(render_report_dir(a.path()).find("MultiLog") != std::string::npos);
    }
}

}
