// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "multilog/generator.hpp"
#include "test_support.hpp"

using namespace multilog;

namespace {

GeneratorConfig small(Scenario s, std::vector<int> types, std::size_t episodes) {
    GeneratorConfig cfg;
    cfg.n_nodes = 4;
    cfg.scenario = s;
    cfg.anomaly_set = std::move(types);
    cfg.duration_s = cfg.rest_len_s + static_cast<double>(episodes) * (cfg.rest_len_s + cfg.inject_len_s);
    return cfg;
}

bool inside_label(const ClusterDataset& ds, TimestampMs ts) {
    for (const auto& l : ds.labels) {
        if (ts >= l.start_ts && ts <= l.end_ts) return true;
    }
    return false;
}

// literal text before the first wildcard
std::string stem(const std::string& text) { return text.substr(0, text.find("[*]")); }

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

TEST_SUITE("synthetic-generator") {

TEST_CASE("catalog lists eleven anomaly types") {
    const auto& c = describe_anomalies();
    REQUIRE(c.size() == 11);
    for (int k = 1; k <= 11; ++k) CHECK(anomaly_effect(k).anomaly_no == k);
    CHECK_THROWS_AS(anomaly_effect(12), Error);
    CHECK(anomaly_effect(6).silences_node);
    bool export_progress = false;
    for (const auto& f : anomaly_effect(8).extra_templates) export_progress |= f.text == "Currently [*] data";
    CHECK(export_progress);
    double share = 0.0;
    for (const auto& [f, s] : normal_families()) share += s;
    CHECK(share == doctest::Approx(1.0));
}

TEST_CASE("same seed writes byte-identical files") {
    auto cfg = small(Scenario::Multi2Multi, {1, 4, 8}, 4);
    cfg.noise_rate = 0.05;
    multilog::testing::TempDir a("gen_a"), b("gen_b");
    generate(cfg, a.path());
    generate(cfg, b.path());
    std::size_t files = 0;
    for (const auto& entry : std::filesystem::directory_iterator(a.path())) {
        const auto name = entry.path().filename();
        CHECK(multilog::testing::read_file(entry.path()) == multilog::testing::read_file(b / name.string()));
        ++files;
    }
    CHECK(files == 4 + 3);  // node logs, manifest, labels, summary
    cfg.seed = 8;
    CHECK_FALSE(generate_dataset(cfg) == load_dataset(a.path()));
}

TEST_CASE("Multi2Multi schedule mixes types and targets") {
    GeneratorSummary summary;
    const auto ds = generate_dataset(small(Scenario::Multi2Multi, {1, 2, 3, 4, 5}, 10), &summary);
    CHECK(summary.episodes == 10);
    REQUIRE(ds.labels.size() == 10);
    std::set<int> types;
    std::set<NodeId> nodes;
    for (const auto& l : ds.labels) {
        types.insert(l.anomaly_no);
        nodes.insert(l.nodes.begin(), l.nodes.end());
        CHECK(l.end_ts - l.start_ts + 1 == 25000);
        CHECK(l.nodes.size() <= 2);
    }
    CHECK(types.size() >= 2);
    CHECK(nodes.size() >= 2);
    for (std::size_t i = 1; i < ds.labels.size(); ++i) CHECK(ds.labels[i].start_ts - ds.labels[i - 1].end_ts - 1 == 60000);
}

TEST_CASE("single-target scenarios keep one node") {
    const auto ds = generate_dataset(small(Scenario::Multi2Single, {2, 3}, 6));
    std::set<NodeId> nodes;
    for (const auto& l : ds.labels) {
        CHECK(l.nodes.size() == 1);
        nodes.insert(*l.nodes.begin());
    }
    CHECK(nodes.size() == 1);
}

TEST_CASE("frequent flushes multiply flush lines at least fivefold") {
    const auto ds = generate_dataset(small(Scenario::Single2Single, {11}, 6));
    const NodeId target = *ds.labels.front().nodes.begin();
    const std::string flush = stem(normal_families()[3].first.text);
    REQUIRE(flush == "Flush a memtable to file seq-");
    std::size_t in = 0, out = 0;
    for (const auto& e : ds.entries[target]) {
        if (!starts_with(e.message, flush)) continue;
        (inside_label(ds, e.ts) ? in : out) += 1;
    }
    const double inject_ms = 6 * 25000.0;
    const auto range = ds.time_range();
    const double rest_ms = static_cast<double>(range->second - range->first) - inject_ms;
    CHECK(static_cast<double>(in) / inject_ms >= 5.0 * static_cast<double>(out) / rest_ms);
}

TEST_CASE("machine down silences the injected node") {
    const auto ds = generate_dataset(small(Scenario::Single2Single, {6}, 5));
    const NodeId target = *ds.labels.front().nodes.begin();
    for (const auto& e : ds.entries[target]) CHECK_FALSE(inside_label(ds, e.ts));
    std::size_t peer_lines = 0;
    for (NodeId n = 0; n < ds.n_nodes; ++n) {
        if (n == target) continue;
        for (const auto& e : ds.entries[n]) peer_lines += inside_label(ds, e.ts);
    }
    CHECK(peer_lines > 0);
}

TEST_CASE("without noise, anomaly templates appear only inside injected intervals") {
    std::vector<std::string> stems;
    for (const auto& a : describe_anomalies()) {
        for (const auto& f : a.extra_templates) stems.push_back(stem(f.text));
        for (const auto& f : a.cross_node_templates) stems.push_back(stem(f.text));
    }
    const auto ds = generate_dataset(small(Scenario::Multi2Multi, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}, 22));
    std::size_t inside = 0;
    for (const auto& node : ds.entries) {
        for (const auto& e : node) {
            bool anomaly_line = false;
            for (const auto& s : stems) anomaly_line |= starts_with(e.message, s);
            if (!anomaly_line) continue;
            CHECK(inside_label(ds, e.ts));
            ++inside;
        }
    }
    CHECK(inside > 0);
}

TEST_CASE("normal traffic is stationary Poisson") {
    auto cfg = small(Scenario::Multi2Multi, {1, 2}, 40);
    const auto ds = generate_dataset(cfg);
    const double lambda = cfg.base_rate * 10.0;
    const TimestampMs start = cfg.start_ms;
    std::size_t windows = 0, within = 0;
    // 10 s windows fully inside rest segments, skipping the startup second
    for (TimestampMs t0 = start + 1000; t0 + 10000 <= ds.time_range()->second; t0 += 10000) {
        bool rest = true;
        for (const auto& l : ds.labels) rest &= t0 + 9999 < l.start_ts || t0 > l.end_ts;
        if (!rest) continue;
        for (const auto& node : ds.entries) {
            const auto by_ts = [](const LogEntry& e, TimestampMs t) { return e.ts < t; };
            const auto lo = std::lower_bound(node.begin(), node.end(), t0, by_ts);
            const auto hi = std::lower_bound(node.begin(), node.end(), t0 + 10000, by_ts);
            const auto count = static_cast<std::size_t>(hi - lo);
            ++windows;
            within += std::abs(static_cast<double>(count) - lambda) <= 3.0 * std::sqrt(lambda);
        }
    }
    REQUIRE(windows >= 100);
    CHECK(static_cast<double>(within) >= 0.99 * static_cast<double>(windows));
}

TEST_CASE("noise lines fall outside injected intervals") {
    auto cfg = small(Scenario::Multi2Multi, {1, 2}, 4);
    cfg.noise_rate = 0.5;
    const auto noisy = generate_dataset(cfg);
    std::size_t outside = 0;
    for (const auto& node : noisy.entries) {
        for (const auto& e : node) outside += e.level == "WARN" && !inside_label(noisy, e.ts);
    }
    CHECK(outside > 0);
}

TEST_CASE("config validation") {
    auto cfg = small(Scenario::Single2Single, {1, 2}, 3);
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = small(Scenario::Multi2Multi, {1}, 3);
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = small(Scenario::Multi2Multi, {1, 1}, 3);
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = small(Scenario::Multi2Multi, {1, 12}, 3);
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = small(Scenario::Single2Multi, {3}, 3);
    cfg.n_nodes = 1;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = small(Scenario::Multi2Multi, {1, 2}, 3);
    cfg.noise_rate = -1.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    CHECK_NOTHROW(small(Scenario::Single2Multi, {3}, 3).validate());
    GeneratorConfig defaults;
    CHECK(defaults.episode_count() == 41);
}

}
