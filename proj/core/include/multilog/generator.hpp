// SPDX-License-Identifier: Apache-2.0
//
// Deterministic multi-node log generator with a cyclic injection schedule:
// rest, inject, rest, inject, ..., rest. Each template family fires as a
// Poisson process whose rate depends on the node's role and on the anomaly
// active on (or near) it.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "multilog/dataset.hpp"

namespace multilog {

struct GeneratorConfig {
    std::uint64_t seed = 7;
    std::size_t n_nodes = 6;
    double duration_s = 3600.0;
    /// Normal lines per node per second.
    double base_rate = 12.0;
    Scenario scenario = Scenario::Multi2Multi;
    std::vector<int> anomaly_set = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
    double inject_len_s = 25.0;
    double rest_len_s = 60.0;
    /// Per node per second: isolated signature lines (peer-gap, retry and
    /// transient resource warnings) emitted outside injected intervals.
    double noise_rate = 0.0;
    /// Epoch milliseconds of the first line.
    TimestampMs start_ms = 1704067200000;  // 2024-01-01T00:00:00Z

    void validate() const;
    /// Number of inject phases the schedule fits into duration_s.
    std::size_t episode_count() const;
};

/// One template family: `text` uses the wildcard "[*]" for numeric slots.
struct TemplateFamily {
    std::string name;
    std::string level;
    std::string text;
};

struct AnomalyEffect {
    int anomaly_no = 0;
    std::string name;
    std::string cause;  // "System" or "Database"
    std::string description;
    /// Multipliers applied to normal family rates on the injected node.
    std::vector<std::pair<std::string, double>> rate_multipliers;
    /// Anomaly-specific lines on the injected node.
    std::vector<TemplateFamily> extra_templates;
    /// Signature emitted by the peers of the injected node; empty when none.
    std::vector<TemplateFamily> cross_node_templates;
    bool silences_node = false;
    /// First and last extra templates fire once at the start and end of the
    /// episode; the ones in between are Poisson.
    bool bracketed = false;
};

/// Static catalog of the eleven anomaly types.
const std::vector<AnomalyEffect>& describe_anomalies();
const AnomalyEffect& anomaly_effect(int anomaly_no);

/// Normal families with their share of base_rate.
const std::vector<std::pair<TemplateFamily, double>>& normal_families();

struct GeneratorSummary {
    std::size_t episodes = 0;
    std::vector<std::size_t> lines_per_node;
    std::vector<std::size_t> episodes_per_type;  // index = anomaly_no - 1
    std::vector<std::size_t> injections_per_node;

    std::string to_text(const ClusterDataset& ds) const;
};

/// Builds the dataset in memory.
ClusterDataset generate_dataset(const GeneratorConfig& cfg, GeneratorSummary* summary = nullptr);

/// Builds the dataset and writes it in manifest format plus summary.txt.
GeneratorSummary generate(const GeneratorConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace multilog
