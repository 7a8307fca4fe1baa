// SPDX-License-Identifier: Apache-2.0
//
// End-to-end orchestration: dataset -> templates -> windows -> standalone
// estimator -> autoencoder -> meta-classifier -> per-window cluster verdicts,
// scored against the Single-Point, Vote-Based and Best-Node baselines.
#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "multilog/aggregation.hpp"
#include "multilog/cluster.hpp"
#include "multilog/drain.hpp"
#include "multilog/generator.hpp"
#include "multilog/metrics.hpp"
#include "multilog/standalone.hpp"
#include "multilog/windowing.hpp"

namespace multilog {

struct ExperimentConfig {
    /// Manifest directory; when empty the dataset is generated from `generator`.
    std::filesystem::path dataset;
    GeneratorConfig generator;
    WindowSpec window;
    DrainConfig drain;
    StandaloneConfig standalone;
    AutoencoderConfig autoencoder;
    nn::Index meta_hidden = 128;
    std::size_t word_dim = 50;
    /// Optional "word v1 v2 ..." text file; hashed vectors otherwise.
    std::filesystem::path word_vectors;
    nn::TrainConfig standalone_train{1e-3, 6, 32, 0, 5.0};
    nn::TrainConfig autoencoder_train{1e-3, 40, 32, 0, 5.0};
    nn::TrainConfig meta_train{1e-3, 80, 32, 0, 5.0};
    /// Extra meta-classifier samples per training window, each with the node
    /// latents in a random order (the window label does not depend on it).
    std::size_t meta_permutations = 24;
    bool per_node_models = false;
    double node_threshold = 0.5;
    /// Fraction of windows, oldest first, used for training.
    double split = 0.7;
    std::uint64_t seed = 7;

    void validate() const;
    /// Applies one key=value setting; throws Error on an unknown key or bad value.
    void set(const std::string& key, const std::string& value);
    /// Reads a flat key=value file ('#' starts a comment).
    void load_file(const std::filesystem::path& path);
    /// Every setting as key=value lines; load_file(to_text()) round-trips.
    std::string to_text() const;
};

/// The dataset named by cfg.dataset, or a freshly generated one seeded with cfg.seed.
ClusterDataset load_or_generate(const ExperimentConfig& cfg);

struct PreparedData {
    std::shared_ptr<TemplateRegistry> registry;
    std::vector<NodeEvents> events;
    std::vector<Window> windows;
    /// windows[0, train_windows) train, the rest test.
    std::size_t train_windows = 0;
    std::size_t n_nodes = 0;

    EventSpace space() const { return EventSpace{registry->size()}; }
    std::vector<const Group*> groups(bool train, std::optional<NodeId> node = std::nullopt) const;
};

/// Number of windows of length span_ms covering the dataset.
std::size_t window_count(const ClusterDataset& ds, const WindowSpec& spec);

/// Mines templates on the training time range (or reuses `registry`, which
/// must be frozen), parses every node and windows the streams.
PreparedData prepare(const ClusterDataset& ds, const ExperimentConfig& cfg,
                     std::shared_ptr<TemplateRegistry> registry = nullptr);

/// Throws Error when some training group ends at or after the first test group starts.
void check_temporal_split(const PreparedData& data);

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct TrainedPipeline {
    std::shared_ptr<TemplateRegistry> registry;
    /// One shared model, or one per node with per_node_models.
    std::vector<StandaloneModel> standalone;
    std::unique_ptr<ProbAutoencoder> autoencoder;
    std::unique_ptr<MetaClassifier> meta;
    std::vector<TrainReport> standalone_reports;
    TrainReport autoencoder_report;
    TrainReport meta_report;
    std::vector<StageTiming> timings;

    const StandaloneModel& model_for(NodeId node) const;
    /// P_i for every node of one window.
    std::vector<ProbabilityList> window_lists(const Window& w) const;

    void save(const std::filesystem::path& dir, const ExperimentConfig& cfg) const;
    /// Reads a directory written by save(); `cfg` receives the stored config.
    static TrainedPipeline load(const std::filesystem::path& dir, ExperimentConfig& cfg);
};

/// Semantic table for a registry under the config's word-vector settings.
nn::Matrix semantic_table_for(const TemplateRegistry& registry, const ExperimentConfig& cfg);

/// Stages 1-3 on the training windows. Errors name the failing stage.
TrainedPipeline train_pipeline(const PreparedData& data, const ExperimentConfig& cfg);

struct MethodResult {
    std::string method;
    ConfusionCounts counts;
    Prf1 scores;
};

struct NodeResult {
    NodeId node = 0;
    /// Node window label vs cluster truth; Best-Node picks the best of these.
    ConfusionCounts window_counts;
    /// Group probability >= threshold vs group label.
    ConfusionCounts group_counts;
};

struct WindowPrediction {
    std::size_t window = 0;
    TimestampMs t0 = 0;
    bool truth = false;
    double p_anomalous = 0.0;
    bool multilog = false;
    bool single_point = false;
    bool vote_based = false;
    bool best_node = false;
    NodeLabels node_labels;
};

struct ExperimentReport {
    std::string scenario;
    std::size_t n_nodes = 0;
    std::size_t templates = 0;
    std::size_t train_windows = 0;
    std::size_t test_windows = 0;
    std::size_t train_groups = 0;
    std::size_t test_groups = 0;
    std::size_t best_node = 0;
    std::vector<MethodResult> cluster;  // MultiLog, Single-Point, Vote-Based, Best-Node
    std::vector<NodeResult> nodes;
    std::vector<WindowPrediction> windows;
    std::vector<TrainReport> standalone_reports;
    TrainReport autoencoder_report;
    TrainReport meta_report;
    std::vector<StageTiming> timings;

    const MethodResult& method(const std::string& name) const;

    /// cluster_metrics.csv, node_metrics.csv, windows.csv and loss_curves.csv.
    /// Timings are left out so identical runs write identical files.
    void write_csv(const std::filesystem::path& dir) const;
    /// Human-readable tables including timings.
    std::string to_text() const;
};

/// Scores the test windows.
ExperimentReport evaluate(const TrainedPipeline& pipeline, const PreparedData& data,
                          const ExperimentConfig& cfg);

/// load_or_generate -> prepare -> train_pipeline -> evaluate.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// Renders the metric CSVs of a report directory back into tables.
std::string render_report_dir(const std::filesystem::path& dir);

}  // namespace multilog
