// SPDX-License-Identifier: Apache-2.0
#include "multilog/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <chrono>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <fmt/core.h>

#include "multilog/text.hpp"

namespace multilog {

namespace {

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used == value.size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(fmt::format("config: {} expects a number, got '{}'", key, value));
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw Error(fmt::format("config: {} expects a non-negative integer, got '{}'", key, value));
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
    if (value == "0" || value == "false" || value == "no" || value == "off") return false;
    throw Error(fmt::format("config: {} expects a boolean, got '{}'", key, value));
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    for (const auto& part : split(value, ',')) {
        const auto t = trim(part);
        if (t.empty()) continue;
        out.push_back(static_cast<int>(parse_uint(key, std::string(t))));
    }
    return out;
}

std::string fmt_double(double v) { return fmt::format("{}", v); }

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

// derived seeds for the independent random streams of one experiment
std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream) {
    return seed * 0x9E3779B97F4A7C15ULL + stream * 0xBF58476D1CE4E5B9ULL + 1;
}

std::string prf_row(const std::string& name, const ConfusionCounts& c) {
    const auto s = prf1(c);
    return fmt::format("{:<14} {:>6} {:>6} {:>6} {:>6} {:>9.4f} {:>9.4f} {:>9.4f}\n", name, c.tp, c.fp,
                       c.tn, c.fn, s.precision, s.recall, s.f1);
}

std::string prf_header(const std::string& first) {
    return fmt::format("{:<14} {:>6} {:>6} {:>6} {:>6} {:>9} {:>9} {:>9}\n", first, "tp", "fp", "tn", "fn",
                       "precision", "recall", "f1");
}

std::string csv_counts(const ConfusionCounts& c) {
    const auto s = prf1(c);
    return fmt::format("{},{},{},{},{:.6f},{:.6f},{:.6f}", c.tp, c.fp, c.tn, c.fn, s.precision, s.recall, s.f1);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write {}", path.string()));
    out << text;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot read {}", path.string()));
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> row;
        for (const auto part : split(line, ',')) row.emplace_back(part);
        rows.push_back(std::move(row));
    }
    return rows;
}

ConfusionCounts counts_from(const std::vector<std::string>& row, std::size_t first) {
    if (row.size() < first + 4) throw Error("report csv: short row");
    ConfusionCounts c;
    c.tp = std::stoull(row[first]);
    c.fp = std::stoull(row[first + 1]);
    c.tn = std::stoull(row[first + 2]);
    c.fn = std::stoull(row[first + 3]);
    return c;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (dataset.empty()) generator.validate();
    window.validate();
    if (drain.depth < 3) throw Error("drain depth must be at least 3");
    if (!(drain.similarity_threshold >= 0.0 && drain.similarity_threshold <= 1.0)) {
        throw Error("drain similarity threshold must lie in [0, 1]");
    }
    if (drain.max_children < 1) throw Error("drain max children must be positive");
    standalone.validate();
    autoencoder.validate();
    if (meta_hidden <= 0) throw Error("meta hidden width must be positive");
    if (word_dim == 0) throw Error("word dimension must be positive");
    standalone_train.validate();
    autoencoder_train.validate();
    meta_train.validate();
    if (!(split > 0.0 && split < 1.0)) throw Error(fmt::format("split must lie in (0, 1), got {}", split));
    if (!(node_threshold > 0.0 && node_threshold < 1.0)) throw Error("node threshold must lie in (0, 1)");
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    const auto d = [&] { return parse_double(key, value); };
    const auto u = [&] { return parse_uint(key, value); };
    if (key == "dataset") dataset = value;
    else if (key == "seed") seed = u();
    else if (key == "split") split = d();
    else if (key == "window_ms") window.span_ms = static_cast<TimestampMs>(u());
    else if (key == "group_len") window.group_len = u();
    else if (key == "beta") autoencoder.beta = u();
    else if (key == "mu") autoencoder.mu = static_cast<nn::Index>(u());
    else if (key == "ae_width1") autoencoder.width1 = static_cast<nn::Index>(u());
    else if (key == "ae_width2") autoencoder.width2 = static_cast<nn::Index>(u());
    else if (key == "meta_hidden") meta_hidden = static_cast<nn::Index>(u());
    else if (key == "event_dim") standalone.event_dim = static_cast<nn::Index>(u());
    else if (key == "hidden") standalone.hidden = static_cast<nn::Index>(u());
    else if (key == "projection") standalone.projection = static_cast<nn::Index>(u());
    else if (key == "head_hidden") standalone.head_hidden = static_cast<nn::Index>(u());
    else if (key == "word_dim") word_dim = u();
    else if (key == "word_vectors") word_vectors = value;
    else if (key == "meta_permutations") meta_permutations = u();
    else if (key == "per_node_models") per_node_models = parse_bool(key, value);
    else if (key == "node_threshold") node_threshold = d();
    else if (key == "drain_depth") drain.depth = static_cast<int>(u());
    else if (key == "drain_threshold") drain.similarity_threshold = d();
    else if (key == "drain_max_children") drain.max_children = u();
    else if (key == "epochs") standalone_train.epochs = u();
    else if (key == "lr") standalone_train.learning_rate = d();
    else if (key == "batch") standalone_train.batch_size = u();
    else if (key == "ae_epochs") autoencoder_train.epochs = u();
    else if (key == "ae_lr") autoencoder_train.learning_rate = d();
    else if (key == "ae_batch") autoencoder_train.batch_size = u();
    else if (key == "meta_epochs") meta_train.epochs = u();
    else if (key == "meta_lr") meta_train.learning_rate = d();
    else if (key == "meta_batch") meta_train.batch_size = u();
    else if (key == "clip_norm") {
        standalone_train.clip_norm = autoencoder_train.clip_norm = meta_train.clip_norm = d();
    }
    else if (key == "n_nodes") generator.n_nodes = u();
    else if (key == "duration_s") generator.duration_s = d();
    else if (key == "base_rate") generator.base_rate = d();
    else if (key == "scenario") generator.scenario = scenario_from_string(value);
    else if (key == "anomaly_set") generator.anomaly_set = parse_int_list(key, value);
    else if (key == "inject_len_s") generator.inject_len_s = d();
    else if (key == "rest_len_s") generator.rest_len_s = d();
    else if (key == "noise_rate") generator.noise_rate = d();
    else if (key == "start_ms") generator.start_ms = static_cast<TimestampMs>(u());
    else throw Error(fmt::format("config: unknown key '{}'", key));
}

void ExperimentConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot read config {}", path.string()));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) {
            throw Error(fmt::format("{}:{}: expected key=value", path.string(), lineno));
        }
        try {
            set(std::string(trim(t.substr(0, eq))), std::string(trim(t.substr(eq + 1))));
        } catch (const Error& e) {
            throw Error(fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
        }
    }
}

std::string ExperimentConfig::to_text() const {
    std::string s;
    const auto kv = [&](std::string_view k, const std::string& v) { s += fmt::format("{}={}\n", k, v); };
    if (!dataset.empty()) kv("dataset", dataset.string());
    kv("seed", std::to_string(seed));
    kv("split", fmt_double(split));
    kv("window_ms", std::to_string(window.span_ms));
    kv("group_len", std::to_string(window.group_len));
    kv("beta", std::to_string(autoencoder.beta));
    kv("mu", std::to_string(autoencoder.mu));
    kv("ae_width1", std::to_string(autoencoder.width1));
    kv("ae_width2", std::to_string(autoencoder.width2));
    kv("meta_hidden", std::to_string(meta_hidden));
    kv("event_dim", std::to_string(standalone.event_dim));
    kv("hidden", std::to_string(standalone.hidden));
    kv("projection", std::to_string(standalone.projection));
    kv("head_hidden", std::to_string(standalone.head_hidden));
    kv("word_dim", std::to_string(word_dim));
    if (!word_vectors.empty()) kv("word_vectors", word_vectors.string());
    kv("meta_permutations", std::to_string(meta_permutations));
    kv("per_node_models", per_node_models ? "true" : "false");
    kv("node_threshold", fmt_double(node_threshold));
    kv("drain_depth", std::to_string(drain.depth));
    kv("drain_threshold", fmt_double(drain.similarity_threshold));
    kv("drain_max_children", std::to_string(drain.max_children));
    kv("epochs", std::to_string(standalone_train.epochs));
    kv("lr", fmt_double(standalone_train.learning_rate));
    kv("batch", std::to_string(standalone_train.batch_size));
    kv("ae_epochs", std::to_string(autoencoder_train.epochs));
    kv("ae_lr", fmt_double(autoencoder_train.learning_rate));
    kv("ae_batch", std::to_string(autoencoder_train.batch_size));
    kv("meta_epochs", std::to_string(meta_train.epochs));
    kv("meta_lr", fmt_double(meta_train.learning_rate));
    kv("meta_batch", std::to_string(meta_train.batch_size));
    kv("clip_norm", fmt_double(standalone_train.clip_norm));
    kv("n_nodes", std::to_string(generator.n_nodes));
    kv("duration_s", fmt_double(generator.duration_s));
    kv("base_rate", fmt_double(generator.base_rate));
    kv("scenario", std::string(to_string(generator.scenario)));
    std::vector<std::string> types;
    for (int a : generator.anomaly_set) types.push_back(std::to_string(a));
    kv("anomaly_set", join(types, ","));
    kv("inject_len_s", fmt_double(generator.inject_len_s));
    kv("rest_len_s", fmt_double(generator.rest_len_s));
    kv("noise_rate", fmt_double(generator.noise_rate));
    kv("start_ms", std::to_string(generator.start_ms));
    return s;
}

ClusterDataset load_or_generate(const ExperimentConfig& cfg) {
    if (!cfg.dataset.empty()) return load_dataset(cfg.dataset);
    GeneratorConfig g = cfg.generator;
    g.seed = cfg.seed;
    return generate_dataset(g);
}

std::vector<const Group*> PreparedData::groups(bool train, std::optional<NodeId> node) const {
    std::vector<const Group*> out;
    const std::size_t begin = train ? 0 : train_windows;
    const std::size_t end = train ? train_windows : windows.size();
    for (std::size_t w = begin; w < end; ++w) {
        for (NodeId n = 0; n < windows[w].groups.size(); ++n) {
            if (node && *node != n) continue;
            for (const auto& g : windows[w].groups[n]) out.push_back(&g);
        }
    }
    return out;
}

std::size_t window_count(const ClusterDataset& ds, const WindowSpec& spec) {
    const auto range = ds.time_range();
    if (!range) return 0;
    return static_cast<std::size_t>((range->second - range->first) / spec.span_ms) + 1;
}

PreparedData prepare(const ClusterDataset& ds, const ExperimentConfig& cfg,
                     std::shared_ptr<TemplateRegistry> registry) {
    cfg.window.validate();
    const auto range = ds.time_range();
    if (!range) throw Error("dataset holds no log lines");
    const std::size_t total = window_count(ds, cfg.window);
    const auto n_train = static_cast<std::size_t>(std::floor(cfg.split * static_cast<double>(total)));
    if (n_train == 0 || n_train >= total) {
        throw Error(fmt::format("split {} leaves an empty train or test side over {} windows", cfg.split, total));
    }
    const TimestampMs cutoff = range->first + static_cast<TimestampMs>(n_train) * cfg.window.span_ms;

    PreparedData data;
    if (registry) {
        if (!registry->frozen()) throw Error("prepare: a supplied registry must be frozen");
        data.registry = std::move(registry);
    } else {
        data.registry = std::make_shared<TemplateRegistry>(mine_templates(ds, cutoff, cfg.drain));
    }
    data.events = assign_events(*data.registry, ds);
    data.windows = make_windows(data.events, ds.labels, cfg.window, data.registry->pad_id());
    if (data.windows.size() != total) throw Error("prepare: window count mismatch");
    data.train_windows = n_train;
    data.n_nodes = ds.n_nodes;
    return data;
}

void check_temporal_split(const PreparedData& data) {
    TimestampMs max_train = std::numeric_limits<TimestampMs>::min();
    TimestampMs min_test = std::numeric_limits<TimestampMs>::max();
    for (const Group* g : data.groups(true)) max_train = std::max(max_train, g->t1);
    for (const Group* g : data.groups(false)) min_test = std::min(min_test, g->t0);
    if (max_train >= min_test) {
        throw Error(fmt::format("temporal split leaks: last training group ends at {}, first test group starts at {}",
                                max_train, min_test));
    }
}

const StandaloneModel& TrainedPipeline::model_for(NodeId node) const {
    if (standalone.empty()) throw Error("pipeline has no standalone model");
    if (standalone.size() == 1) return standalone.front();
    if (node >= standalone.size()) throw Error(fmt::format("no standalone model for node {}", node));
    return standalone[node];
}

std::vector<ProbabilityList> TrainedPipeline::window_lists(const Window& w) const {
    std::vector<ProbabilityList> lists(w.groups.size());
    for (NodeId n = 0; n < w.groups.size(); ++n) {
        if (!w.groups[n].empty()) lists[n] = probability_list(model_for(n), w.groups[n]);
    }
    return lists;
}

nn::Matrix semantic_table_for(const TemplateRegistry& registry, const ExperimentConfig& cfg) {
    if (!cfg.word_vectors.empty()) {
        const FileWordVectors provider(cfg.word_vectors);
        return build_semantic_table(registry, provider);
    }
    const HashWordVectors provider(cfg.word_dim, sub_seed(cfg.seed, 1));
    return build_semantic_table(registry, provider);
}

TrainedPipeline train_pipeline(const PreparedData& data, const ExperimentConfig& cfg) {
    cfg.validate();
    TrainedPipeline p;
    p.registry = data.registry;
    const auto table = semantic_table_for(*data.registry, cfg);

    Stopwatch sw;
    const std::size_t n_models = cfg.per_node_models ? data.n_nodes : 1;
    for (std::size_t m = 0; m < n_models; ++m) {
        auto tc = cfg.standalone_train;
        tc.seed = sub_seed(cfg.seed, 10 + m);
        p.standalone.emplace_back(data.space(), table, cfg.standalone, sub_seed(cfg.seed, 100 + m));
        const auto groups = cfg.per_node_models ? data.groups(true, static_cast<NodeId>(m)) : data.groups(true);
        try {
            p.standalone_reports.push_back(train_standalone(p.standalone.back(), groups, tc));
        } catch (const Error& e) {
            const auto where = cfg.per_node_models ? fmt::format(" (node {})", m) : std::string();
            throw Error(fmt::format("stage 1 standalone estimator{}: {}", where, e.what()));
        }
    }
    p.timings.push_back({"standalone", sw.seconds()});

    // probability lists of every training window, reused by stages 2 and 3
    sw = Stopwatch();
    std::vector<std::vector<ProbabilityList>> lists;
    lists.reserve(data.train_windows);
    for (std::size_t w = 0; w < data.train_windows; ++w) lists.push_back(p.window_lists(data.windows[w]));
    p.timings.push_back({"train inference", sw.seconds()});

    sw = Stopwatch();
    std::vector<ProbabilityList> pooled;
    for (const auto& window : lists) {
        for (const auto& l : window) {
            if (!l.empty()) pooled.push_back(l);
        }
    }
    p.autoencoder = std::make_unique<ProbAutoencoder>(cfg.autoencoder, sub_seed(cfg.seed, 2));
    try {
        auto tc = cfg.autoencoder_train;
        tc.seed = sub_seed(cfg.seed, 3);
        p.autoencoder_report = train_autoencoder(*p.autoencoder, pooled, tc);
    } catch (const Error& e) {
        throw Error(fmt::format("stage 2 autoencoder: {}", e.what()));
    }
    p.timings.push_back({"autoencoder", sw.seconds()});

    sw = Stopwatch();
    std::vector<MetaSample> samples;
    samples.reserve(lists.size() * (1 + cfg.meta_permutations));
    Rng perm_rng(sub_seed(cfg.seed, 6));
    std::vector<std::size_t> order(data.n_nodes);
    std::vector<nn::Vector> shuffled(data.n_nodes);
    for (std::size_t w = 0; w < lists.size(); ++w) {
        const auto latents = window_latents(*p.autoencoder, lists[w]);
        samples.push_back({concat_latents(latents), data.windows[w].anomalous});
        for (std::size_t k = 0; k < cfg.meta_permutations; ++k) {
            order = nn::shuffled_indices(data.n_nodes, perm_rng);
            for (std::size_t n = 0; n < data.n_nodes; ++n) shuffled[n] = latents[order[n]];
            samples.push_back({concat_latents(shuffled), data.windows[w].anomalous});
        }
    }
    p.meta = std::make_unique<MetaClassifier>(data.n_nodes, cfg.autoencoder.mu, cfg.meta_hidden,
                                              sub_seed(cfg.seed, 4));
    try {
        auto tc = cfg.meta_train;
        tc.seed = sub_seed(cfg.seed, 5);
        p.meta_report = train_meta(*p.meta, samples, tc);
    } catch (const Error& e) {
        throw Error(fmt::format("stage 3 meta-classifier: {}", e.what()));
    }
    p.timings.push_back({"meta-classifier", sw.seconds()});
    return p;
}

void TrainedPipeline::save(const std::filesystem::path& dir, const ExperimentConfig& cfg) const {
    std::filesystem::create_directories(dir);
    write_text(dir / "experiment.conf", cfg.to_text());
    registry->save(dir / "templates.txt");
    for (std::size_t m = 0; m < standalone.size(); ++m) {
        standalone[m].save(dir / fmt::format("standalone_{}.ckpt", m));
    }
    autoencoder->save(dir / "autoencoder.ckpt");
    meta->save(dir / "meta.ckpt");
}

TrainedPipeline TrainedPipeline::load(const std::filesystem::path& dir, ExperimentConfig& cfg) {
    cfg = ExperimentConfig{};
    cfg.load_file(dir / "experiment.conf");
    TrainedPipeline p;
    p.registry = std::make_shared<TemplateRegistry>(TemplateRegistry::load(dir / "templates.txt", cfg.drain));
    const auto table = semantic_table_for(*p.registry, cfg);
    for (std::size_t m = 0;; ++m) {
        const auto path = dir / fmt::format("standalone_{}.ckpt", m);
        if (!std::filesystem::exists(path)) break;
        p.standalone.push_back(StandaloneModel::load(path, table));
    }
    if (p.standalone.empty()) throw Error(fmt::format("{} holds no standalone checkpoint", dir.string()));
    p.autoencoder = std::make_unique<ProbAutoencoder>(ProbAutoencoder::load(dir / "autoencoder.ckpt"));
    const auto meta_ckpt = nn::Checkpoint::load(dir / "meta.ckpt");
    const auto n_nodes = static_cast<std::size_t>(std::stoull(meta_ckpt.require("n_nodes")));
    p.meta = std::make_unique<MetaClassifier>(MetaClassifier::load(dir / "meta.ckpt", n_nodes));
    if (p.standalone.size() > 1 && p.standalone.size() != n_nodes) {
        throw Error("per-node standalone checkpoints do not match the meta-classifier node count");
    }
    return p;
}

const MethodResult& ExperimentReport::method(const std::string& name) const {
    for (const auto& m : cluster) {
        if (m.method == name) return m;
    }
    throw Error(fmt::format("report has no method '{}'", name));
}

ExperimentReport evaluate(const TrainedPipeline& pipeline, const PreparedData& data,
                          const ExperimentConfig& cfg) {
    check_temporal_split(data);
    if (pipeline.meta->n_nodes() != data.n_nodes) {
        throw Error(fmt::format("meta-classifier expects {} nodes, dataset has {}", pipeline.meta->n_nodes(),
                                data.n_nodes));
    }
    ExperimentReport r;
    r.n_nodes = data.n_nodes;
    r.templates = data.registry->size();
    r.train_windows = data.train_windows;
    r.test_windows = data.windows.size() - data.train_windows;
    r.train_groups = data.groups(true).size();
    r.test_groups = data.groups(false).size();
    r.standalone_reports = pipeline.standalone_reports;
    r.autoencoder_report = pipeline.autoencoder_report;
    r.meta_report = pipeline.meta_report;
    r.timings = pipeline.timings;

    Stopwatch sw;
    r.nodes.resize(data.n_nodes);
    for (NodeId n = 0; n < data.n_nodes; ++n) r.nodes[n].node = n;
    std::vector<std::vector<bool>> streams(data.n_nodes);
    std::vector<bool> truth;
    for (std::size_t w = data.train_windows; w < data.windows.size(); ++w) {
        const auto& win = data.windows[w];
        const auto lists = pipeline.window_lists(win);
        WindowPrediction wp;
        wp.window = win.idx;
        wp.t0 = win.t0;
        wp.truth = win.anomalous;
        const auto verdict = pipeline.meta->classify(window_latents(*pipeline.autoencoder, lists));
        wp.p_anomalous = verdict.p_anomalous;
        wp.multilog = verdict.anomalous();
        for (NodeId n = 0; n < data.n_nodes; ++n) {
            const bool label = node_label(lists[n], cfg.node_threshold);
            wp.node_labels.push_back(label);
            streams[n].push_back(label);
            r.nodes[n].window_counts.add(label, win.anomalous);
            for (std::size_t k = 0; k < lists[n].size(); ++k) {
                r.nodes[n].group_counts.add(lists[n][k] >= cfg.node_threshold, win.groups[n][k].anomalous);
            }
        }
        wp.single_point = single_point(wp.node_labels);
        wp.vote_based = vote_based(wp.node_labels);
        truth.push_back(win.anomalous);
        r.windows.push_back(std::move(wp));
    }
    const auto best = best_node(streams, truth);
    r.best_node = best.node;

    ConfusionCounts ml, sp, vb, bn;
    for (std::size_t i = 0; i < r.windows.size(); ++i) {
        auto& wp = r.windows[i];
        wp.best_node = best.labels[i];
        ml.add(wp.multilog, wp.truth);
        sp.add(wp.single_point, wp.truth);
        vb.add(wp.vote_based, wp.truth);
        bn.add(wp.best_node, wp.truth);
    }
    r.cluster = {{"MultiLog", ml, prf1(ml)},
                 {"Single-Point", sp, prf1(sp)},
                 {"Vote-Based", vb, prf1(vb)},
                 {"Best-Node", bn, prf1(bn)}};
    r.timings.push_back({"evaluation", sw.seconds()});
    return r;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    Stopwatch sw;
    const auto ds = load_or_generate(cfg);
    const double t_data = sw.seconds();
    sw = Stopwatch();
    const auto data = prepare(ds, cfg);
    const double t_prep = sw.seconds();
    check_temporal_split(data);
    auto pipeline = train_pipeline(data, cfg);
    pipeline.timings.insert(pipeline.timings.begin(), {{"dataset", t_data}, {"parse+window", t_prep}});
    auto report = evaluate(pipeline, data, cfg);
    report.scenario = std::string(to_string(ds.scenario));
    return report;
}

void ExperimentReport::write_csv(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::string s = "method,tp,fp,tn,fn,precision,recall,f1\n";
    for (const auto& m : cluster) s += fmt::format("{},{}\n", m.method, csv_counts(m.counts));
    write_text(dir / "cluster_metrics.csv", s);

    s = "node,granularity,tp,fp,tn,fn,precision,recall,f1\n";
    for (const auto& n : nodes) s += fmt::format("{},window,{}\n", n.node, csv_counts(n.window_counts));
    for (const auto& n : nodes) s += fmt::format("{},group,{}\n", n.node, csv_counts(n.group_counts));
    write_text(dir / "node_metrics.csv", s);

    s = "window,t0,truth,p_anomalous,multilog,single_point,vote_based,best_node";
    for (std::size_t n = 0; n < n_nodes; ++n) s += fmt::format(",node_{}", n);
    s += '\n';
    for (const auto& w : windows) {
        s += fmt::format("{},{},{:d},{:.6f},{:d},{:d},{:d},{:d}", w.window, w.t0, w.truth, w.p_anomalous,
                         w.multilog, w.single_point, w.vote_based, w.best_node);
        for (bool b : w.node_labels) s += fmt::format(",{:d}", b);
        s += '\n';
    }
    write_text(dir / "windows.csv", s);

    s = "stage,epoch,loss\n";
    for (std::size_t m = 0; m < standalone_reports.size(); ++m) {
        const auto name = standalone_reports.size() == 1 ? std::string("standalone") : fmt::format("standalone_{}", m);
        for (std::size_t e = 0; e < standalone_reports[m].epoch_loss.size(); ++e) {
            s += fmt::format("{},{},{:.9g}\n", name, e + 1, standalone_reports[m].epoch_loss[e]);
        }
    }
    for (std::size_t e = 0; e < autoencoder_report.epoch_loss.size(); ++e) {
        s += fmt::format("autoencoder,{},{:.9g}\n", e + 1, autoencoder_report.epoch_loss[e]);
    }
    for (std::size_t e = 0; e < meta_report.epoch_loss.size(); ++e) {
        s += fmt::format("meta,{},{:.9g}\n", e + 1, meta_report.epoch_loss[e]);
    }
    write_text(dir / "loss_curves.csv", s);
}

std::string ExperimentReport::to_text() const {
    std::string s;
    s += fmt::format("scenario {}  nodes {}  templates {}\n", scenario, n_nodes, templates);
    s += fmt::format("windows: {} train / {} test   groups: {} train / {} test\n\n", train_windows, test_windows,
                     train_groups, test_groups);
    s += "cluster (per window)\n" + prf_header("method");
    for (const auto& m : cluster) s += prf_row(m.method, m.counts);
    s += fmt::format("best node: node_{}\n\n", best_node);
    s += "nodes (window label vs cluster truth)\n" + prf_header("node");
    for (const auto& n : nodes) s += prf_row(fmt::format("node_{}", n.node), n.window_counts);
    s += "\nnodes (per group)\n" + prf_header("node");
    for (const auto& n : nodes) s += prf_row(fmt::format("node_{}", n.node), n.group_counts);
    std::string losses;
    for (std::size_t m = 0; m < standalone_reports.size(); ++m) {
        if (!standalone_reports[m].epoch_loss.empty()) {
            losses += fmt::format("  standalone[{}]  {:.6f} (pos weight {:.2f})\n", m,
                                  standalone_reports[m].epoch_loss.back(), standalone_reports[m].pos_weight);
        }
    }
    if (!autoencoder_report.epoch_loss.empty()) {
        losses += fmt::format("  autoencoder    {:.6g}\n", autoencoder_report.epoch_loss.back());
    }
    if (!meta_report.epoch_loss.empty()) losses += fmt::format("  meta           {:.6f}\n", meta_report.epoch_loss.back());
    if (!losses.empty()) s += "\nfinal training loss\n" + losses;
    if (!timings.empty()) {
        s += "\ntimings\n";
        double total = 0.0;
        for (const auto& t : timings) {
            s += fmt::format("  {:<16} {:8.2f} s\n", t.stage, t.seconds);
            total += t.seconds;
        }
        s += fmt::format("  {:<16} {:8.2f} s\n", "total", total);
    }
    return s;
}

std::string render_report_dir(const std::filesystem::path& dir) {
    std::string s = "cluster (per window)\n" + prf_header("method");
    const auto cluster = read_csv(dir / "cluster_metrics.csv");
    for (std::size_t i = 1; i < cluster.size(); ++i) s += prf_row(cluster[i].at(0), counts_from(cluster[i], 1));
    const auto nodes = read_csv(dir / "node_metrics.csv");
    for (const char* granularity : {"window", "group"}) {
        s += fmt::format("\nnodes ({})\n", granularity) + prf_header("node");
        for (std::size_t i = 1; i < nodes.size(); ++i) {
            if (nodes[i].at(1) == granularity) s += prf_row("node_" + nodes[i][0], counts_from(nodes[i], 2));
        }
    }
    return s;
}

}  // namespace multilog
