// SPDX-License-Identifier: Apache-2.0
#include "multilog/generator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <fmt/core.h>

namespace multilog {

namespace {

// lines per second on an injected node, spread over the anomaly's own templates
constexpr double kSignatureRate = 1.5;
// lines per second on each peer for anomalies with a cross-node signature
constexpr double kCrossNodeRate = 1.5;

const TemplateFamily kPeerGap{"peer_gap", "WARN", "Heartbeat from node [*] missed for [*] ms"};
const TemplateFamily kRetry{"retry", "WARN", "Retry sending request to node [*] attempt [*]"};
const TemplateFamily kCpuHigh{"cpu_high", "WARN", "CPU usage exceeds threshold at [*] percent"};
const TemplateFamily kIoWait{"io_wait", "WARN", "Disk IO wait time exceeds [*] ms"};
const TemplateFamily kMemHigh{"mem_high", "WARN", "Memory usage reaches [*] MB exceeding limit"};
const TemplateFamily kSlowQuery{"slow_query", "WARN", "Slow query detected costing [*] ms"};
const TemplateFamily kStartup{"startup", "INFO", "Server started on port [*]"};
const TemplateFamily kLeaderRepl{"replication", "INFO", "Leader replicating [*] log entries to followers"};
const TemplateFamily kFollowerRepl{"replication", "INFO", "Follower applied [*] log entries from leader"};

std::vector<AnomalyEffect> build_catalog() {
    std::vector<AnomalyEffect> c;
    auto add = [&](int no, std::string name, std::string cause, std::string desc) -> AnomalyEffect& {
        AnomalyEffect e;
        e.anomaly_no = no;
        e.name = std::move(name);
        e.cause = std::move(cause);
        e.description = std::move(desc);
        c.push_back(std::move(e));
        return c.back();
    };
    add(1, "CPU Saturation", "System", "The CPU computing resources exhaust.").extra_templates = {
        kCpuHigh, {"cpu_reject", "ERROR", "Thread pool rejected task due to CPU overload"}};
    add(2, "IO Saturation", "System", "The I/O bandwidth is heavily occupied.").extra_templates = {
        kIoWait, {"write_stall", "WARN", "Write stall detected due to slow disk"}};
    add(3, "Memory Saturation", "System", "Insufficient memory resources.").extra_templates = {
        kMemHigh, {"oom", "ERROR", "OutOfMemoryError while allocating buffer"}};
    {
        auto& e = add(4, "Network Bandwidth Limited", "System",
                      "The network bandwidth between nodes is limited.");
        e.extra_templates = {{"net_limit", "WARN", "Network throughput limited to [*] KB per second"}, kRetry};
        e.cross_node_templates = {kPeerGap, kRetry};
    }
    {
        auto& e = add(5, "Network Partition Arise", "System", "Network partition occurs between nodes.");
        e.extra_templates = {{"partition", "ERROR", "Connection to node [*] lost due to partition"}, kRetry};
        e.cross_node_templates = {kPeerGap, kRetry};
    }
    {
        auto& e = add(6, "Machine Down", "System", "One server goes down when the applications are running.");
        e.silences_node = true;
        e.cross_node_templates = {kPeerGap, kRetry};
    }
    {
        auto& e = add(7, "Accompanying Slow Query", "Database", "Excessive query load.");
        e.rate_multipliers = {{"query", 2.0}};
        e.extra_templates = {kSlowQuery};
        e.cross_node_templates = {kSlowQuery};
    }
    {
        auto& e = add(8, "Export Operations", "Database", "Backing up data to external source.");
        e.bracketed = true;
        e.extra_templates = {{"export_start", "INFO", "Export task started to external file"},
                             {"export_progress", "INFO", "Currently [*] data"},
                             {"export_finish", "INFO", "Export task finished"}};
        e.cross_node_templates = {kPeerGap, kRetry};
    }
    {
        auto& e = add(9, "Import Operations", "Database", "Importing data from external source.");
        e.bracketed = true;
        e.extra_templates = {{"import_start", "INFO", "Import task started from external source"},
                             {"import_progress", "INFO", "Currently [*] data imported"},
                             {"import_finish", "INFO", "Import task finished"}};
        e.cross_node_templates = {kPeerGap, kRetry};
    }
    add(10, "Resource-Intensive Compaction", "Database",
        "Compaction tasks consume a substantial amount of system resources.")
        .rate_multipliers = {{"compaction_start", 8.0}, {"compaction_end", 8.0}};
    add(11, "Overly Frequent Disk Flushes", "Database",
        "The low interval of flush operations leads to frequent disk writes.")
        .rate_multipliers = {{"memtable", 8.0}, {"flush", 8.0}};
    return c;
}

struct Segment {
    double begin_ms = 0.0;  // relative to start
    double end_ms = 0.0;
    int anomaly_no = 0;     // 0 = rest
    std::set<NodeId> nodes;
};

struct Emission {
    double t;
    const TemplateFamily* family;
};

std::string fill(const std::string& text, Rng& rng) {
    std::string out;
    std::size_t pos = 0;
    while (true) {
        const auto hit = text.find("[*]", pos);
        out.append(text, pos, hit == std::string::npos ? std::string::npos : hit - pos);
        if (hit == std::string::npos) break;
        out += std::to_string(1 + rng.below(999));
        pos = hit + 3;
    }
    return out;
}

void poisson_arrivals(const TemplateFamily& f, double rate_per_s, double begin_ms, double end_ms,
                      Rng& rng, std::vector<Emission>& out) {
    if (rate_per_s <= 0.0) return;
    const double rate_per_ms = rate_per_s / 1000.0;
    double t = begin_ms + rng.exponential(rate_per_ms);
    while (t < end_ms) {
        out.push_back({t, &f});
        t += rng.exponential(rate_per_ms);
    }
}

std::vector<int> type_sequence(const GeneratorConfig& cfg, std::size_t episodes, Rng& rng) {
    std::vector<int> seq;
    std::vector<int> pool = cfg.anomaly_set;
    while (seq.size() < episodes) {
        for (std::size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng.below(i)]);
        // avoid repeating the previous cycle's last type
        if (!seq.empty() && pool.size() > 1 && pool.front() == seq.back()) std::swap(pool.front(), pool.back());
        for (int t : pool) {
            if (seq.size() == episodes) break;
            seq.push_back(t);
        }
    }
    return seq;
}

}  // namespace

void GeneratorConfig::validate() const {
    if (n_nodes == 0) throw Error("generator needs at least one node");
    if (!(duration_s > 0.0) || !(base_rate > 0.0)) throw Error("duration and base rate must be positive");
    if (!(inject_len_s > 0.0) || !(rest_len_s > 0.0)) throw Error("inject and rest lengths must be positive");
    if (noise_rate < 0.0) throw Error("noise rate must be non-negative");
    if (anomaly_set.empty()) throw Error("anomaly set must not be empty");
    for (int a : anomaly_set) {
        if (a < 1 || a > kAnomalyTypeCount) throw Error(fmt::format("unknown anomaly type {}", a));
    }
    const std::set<int> unique(anomaly_set.begin(), anomaly_set.end());
    if (unique.size() != anomaly_set.size()) throw Error("anomaly set has duplicates");
    const bool single_type = scenario == Scenario::Single2Single || scenario == Scenario::Single2Multi;
    if (single_type && anomaly_set.size() != 1) {
        throw Error(fmt::format("{} requires exactly one anomaly type", to_string(scenario)));
    }
    if (!single_type && anomaly_set.size() < 2) {
        throw Error(fmt::format("{} requires at least two anomaly types", to_string(scenario)));
    }
    const bool multi_node = scenario == Scenario::Single2Multi || scenario == Scenario::Multi2Multi;
    if (multi_node && n_nodes < 2) throw Error(fmt::format("{} requires at least two nodes", to_string(scenario)));
}

std::size_t GeneratorConfig::episode_count() const {
    if (duration_s <= rest_len_s) return 0;
    return static_cast<std::size_t>(std::floor((duration_s - rest_len_s) / (rest_len_s + inject_len_s)));
}

const std::vector<AnomalyEffect>& describe_anomalies() {
    static const std::vector<AnomalyEffect> catalog = build_catalog();
    return catalog;
}

const AnomalyEffect& anomaly_effect(int anomaly_no) {
    if (anomaly_no < 1 || anomaly_no > kAnomalyTypeCount) {
        throw Error(fmt::format("unknown anomaly type {}", anomaly_no));
    }
    return describe_anomalies()[static_cast<std::size_t>(anomaly_no - 1)];
}

const std::vector<std::pair<TemplateFamily, double>>& normal_families() {
    static const std::vector<std::pair<TemplateFamily, double>> families = {
        {{"write", "INFO", "Received write request of [*] points from client [*]"}, 0.20},
        {{"query", "INFO", "Query served in [*] ms for [*] rows"}, 0.15},
        {{"memtable", "INFO", "Create a memtable for region [*]"}, 0.05},
        {{"flush", "INFO", "Flush a memtable to file seq-[*].tsfile"}, 0.05},
        {{"heartbeat_sent", "INFO", "Heartbeat sent to node [*] term [*]"}, 0.10},
        {{"heartbeat_received", "INFO", "Heartbeat received from node [*] latency [*] ms"}, 0.10},
        {{"compaction_start", "INFO", "Compaction task started for partition [*]"}, 0.03},
        {{"compaction_end", "INFO", "Compaction task finished for partition [*] in [*] ms"}, 0.03},
        {{"wal", "DEBUG", "WAL sync completed with [*] entries"}, 0.10},
        {{"snapshot", "INFO", "Snapshot taken at index [*]"}, 0.02},
        {{"cache", "DEBUG", "Cache hit ratio [*] percent"}, 0.05},
        // leader/follower wording is substituted per node role
        {kLeaderRepl, 0.12},
    };
    return families;
}

ClusterDataset generate_dataset(const GeneratorConfig& cfg, GeneratorSummary* summary) {
    cfg.validate();
    Rng rng(cfg.seed);
    const std::size_t episodes = cfg.episode_count();
    const double rest_ms = cfg.rest_len_s * 1000.0;
    const double inject_ms = cfg.inject_len_s * 1000.0;
    const double duration_ms = cfg.duration_s * 1000.0;

    const bool single_node = cfg.scenario == Scenario::Single2Single || cfg.scenario == Scenario::Multi2Single;
    const auto fixed_target = static_cast<NodeId>(rng.below(cfg.n_nodes));
    const auto types = type_sequence(cfg, episodes, rng);

    std::vector<Segment> segments;
    double t = 0.0;
    segments.push_back({0.0, std::min(rest_ms, duration_ms), 0, {}});
    t = rest_ms;
    for (std::size_t e = 0; e < episodes; ++e) {
        Segment inj{t, t + inject_ms, types[e], {}};
        if (single_node) {
            inj.nodes.insert(fixed_target);
        } else {
            const std::size_t max_k = std::max<std::size_t>(1, cfg.n_nodes / 2);
            const std::size_t k = 1 + rng.below(max_k);
            while (inj.nodes.size() < k) inj.nodes.insert(static_cast<NodeId>(rng.below(cfg.n_nodes)));
        }
        segments.push_back(inj);
        t += inject_ms;
        const double rest_end = (e + 1 == episodes) ? std::max(duration_ms, t + rest_ms) : t + rest_ms;
        segments.push_back({t, rest_end, 0, {}});
        t = rest_end;
    }

    ClusterDataset ds;
    ds.n_nodes = cfg.n_nodes;
    ds.scenario = cfg.scenario;
    ds.entries.resize(cfg.n_nodes);
    const NodeId leader = 0;
    const std::vector<const TemplateFamily*> noise_pool = {&kPeerGap, &kRetry, &kCpuHigh, &kIoWait, &kMemHigh};

    std::vector<std::vector<Emission>> emitted(cfg.n_nodes);
    for (NodeId n = 0; n < cfg.n_nodes; ++n) emitted[n].push_back({0.0, &kStartup});

    for (const auto& seg : segments) {
        const AnomalyEffect* effect = seg.anomaly_no ? &anomaly_effect(seg.anomaly_no) : nullptr;
        for (NodeId n = 0; n < cfg.n_nodes; ++n) {
            auto& out = emitted[n];
            const bool injected = effect && seg.nodes.contains(n);
            if (injected && effect->silences_node) continue;

            for (const auto& [family, share] : normal_families()) {
                const TemplateFamily& f = (family.name == "replication" && n != leader) ? kFollowerRepl : family;
                double rate = share * cfg.base_rate;
                if (injected) {
                    for (const auto& [name, mult] : effect->rate_multipliers) {
                        if (name == f.name) rate *= mult;
                    }
                }
                poisson_arrivals(f, rate, seg.begin_ms, seg.end_ms, rng, out);
            }
            if (injected && !effect->extra_templates.empty()) {
                const auto& extras = effect->extra_templates;
                if (effect->bracketed) {
                    out.push_back({seg.begin_ms + static_cast<double>(rng.below(200)), &extras.front()});
                    for (std::size_t k = 1; k + 1 < extras.size(); ++k) {
                        poisson_arrivals(extras[k], kSignatureRate / static_cast<double>(extras.size() - 2),
                                         seg.begin_ms + 200.0, seg.end_ms - 200.0, rng, out);
                    }
                    out.push_back({seg.end_ms - 1.0 - static_cast<double>(rng.below(200)), &extras.back()});
                } else {
                    for (const auto& f : extras) {
                        poisson_arrivals(f, kSignatureRate / static_cast<double>(extras.size()),
                                         seg.begin_ms, seg.end_ms, rng, out);
                    }
                }
            }
            if (effect && !injected && !effect->cross_node_templates.empty()) {
                const auto& cross = effect->cross_node_templates;
                // a slow query load is felt cluster-wide, but less than on its target
                const double total = effect->anomaly_no == 7 ? kCrossNodeRate / 2.0 : kCrossNodeRate;
                for (const auto& f : cross) {
                    poisson_arrivals(f, total / static_cast<double>(cross.size()), seg.begin_ms,
                                     seg.end_ms, rng, out);
                }
            }
            if (!effect && cfg.noise_rate > 0.0) {
                std::vector<Emission> noise;
                TemplateFamily dummy{"noise", "WARN", ""};
                poisson_arrivals(dummy, cfg.noise_rate, seg.begin_ms, seg.end_ms, rng, noise);
                for (const auto& e : noise) out.push_back({e.t, noise_pool[rng.below(noise_pool.size())]});
            }
        }
    }

    std::vector<std::size_t> per_type(kAnomalyTypeCount, 0);
    std::vector<std::size_t> per_node(cfg.n_nodes, 0);
    for (const auto& seg : segments) {
        if (!seg.anomaly_no) continue;
        AnomalyLabel l;
        l.start_ts = cfg.start_ms + static_cast<TimestampMs>(seg.begin_ms);
        l.end_ts = cfg.start_ms + static_cast<TimestampMs>(seg.end_ms) - 1;
        l.anomaly_no = seg.anomaly_no;
        l.nodes = seg.nodes;
        ds.labels.push_back(std::move(l));
        ++per_type[static_cast<std::size_t>(seg.anomaly_no - 1)];
        for (NodeId n : seg.nodes) ++per_node[n];
    }

    for (NodeId n = 0; n < cfg.n_nodes; ++n) {
        auto& out = emitted[n];
        std::stable_sort(out.begin(), out.end(), [](const Emission& a, const Emission& b) {
            return std::floor(a.t) < std::floor(b.t);
        });
        auto& entries = ds.entries[n];
        entries.reserve(out.size());
        for (const auto& e : out) {
            entries.push_back(LogEntry{n, cfg.start_ms + static_cast<TimestampMs>(std::floor(e.t)),
                                       e.family->level, fill(e.family->text, rng)});
        }
    }

    if (summary) {
        summary->episodes = episodes;
        summary->episodes_per_type = per_type;
        summary->injections_per_node = per_node;
        summary->lines_per_node.clear();
        for (const auto& node : ds.entries) summary->lines_per_node.push_back(node.size());
    }
    return ds;
}

std::string GeneratorSummary::to_text(const ClusterDataset& ds) const {
    std::string s;
    s += fmt::format("scenario: {}\nnodes: {}\nepisodes: {}\n", to_string(ds.scenario), ds.n_nodes, episodes);
    if (auto range = ds.time_range()) {
        s += fmt::format("time range: {} .. {} ({:.1f} min)\n", format_iso8601(range->first),
                         format_iso8601(range->second),
                         static_cast<double>(range->second - range->first) / 60000.0);
    }
    s += "lines per node:\n";
    for (std::size_t n = 0; n < lines_per_node.size(); ++n) {
        s += fmt::format("  node_{}: {} lines, injected {} times\n", n, lines_per_node[n],
                         n < injections_per_node.size() ? injections_per_node[n] : 0);
    }
    s += "episodes per anomaly type:\n";
    for (std::size_t k = 0; k < episodes_per_type.size(); ++k) {
        if (episodes_per_type[k] == 0) continue;
        s += fmt::format("  {:>2} {:<30} {}\n", k + 1, describe_anomalies()[k].name, episodes_per_type[k]);
    }
    return s;
}

GeneratorSummary generate(const GeneratorConfig& cfg, const std::filesystem::path& out_dir) {
    GeneratorSummary summary;
    const auto ds = generate_dataset(cfg, &summary);
    write_dataset(ds, out_dir);
    std::ofstream report(out_dir / "summary.txt", std::ios::trunc);
    if (!report) throw Error(fmt::format("cannot write {}", (out_dir / "summary.txt").string()));
    report << summary.to_text(ds);
    return summary;
}

}  // namespace multilog
