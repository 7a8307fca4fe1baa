// SPDX-License-Identifier: Apache-2.0
//
// Cluster log datasets: per-node log entries plus injected-anomaly labels,
// and the on-disk manifest format they are read from and written to.
//
// Layout of a manifest directory:
//   manifest.txt   key=value lines; n_nodes and scenario are required
//   node_<i>.log   "<ISO8601> <LEVEL> <message...>" one entry per line
//   labels.csv     start_ts_ms,end_ts_ms,anomaly_no,node_ids (ids ';'-separated)
#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "multilog/common.hpp"

namespace multilog {

enum class Scenario { Single2Single, Single2Multi, Multi2Single, Multi2Multi };

std::string_view to_string(Scenario s);
/// Throws Error for an unknown name.
Scenario scenario_from_string(std::string_view name);

/// Number of anomaly types in the catalog (CPU saturation .. frequent flushes).
inline constexpr int kAnomalyTypeCount = 11;

struct LogEntry {
    NodeId node = 0;
    TimestampMs ts = 0;
    std::string level;
    std::string message;

    bool operator==(const LogEntry&) const = default;
};

/// One injected anomaly: closed interval [start_ts, end_ts] on `nodes`.
struct AnomalyLabel {
    TimestampMs start_ts = 0;
    TimestampMs end_ts = 0;
    int anomaly_no = 0;
    std::set<NodeId> nodes;

    bool operator==(const AnomalyLabel&) const = default;
};

struct ClusterDataset {
    std::size_t n_nodes = 0;
    Scenario scenario = Scenario::Multi2Multi;
    /// entries[i] holds node i's entries, sorted by ts (ties in file order).
    std::vector<std::vector<LogEntry>> entries;
    std::vector<AnomalyLabel> labels;

    std::size_t entry_count() const;
    /// Smallest and largest timestamp over all nodes; nullopt when empty.
    std::optional<std::pair<TimestampMs, TimestampMs>> time_range() const;

    bool operator==(const ClusterDataset&) const = default;
};

struct LoadStats {
    std::vector<std::size_t> skipped_lines;  // per node
    std::vector<std::size_t> reordered;      // per node, entries moved by the re-sort
};

/// Reads a manifest directory. Unparseable log lines are counted and skipped;
/// out-of-order timestamps are re-sorted (stable) and counted. A missing
/// manifest or a malformed label row throws Error.
ClusterDataset load_dataset(const std::filesystem::path& dir, LoadStats* stats = nullptr);

/// Writes `ds` in manifest format. Each file is written to a temporary name
/// and renamed into place.
void write_dataset(const ClusterDataset& ds, const std::filesystem::path& dir);

/// True iff some label covers `node` and intersects the closed range [t0, t1].
bool is_anomalous_at(std::span<const AnomalyLabel> labels, NodeId node, TimestampMs t0,
                     TimestampMs t1);

/// True iff some label (on any node) intersects [t0, t1].
bool any_anomaly_in(std::span<const AnomalyLabel> labels, TimestampMs t0, TimestampMs t1);

// ISO-8601 UTC timestamps with millisecond precision: 2024-01-01T00:00:00.000Z
std::string format_iso8601(TimestampMs ts);
std::optional<TimestampMs> parse_iso8601(std::string_view text);

/// Parses one log line; nullopt when the line is not "<ts> <level> <message>".
std::optional<LogEntry> parse_log_line(std::string_view line, NodeId node);
std::string format_log_line(const LogEntry& e);

/// Parses "start,end,no,ids" into a label; throws Error describing the defect.
AnomalyLabel parse_label_row(std::string_view row);

}  // namespace multilog
