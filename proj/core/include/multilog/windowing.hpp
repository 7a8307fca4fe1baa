// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "multilog/dataset.hpp"
#include "multilog/drain.hpp"

namespace multilog {

struct WindowSpec {
    TimestampMs span_ms = 5000;  // T
    std::size_t group_len = 20;  // M

    void validate() const;
};

/// M consecutive events of one node inside one window. A short tail is
/// filled with the PAD id.
struct Group {
    NodeId node = 0;
    std::size_t window_idx = 0;
    std::vector<EventId> events;
    /// Timestamps of the first and last real event.
    TimestampMs t0 = 0;
    TimestampMs t1 = 0;
    bool anomalous = false;

    bool operator==(const Group&) const = default;
};

struct Window {
    std::size_t idx = 0;
    /// Closed range [t0, t1] covered by the window.
    TimestampMs t0 = 0;
    TimestampMs t1 = 0;
    /// Cluster ground truth: some injected interval intersects the window.
    bool anomalous = false;
    /// groups[node], in stream order; empty when the node logged nothing.
    std::vector<std::vector<Group>> groups;
};

/// Tiles [min_ts, max_ts] of the parsed streams with windows of spec.span_ms
/// and chunks each node's events per window into groups of spec.group_len.
std::vector<Window> make_windows(std::span<const NodeEvents> nodes,
                                 std::span<const AnomalyLabel> labels, const WindowSpec& spec,
                                 EventId pad_id);

/// Number of non-PAD events at the front of the group.
std::size_t real_length(const Group& g, EventId pad_id);

}  // namespace multilog
