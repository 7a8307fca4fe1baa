// SPDX-License-Identifier: Apache-2.0
#include "multilog/windowing.hpp"

#include <algorithm>
#include <limits>

namespace multilog {

void WindowSpec::validate() const {
    if (span_ms <= 0) throw Error("window span must be positive");
    if (group_len < 2) throw Error("group length must be at least 2");
}

std::vector<Window> make_windows(std::span<const NodeEvents> nodes,
                                 std::span<const AnomalyLabel> labels, const WindowSpec& spec,
                                 EventId pad_id) {
    spec.validate();
    TimestampMs lo = std::numeric_limits<TimestampMs>::max();
    TimestampMs hi = std::numeric_limits<TimestampMs>::min();
    for (const auto& n : nodes) {
        if (n.ts.size() != n.events.size()) throw Error("timestamp/event length mismatch");
        if (n.ts.empty()) continue;
        lo = std::min(lo, n.ts.front());
        hi = std::max(hi, n.ts.back());
    }
    if (lo > hi) return {};

    const auto count = static_cast<std::size_t>((hi - lo) / spec.span_ms) + 1;
    std::vector<Window> windows(count);
    for (std::size_t w = 0; w < count; ++w) {
        auto& win = windows[w];
        win.idx = w;
        win.t0 = lo + static_cast<TimestampMs>(w) * spec.span_ms;
        win.t1 = win.t0 + spec.span_ms - 1;
        win.anomalous = any_anomaly_in(labels, win.t0, win.t1);
        win.groups.resize(nodes.size());
    }

    for (std::size_t n = 0; n < nodes.size(); ++n) {
        const auto& stream = nodes[n];
        std::size_t i = 0;
        while (i < stream.ts.size()) {
            const auto w = static_cast<std::size_t>((stream.ts[i] - lo) / spec.span_ms);
            const TimestampMs end = windows[w].t1;
            std::size_t j = i;
            while (j < stream.ts.size() && stream.ts[j] <= end) ++j;
            for (std::size_t start = i; start < j; start += spec.group_len) {
                const std::size_t stop = std::min(j, start + spec.group_len);
                Group g;
                g.node = static_cast<NodeId>(n);
                g.window_idx = w;
                g.events.assign(stream.events.begin() + static_cast<std::ptrdiff_t>(start),
                                stream.events.begin() + static_cast<std::ptrdiff_t>(stop));
                g.events.resize(spec.group_len, pad_id);
                g.t0 = stream.ts[start];
                g.t1 = stream.ts[stop - 1];
                g.anomalous = is_anomalous_at(labels, g.node, g.t0, g.t1);
                windows[w].groups[n].push_back(std::move(g));
            }
            i = j;
        }
    }
    return windows;
}

std::size_t real_length(const Group& g, EventId pad_id) {
    return static_cast<std::size_t>(
        std::find(g.events.begin(), g.events.end(), pad_id) - g.events.begin());
}

}  // namespace multilog
