// SPDX-License-Identifier: Apache-2.0
#include "multilog/aggregation.hpp"

#include <algorithm>

#include "multilog/metrics.hpp"

namespace multilog {

bool node_label(std::span<const double> window_probs, double threshold) {
    return std::any_of(window_probs.begin(), window_probs.end(),
                       [&](double p) { return p >= threshold; });
}

bool single_point(const NodeLabels& labels) {
    return std::any_of(labels.begin(), labels.end(), [](bool b) { return b; });
}

bool vote_based(const NodeLabels& labels) {
    const auto votes = std::count(labels.begin(), labels.end(), true);
    return 2 * static_cast<std::size_t>(votes) > labels.size();
}

BestNodeResult best_node(const std::vector<std::vector<bool>>& node_streams,
                         const std::vector<bool>& truth) {
    if (node_streams.empty()) throw Error("best_node needs at least one node");
    BestNodeResult best;
    best.f1 = -1.0;
    for (std::size_t i = 0; i < node_streams.size(); ++i) {
        const auto& stream = node_streams[i];
        ConfusionCounts c;
        if (stream.size() != truth.size()) throw Error("best_node: stream length differs from truth");
        for (std::size_t w = 0; w < truth.size(); ++w) c.add(stream[w], truth[w]);
        const double f1 = prf1(c).f1;
        if (f1 > best.f1) {
            best.node = i;
            best.f1 = f1;
        }
    }
    best.labels = node_streams[best.node];
    return best;
}

}  // namespace multilog
