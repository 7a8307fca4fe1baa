// SPDX-License-Identifier: Apache-2.0
//
// Baseline cluster verdicts built from per-node labels.
#pragma once

#include <span>
#include <vector>

#include "multilog/standalone.hpp"

namespace multilog {

/// One label per node for one window.
using NodeLabels = std::vector<bool>;

/// 1 iff the node's largest group probability in the window is >= threshold;
/// a node without groups is 0.
bool node_label(std::span<const double> window_probs, double threshold = 0.5);

/// Anomalous iff any node is.
bool single_point(const NodeLabels& labels);

/// Anomalous iff strictly more than half of the nodes are.
bool vote_based(const NodeLabels& labels);

struct BestNodeResult {
    std::size_t node = 0;
    double f1 = 0.0;
    std::vector<bool> labels;
};

/// node_streams[i][w] is node i's label for window w. Picks the node whose
/// stream has the highest F1 against `truth`; ties go to the lowest id.
BestNodeResult best_node(const std::vector<std::vector<bool>>& node_streams,
                         const std::vector<bool>& truth);

}  // namespace multilog
