// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

namespace multilog {

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    void add(bool predicted, bool actual);
    std::size_t total() const { return tp + fp + tn + fn; }
    bool operator==(const ConfusionCounts&) const = default;
};

struct Prf1 {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Precision, recall and F1; every 0/0 is reported as 0.
Prf1 prf1(const ConfusionCounts& c);
/// F1 from precision and recall directly (0 when both are 0).
double f1_score(double precision, double recall);

ConfusionCounts confusion(const std::vector<bool>& predicted, const std::vector<bool>& actual);

}  // namespace multilog
