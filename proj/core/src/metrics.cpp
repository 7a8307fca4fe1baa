// SPDX-License-Identifier: Apache-2.0
#include "multilog/metrics.hpp"

#include "multilog/common.hpp"

namespace multilog {

void ConfusionCounts::add(bool predicted, bool actual) {
    if (predicted) {
        actual ? ++tp : ++fp;
    } else {
        actual ? ++fn : ++tn;
    }
}

double f1_score(double precision, double recall) {
    const double s = precision + recall;
    return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

Prf1 prf1(const ConfusionCounts& c) {
    Prf1 r;
    if (c.tp + c.fp > 0) r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn > 0) r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    r.f1 = f1_score(r.precision, r.recall);
    return r;
}

ConfusionCounts confusion(const std::vector<bool>& predicted, const std::vector<bool>& actual) {
    if (predicted.size() != actual.size()) throw Error("confusion: length mismatch");
    ConfusionCounts c;
    for (std::size_t i = 0; i < predicted.size(); ++i) c.add(predicted[i], actual[i]);
    return c;
}

}  // namespace multilog
