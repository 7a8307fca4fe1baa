// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "multilog/common.hpp"
#include "multilog/metrics.hpp"

using namespace multilog;

TEST_SUITE("metrics") {

TEST_CASE("prf1 arithmetic") {
    ConfusionCounts c;
    c.tp = 9;
    c.fp = 1;
    c.fn = 1;
    const auto s = prf1(c);
    CHECK(s.precision == doctest::Approx(0.9));
    CHECK(s.recall == doctest::Approx(0.9));
    CHECK(s.f1 == doctest::Approx(0.9));
}

TEST_CASE("degenerate counts report zeros") {
    const auto s = prf1(ConfusionCounts{});
    CHECK(s.precision == 0.0);
    CHECK(s.recall == 0.0);
    CHECK(s.f1 == 0.0);
    CHECK(f1_score(0.0, 0.0) == 0.0);
}

TEST_CASE("F1 of P = 39.68 percent and R = 99.01 percent is 56.66 percent") {
    CHECK(std::abs(f1_score(0.3968, 0.9901) - 0.5666) <= 1e-4);
}

TEST_CASE("confusion counts") {
    const std::vector<bool> pred = {true, true, false, false, true};
    const std::vector<bool> truth = {true, false, true, false, true};
    const auto c = confusion(pred, truth);
    CHECK(c == ConfusionCounts{2, 1, 1, 1});
    CHECK(c.total() == 5);
    CHECK_THROWS_AS(confusion(pred, {true}), Error);
}

TEST_CASE("F1 recomputed from counts matches") {
    Rng rng(2);
    for (int t = 0; t < 100; ++t) {
        ConfusionCounts c{rng.below(50), rng.below(50), rng.below(50), rng.below(50)};
        const auto s = prf1(c);
        const double expected = (s.precision + s.recall) > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
        CHECK(s.f1 == doctest::Approx(expected));
    }
}

}
