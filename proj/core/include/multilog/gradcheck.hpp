// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference checks of the analytic gradients.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "multilog/nn.hpp"

namespace multilog::gradcheck {

struct Result {
    std::string name;
    double max_rel_error = 0.0;
    std::size_t checked = 0;

    bool passed(double tolerance = 1e-4) const { return checked > 0 && max_rel_error < tolerance; }
};

/// |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor = 1e-6);

/// `loss(grads)` returns the loss and accumulates the analytic parameter
/// gradients into `grads`. Every scalar of every parameter is perturbed by
/// +-eps.
Result check_parameters(const std::string& name, nn::ParamStore& store,
                        const std::function<double(nn::Gradients&)>& loss, double eps = 1e-5);

/// Compares `analytic` with finite differences of `loss()` taken over the
/// entries of `x`, which `loss` must read.
Result check_input(const std::string& name, nn::Matrix& x, const std::function<double()>& loss,
                   const nn::Matrix& analytic, double eps = 1e-5);

/// Replaces every parameter with U(-scale, scale) values.
void randomize(nn::ParamStore& store, Rng& rng, double scale = 0.5);

/// Dense, LSTM, attention, the three losses, autoencoder, meta-classifier and
/// the full standalone estimator, all at dims <= 8.
std::vector<Result> run_suite(std::uint64_t seed = 1);

}  // namespace multilog::gradcheck
