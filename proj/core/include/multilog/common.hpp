// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace multilog {

using NodeId = std::uint32_t;
using EventId = std::uint32_t;
using TimestampMs = std::int64_t;

/// Thrown for every unrecoverable condition in the library (bad input files,
/// shape mismatches, diverging training).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Portable pseudo-random stream. The standard distributions are
/// implementation-defined, so all sampling used for data generation and
/// initialization is derived from raw 64-bit draws here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();
    /// Uniform in [0, 1).
    double uniform();
    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    double normal();
    /// Exponential with the given rate (events per unit time).
    double exponential(double rate);
    std::uint64_t poisson(double mean);

private:
    std::uint64_t state_;
};

/// FNV-1a, used wherever a stable string hash is needed across runs.
std::uint64_t stable_hash(const std::string& s);

}  // namespace multilog
