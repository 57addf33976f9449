#pragma once

#include "seqbf/design.hpp"

#include <cstdint>

namespace seqbf {

struct SimConfig {
    std::uint64_t n_replications;
    std::uint64_t seed;
    void validate() const;
};

// Monte Carlo estimate of the same report computed analytically by
// characteristics(): replications draw theta from the design prior, walk the
// cumulative score process, and stop on the per-stage critical intervals.
// err fields carry Monte Carlo standard errors. Deterministic per
// (design, cfg); each replication has its own counter-keyed stream.
DesignReport simulate(const SequentialDesign& design, const SimConfig& cfg);

struct CovCheckResult {
    double max_mean_dev;  // worst |empirical mean - mu_d sqrt(I)|
    double max_cov_dev;   // worst |empirical cov - (Sigma + tau_d^2 sqrt(I) sqrt(I)^T)|
    double max_se_ratio;  // worst |deviation| / SE over all first and second moments
};

CovCheckResult empirical_cov_check(const Schedule& schedule, const DesignPrior& prior,
                                   const SimConfig& cfg);

}  // namespace seqbf
