#pragma once

#include "seqbf/numerics.hpp"

#include <cstdint>
#include <vector>

namespace seqbf {

// Axis-aligned box in R^d; +-inf bounds allowed.
struct HyperRectangle {
    std::vector<double> lower;
    std::vector<double> upper;

    void validate() const;  // throws std::invalid_argument
};

struct MvnMoments {
    std::vector<double> mean;
    std::vector<std::vector<double>> cov;

    std::size_t dim() const { return mean.size(); }
    void validate() const;  // shape checks only; PD is checked by the Cholesky
};

struct MvnResult {
    double prob;
    double err_est;  // 3-sigma-style bound over the QMC randomizations
};

// Pr(lower <= Z <= upper) for Z ~ N(mean, cov) via the Genz
// separation-of-variables transform with randomized QMC.
// Deterministic for a fixed seed. tol.abs_tol / tol.rel_tol set the stopping
// target for err_est; tol.max_iter caps the number of point-doubling rounds.
MvnResult mvn_prob(const HyperRectangle& rect, const MvnMoments& moments,
                   const Tolerance& tol, std::uint64_t seed);

// Sum of probabilities over pairwise disjoint rectangles (caller guarantee),
// with root-sum-square error aggregation. Empty list -> {0, 0}.
MvnResult mvn_prob_union(const std::vector<HyperRectangle>& rects,
                         const MvnMoments& moments, const Tolerance& tol,
                         std::uint64_t seed);

// Default accuracy for design probabilities (4-decimal reporting).
Tolerance mvn_default_tolerance();

// SplitMix64 step; shared by the QMC shift generator and the simulation module.
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace seqbf
