#pragma once

#include "seqbf/numerics.hpp"

#include <string>
#include <variant>

namespace seqbf {

// Standardized observation: z = (theta_hat - theta0)/sigma with theta0 = 0.
struct ZObservation {
    double z;
    double sigma;  // standard error of theta_hat, > 0
};

// Analysis-prior families. BF01 > 1 favors H0, < 1 favors H1 throughout.
struct DirectionalDirectional {  // H0: theta <= 0 vs H1: theta > 0, theta ~ N(mu, tau^2)
    double mu;
    double tau;
};
struct PointPoint {  // H0: theta = 0 vs H1: theta = mu
    double mu;
};
struct PointTwoSided {  // H0: theta = 0 vs H1: theta ~ N(mu, tau^2)
    double mu;
    double tau;
};
struct PointDirectional {  // H0: theta = 0 vs H1: theta ~ N(mu, tau^2) truncated to (0, inf)
    double mu;
    double tau;
};
struct InformedT {  // H0: theta = 0 vs H1: theta ~ T_kappa(mu, tau) truncated to [a, b]
    double mu;
    double tau;
    double kappa;
    double a;
    double b;
};

using AnalysisPriorSpec = std::variant<DirectionalDirectional, PointPoint, PointTwoSided,
                                       PointDirectional, InformedT>;

void validate_prior(const AnalysisPriorSpec& spec);  // throws std::invalid_argument

// Conjugate-normal posterior summaries given z: tau*^2 = 1/(1/sigma^2 + 1/tau^2),
// mu* = (z/sigma + mu/tau^2) tau*^2.
struct PosteriorMoments {
    double mu_star;
    double tau_star;
};
PosteriorMoments posterior_moments(const ZObservation& obs, double mu, double tau);

// Critical-value sets: a single crossing, a two-sided pair, or no crossing at all.
struct Single {
    double z_crit;
};
struct TwoSidedBoundary {
    double M;  // center, -mu sigma/tau^2
    double X;  // discriminant
    double z_minus;
    double z_plus;
};
struct Pair {
    TwoSidedBoundary boundary;
};
struct Unattainable {
    std::string reason;
};
using CriticalSet = std::variant<Single, Pair, Unattainable>;

// Orientation of BF01 as a function of the statistic; the design layer uses it
// to turn critical values into stopping intervals.
enum class BfShape { DecreasingInZ, IncreasingInZ, TwoSided };
BfShape bf_shape(const AnalysisPriorSpec& spec);

// BF01 at a z observation, for the four z-statistic families.
double bf01_z(const ZObservation& obs, const AnalysisPriorSpec& spec);

// z value(s) with bf01_z = k at the given sigma.
CriticalSet critical_z(double k, double sigma, const AnalysisPriorSpec& spec);

// Informed t-test BF01: central t density over the prior-marginalized
// noncentral t density.
double bf01_t(double t, double n_eff, double df, const InformedT& spec);

// t value(s) with bf01_t = k. Supports one-sided truncated priors (a >= 0 or
// b <= 0, Single) and symmetric untruncated priors (Pair or Unattainable).
CriticalSet critical_t(double k, double n_eff, double df, const InformedT& spec);

}  // namespace seqbf
