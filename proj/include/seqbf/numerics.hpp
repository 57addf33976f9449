#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace seqbf {

// Shared accuracy/budget knobs for the iterative routines below.
struct Tolerance {
    double abs_tol = 1e-8;
    double rel_tol = 1e-8;
    int max_iter = 200;

    void validate() const;  // throws std::invalid_argument
};

// Thrown when adaptive quadrature exhausts its subdivision budget.
// Carries the best estimate so callers can decide whether to limp on.
class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& msg, double best, double err)
        : std::runtime_error(msg), best_estimate(best), err_est(err) {}
    double best_estimate;
    double err_est;
};

// Thrown by find_root when the supplied interval does not bracket a sign change.
class BracketError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct QuadResult {
    double value;
    double err_est;
};

double norm_pdf(double x);
double norm_cdf(double x);
double log_norm_cdf(double x);
double norm_quantile(double p);

double t_pdf(double x, double df);
double t_cdf(double x, double df);

// Density of the noncentral t distribution, stable for |ncp| up to several
// hundred (evaluated in log space through an adaptive quadrature).
double nct_pdf(double x, double df, double ncp);

// Adaptive Gauss-Kronrod (G7,K15) integration. Infinite bounds are mapped to
// [0,1) via x = a + u/(1-u) and its mirror; doubly infinite integrals are
// split at zero. err_est is the accumulated |K15-G7| over all panels.
QuadResult integrate_1d(const std::function<double(double)>& f, double a, double b,
                        const Tolerance& tol);

// Brent's method. Endpoints may be given in either order; throws BracketError
// when f(lo) and f(hi) have the same sign.
double find_root(const std::function<double(double)>& f, double lo, double hi,
                 const Tolerance& tol);

}  // namespace seqbf
