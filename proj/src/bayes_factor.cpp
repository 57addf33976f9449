#include "seqbf/bayes_factor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace seqbf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// log odds of the upper tail: log[(1 - Phi(x))/Phi(x)]
double log_tail_odds(double x) {
    return log_norm_cdf(-x) - log_norm_cdf(x);
}

double log_bf_pts(double z, double mu, double tau, double sigma) {
    double r = 1.0 + tau * tau / (sigma * sigma);
    double shifted = z - mu / sigma;
    return 0.5 * std::log(r) - 0.5 * (z * z - shifted * shifted / r);
}

struct ExpandingBracketRoot {
    bool found = false;
    double root = 0.0;
};

// Root of g on [-10,10], widened to [-40,40] if needed; g monotone.
ExpandingBracketRoot expanding_root(const std::function<double(double)>& g) {
    for (double w : {10.0, 20.0, 40.0}) {
        double glo = g(-w), ghi = g(w);
        if (!std::isfinite(glo) || !std::isfinite(ghi)) continue;
        if ((glo > 0.0) != (ghi > 0.0) || glo == 0.0 || ghi == 0.0) {
            Tolerance tol;
            tol.abs_tol = 1e-10;
            tol.rel_tol = 0.0;
            tol.max_iter = 200;
            return {true, find_root(g, -w, w, tol)};
        }
    }
    return {false, 0.0};
}

}  // namespace

void validate_prior(const AnalysisPriorSpec& spec) {
    std::visit(
        [](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, DirectionalDirectional>) {
                require(s.tau > 0.0, "DirectionalDirectional: tau must be positive");
                require(std::isfinite(s.mu), "DirectionalDirectional: mu must be finite");
            } else if constexpr (std::is_same_v<T, PointPoint>) {
                require(std::isfinite(s.mu) && s.mu != 0.0, "PointPoint: mu must be finite and nonzero");
            } else if constexpr (std::is_same_v<T, PointTwoSided>) {
                require(s.tau > 0.0, "PointTwoSided: tau must be positive");
                require(std::isfinite(s.mu), "PointTwoSided: mu must be finite");
            } else if constexpr (std::is_same_v<T, PointDirectional>) {
                require(s.tau > 0.0, "PointDirectional: tau must be positive");
                require(std::isfinite(s.mu), "PointDirectional: mu must be finite");
            } else {
                require(s.tau > 0.0, "InformedT: tau must be positive");
                require(s.kappa > 0.0, "InformedT: kappa must be positive");
                require(std::isfinite(s.mu), "InformedT: mu must be finite");
                require(!std::isnan(s.a) && !std::isnan(s.b) && s.a < s.b,
                        "InformedT: requires a < b");
            }
        },
        spec);
}

PosteriorMoments posterior_moments(const ZObservation& obs, double mu, double tau) {
    require(obs.sigma > 0.0, "ZObservation: sigma must be positive");
    require(tau > 0.0, "posterior_moments: tau must be positive");
    double prec = 1.0 / (obs.sigma * obs.sigma) + 1.0 / (tau * tau);
    double tau_star2 = 1.0 / prec;
    double mu_star = (obs.z / obs.sigma + mu / (tau * tau)) * tau_star2;
    return {mu_star, std::sqrt(tau_star2)};
}

BfShape bf_shape(const AnalysisPriorSpec& spec) {
    validate_prior(spec);
    if (std::holds_alternative<DirectionalDirectional>(spec)) return BfShape::DecreasingInZ;
    if (std::holds_alternative<PointDirectional>(spec)) return BfShape::DecreasingInZ;
    if (std::holds_alternative<PointTwoSided>(spec)) return BfShape::TwoSided;
    if (const auto* pp = std::get_if<PointPoint>(&spec))
        return pp->mu > 0.0 ? BfShape::DecreasingInZ : BfShape::IncreasingInZ;
    const auto& it = std::get<InformedT>(spec);
    if (it.a >= 0.0) return BfShape::DecreasingInZ;
    if (it.b <= 0.0) return BfShape::IncreasingInZ;
    if (it.a == -kInf && it.b == kInf && it.mu == 0.0) return BfShape::TwoSided;
    throw std::invalid_argument(
        "bf_shape: InformedT prior must be one-sided (a >= 0 or b <= 0) or symmetric "
        "untruncated (mu = 0, a = -inf, b = inf)");
}

double bf01_z(const ZObservation& obs, const AnalysisPriorSpec& spec) {
    validate_prior(spec);
    require(!std::holds_alternative<InformedT>(spec),
            "bf01_z: InformedT priors are evaluated on the t scale via bf01_t");
    require(obs.sigma > 0.0, "ZObservation: sigma must be positive");
    double z = obs.z, sigma = obs.sigma;

    if (const auto* dd = std::get_if<DirectionalDirectional>(&spec)) {
        PosteriorMoments post = posterior_moments(obs, dd->mu, dd->tau);
        return std::exp(log_tail_odds(post.mu_star / post.tau_star) -
                        log_tail_odds(dd->mu / dd->tau));
    }
    if (const auto* pp = std::get_if<PointPoint>(&spec)) {
        double m = pp->mu;
        return std::exp(m * m / (2.0 * sigma * sigma) - z * m / sigma);
    }
    if (const auto* ts = std::get_if<PointTwoSided>(&spec)) {
        return std::exp(log_bf_pts(z, ts->mu, ts->tau, sigma));
    }
    const auto& pd = std::get<PointDirectional>(spec);
    PosteriorMoments post = posterior_moments(obs, pd.mu, pd.tau);
    double log_bf = log_bf_pts(z, pd.mu, pd.tau, sigma) +
                    log_norm_cdf(pd.mu / pd.tau) -
                    log_norm_cdf(post.mu_star / post.tau_star);
    return std::exp(log_bf);
}

CriticalSet critical_z(double k, double sigma, const AnalysisPriorSpec& spec) {
    validate_prior(spec);
    require(!std::holds_alternative<InformedT>(spec),
            "critical_z: InformedT priors are handled on the t scale via critical_t");
    require(k > 0.0 && std::isfinite(k), "critical_z: k must be positive and finite");
    require(sigma > 0.0, "critical_z: sigma must be positive");

    if (const auto* dd = std::get_if<DirectionalDirectional>(&spec)) {
        // posterior odds must equal k * prior odds; invert through Phi.
        // Work in whichever tail keeps the quantile argument away from 1.
        double log_c = std::log(k) + log_tail_odds(dd->mu / dd->tau);
        double m;
        if (log_c >= 0.0) {
            m = norm_quantile(1.0 / (1.0 + std::exp(log_c)));  // Phi(m) <= 1/2
        } else {
            double c = std::exp(log_c);
            m = -norm_quantile(c / (1.0 + c));  // Phi(-m) = c/(1+c) < 1/2
        }
        double tau_star = sigma * dd->tau / std::sqrt(sigma * sigma + dd->tau * dd->tau);
        double z = sigma * (m / tau_star - dd->mu / (dd->tau * dd->tau));
        return Single{z};
    }
    if (const auto* pp = std::get_if<PointPoint>(&spec)) {
        double m = pp->mu;
        double z = (m * m / (sigma * sigma) - 2.0 * std::log(k)) / (2.0 * m / sigma);
        return Single{z};
    }
    if (const auto* ts = std::get_if<PointTwoSided>(&spec)) {
        double r = 1.0 + ts->tau * ts->tau / (sigma * sigma);
        double M = -ts->mu * sigma / (ts->tau * ts->tau);
        double X = (1.0 + sigma * sigma / (ts->tau * ts->tau)) *
                   (ts->mu * ts->mu / (ts->tau * ts->tau) + std::log(r) - 2.0 * std::log(k));
        if (!(X > 0.0))
            return Unattainable{"threshold exceeds the BF range at this sigma (X < 0)"};
        double s = std::sqrt(X);
        return Pair{TwoSidedBoundary{M, X, M - s, M + s}};
    }

    // PointDirectional: numeric root of log BF = log k on an expanding bracket
    const auto& pd = std::get<PointDirectional>(spec);
    double log_k = std::log(k);
    auto g = [&](double z) {
        return std::log(bf01_z(ZObservation{z, sigma}, AnalysisPriorSpec{pd})) - log_k;
    };
    ExpandingBracketRoot res = expanding_root(g);
    if (!res.found)
        return Unattainable{"no BF = k crossing inside z in [-40, 40]"};
    // the family is monotone decreasing in z; flag violations loudly
    if (!(g(res.root - 1.0) >= -1e-9 && g(res.root + 1.0) <= 1e-9))
        throw std::runtime_error("critical_z: PointDirectional BF not monotone near root");
    return Single{res.root};
}

namespace {

// Truncated location-scale t prior density on [a,b], normalized.
struct TruncatedTPrior {
    double mu, tau, kappa, a, b, log_znorm;

    explicit TruncatedTPrior(const InformedT& s)
        : mu(s.mu), tau(s.tau), kappa(s.kappa), a(s.a), b(s.b) {
        double mass = t_cdf(b == kInf ? kInf : (b - mu) / tau, kappa) -
                      t_cdf(a == -kInf ? -kInf : (a - mu) / tau, kappa);
        if (!(mass >= 1e-12))
            throw std::invalid_argument("InformedT: prior truncation mass below 1e-12");
        log_znorm = std::log(mass);
    }

    double operator()(double theta) const {
        if (theta < a || theta > b) return 0.0;
        return t_pdf((theta - mu) / tau, kappa) / tau / std::exp(log_znorm);
    }
};

}  // namespace

double bf01_t(double t, double n_eff, double df, const InformedT& spec) {
    validate_prior(AnalysisPriorSpec{spec});
    require(n_eff > 0.0, "bf01_t: n_eff must be positive");
    require(df > 0.0, "bf01_t: df must be positive");

    TruncatedTPrior prior(spec);

    // Quadrature domain: [a,b] cut down to the hull of the prior bulk
    // (mu +- 40 tau) and the likelihood bulk in theta ((t +- 45)/sqrt(n)).
    // The likelihood factor vanishes outside its window, so heavy prior tails
    // beyond the hull cannot carry denominator mass; keeping the hull (rather
    // than the prior window alone) preserves fat-tailed priors under a
    // slowly-varying likelihood.
    double sqrt_n = std::sqrt(n_eff);
    double like_lo = (t - 45.0) / sqrt_n, like_hi = (t + 45.0) / sqrt_n;
    double lo = std::max(spec.a, std::min(spec.mu - 40.0 * spec.tau, like_lo));
    double hi = std::min(spec.b, std::max(spec.mu + 40.0 * spec.tau, like_hi));
    if (!(lo < hi)) {  // prior interval entirely outside the hull
        double slice = std::max(80.0 * spec.tau, 90.0 / sqrt_n);
        if (spec.a > spec.mu) {
            lo = spec.a;
            hi = std::min(spec.b, spec.a + slice);
        } else {
            hi = spec.b;
            lo = std::max(spec.a, spec.b - slice);
        }
    }

    auto integrand = [&](double theta) {
        return nct_pdf(t, df, theta * sqrt_n) * prior(theta);
    };

    // the likelihood peak near t/sqrt(n) and a tight prior spike are the
    // narrowest features; seed the adaptive rule with cuts around both
    double peak = t / sqrt_n, w = 1.0 / sqrt_n;
    std::vector<double> cuts = {lo,
                                spec.mu - 2.0 * spec.tau,
                                spec.mu,
                                spec.mu + 2.0 * spec.tau,
                                peak - 8.0 * w,
                                peak - 2.0 * w,
                                peak + 2.0 * w,
                                peak + 8.0 * w,
                                hi};
    for (double& c : cuts) c = std::clamp(c, lo, hi);
    std::sort(cuts.begin(), cuts.end());

    Tolerance qt;
    qt.abs_tol = 1e-60;
    qt.rel_tol = 1e-9;
    qt.max_iter = 2000;
    double denom = 0.0;
    try {
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            if (cuts[i + 1] - cuts[i] < 1e-13 * (hi - lo)) continue;
            denom += integrate_1d(integrand, cuts[i], cuts[i + 1], qt).value;
        }
    } catch (const QuadratureError& e) {
        throw QuadratureError(std::string("bf01_t: denominator quadrature failed: ") + e.what(),
                              e.best_estimate, e.err_est);
    }
    if (!(denom > 0.0))
        throw std::runtime_error("bf01_t: denominator integrated to a nonpositive value");
    return t_pdf(t, df) / denom;
}

CriticalSet critical_t(double k, double n_eff, double df, const InformedT& spec) {
    validate_prior(AnalysisPriorSpec{spec});
    require(k > 0.0 && std::isfinite(k), "critical_t: k must be positive and finite");
    double log_k = std::log(k);
    auto g = [&](double t) { return std::log(bf01_t(t, n_eff, df, spec)) - log_k; };

    BfShape shape = bf_shape(AnalysisPriorSpec{spec});
    if (shape == BfShape::DecreasingInZ || shape == BfShape::IncreasingInZ) {
        ExpandingBracketRoot res = expanding_root(g);
        if (!res.found)
            return Unattainable{"no BF = k crossing inside t in [-40, 40]"};
        return Single{res.root};
    }

    // symmetric untruncated prior: BF is maximized at t = 0
    double g0 = g(0.0);
    if (!(g0 > 0.0))
        return Unattainable{"threshold at or above the BF maximum at t = 0"};
    for (double w : {10.0, 20.0, 40.0}) {
        double gw = g(w);
        if (gw < 0.0) {
            Tolerance tol;
            tol.abs_tol = 1e-10;
            tol.rel_tol = 0.0;
            tol.max_iter = 200;
            double root = find_root(g, 0.0, w, tol);
            return Pair{TwoSidedBoundary{0.0, root * root, -root, root}};
        }
    }
    return Unattainable{"no BF = k crossing inside t in [0, 40]"};
}

}  // namespace seqbf
