#include "seqbf/mvn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace seqbf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double phi_diff(double lo, double hi) {
    return std::max(0.0, norm_cdf(hi) - norm_cdf(lo));
}

std::vector<double> sqrt_prime_fracs(std::size_t count) {
    std::vector<double> out;
    out.reserve(count);
    int candidate = 2;
    while (out.size() < count) {
        bool prime = true;
        for (int p = 2; p * p <= candidate; ++p)
            if (candidate % p == 0) {
                prime = false;
                break;
            }
        if (prime) {
            double r = std::sqrt((double)candidate);
            out.push_back(r - std::floor(r));
        }
        ++candidate;
    }
    return out;
}

// Lower-triangular Cholesky with greedy variable reordering: at each step pick
// the remaining variable with the smallest conditional truncation mass
// (Genz-Bretz). Shrinks the integrand's variance substantially in high dim.
struct GenzFactorization {
    std::size_t d;
    std::vector<double> L;  // row-major d x d, lower triangle
    std::vector<double> a, b;
};

GenzFactorization genz_factor(const HyperRectangle& rect, const MvnMoments& m) {
    std::size_t d = m.dim();
    std::vector<double> C(d * d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) C[i * d + j] = m.cov[i][j];

    GenzFactorization f;
    f.d = d;
    f.L.assign(d * d, 0.0);
    f.a.resize(d);
    f.b.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        f.a[i] = rect.lower[i] == -kInf ? -kInf : rect.lower[i] - m.mean[i];
        f.b[i] = rect.upper[i] == kInf ? kInf : rect.upper[i] - m.mean[i];
    }

    std::vector<double> y(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        std::size_t best = i;
        double best_mass = 2.0;
        double best_at = 0.0, best_bt = 0.0;
        for (std::size_t j = i; j < d; ++j) {
            double ssq = 0.0, s = 0.0;
            for (std::size_t k = 0; k < i; ++k) {
                ssq += f.L[j * d + k] * f.L[j * d + k];
                s += f.L[j * d + k] * y[k];
            }
            double var = C[j * d + j] - ssq;
            if (var <= 0.0)
                throw std::invalid_argument("mvn_prob: covariance not positive definite");
            double sd = std::sqrt(var);
            double at = f.a[j] == -kInf ? -kInf : (f.a[j] - s) / sd;
            double bt = f.b[j] == kInf ? kInf : (f.b[j] - s) / sd;
            double mass = phi_diff(at, bt);
            if (mass < best_mass) {
                best_mass = mass;
                best = j;
                best_at = at;
                best_bt = bt;
            }
        }
        if (best != i) {
            std::swap(f.a[best], f.a[i]);
            std::swap(f.b[best], f.b[i]);
            for (std::size_t k = 0; k < d; ++k) std::swap(C[best * d + k], C[i * d + k]);
            for (std::size_t k = 0; k < d; ++k) std::swap(C[k * d + best], C[k * d + i]);
            for (std::size_t k = 0; k < i; ++k) std::swap(f.L[best * d + k], f.L[i * d + k]);
        }

        double ssq = 0.0;
        for (std::size_t k = 0; k < i; ++k) ssq += f.L[i * d + k] * f.L[i * d + k];
        double diag = C[i * d + i] - ssq;
        if (diag <= 0.0)
            throw std::invalid_argument("mvn_prob: covariance not positive definite");
        double lii = std::sqrt(diag);
        f.L[i * d + i] = lii;
        for (std::size_t j = i + 1; j < d; ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < i; ++k) dot += f.L[j * d + k] * f.L[i * d + k];
            f.L[j * d + i] = (C[j * d + i] - dot) / lii;
        }

        // conditional expectation of the truncated coordinate, used by the
        // reordering heuristic at later steps
        double lo_pdf = best_at == -kInf ? 0.0 : norm_pdf(best_at);
        double hi_pdf = best_bt == kInf ? 0.0 : norm_pdf(best_bt);
        if (best_mass > 1e-300) {
            y[i] = (lo_pdf - hi_pdf) / best_mass;
        } else {
            double lo_c = std::clamp(best_at, -10.0, 10.0);
            double hi_c = std::clamp(best_bt, -10.0, 10.0);
            y[i] = 0.5 * (lo_c + hi_c);
        }
    }
    return f;
}

}  // namespace

void HyperRectangle::validate() const {
    if (lower.size() != upper.size())
        throw std::invalid_argument("HyperRectangle: lower/upper length mismatch");
    if (lower.empty()) throw std::invalid_argument("HyperRectangle: empty bounds");
    for (std::size_t i = 0; i < lower.size(); ++i) {
        if (std::isnan(lower[i]) || std::isnan(upper[i]) || !(lower[i] < upper[i]))
            throw std::invalid_argument("HyperRectangle: requires lower[i] < upper[i]");
    }
}

void MvnMoments::validate() const {
    if (mean.empty()) throw std::invalid_argument("MvnMoments: empty mean");
    if (cov.size() != mean.size())
        throw std::invalid_argument("MvnMoments: cov/mean dimension mismatch");
    for (std::size_t i = 0; i < cov.size(); ++i) {
        if (cov[i].size() != mean.size())
            throw std::invalid_argument("MvnMoments: cov is not square");
        for (std::size_t j = 0; j < i; ++j)
            if (std::fabs(cov[i][j] - cov[j][i]) >
                1e-12 * (1.0 + std::fabs(cov[i][j])))
                throw std::invalid_argument("MvnMoments: cov is not symmetric");
    }
}

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Tolerance mvn_default_tolerance() {
    Tolerance t;
    t.abs_tol = 5e-5;
    t.rel_tol = 0.0;
    t.max_iter = 9;  // point-doubling rounds: hard cap ~131k points per shift
    return t;
}

MvnResult mvn_prob(const HyperRectangle& rect, const MvnMoments& moments,
                   const Tolerance& tol, std::uint64_t seed) {
    rect.validate();
    moments.validate();
    tol.validate();
    if (rect.lower.size() != moments.dim())
        throw std::invalid_argument("mvn_prob: rect/moments dimension mismatch");

    GenzFactorization f = genz_factor(rect, moments);
    std::size_t d = f.d;

    if (d == 1) {
        double sd = f.L[0];
        double lo = f.a[0] == -kInf ? -kInf : f.a[0] / sd;
        double hi = f.b[0] == kInf ? kInf : f.b[0] / sd;
        return {phi_diff(lo, hi), 1e-15};
    }

    const int K = 12;  // QMC randomizations
    std::size_t nq = d - 1;
    std::vector<double> q = sqrt_prime_fracs(nq);
    std::vector<double> shift(K * nq);
    std::uint64_t state = seed ^ 0xD1B54A32D192ED03ULL;
    for (double& s : shift)
        s = (splitmix64(state) >> 11) * 0x1.0p-53;

    std::vector<double> base(nq, 0.0);
    std::vector<double> sums(K, 0.0);
    std::vector<double> y(nq);

    // first-coordinate truncation probabilities are point-independent
    double d0 = f.a[0] == -kInf ? 0.0 : norm_cdf(f.a[0] / f.L[0]);
    double e0 = f.b[0] == kInf ? 1.0 : norm_cdf(f.b[0] / f.L[0]);

    auto sample = [&](const std::vector<double>& u) {
        double p = e0 - d0;
        double dl = d0, el = e0;
        for (std::size_t i = 1; i < d; ++i) {
            if (p <= 0.0) return 0.0;
            double z = dl + u[i - 1] * (el - dl);
            z = std::clamp(z, 1e-16, 1.0 - 1e-16);
            y[i - 1] = norm_quantile(z);
            double s = 0.0;
            for (std::size_t k = 0; k < i; ++k) s += f.L[i * d + k] * y[k];
            double lii = f.L[i * d + i];
            dl = f.a[i] == -kInf ? 0.0 : norm_cdf((f.a[i] - s) / lii);
            el = f.b[i] == kInf ? 1.0 : norm_cdf((f.b[i] - s) / lii);
            p *= std::max(0.0, el - dl);
        }
        return p;
    };

    std::vector<double> u(nq);
    long n_done = 0;
    long batch = 256;
    double mean = 0.0, err = kInf;
    for (int round = 0; round < tol.max_iter; ++round) {
        for (long i = 0; i < batch; ++i) {
            for (std::size_t j = 0; j < nq; ++j) {
                base[j] += q[j];
                if (base[j] >= 1.0) base[j] -= 1.0;
            }
            for (int k = 0; k < K; ++k) {
                for (std::size_t j = 0; j < nq; ++j) {
                    double t = base[j] + shift[k * nq + j];
                    if (t >= 1.0) t -= 1.0;
                    u[j] = std::fabs(2.0 * t - 1.0);  // baker's transform
                }
                sums[k] += sample(u);
            }
        }
        n_done += batch;
        batch = n_done;  // double the total each round

        mean = 0.0;
        for (int k = 0; k < K; ++k) mean += sums[k] / n_done;
        mean /= K;
        double var = 0.0;
        for (int k = 0; k < K; ++k) {
            double dv = sums[k] / n_done - mean;
            var += dv * dv;
        }
        var /= (K - 1);
        err = 3.0 * std::sqrt(var / K);
        if (err <= std::max(tol.abs_tol, tol.rel_tol * std::fabs(mean))) break;
    }
    // budget exhausted: return the best estimate, flagged by its err_est
    return {std::clamp(mean, 0.0, 1.0), err};
}

MvnResult mvn_prob_union(const std::vector<HyperRectangle>& rects,
                         const MvnMoments& moments, const Tolerance& tol,
                         std::uint64_t seed) {
    if (rects.empty()) return {0.0, 0.0};
    double total = 0.0, err_sq = 0.0;
    std::uint64_t sub = seed;
    for (const auto& r : rects) {
        MvnResult res = mvn_prob(r, moments, tol, sub);
        total += res.prob;
        err_sq += res.err_est * res.err_est;
        sub += 0x9E3779B97F4A7C15ULL;
    }
    return {total, std::sqrt(err_sq)};
}

}  // namespace seqbf
