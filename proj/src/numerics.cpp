#include "seqbf/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

namespace seqbf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kLogSqrt2Pi = 0.9189385332046727;

}  // namespace

void Tolerance::validate() const {
    if (!(abs_tol > 0.0))
        throw std::invalid_argument("Tolerance: abs_tol must be positive");
    if (!(rel_tol >= 0.0))
        throw std::invalid_argument("Tolerance: rel_tol must be nonnegative");
    if (max_iter < 1)
        throw std::invalid_argument("Tolerance: max_iter must be at least 1");
}

double norm_pdf(double x) {
    return std::exp(-0.5 * x * x - kLogSqrt2Pi);
}

double norm_cdf(double x) {
    if (x == kInf) return 1.0;
    if (x == -kInf) return 0.0;
    return 0.5 * std::erfc(-x / kSqrt2);
}

double log_norm_cdf(double x) {
    if (x > -20.0) return std::log(norm_cdf(x));
    // Deep lower tail: asymptotic expansion of Mills' ratio,
    // Phi(x) ~ phi(x)/(-x) * (1 - 1/x^2 + 3/x^4 - 15/x^6 + 105/x^8).
    double x2 = x * x;
    double x4 = x2 * x2;
    double corr = 1.0 - 1.0 / x2 + 3.0 / x4 - 15.0 / (x4 * x2) + 105.0 / (x4 * x4);
    return -0.5 * x2 - kLogSqrt2Pi - std::log(-x) + std::log(corr);
}

double norm_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("norm_quantile: p must lie in (0,1)");

    // Acklam's rational approximation, then one Halley step.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;

    double x;
    if (p < p_low) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        double q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    double pdf = norm_pdf(x);
    if (pdf > 1e-300) {  // skip refinement where the density underflows
        double e = norm_cdf(x) - p;
        double u = e / pdf;
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

namespace {

// Regularized incomplete beta via the continued fraction (Lentz's method).
double betacf(double a, double b, double x) {
    const int kMaxIter = 300;
    const double kEps = 3e-16, kFpMin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw std::runtime_error("betacf: continued fraction failed to converge");
}

double ibeta_reg(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double lbeta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                   a * std::log(x) + b * std::log1p(-x);
    double front = std::exp(lbeta);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

double t_pdf(double x, double df) {
    if (!(df > 0.0)) throw std::domain_error("t_pdf: df must be positive");
    double lg = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
                0.5 * std::log(df) - 0.5723649429247001 /* log sqrt(pi) */;
    return std::exp(lg - 0.5 * (df + 1.0) * std::log1p(x * x / df));
}

double t_cdf(double x, double df) {
    if (!(df > 0.0)) throw std::domain_error("t_cdf: df must be positive");
    if (x == 0.0) return 0.5;
    if (x == kInf) return 1.0;
    if (x == -kInf) return 0.0;
    double w = df / (df + x * x);
    double p = 0.5 * ibeta_reg(0.5 * df, 0.5, w);
    return x > 0.0 ? 1.0 - p : p;
}

namespace {

// 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule
// (nodes 1, 3, 5 and the centre carry the Gauss weights).
const double kXgk[8] = {0.991455371120813, 0.949107912342759, 0.864864423359769,
                        0.741531185599394, 0.586087235467691, 0.405845151377397,
                        0.207784955007898, 0.0};
const double kWgk[8] = {0.022935322010529, 0.063092092629979, 0.104790010322250,
                        0.140653259715525, 0.169004726639267, 0.190350578064785,
                        0.204432940075298, 0.209482141084728};
const double kWg[4] = {0.129484966168870, 0.279705391489277, 0.381830050505119,
                       0.417959183673469};

struct Panel {
    double a, b, value, err;
    bool operator<(const Panel& o) const { return err < o.err; }
};

Panel gk15(const std::function<double(double)>& f, double a, double b) {
    double h = 0.5 * (b - a), mid = 0.5 * (a + b);
    double fc = f(mid);
    double res_k = kWgk[7] * fc;
    double res_g = kWg[3] * fc;
    for (int j = 0; j < 7; ++j) {
        double x = h * kXgk[j];
        double fsum = f(mid - x) + f(mid + x);
        res_k += kWgk[j] * fsum;
        if (j % 2 == 1) res_g += kWg[j / 2] * fsum;
    }
    res_k *= h;
    res_g *= h;
    double err = std::fabs(res_k - res_g);
    if (!std::isfinite(res_k))
        throw QuadratureError("integrate_1d: integrand produced a non-finite value", res_k, err);
    return {a, b, res_k, err};
}

QuadResult adapt_gk(const std::function<double(double)>& f, double a, double b,
                    const Tolerance& tol) {
    std::priority_queue<Panel> heap;
    Panel p0 = gk15(f, a, b);
    double total = p0.value, total_err = p0.err;
    heap.push(p0);
    int splits = 0;
    while (total_err > std::max(tol.abs_tol, tol.rel_tol * std::fabs(total))) {
        if (++splits > tol.max_iter)
            throw QuadratureError("integrate_1d: subdivision budget exhausted", total, total_err);
        Panel worst = heap.top();
        heap.pop();
        double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b)
            throw QuadratureError("integrate_1d: interval too small to subdivide", total, total_err);
        Panel l = gk15(f, worst.a, mid), r = gk15(f, mid, worst.b);
        total += l.value + r.value - worst.value;
        total_err += l.err + r.err - worst.err;
        heap.push(l);
        heap.push(r);
    }
    return {total, total_err};
}

}  // namespace

QuadResult integrate_1d(const std::function<double(double)>& f, double a, double b,
                        const Tolerance& tol) {
    tol.validate();
    if (std::isnan(a) || std::isnan(b) || a >= b)
        throw std::invalid_argument("integrate_1d: require a < b");

    bool a_inf = (a == -kInf), b_inf = (b == kInf);
    if (!a_inf && !b_inf) return adapt_gk(f, a, b, tol);

    if (a_inf && b_inf) {
        Tolerance half = tol;
        half.abs_tol = 0.5 * tol.abs_tol;
        QuadResult lo = integrate_1d(f, -kInf, 0.0, half);
        QuadResult hi = integrate_1d(f, 0.0, kInf, half);
        return {lo.value + hi.value, lo.err_est + hi.err_est};
    }

    // Half-infinite: map to u in (0,1) with x = a + u/(1-u) (or mirrored).
    if (b_inf) {
        auto g = [&](double u) {
            double s = 1.0 - u;
            return f(a + u / s) / (s * s);
        };
        return adapt_gk(g, 0.0, 1.0, tol);
    }
    auto g = [&](double u) {
        double s = 1.0 - u;
        return f(b - u / s) / (s * s);
    };
    return adapt_gk(g, 0.0, 1.0, tol);
}

double nct_pdf(double x, double df, double ncp) {
    if (!(df > 0.0)) throw std::domain_error("nct_pdf: df must be positive");
    if (ncp == 0.0) return t_pdf(x, df);

    // Chi representation: with W = sqrt(V/df), V ~ chi^2_df,
    //   f(x) = 2 (df/2)^{df/2} / Gamma(df/2) * Int_0^inf w^df phi(xw - ncp) e^{-df w^2/2} dw.
    // The log-integrand is strictly concave with curvature at most -(df + x^2),
    // so a window of +-14/sqrt(df + x^2) around the mode loses mass below 3e-43.
    double log_pref = std::log(2.0) + 0.5 * df * std::log(0.5 * df) - std::lgamma(0.5 * df);
    auto log_g = [&](double w) {
        if (w <= 0.0) return -kInf;
        double r = x * w - ncp;
        return df * std::log(w) - 0.5 * df * w * w - 0.5 * r * r - kLogSqrt2Pi;
    };
    double curv = df + x * x;
    double disc = ncp * x;
    double w0 = (disc + std::sqrt(disc * disc + 4.0 * curv * df)) / (2.0 * curv);
    double g0 = log_g(w0);
    double half = 14.0 / std::sqrt(curv);
    double lo = std::max(0.0, w0 - half), hi = w0 + half;

    auto g = [&](double w) {
        double lg = log_g(w);
        return std::isfinite(lg) ? std::exp(lg - g0) : 0.0;
    };

    // Local width of the peak; split the window so the adaptive rule starts
    // with panels that resolve it.
    double s0 = 1.0 / std::sqrt(df / (w0 * w0) + curv);
    std::vector<double> cuts = {lo, w0 - 6.0 * s0, w0 - 2.0 * s0, w0 + 2.0 * s0,
                                w0 + 6.0 * s0, hi};
    for (double& c : cuts) c = std::clamp(c, lo, hi);
    std::sort(cuts.begin(), cuts.end());

    // rel_tol must sit above the |K15-G7| rounding-noise floor (~1e-13 relative)
    Tolerance qt;
    qt.abs_tol = 1e-14 * (hi - lo);
    qt.rel_tol = 5e-12;
    qt.max_iter = 400;
    double integral = 0.0;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (cuts[i + 1] - cuts[i] < 1e-14 * (hi - lo)) continue;
        integral += integrate_1d(g, cuts[i], cuts[i + 1], qt).value;
    }
    return std::exp(log_pref + g0) * integral;
}

double find_root(const std::function<double(double)>& f, double lo, double hi,
                 const Tolerance& tol) {
    tol.validate();
    if (lo > hi) std::swap(lo, hi);
    if (!std::isfinite(lo) || !std::isfinite(hi))
        throw std::invalid_argument("find_root: bounds must be finite");

    double a = lo, b = hi;
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0.0) == (fb > 0.0))
        throw BracketError("find_root: interval does not bracket a sign change");

    // Brent: inverse quadratic interpolation with bisection fallback.
    double c = a, fc = fa, d = b - a, e = d;
    for (int iter = 0; iter < tol.max_iter; ++iter) {
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = e = b - a;
        }
        if (std::fabs(fc) < std::fabs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        double tol1 = 2.0 * std::numeric_limits<double>::epsilon() * std::fabs(b) +
                      0.5 * (tol.abs_tol + tol.rel_tol * std::fabs(b));
        double xm = 0.5 * (c - b);
        if (std::fabs(xm) <= tol1 || fb == 0.0) return b;
        if (std::fabs(e) >= tol1 && std::fabs(fa) > std::fabs(fb)) {
            double s = fb / fa, p, q;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                double qq = fa / fc, r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::fabs(p);
            if (2.0 * p < std::min(3.0 * xm * q - std::fabs(tol1 * q), std::fabs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += (std::fabs(d) > tol1) ? d : (xm > 0.0 ? tol1 : -tol1);
        fb = f(b);
    }
    throw std::runtime_error("find_root: iteration limit reached");
}

}  // namespace seqbf
