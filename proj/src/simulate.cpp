#include "seqbf/simulate.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace seqbf {

namespace {

constexpr std::uint64_t kStreamGamma = 0x9E3779B97F4A7C15ULL;

// One stream per replication: counter-keyed so a parallel run would produce
// the same numbers as this sequential one. The state of a SplitMix64 run
// advances by the same gamma on every draw, so stream starts must be strided
// by at least the per-replication draw budget or neighbours would replay
// each other's outputs shifted by a draw.
struct RepStream {
    std::uint64_t state;
    RepStream(std::uint64_t seed, std::uint64_t rep, std::uint64_t stride)
        : state(seed + kStreamGamma * (1 + rep * stride)) {}
    double uniform() {  // strictly inside (0, 1)
        return (static_cast<double>(splitmix64(state) >> 11) + 0.5) * 0x1.0p-53;
    }
    double normal() { return norm_quantile(uniform()); }
};

bool in_any(const std::vector<Interval>& ivs, double z) {
    for (const Interval& iv : ivs)
        if (z >= iv.lo && z <= iv.hi) return true;
    return false;
}

}  // namespace

void SimConfig::validate() const {
    if (n_replications < 1)
        throw std::invalid_argument("SimConfig: n_replications must be at least 1");
}

DesignReport simulate(const SequentialDesign& design, const SimConfig& cfg) {
    cfg.validate();
    const StoppingRegions regions = stopping_regions(design);  // validates the design
    const std::size_t m = design.schedule.size();
    const std::size_t arms = design.schedule.stages.front().n_report.size();
    const double R = static_cast<double>(cfg.n_replications);

    std::vector<double> d_info(m), sd_info(m), rsqrt_info(m);
    for (std::size_t j = 0; j < m; ++j) {
        double prev = j == 0 ? 0.0 : design.schedule.stages[j - 1].info;
        d_info[j] = design.schedule.stages[j].info - prev;
        sd_info[j] = std::sqrt(d_info[j]);
        rsqrt_info[j] = 1.0 / std::sqrt(design.schedule.stages[j].info);
    }

    std::vector<std::uint64_t> h1_at(m, 0), h0_at(m, 0), end_at(m, 0);
    const std::uint64_t stride = m + 2;  // theta slot + one per stage, padded
    for (std::uint64_t rep = 0; rep < cfg.n_replications; ++rep) {
        RepStream rs(cfg.seed, rep, stride);
        double theta = design.design_prior.mu_d;
        if (design.design_prior.tau_d > 0.0) theta += design.design_prior.tau_d * rs.normal();
        double score = 0.0;
        bool stopped = false;
        for (std::size_t j = 0; j < m; ++j) {
            score += theta * d_info[j] + sd_info[j] * rs.normal();
            double z = score * rsqrt_info[j];
            if (in_any(regions.bounds[j].h1, z)) {
                ++h1_at[j];
                ++end_at[j];
                stopped = true;
                break;
            }
            if (in_any(regions.bounds[j].h0, z)) {
                ++h0_at[j];
                ++end_at[j];
                stopped = true;
                break;
            }
        }
        if (!stopped) ++end_at[m - 1];  // ran to the end inconclusively
    }

    DesignReport rep;
    rep.stages.reserve(m);
    std::uint64_t c1 = 0, c0 = 0;
    for (std::size_t j = 0; j < m; ++j) {
        c1 += h1_at[j];
        c0 += h0_at[j];
        StageReport sr;
        sr.pr_h1_cum = static_cast<double>(c1) / R;
        sr.pr_h0_cum = static_cast<double>(c0) / R;
        sr.pr_inconclusive = 1.0 - sr.pr_h1_cum - sr.pr_h0_cum;
        sr.err_h1 = std::sqrt(sr.pr_h1_cum * (1.0 - sr.pr_h1_cum) / R);
        sr.err_h0 = std::sqrt(sr.pr_h0_cum * (1.0 - sr.pr_h0_cum) / R);
        sr.h0_stoppable = regions.bounds[j].h0_stoppable;
        sr.h1_stoppable = regions.bounds[j].h1_stoppable;
        rep.stages.push_back(sr);
    }

    rep.expected_n.assign(arms, 0.0);
    rep.sd_n.assign(arms, 0.0);
    rep.cov_n.assign(arms, 0.0);
    for (std::size_t a = 0; a < arms; ++a) {
        double e = 0.0, e2 = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            double n = design.schedule.stages[j].n_report[a];
            double w = static_cast<double>(end_at[j]) / R;
            e += w * n;
            e2 += w * n * n;
        }
        double var = std::max(0.0, e2 - e * e);
        if (cfg.n_replications > 1) var *= R / (R - 1.0);
        rep.expected_n[a] = e;
        rep.sd_n[a] = std::sqrt(var);
        rep.cov_n[a] = e > 0.0 ? rep.sd_n[a] / e : 0.0;
    }
    rep.err_expected_n = rep.sd_n.front() / std::sqrt(R);
    return rep;
}

CovCheckResult empirical_cov_check(const Schedule& schedule, const DesignPrior& prior,
                                   const SimConfig& cfg) {
    cfg.validate();
    const MvnMoments mom = z_moments(schedule, prior);
    const std::size_t m = schedule.size();
    const double R = static_cast<double>(cfg.n_replications);
    if (cfg.n_replications < 2)
        throw std::invalid_argument("empirical_cov_check: needs at least 2 replications");

    std::vector<double> d_info(m), sd_info(m), rsqrt_info(m);
    for (std::size_t j = 0; j < m; ++j) {
        double prev = j == 0 ? 0.0 : schedule.stages[j - 1].info;
        d_info[j] = schedule.stages[j].info - prev;
        sd_info[j] = std::sqrt(d_info[j]);
        rsqrt_info[j] = 1.0 / std::sqrt(schedule.stages[j].info);
    }

    std::vector<double> sum(m, 0.0), z(m);
    std::vector<std::vector<double>> cross(m, std::vector<double>(m, 0.0));
    const std::uint64_t stride = m + 2;
    for (std::uint64_t r = 0; r < cfg.n_replications; ++r) {
        RepStream rs(cfg.seed, r, stride);
        double theta = prior.mu_d;
        if (prior.tau_d > 0.0) theta += prior.tau_d * rs.normal();
        double score = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            score += theta * d_info[j] + sd_info[j] * rs.normal();
            z[j] = score * rsqrt_info[j];
        }
        for (std::size_t i = 0; i < m; ++i) {
            sum[i] += z[i];
            for (std::size_t j = 0; j <= i; ++j) cross[i][j] += z[i] * z[j];
        }
    }

    CovCheckResult out{0.0, 0.0, 0.0};
    std::vector<double> zbar(m);
    for (std::size_t i = 0; i < m; ++i) zbar[i] = sum[i] / R;
    std::vector<std::vector<double>> s(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            double v = (cross[i][j] - R * zbar[i] * zbar[j]) / (R - 1.0);
            s[i][j] = v;
            s[j][i] = v;
        }
    for (std::size_t i = 0; i < m; ++i) {
        double dev = std::fabs(zbar[i] - mom.mean[i]);
        double se = std::sqrt(s[i][i] / R);
        out.max_mean_dev = std::max(out.max_mean_dev, dev);
        out.max_se_ratio = std::max(out.max_se_ratio, dev / se);
        for (std::size_t j = 0; j <= i; ++j) {
            double cdev = std::fabs(s[i][j] - mom.cov[i][j]);
            // Wishart-style plug-in variance for a sample covariance entry.
            double cse = std::sqrt((s[i][i] * s[j][j] + s[i][j] * s[i][j]) / (R - 1.0));
            out.max_cov_dev = std::max(out.max_cov_dev, cdev);
            out.max_se_ratio = std::max(out.max_se_ratio, cdev / cse);
        }
    }
    return out;
}

}  // namespace seqbf
