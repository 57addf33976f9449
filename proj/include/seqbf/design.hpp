#pragma once

#include "seqbf/bayes_factor.hpp"
#include "seqbf/mvn.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace seqbf {

// Information models: I(n) for a per-arm sample size n (per group where the
// design has two arms).
struct UnitVariance {  // one-sample normal mean, I(n) = n/lambda^2
    double lambda2;
};
struct TwoSampleZ {};  // I(n) = n/2 per group
struct TwoProportionsDelta {  // delta-method log odds ratio
    double pi0;
    double pi1;
};
enum class TTestDesign { one_sample, paired, two_sample };
struct TTestApprox {  // I(n) = n_eff; z treated as approximately normal
    TTestDesign design;
};
using InformationModel =
    std::variant<UnitVariance, TwoSampleZ, TwoProportionsDelta, TTestApprox>;

void validate_info_model(const InformationModel& model);
int info_arms(const InformationModel& model);          // 1 or 2 reported arms
double info_at(const InformationModel& model, double n);  // I(n), n > 0
bool is_t_model(const InformationModel& model);
double t_df(const InformationModel& model, double n);  // t-test degrees of freedom

struct Stage {
    std::vector<double> n_report;  // per-arm sizes (1 or 2 entries)
    double info;
};

struct Schedule {
    std::vector<Stage> stages;

    std::size_t size() const { return stages.size(); }
    void validate() const;  // strictly increasing info, nondecreasing n
};

Schedule build_schedule(const InformationModel& model, const std::vector<double>& n_per_stage);

struct Thresholds {
    double k0;  // stop for H0 when BF01 >= k0, > 1
    double k1;  // stop for H1 when BF01 <= k1, in (0,1)
    void validate() const;
};

struct DesignPrior {
    double mu_d;
    double tau_d;  // >= 0; zero is a point prior at mu_d
    void validate() const;
};

struct SequentialDesign {
    Schedule schedule;
    Thresholds thresholds;
    AnalysisPriorSpec analysis_prior;
    DesignPrior design_prior;
    InformationModel info_model;
    int pair_stage_cap = 12;  // max analyses for two-critical-value families

    void validate() const;
};

// Marginal distribution of the z vector: mean mu_d * sqrt(I), covariance
// Sigma + tau_d^2 sqrt(I) sqrt(I)^T with Sigma_ij = sqrt(I_min/I_max).
MvnMoments z_moments(const Schedule& schedule, const DesignPrior& prior);

struct Interval {
    double lo;
    double hi;
};

struct StageBounds {
    std::vector<Interval> h0;    // stop-for-H0 pieces of the z line
    std::vector<Interval> h1;    // stop-for-H1 pieces
    std::vector<Interval> cont;  // continuation pieces
    bool h0_stoppable;
    bool h1_stoppable;
};

struct StoppingRegions {
    std::vector<StageBounds> bounds;                      // per stage
    std::vector<std::vector<HyperRectangle>> h1_rects;    // per stage, dim = stage index + 1
    std::vector<std::vector<HyperRectangle>> h0_rects;
    std::vector<HyperRectangle> final_continuation;       // m-dimensional
};

StoppingRegions stopping_regions(const SequentialDesign& design);

struct StageReport {
    double pr_h1_cum;
    double pr_h0_cum;
    double pr_inconclusive;
    double err_h1;
    double err_h0;
    bool h0_stoppable;
    bool h1_stoppable;
};

struct DesignReport {
    std::vector<StageReport> stages;
    std::vector<double> expected_n;  // per arm
    std::vector<double> sd_n;
    std::vector<double> cov_n;
    double err_expected_n;
    std::vector<std::string> warnings;
};

DesignReport characteristics(const SequentialDesign& design, const Tolerance& tol,
                             std::uint64_t seed);

enum class Hypothesis { H0, H1 };

class TargetUnreachable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MaxNResult {
    int n_max;                        // per-arm final-stage size
    std::vector<double> n_per_stage;  // integer schedule round(n_max * j / m)
    double achieved;                  // probability at the returned schedule
    DesignReport report;
};

// Smallest integer n_max whose equally spaced m-stage design reaches the
// target probability of stopping for the stated hypothesis. Root-finds on a
// continuous n_max in [n_lo, n_hi], then rounds and verifies.
MaxNResult find_max_n(const SequentialDesign& tmpl, double target, Hypothesis hyp,
                      double n_lo, double n_hi, const Tolerance& tol, std::uint64_t seed);

}  // namespace seqbf
