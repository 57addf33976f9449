#include "seqbf/design.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace seqbf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t stage_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t s = seed ^ (0x9E3779B97F4A7C15ULL * (salt + 1));
    return splitmix64(s);
}

}  // namespace

void validate_info_model(const InformationModel& model) {
    std::visit(
        [](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, UnitVariance>) {
                if (!(m.lambda2 > 0.0) || !std::isfinite(m.lambda2))
                    throw std::invalid_argument("UnitVariance: lambda2 must be positive");
            } else if constexpr (std::is_same_v<T, TwoProportionsDelta>) {
                if (!(m.pi0 > 0.0 && m.pi0 < 1.0 && m.pi1 > 0.0 && m.pi1 < 1.0))
                    throw std::invalid_argument(
                        "TwoProportionsDelta: rates must lie strictly inside (0, 1)");
            }
        },
        model);
}

int info_arms(const InformationModel& model) {
    return std::visit(
        [](const auto& m) -> int {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, UnitVariance>) return 1;
            if constexpr (std::is_same_v<T, TwoSampleZ>) return 2;
            if constexpr (std::is_same_v<T, TwoProportionsDelta>) return 2;
            if constexpr (std::is_same_v<T, TTestApprox>)
                return m.design == TTestDesign::two_sample ? 2 : 1;
        },
        model);
}

double info_at(const InformationModel& model, double n) {
    if (!(n > 0.0) || !std::isfinite(n))
        throw std::invalid_argument("info_at: n must be positive and finite");
    return std::visit(
        [n](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, UnitVariance>) {
                return n / m.lambda2;
            } else if constexpr (std::is_same_v<T, TwoSampleZ>) {
                return n / 2.0;
            } else if constexpr (std::is_same_v<T, TwoProportionsDelta>) {
                double v0 = 1.0 / (n * m.pi0 * (1.0 - m.pi0));
                double v1 = 1.0 / (n * m.pi1 * (1.0 - m.pi1));
                return 1.0 / (v0 + v1);
            } else {
                return m.design == TTestDesign::two_sample ? n / 2.0 : n;
            }
        },
        model);
}

bool is_t_model(const InformationModel& model) {
    return std::holds_alternative<TTestApprox>(model);
}

double t_df(const InformationModel& model, double n) {
    const auto* t = std::get_if<TTestApprox>(&model);
    if (t == nullptr) throw std::invalid_argument("t_df: not a t-test information model");
    return t->design == TTestDesign::two_sample ? 2.0 * n - 2.0 : n - 1.0;
}

void Schedule::validate() const {
    if (stages.empty()) throw std::invalid_argument("Schedule: needs at least one stage");
    const std::size_t arms = stages.front().n_report.size();
    if (arms != 1 && arms != 2)
        throw std::invalid_argument("Schedule: n_report must have one or two entries");
    for (std::size_t j = 0; j < stages.size(); ++j) {
        const Stage& st = stages[j];
        if (st.n_report.size() != arms)
            throw std::invalid_argument("Schedule: inconsistent arm count across stages");
        if (!(st.info > 0.0) || !std::isfinite(st.info))
            throw std::invalid_argument("Schedule: information must be positive and finite");
        for (double n : st.n_report)
            if (!(n > 0.0) || !std::isfinite(n))
                throw std::invalid_argument("Schedule: sample sizes must be positive");
        if (j > 0) {
            if (!(st.info > stages[j - 1].info))
                throw std::invalid_argument("Schedule: information must be strictly increasing");
            for (std::size_t a = 0; a < arms; ++a)
                if (st.n_report[a] < stages[j - 1].n_report[a])
                    throw std::invalid_argument("Schedule: sample sizes must be nondecreasing");
        }
    }
}

Schedule build_schedule(const InformationModel& model, const std::vector<double>& n_per_stage) {
    validate_info_model(model);
    if (n_per_stage.empty())
        throw std::invalid_argument("build_schedule: needs at least one stage");
    Schedule sched;
    const int arms = info_arms(model);
    sched.stages.reserve(n_per_stage.size());
    for (double n : n_per_stage) {
        Stage st;
        st.n_report.assign(static_cast<std::size_t>(arms), n);
        st.info = info_at(model, n);
        sched.stages.push_back(std::move(st));
    }
    sched.validate();
    return sched;
}

void Thresholds::validate() const {
    if (!(k0 > 1.0) || !std::isfinite(k0))
        throw std::invalid_argument("Thresholds: k0 must exceed 1");
    if (!(k1 > 0.0 && k1 < 1.0))
        throw std::invalid_argument("Thresholds: k1 must lie in (0, 1)");
}

void DesignPrior::validate() const {
    if (!std::isfinite(mu_d)) throw std::invalid_argument("DesignPrior: mu_d must be finite");
    if (!(tau_d >= 0.0) || !std::isfinite(tau_d))
        throw std::invalid_argument("DesignPrior: tau_d must be nonnegative");
}

void SequentialDesign::validate() const {
    schedule.validate();
    thresholds.validate();
    validate_prior(analysis_prior);
    design_prior.validate();
    validate_info_model(info_model);
    const bool t_prior = std::holds_alternative<InformedT>(analysis_prior);
    if (t_prior != is_t_model(info_model))
        throw std::invalid_argument(
            "SequentialDesign: InformedT analysis priors pair with the t-test information "
            "model and vice versa");
    if (pair_stage_cap < 1)
        throw std::invalid_argument("SequentialDesign: pair_stage_cap must be at least 1");
    if (bf_shape(analysis_prior) == BfShape::TwoSided &&
        schedule.size() > static_cast<std::size_t>(pair_stage_cap)) {
        std::ostringstream os;
        os << "SequentialDesign: " << schedule.size()
           << " stages with a two-critical-value family exceeds the cap of " << pair_stage_cap
           << " (region count doubles per stage)";
        throw std::invalid_argument(os.str());
    }
}

MvnMoments z_moments(const Schedule& schedule, const DesignPrior& prior) {
    schedule.validate();
    prior.validate();
    const std::size_t m = schedule.size();
    MvnMoments mom;
    mom.mean.resize(m);
    mom.cov.assign(m, std::vector<double>(m, 0.0));
    std::vector<double> s(m);
    for (std::size_t i = 0; i < m; ++i) s[i] = std::sqrt(schedule.stages[i].info);
    const double t2 = prior.tau_d * prior.tau_d;
    for (std::size_t i = 0; i < m; ++i) {
        mom.mean[i] = prior.mu_d * s[i];
        for (std::size_t j = 0; j < i; ++j) {
            // j < i so I_j < I_i
            double v = std::sqrt(schedule.stages[j].info / schedule.stages[i].info) +
                       t2 * s[i] * s[j];
            mom.cov[i][j] = v;
            mom.cov[j][i] = v;
        }
        mom.cov[i][i] = 1.0 + t2 * schedule.stages[i].info;
    }
    return mom;
}

namespace {

struct StageCrit {
    CriticalSet c0;
    CriticalSet c1;
};

StageCrit stage_critical(const SequentialDesign& design, std::size_t j) {
    const Stage& st = design.schedule.stages[j];
    if (const auto* it = std::get_if<InformedT>(&design.analysis_prior)) {
        double df = t_df(design.info_model, st.n_report.front());
        return {critical_t(design.thresholds.k0, st.info, df, *it),
                critical_t(design.thresholds.k1, st.info, df, *it)};
    }
    double sigma = 1.0 / std::sqrt(st.info);
    return {critical_z(design.thresholds.k0, sigma, design.analysis_prior),
            critical_z(design.thresholds.k1, sigma, design.analysis_prior)};
}

// One-sided families must yield Single or Unattainable; extract the cut or
// the appropriate infinity when the threshold cannot be reached.
double single_cut_or(const CriticalSet& c, double fallback, bool& attainable) {
    if (const auto* s = std::get_if<Single>(&c)) {
        attainable = true;
        return s->z_crit;
    }
    if (std::holds_alternative<Unattainable>(c)) {
        attainable = false;
        return fallback;
    }
    throw std::runtime_error("stopping_regions: paired critical set for a one-sided family");
}

StageBounds stage_bounds(const StageCrit& crit, BfShape shape) {
    StageBounds b;
    b.h0_stoppable = false;
    b.h1_stoppable = false;
    auto push = [](std::vector<Interval>& dst, double lo, double hi) {
        if (lo < hi) dst.push_back({lo, hi});
    };
    if (shape == BfShape::DecreasingInZ) {
        double a0 = single_cut_or(crit.c0, -kInf, b.h0_stoppable);
        double a1 = single_cut_or(crit.c1, kInf, b.h1_stoppable);
        if (b.h0_stoppable) push(b.h0, -kInf, a0);
        if (b.h1_stoppable) push(b.h1, a1, kInf);
        if (b.h0_stoppable && b.h1_stoppable && !(a0 < a1))
            throw std::runtime_error("stopping_regions: crossed critical values");
        push(b.cont, a0, a1);
        return b;
    }
    if (shape == BfShape::IncreasingInZ) {
        double a0 = single_cut_or(crit.c0, kInf, b.h0_stoppable);
        double a1 = single_cut_or(crit.c1, -kInf, b.h1_stoppable);
        if (b.h0_stoppable) push(b.h0, a0, kInf);
        if (b.h1_stoppable) push(b.h1, -kInf, a1);
        if (b.h0_stoppable && b.h1_stoppable && !(a1 < a0))
            throw std::runtime_error("stopping_regions: crossed critical values");
        push(b.cont, a1, a0);
        return b;
    }
    // TwoSided: H0 stops inside the k0 pair, H1 stops outside the k1 pair.
    const auto* p0 = std::get_if<Pair>(&crit.c0);
    const auto* p1 = std::get_if<Pair>(&crit.c1);
    b.h0_stoppable = p0 != nullptr;
    b.h1_stoppable = p1 != nullptr;
    if (p0 != nullptr) push(b.h0, p0->boundary.z_minus, p0->boundary.z_plus);
    if (p1 != nullptr) {
        push(b.h1, -kInf, p1->boundary.z_minus);
        push(b.h1, p1->boundary.z_plus, kInf);
    }
    if (p0 != nullptr && p1 != nullptr) {
        if (!(p1->boundary.z_minus < p0->boundary.z_minus &&
              p0->boundary.z_plus < p1->boundary.z_plus))
            throw std::runtime_error("stopping_regions: crossed critical values");
        push(b.cont, p1->boundary.z_minus, p0->boundary.z_minus);
        push(b.cont, p0->boundary.z_plus, p1->boundary.z_plus);
    } else if (p0 != nullptr) {
        push(b.cont, -kInf, p0->boundary.z_minus);
        push(b.cont, p0->boundary.z_plus, kInf);
    } else if (p1 != nullptr) {
        push(b.cont, p1->boundary.z_minus, p1->boundary.z_plus);
    } else {
        push(b.cont, -kInf, kInf);
    }
    return b;
}

HyperRectangle rect_from(const std::vector<Interval>& prefix, const Interval& last) {
    HyperRectangle r;
    r.lower.reserve(prefix.size() + 1);
    r.upper.reserve(prefix.size() + 1);
    for (const Interval& iv : prefix) {
        r.lower.push_back(iv.lo);
        r.upper.push_back(iv.hi);
    }
    r.lower.push_back(last.lo);
    r.upper.push_back(last.hi);
    return r;
}

}  // namespace

StoppingRegions stopping_regions(const SequentialDesign& design) {
    design.validate();
    const BfShape shape = bf_shape(design.analysis_prior);
    const std::size_t m = design.schedule.size();

    StoppingRegions out;
    out.bounds.reserve(m);
    out.h1_rects.resize(m);
    out.h0_rects.resize(m);

    std::vector<std::vector<Interval>> prefixes(1);  // one empty prefix
    for (std::size_t j = 0; j < m; ++j) {
        StageBounds b = stage_bounds(stage_critical(design, j), shape);
        for (const auto& prefix : prefixes) {
            for (const Interval& iv : b.h1) out.h1_rects[j].push_back(rect_from(prefix, iv));
            for (const Interval& iv : b.h0) out.h0_rects[j].push_back(rect_from(prefix, iv));
        }
        std::vector<std::vector<Interval>> next;
        next.reserve(prefixes.size() * b.cont.size());
        for (const auto& prefix : prefixes) {
            for (const Interval& iv : b.cont) {
                auto ext = prefix;
                ext.push_back(iv);
                next.push_back(std::move(ext));
            }
        }
        prefixes = std::move(next);
        out.bounds.push_back(std::move(b));
    }
    out.final_continuation.reserve(prefixes.size());
    for (const auto& prefix : prefixes) {
        HyperRectangle r;
        r.lower.reserve(m);
        r.upper.reserve(m);
        for (const Interval& iv : prefix) {
            r.lower.push_back(iv.lo);
            r.upper.push_back(iv.hi);
        }
        out.final_continuation.push_back(std::move(r));
    }
    return out;
}

DesignReport characteristics(const SequentialDesign& design, const Tolerance& tol,
                             std::uint64_t seed) {
    const StoppingRegions regions = stopping_regions(design);
    const MvnMoments mom = z_moments(design.schedule, design.design_prior);
    const std::size_t m = design.schedule.size();
    const std::size_t arms = design.schedule.stages.front().n_report.size();

    DesignReport rep;
    rep.stages.reserve(m);

    std::vector<double> stop_mass(m, 0.0);  // probability of stopping exactly at stage j
    std::vector<double> stop_err(m, 0.0);
    double cum_h1 = 0.0, cum_h0 = 0.0, var_h1 = 0.0, var_h0 = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        MvnMoments sub;
        sub.mean.assign(mom.mean.begin(), mom.mean.begin() + static_cast<std::ptrdiff_t>(j + 1));
        sub.cov.resize(j + 1);
        for (std::size_t i = 0; i <= j; ++i)
            sub.cov[i].assign(mom.cov[i].begin(),
                              mom.cov[i].begin() + static_cast<std::ptrdiff_t>(j + 1));
        MvnResult p1 = mvn_prob_union(regions.h1_rects[j], sub, tol, stage_seed(seed, 2 * j));
        MvnResult p0 = mvn_prob_union(regions.h0_rects[j], sub, tol, stage_seed(seed, 2 * j + 1));
        cum_h1 += p1.prob;
        cum_h0 += p0.prob;
        var_h1 += p1.err_est * p1.err_est;
        var_h0 += p0.err_est * p0.err_est;
        stop_mass[j] = p1.prob + p0.prob;
        stop_err[j] = std::sqrt(p1.err_est * p1.err_est + p0.err_est * p0.err_est);
        StageReport sr;
        sr.pr_h1_cum = cum_h1;
        sr.pr_h0_cum = cum_h0;
        sr.pr_inconclusive = std::max(0.0, 1.0 - cum_h1 - cum_h0);
        sr.err_h1 = std::sqrt(var_h1);
        sr.err_h0 = std::sqrt(var_h0);
        sr.h0_stoppable = regions.bounds[j].h0_stoppable;
        sr.h1_stoppable = regions.bounds[j].h1_stoppable;
        rep.stages.push_back(sr);
    }

    // The final stage absorbs all mass that survived the first m-1 looks,
    // whether it stops there or ends inconclusive.
    double carried = 0.0;
    for (std::size_t j = 0; j + 1 < m; ++j) carried += stop_mass[j];
    stop_mass[m - 1] = std::max(0.0, 1.0 - carried);

    rep.expected_n.assign(arms, 0.0);
    rep.sd_n.assign(arms, 0.0);
    rep.cov_n.assign(arms, 0.0);
    for (std::size_t a = 0; a < arms; ++a) {
        double e = 0.0, e2 = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            double n = design.schedule.stages[j].n_report[a];
            e += stop_mass[j] * n;
            e2 += stop_mass[j] * n * n;
        }
        rep.expected_n[a] = e;
        rep.sd_n[a] = std::sqrt(std::max(0.0, e2 - e * e));
        rep.cov_n[a] = e > 0.0 ? rep.sd_n[a] / e : 0.0;
    }
    double verr = 0.0;
    const double n_last = design.schedule.stages[m - 1].n_report.front();
    for (std::size_t j = 0; j + 1 < m; ++j) {
        double w = (n_last - design.schedule.stages[j].n_report.front()) * stop_err[j];
        verr += w * w;
    }
    rep.err_expected_n = std::sqrt(verr);

    std::vector<std::size_t> no_h0, no_h1;
    for (std::size_t j = 0; j < m; ++j) {
        if (!rep.stages[j].h0_stoppable) no_h0.push_back(j + 1);
        if (!rep.stages[j].h1_stoppable) no_h1.push_back(j + 1);
    }
    auto list_stages = [](const std::vector<std::size_t>& v) {
        std::ostringstream os;
        for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
        return os.str();
    };
    if (!no_h0.empty())
        rep.warnings.push_back("k0 is unattainable at stage " + list_stages(no_h0) +
                               "; no H0 stop there");
    if (!no_h1.empty())
        rep.warnings.push_back("k1 is unattainable at stage " + list_stages(no_h1) +
                               "; no H1 stop there");
    if (is_t_model(design.info_model)) {
        std::vector<std::size_t> small;
        for (std::size_t j = 0; j < m; ++j)
            if (design.schedule.stages[j].info < 30.0) small.push_back(j + 1);
        if (!small.empty())
            rep.warnings.push_back("normal approximation of the t statistic with n_eff < 30 at stage " +
                                   list_stages(small));
    }
    return rep;
}

MaxNResult find_max_n(const SequentialDesign& tmpl, double target, Hypothesis hyp,
                      double n_lo, double n_hi, const Tolerance& tol, std::uint64_t seed) {
    tmpl.validate();
    if (!(target > 0.0 && target < 1.0))
        throw std::invalid_argument("find_max_n: target must lie in (0, 1)");
    const std::size_t m = tmpl.schedule.size();
    if (!(n_lo >= static_cast<double>(m)))
        throw std::invalid_argument("find_max_n: n_lo must be at least the stage count");
    if (!(n_hi > n_lo)) throw std::invalid_argument("find_max_n: need n_lo < n_hi");

    auto spaced = [m](double n_max) {
        std::vector<double> ns(m);
        for (std::size_t j = 0; j < m; ++j)
            ns[j] = n_max * static_cast<double>(j + 1) / static_cast<double>(m);
        return ns;
    };
    auto spaced_int = [m](int n_max) {
        std::vector<double> ns(m);
        for (std::size_t j = 0; j < m; ++j)
            ns[j] = static_cast<double>(
                std::lround(static_cast<double>(n_max) * static_cast<double>(j + 1) /
                            static_cast<double>(m)));
        return ns;
    };
    auto evaluate = [&](const std::vector<double>& ns) {
        SequentialDesign d = tmpl;
        d.schedule = build_schedule(tmpl.info_model, ns);
        DesignReport rep = characteristics(d, tol, seed);
        double p = hyp == Hypothesis::H1 ? rep.stages.back().pr_h1_cum
                                         : rep.stages.back().pr_h0_cum;
        return std::make_pair(p, std::move(rep));
    };

    double p_hi = evaluate(spaced(n_hi)).first;
    if (p_hi < target) {
        std::ostringstream os;
        os << "find_max_n: target " << target << " unreachable; probability at n_max = " << n_hi
           << " is " << p_hi;
        throw TargetUnreachable(os.str());
    }
    double x = n_lo;
    if (evaluate(spaced(n_lo)).first < target) {
        Tolerance rt;
        rt.abs_tol = 1e-3;
        rt.rel_tol = 0.0;
        rt.max_iter = 200;
        x = find_root([&](double v) { return evaluate(spaced(v)).first - target; }, n_lo, n_hi,
                      rt);
    }

    int n_int = static_cast<int>(std::ceil(x - 1e-9));
    const int n_cap = static_cast<int>(std::ceil(n_hi));
    auto [p, rep] = evaluate(spaced_int(n_int));
    while (p < target && n_int < n_cap) {  // rounding of the stage grid can nudge p either way
        ++n_int;
        std::tie(p, rep) = evaluate(spaced_int(n_int));
    }
    if (p < target) {
        std::ostringstream os;
        os << "find_max_n: no integer schedule in [" << n_lo << ", " << n_hi
           << "] reaches target " << target;
        throw TargetUnreachable(os.str());
    }
    while (n_int - 1 >= static_cast<int>(std::ceil(n_lo))) {
        auto [pd, rd] = evaluate(spaced_int(n_int - 1));
        if (pd < target) break;
        --n_int;
        p = pd;
        rep = std::move(rd);
    }

    MaxNResult res;
    res.n_max = n_int;
    res.n_per_stage = spaced_int(n_int);
    res.achieved = p;
    res.report = std::move(rep);
    return res;
}

}  // namespace seqbf
