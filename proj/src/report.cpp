#include "seqbf/report.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <sstream>
#include <variant>

namespace seqbf {

namespace {

using nlohmann::json;

std::string num(double v, const char* fmt = "%.10g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;  // snprintf with the "C" numeric conventions; never localized here
}

std::string fixed4(double v) { return num(v, "%.4f"); }

bool agree_3se(double a, double ea, double b, double eb) {
    return std::fabs(a - b) <= 3.0 * std::sqrt(ea * ea + eb * eb) + 1e-12;
}

const char* effect_label(const SequentialDesign& d) {
    return is_t_model(d.info_model) ? "SMD" : "effect";
}

void hypothesis_lines(const SequentialDesign& d, std::string& h0, std::string& h1) {
    const std::string eff = effect_label(d);
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, DirectionalDirectional>) {
                h0 = eff + " <= 0";
                h1 = eff + " > 0";
            } else if constexpr (std::is_same_v<T, PointPoint>) {
                h0 = eff + " = 0";
                h1 = eff + " = " + num(p.mu, "%.4g");
            } else {
                h0 = eff + " = 0";
                BfShape s = bf_shape(d.analysis_prior);
                h1 = eff + (s == BfShape::DecreasingInZ  ? " > 0"
                            : s == BfShape::IncreasingInZ ? " < 0"
                                                          : " != 0");
            }
        },
        d.analysis_prior);
}

std::string describe_prior(const SequentialDesign& d) {
    const std::string eff = effect_label(d);
    return std::visit(
        [&](const auto& p) -> std::string {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, DirectionalDirectional>) {
                return eff + " ~ N(mean = " + num(p.mu, "%.4g") + ", sd = " + num(p.tau, "%.4g") +
                       "), directional hypotheses";
            } else if constexpr (std::is_same_v<T, PointPoint>) {
                return eff + "|H1 = " + num(p.mu, "%.4g") + " (point)";
            } else if constexpr (std::is_same_v<T, PointTwoSided>) {
                return eff + "|H1 ~ N(mean = " + num(p.mu, "%.4g") +
                       ", sd = " + num(p.tau, "%.4g") + ")";
            } else if constexpr (std::is_same_v<T, PointDirectional>) {
                return eff + "|H1 ~ N(mean = " + num(p.mu, "%.4g") +
                       ", sd = " + num(p.tau, "%.4g") + ") truncated to > 0";
            } else {
                std::string s = eff + "|H1 ~ t(location = " + num(p.mu, "%.4g") +
                                ", scale = " + num(p.tau, "%.4g") +
                                ", df = " + num(p.kappa, "%.4g") + ")";
                if (p.a == 0.0 && std::isinf(p.b)) return s + "_+";
                if (p.b == 0.0 && std::isinf(p.a)) return s + "_-";
                if (std::isfinite(p.a) || std::isfinite(p.b))
                    return s + " on [" + num(p.a, "%.4g") + ", " + num(p.b, "%.4g") + "]";
                return s;
            }
        },
        d.analysis_prior);
}

std::string describe_design_prior(const SequentialDesign& d) {
    const DesignPrior& p = d.design_prior;
    const std::string eff = effect_label(d);
    if (p.tau_d == 0.0) return eff + " = " + num(p.mu_d, "%.4g") + " (point)";
    return eff + " ~ N(mean = " + num(p.mu_d, "%.4g") + ", sd = " + num(p.tau_d, "%.4g") + ")";
}

std::string sample_size_line(const SequentialDesign& d, std::size_t arm) {
    std::string out;
    for (std::size_t j = 0; j < d.schedule.size(); ++j) {
        if (j) out += ", ";
        out += num(d.schedule.stages[j].n_report[arm], "%g");
    }
    return out;
}

}  // namespace

std::string format_threshold(double k) {
    if (k >= 1.0) return num(k, "%g");
    double r = 1.0 / k;
    double ri = std::round(r);
    if (std::fabs(r - ri) <= 1e-9 * r) return "1/" + num(ri, "%g");
    return num(k, "%g");
}

std::string to_csv(const std::vector<CsvRow>& rows) {
    std::string out = "design_id,m,stage,n1,n2,metric,value,err_est\n";
    for (const CsvRow& r : rows) {
        out += r.design_id + ',' + std::to_string(r.m) + ',' + std::to_string(r.stage) + ',';
        out += num(r.n1, "%g");
        out += ',';
        if (!std::isnan(r.n2)) out += num(r.n2, "%g");
        out += ',' + r.metric + ',' + num(r.value);
        out += ',';
        if (!std::isnan(r.err)) out += num(r.err);
        out += '\n';
    }
    return out;
}

std::vector<CsvRow> report_rows(const std::string& design_id, const SequentialDesign& design,
                                const DesignReport& rep) {
    const double nan = std::nan("");
    const int m = static_cast<int>(design.schedule.size());
    const std::size_t arms = design.schedule.stages.front().n_report.size();
    std::vector<CsvRow> rows;
    for (int j = 0; j < m; ++j) {
        const Stage& st = design.schedule.stages[static_cast<std::size_t>(j)];
        double n1 = st.n_report[0];
        double n2 = arms == 2 ? st.n_report[1] : nan;
        const StageReport& sr = rep.stages[static_cast<std::size_t>(j)];
        rows.push_back({design_id, m, j + 1, n1, n2, "pr_h1_cum", sr.pr_h1_cum, sr.err_h1});
        rows.push_back({design_id, m, j + 1, n1, n2, "pr_h0_cum", sr.pr_h0_cum, sr.err_h0});
        rows.push_back({design_id, m, j + 1, n1, n2, "pr_inconclusive", sr.pr_inconclusive, nan});
    }
    const Stage& last = design.schedule.stages.back();
    double n1 = last.n_report[0];
    double n2 = arms == 2 ? last.n_report[1] : nan;
    for (std::size_t a = 0; a < arms; ++a) {
        std::string suf = "_" + std::to_string(a + 1);
        rows.push_back({design_id, m, m, n1, n2, "expected_n" + suf, rep.expected_n[a],
                        rep.err_expected_n});
        rows.push_back({design_id, m, m, n1, n2, "sd_n" + suf, rep.sd_n[a], nan});
        rows.push_back({design_id, m, m, n1, n2, "cov_n" + suf, rep.cov_n[a], nan});
    }
    return rows;
}

std::vector<CsvRow> compare_rows(const std::string& design_id, const SequentialDesign& design,
                                 const DesignReport& analytic, const DesignReport& empirical) {
    const double nan = std::nan("");
    const int m = static_cast<int>(design.schedule.size());
    const std::size_t arms = design.schedule.stages.front().n_report.size();
    std::vector<CsvRow> rows;
    for (int j = 0; j < m; ++j) {
        const Stage& st = design.schedule.stages[static_cast<std::size_t>(j)];
        double n1 = st.n_report[0];
        double n2 = arms == 2 ? st.n_report[1] : nan;
        const StageReport& a = analytic.stages[static_cast<std::size_t>(j)];
        const StageReport& e = empirical.stages[static_cast<std::size_t>(j)];
        rows.push_back({design_id, m, j + 1, n1, n2, "pr_h1_cum_analytic", a.pr_h1_cum, a.err_h1});
        rows.push_back(
            {design_id, m, j + 1, n1, n2, "pr_h1_cum_empirical", e.pr_h1_cum, e.err_h1});
        rows.push_back({design_id, m, j + 1, n1, n2, "pr_h1_cum_within_3se",
                        agree_3se(a.pr_h1_cum, a.err_h1, e.pr_h1_cum, e.err_h1) ? 1.0 : 0.0, nan});
        rows.push_back({design_id, m, j + 1, n1, n2, "pr_h0_cum_analytic", a.pr_h0_cum, a.err_h0});
        rows.push_back(
            {design_id, m, j + 1, n1, n2, "pr_h0_cum_empirical", e.pr_h0_cum, e.err_h0});
        rows.push_back({design_id, m, j + 1, n1, n2, "pr_h0_cum_within_3se",
                        agree_3se(a.pr_h0_cum, a.err_h0, e.pr_h0_cum, e.err_h0) ? 1.0 : 0.0, nan});
    }
    const Stage& last = design.schedule.stages.back();
    double n1 = last.n_report[0];
    double n2 = arms == 2 ? last.n_report[1] : nan;
    rows.push_back({design_id, m, m, n1, n2, "expected_n_1_analytic", analytic.expected_n[0],
                    analytic.err_expected_n});
    rows.push_back({design_id, m, m, n1, n2, "expected_n_1_empirical", empirical.expected_n[0],
                    empirical.err_expected_n});
    rows.push_back({design_id, m, m, n1, n2, "expected_n_1_within_3se",
                    agree_3se(analytic.expected_n[0], analytic.err_expected_n,
                              empirical.expected_n[0], empirical.err_expected_n)
                        ? 1.0
                        : 0.0,
                    nan});
    return rows;
}

std::string render_human(const RunConfig& cfg, const DesignReport& rep) {
    const SequentialDesign& d = cfg.design;
    const std::size_t arms = d.schedule.stages.front().n_report.size();
    std::string h0, h1;
    hypothesis_lines(d, h0, h1);

    std::ostringstream os;
    os << "Sequential Bayes Factor Design\n";
    os << "--------------------------------\n";
    os << "Design id:        " << cfg.design_id << "\n";
    os << "H0:               " << h0 << "\n";
    os << "H1:               " << h1 << "\n";
    os << "Analysis prior:   " << describe_prior(d) << "\n";
    os << "Design prior:     " << describe_design_prior(d) << "\n";
    os << "BF thresholds:    H1 if BF01 <= " << format_threshold(d.thresholds.k1)
       << ", H0 if BF01 >= " << format_threshold(d.thresholds.k0) << "\n";
    os << "Number of looks:  " << d.schedule.size() << "\n";
    for (std::size_t a = 0; a < arms; ++a)
        os << "Sample sizes " << a + 1 << ":   " << sample_size_line(d, a) << "\n";
    os << "\n";
    os << "Stagewise cumulative probabilities:\n";
    os << " Stage Pr(H1 stop) Pr(H0 stop) Pr(inconclusive)\n";
    char line[128];
    for (std::size_t j = 0; j < rep.stages.size(); ++j) {
        std::snprintf(line, sizeof line, "%6zu %11.4f %11.4f %16.4f\n", j + 1,
                      rep.stages[j].pr_h1_cum, rep.stages[j].pr_h0_cum,
                      rep.stages[j].pr_inconclusive);
        os << line;
    }
    os << "\n";
    for (std::size_t a = 0; a < arms; ++a)
        os << "Expected sample size " << a + 1 << ": " << fixed4(rep.expected_n[a]) << "\n";
    for (std::size_t a = 0; a < arms; ++a)
        os << "Standard deviation of sample size " << a + 1 << ": " << fixed4(rep.sd_n[a])
           << "\n";
    for (std::size_t a = 0; a < arms; ++a)
        os << "Coefficient of variation of sample size " << a + 1 << ": " << fixed4(rep.cov_n[a])
           << "\n";
    os << "\n";
    os << "NOTE:  BF01 < 1 indicates evidence for H1 over H0\n";
    for (const std::string& w : rep.warnings) os << "WARNING: " << w << "\n";
    return os.str();
}

namespace {

json report_json(const SequentialDesign& d, const DesignReport& rep) {
    json stages = json::array();
    for (std::size_t j = 0; j < rep.stages.size(); ++j) {
        const StageReport& sr = rep.stages[j];
        stages.push_back({{"stage", j + 1},
                          {"n", d.schedule.stages[j].n_report},
                          {"info", d.schedule.stages[j].info},
                          {"pr_h1_cum", sr.pr_h1_cum},
                          {"err_h1", sr.err_h1},
                          {"pr_h0_cum", sr.pr_h0_cum},
                          {"err_h0", sr.err_h0},
                          {"pr_inconclusive", sr.pr_inconclusive},
                          {"h0_stoppable", sr.h0_stoppable},
                          {"h1_stoppable", sr.h1_stoppable}});
    }
    return {{"stages", stages},
            {"expected_n", rep.expected_n},
            {"sd_n", rep.sd_n},
            {"cov_n", rep.cov_n},
            {"err_expected_n", rep.err_expected_n},
            {"warnings", rep.warnings}};
}

}  // namespace

std::string render_json(const RunConfig& cfg, const DesignReport& rep) {
    json root = report_json(cfg.design, rep);
    root["design_id"] = cfg.design_id;
    return root.dump(2) + "\n";
}

std::string render_compare_human(const RunConfig& cfg, const DesignReport& analytic,
                                 const DesignReport& empirical, std::uint64_t reps) {
    std::ostringstream os;
    os << "Analytic vs simulated report for '" << cfg.design_id << "' (" << reps
       << " replications):\n";
    os << " Stage  Pr(H1) ana  Pr(H1) sim  Pr(H0) ana  Pr(H0) sim  3SE check\n";
    bool all_pass = true;
    char line[160];
    for (std::size_t j = 0; j < analytic.stages.size(); ++j) {
        const StageReport& a = analytic.stages[j];
        const StageReport& e = empirical.stages[j];
        bool ok = agree_3se(a.pr_h1_cum, a.err_h1, e.pr_h1_cum, e.err_h1) &&
                  agree_3se(a.pr_h0_cum, a.err_h0, e.pr_h0_cum, e.err_h0);
        all_pass = all_pass && ok;
        std::snprintf(line, sizeof line, "%6zu %11.4f %11.4f %11.4f %11.4f %10s\n", j + 1,
                      a.pr_h1_cum, e.pr_h1_cum, a.pr_h0_cum, e.pr_h0_cum, ok ? "PASS" : "FAIL");
        os << line;
    }
    bool en_ok = agree_3se(analytic.expected_n[0], analytic.err_expected_n,
                           empirical.expected_n[0], empirical.err_expected_n);
    all_pass = all_pass && en_ok;
    os << "Expected sample size 1: analytic " << fixed4(analytic.expected_n[0]) << ", simulated "
       << fixed4(empirical.expected_n[0]) << ", 3SE check " << (en_ok ? "PASS" : "FAIL") << "\n";
    os << "Overall: " << (all_pass ? "PASS" : "FAIL") << "\n";
    return os.str();
}

std::string render_compare_json(const RunConfig& cfg, const DesignReport& analytic,
                                const DesignReport& empirical, std::uint64_t reps) {
    json root;
    root["design_id"] = cfg.design_id;
    root["replications"] = reps;
    root["analytic"] = report_json(cfg.design, analytic);
    root["empirical"] = report_json(cfg.design, empirical);
    return root.dump(2) + "\n";
}

}  // namespace seqbf
