#include <CLI11.hpp>

#include "seqbf/config.hpp"
#include "seqbf/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

using namespace seqbf;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void write_output(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file: " + out_path);
    f << text;
}

std::string fmt(double v, const char* f) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
    void apply(RunConfig& rc) const {
        if (seed) rc.seed = *seed;
        if (tol) {
            rc.mvn_tol.abs_tol = *tol;
            rc.mvn_tol.validate();
        }
    }
};

void add_common(CLI::App* sub, std::string& config_path, std::string& out, std::string& format,
                Overrides& ov, const std::vector<std::string>& formats) {
    sub->add_option("--config", config_path, "design config JSON")->required();
    sub->add_option("--out", out, "write output to this file instead of stdout");
    sub->add_option("--format", format, "output format")->check(CLI::IsMember(formats));
    sub->add_option("--seed", [&ov](const std::vector<std::string>& v) {
        ov.seed = std::stoull(v.front());
        return true;
    }, "override the config seed");
    sub->add_option("--tol", [&ov](const std::vector<std::string>& v) {
        ov.tol = std::stod(v.front());
        return true;
    }, "override the absolute MVN tolerance");
}

std::vector<double> spaced_int_schedule(int n_max, int m) {
    std::vector<double> ns(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j)
        ns[static_cast<std::size_t>(j)] = static_cast<double>(
            std::lround(static_cast<double>(n_max) * (j + 1) / static_cast<double>(m)));
    return ns;
}

int cmd_characteristics(const std::string& config_path, const std::string& out,
                        const std::string& format, const Overrides& ov) {
    RunConfig rc = load_config_file(config_path);
    ov.apply(rc);
    DesignReport rep = characteristics(rc.design, rc.mvn_tol, rc.seed);
    std::string text = format == "csv"    ? to_csv(report_rows(rc.design_id, rc.design, rep))
                       : format == "json" ? render_json(rc, rep)
                                          : render_human(rc, rep);
    write_output(text, out);
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out, const std::string& format,
              const Overrides& ov) {
    RunConfig rc = load_config_file(config_path);
    ov.apply(rc);
    if (!rc.sweep) throw ConfigError("/sweep: config has no sweep block");
    const SweepSpec& sw = *rc.sweep;
    const double nan_ = std::nan("");

    std::vector<CsvRow> rows;
    for (int m : sw.m) {
        for (double n_max : sw.n_max) {
            if (n_max < m)
                throw ConfigError("/sweep: n_max " + fmt(n_max, "%g") +
                                  " is below the stage count " + std::to_string(m));
            for (const DesignPrior& prior : sw.priors) {
                SequentialDesign d = rc.design;
                d.design_prior = prior;
                d.schedule = build_schedule(
                    rc.design.info_model,
                    spaced_int_schedule(static_cast<int>(std::lround(n_max)), m));
                DesignReport rep = characteristics(d, rc.mvn_tol, rc.seed);
                const StageReport& last = rep.stages.back();
                const bool null_prior = prior.mu_d == 0.0 && prior.tau_d == 0.0;
                double pr_correct = null_prior ? last.pr_h0_cum : last.pr_h1_cum;
                double err_correct = null_prior ? last.err_h0 : last.err_h1;
                double pr_mislead = null_prior ? last.pr_h1_cum : last.pr_h0_cum;
                double err_mislead = null_prior ? last.err_h1 : last.err_h0;

                std::string id = rc.design_id + ":m=" + std::to_string(m) +
                                 ":nmax=" + fmt(n_max, "%g") + ":dpmu=" + fmt(prior.mu_d, "%g") +
                                 ":dpsd=" + fmt(prior.tau_d, "%g");
                const std::size_t arms = d.schedule.stages.front().n_report.size();
                double n1 = d.schedule.stages.back().n_report[0];
                double n2 = arms == 2 ? d.schedule.stages.back().n_report[1] : nan_;
                rows.push_back({id, m, m, n1, n2, "pr_h1_cum", last.pr_h1_cum, last.err_h1});
                rows.push_back({id, m, m, n1, n2, "pr_h0_cum", last.pr_h0_cum, last.err_h0});
                rows.push_back({id, m, m, n1, n2, "pr_correct", pr_correct, err_correct});
                rows.push_back({id, m, m, n1, n2, "pr_misleading", pr_mislead, err_mislead});
                rows.push_back(
                    {id, m, m, n1, n2, "expected_n_1", rep.expected_n[0], rep.err_expected_n});
                rows.push_back({id, m, m, n1, n2, "sd_n_1", rep.sd_n[0], nan_});
            }
        }
    }
    (void)format;  // sweep output is CSV by contract
    write_output(to_csv(rows), out);
    return 0;
}

int cmd_samplesize(const std::string& config_path, const std::string& out,
                   const std::string& format, const Overrides& ov, double target,
                   const std::string& hypothesis, double n_lo, double n_hi) {
    RunConfig rc = load_config_file(config_path);
    ov.apply(rc);
    Hypothesis hyp = hypothesis == "h0" ? Hypothesis::H0 : Hypothesis::H1;
    const int m = static_cast<int>(rc.design.schedule.size());
    if (n_lo <= 0.0) n_lo = static_cast<double>(m);
    if (n_hi <= 0.0) n_hi = 2.0 * rc.design.schedule.stages.back().n_report.front();

    MaxNResult res = find_max_n(rc.design, target, hyp, n_lo, n_hi, rc.mvn_tol, rc.seed);

    if (format == "json") {
        RunConfig shown = rc;
        shown.design.schedule = build_schedule(rc.design.info_model, res.n_per_stage);
        std::string body = render_json(shown, res.report);
        // splice the search summary in front of the report fields
        std::string head = "{\n  \"n_max\": " + std::to_string(res.n_max) +
                           ",\n  \"achieved\": " + fmt(res.achieved, "%.10g") +
                           ",\n  \"target\": " + fmt(target, "%.10g") + ",\n";
        write_output(head + body.substr(2), out);
        return 0;
    }
    std::string text;
    text += "Smallest per-arm maximum sample size reaching Pr(stop for " +
            std::string(hyp == Hypothesis::H0 ? "H0" : "H1") + ") >= " + fmt(target, "%g") +
            ": " + std::to_string(res.n_max) + "\n";
    text += "Schedule:";
    for (double n : res.n_per_stage) text += " " + fmt(n, "%g");
    text += "\nAchieved probability: " + fmt(res.achieved, "%.4f") + "\n\n";
    RunConfig shown = rc;
    shown.design.schedule = build_schedule(rc.design.info_model, res.n_per_stage);
    if (format == "csv") {
        auto rows = report_rows(rc.design_id + ":nmax=" + std::to_string(res.n_max),
                                shown.design, res.report);
        write_output(to_csv(rows), out);
    } else {
        text += render_human(shown, res.report);
        write_output(text, out);
    }
    return 0;
}

struct BfArgs {
    std::string family;
    double mu = 0.0, tau = -1.0, kappa = 1.0, a = -kInf, b = kInf;
    double z = std::nan(""), sigma = std::nan("");
    double t = std::nan(""), n = std::nan(""), n1 = std::nan(""), n2 = std::nan("");
    std::string design = "two_sample";
};

int cmd_bf(const BfArgs& args, const std::string& out) {
    double bf;
    if (args.family == "informed_t") {
        if (std::isnan(args.t))
            throw std::invalid_argument("bf: informed_t needs --t plus --n or --n1/--n2");
        double tau = args.tau > 0.0 ? args.tau : 1.0 / std::sqrt(2.0);
        InformedT prior{args.mu, tau, args.kappa, args.a, args.b};
        double n_eff, df;
        if (!std::isnan(args.n1) || !std::isnan(args.n2)) {
            if (std::isnan(args.n1) || std::isnan(args.n2))
                throw std::invalid_argument("bf: provide both --n1 and --n2");
            n_eff = args.n1 * args.n2 / (args.n1 + args.n2);
            df = args.n1 + args.n2 - 2.0;
        } else if (!std::isnan(args.n)) {
            if (args.design == "two_sample") {
                n_eff = args.n / 2.0;
                df = 2.0 * args.n - 2.0;
            } else {
                n_eff = args.n;
                df = args.n - 1.0;
            }
        } else {
            throw std::invalid_argument("bf: informed_t needs --n or --n1/--n2");
        }
        bf = bf01_t(args.t, n_eff, df, prior);
    } else {
        if (std::isnan(args.z) || std::isnan(args.sigma))
            throw std::invalid_argument("bf: z families need --z and --sigma");
        AnalysisPriorSpec prior;
        if (args.family == "point_point") {
            prior = PointPoint{args.mu};
        } else {
            if (args.tau <= 0.0)
                throw std::invalid_argument("bf: this family needs --tau > 0");
            if (args.family == "directional_directional")
                prior = DirectionalDirectional{args.mu, args.tau};
            else if (args.family == "point_two_sided")
                prior = PointTwoSided{args.mu, args.tau};
            else if (args.family == "point_directional")
                prior = PointDirectional{args.mu, args.tau};
            else
                throw std::invalid_argument("bf: unknown family '" + args.family + "'");
        }
        bf = bf01_z({args.z, args.sigma}, prior);
    }

    std::string text = "BF01 = " + fmt(bf, "%.3f");
    if (bf < 0.995) text += " (1/" + fmt(1.0 / bf, "%.1f") + ")";
    text += "\n";
    if (bf < 1.0)
        text += "Interpretation: evidence favors H1 over H0 (BF01 < 1)\n";
    else if (bf > 1.0)
        text += "Interpretation: evidence favors H0 over H1 (BF01 > 1)\n";
    else
        text += "Interpretation: the data do not discriminate (BF01 = 1)\n";
    write_output(text, out);
    return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& out,
                 const std::string& format, const Overrides& ov, long long reps) {
    if (reps < 1) throw ConfigError("--reps must be a positive integer");
    RunConfig rc = load_config_file(config_path);
    ov.apply(rc);
    DesignReport analytic = characteristics(rc.design, rc.mvn_tol, rc.seed);
    DesignReport empirical = simulate(rc.design, {static_cast<std::uint64_t>(reps), rc.seed});
    std::string text =
        format == "csv"
            ? to_csv(compare_rows(rc.design_id, rc.design, analytic, empirical))
        : format == "json"
            ? render_compare_json(rc, analytic, empirical, static_cast<std::uint64_t>(reps))
            : render_compare_human(rc, analytic, empirical, static_cast<std::uint64_t>(reps));
    write_output(text, out);
    return 0;
}

int run(int argc, char** argv) {
    CLI::App app{"Stopping probabilities and sample sizes for sequential Bayes factor designs"};
    app.require_subcommand(1);

    std::string config_path, out, format = "human";
    Overrides ov;

    auto* ch = app.add_subcommand("characteristics", "analytic design report");
    add_common(ch, config_path, out, format, ov, {"human", "csv", "json"});

    auto* sw = app.add_subcommand("sweep", "grid of designs as long-format CSV");
    add_common(sw, config_path, out, format, ov, {"csv"});

    auto* ss = app.add_subcommand("samplesize", "smallest n_max reaching a target probability");
    double target = 0.0, n_lo = 0.0, n_hi = 0.0;
    std::string hypothesis;
    add_common(ss, config_path, out, format, ov, {"human", "csv", "json"});
    ss->add_option("--target", target, "target stopping probability")->required();
    ss->add_option("--hypothesis", hypothesis, "which hypothesis the evidence should support")
        ->required()
        ->check(CLI::IsMember({"h0", "h1"}));
    ss->add_option("--n-lo", n_lo, "lower bracket for n_max (default: number of stages)");
    ss->add_option("--n-hi", n_hi, "upper bracket for n_max (default: twice the final n)");

    auto* bf = app.add_subcommand("bf", "a single Bayes factor from z/sigma or t/n");
    BfArgs ba;
    std::string bf_out;
    bf->add_option("--family", ba.family)
        ->required()
        ->check(CLI::IsMember({"directional_directional", "point_point", "point_two_sided",
                               "point_directional", "informed_t"}));
    bf->add_option("--mu", ba.mu, "analysis prior location (default 0)");
    bf->add_option("--tau", ba.tau, "analysis prior scale");
    bf->add_option("--kappa", ba.kappa, "informed_t degrees of freedom (default 1)");
    bf->add_option("--a", ba.a, "informed_t lower truncation (default -inf)");
    bf->add_option("--b", ba.b, "informed_t upper truncation (default +inf)");
    bf->add_option("--z", ba.z, "observed z statistic");
    bf->add_option("--sigma", ba.sigma, "standard error of the estimate");
    bf->add_option("--t", ba.t, "observed t statistic");
    bf->add_option("--n", ba.n, "per-group (or total one-sample) size");
    bf->add_option("--n1", ba.n1, "first group size");
    bf->add_option("--n2", ba.n2, "second group size");
    bf->add_option("--design", ba.design, "t-test design for --n")
        ->check(CLI::IsMember({"one_sample", "paired", "two_sample"}));
    bf->add_option("--out", bf_out);

    auto* sim = app.add_subcommand("simulate", "Monte Carlo check of the analytic report");
    long long reps = 100000;
    add_common(sim, config_path, out, format, ov, {"human", "csv", "json"});
    sim->add_option("--reps", reps, "number of simulated trials (default 100000)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (app.got_subcommand(ch)) return cmd_characteristics(config_path, out, format, ov);
    if (app.got_subcommand(sw)) return cmd_sweep(config_path, out, format, ov);
    if (app.got_subcommand(ss))
        return cmd_samplesize(config_path, out, format, ov, target, hypothesis, n_lo, n_hi);
    if (app.got_subcommand(bf)) return cmd_bf(ba, bf_out);
    if (app.got_subcommand(sim)) return cmd_simulate(config_path, out, format, ov, reps);
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const TargetUnreachable& e) {
        std::cerr << "target unreachable: " << e.what() << "\n";
        return 4;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const QuadratureError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}
