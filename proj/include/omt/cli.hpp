#pragma once

// Command-line front end: region, power, allocate, apex and savings.
//
// Every command is a separate option set; settings come from flags or from a
// `key = value` file given with --config (flags win). --dump-config prints
// the effective settings in the same format and exits.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "omt/omt.hpp"

namespace omt::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericalFailure = 3, kUnachievable = 4 };

namespace detail {

inline std::string fixed4(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", x);
    return buf;
}

inline std::string sig6(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline std::vector<double> parse_grid(const std::string& s) {
    std::vector<double> out;
    for (const auto& item : split_list(s)) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size()) throw DomainError("grid entry '" + item + "' is not a number");
        out.push_back(v);
    }
    if (out.empty()) throw DomainError("grid is empty");
    return out;
}

/// Settings shared by all commands.
struct Common {
    double alpha = 0.025;
    std::string quadrature = "fine";
    int panels = 0;
    int nodes = 0;
    double abs_tol = 0.0;
    CLI::Option* panels_opt = nullptr;
    CLI::Option* nodes_opt = nullptr;
    CLI::Option* abs_tol_opt = nullptr;

    void add_to(CLI::App& app) {
        app.add_option("--alpha", alpha, "one-sided familywise level")->capture_default_str();
        app.add_option("--quadrature", quadrature, "quadrature profile")
            ->check(CLI::IsMember({"coarse", "fine"}))
            ->envname("OMT_QUADRATURE")
            ->capture_default_str();
        panels_opt = app.add_option("--panels", panels, "Gauss-Legendre panels per axis (overrides profile)");
        nodes_opt = app.add_option("--nodes", nodes, "nodes per panel (overrides profile)");
        abs_tol_opt = app.add_option("--abs-tol", abs_tol, "absolute quadrature tolerance (overrides profile)");
    }

    QuadratureConfig quadrature_config() const {
        QuadratureConfig q;
        if (quadrature == "coarse") {
            q.panels_per_axis = 16;
            q.nodes_per_panel = 10;
            q.abs_tol = 1e-6;
        }
        if (panels_opt->count() > 0) q.panels_per_axis = panels;
        if (nodes_opt->count() > 0) q.nodes_per_panel = nodes;
        if (abs_tol_opt->count() > 0) q.abs_tol = abs_tol;
        q.validate();
        return q;
    }
};

/// Alternative shifts for a pair of groups: given directly, from per-arm
/// sizes of a two-proportion design, or from a marginal power.
struct Shift {
    std::string calibration = "auto";
    double theta1 = 0.0;
    double theta2 = 0.0;
    double rho = 0.0;
    double beta = 0.85;
    double rate_control = 0.075;
    double rate_treat = 0.04875;
    long n_arm1 = 1200;
    long n_arm2 = 1200;
    CLI::Option* theta1_opt = nullptr;
    CLI::Option* theta2_opt = nullptr;

    void add_to(CLI::App& app) {
        app.add_option("--calibration", calibration, "auto, direct, design or marginal")
            ->check(CLI::IsMember({"auto", "direct", "design", "marginal"}))
            ->capture_default_str();
        theta1_opt = app.add_option("--theta1", theta1, "shift of z1 (direct calibration)");
        theta2_opt = app.add_option("--theta2", theta2, "shift of z2 (direct calibration)");
        app.add_option("--rho", rho, "correlation of the z-scores")->capture_default_str();
        app.add_option("--beta", beta, "marginal power of each test at level alpha")->capture_default_str();
        app.add_option("--rate-control", rate_control, "control event rate")->capture_default_str();
        app.add_option("--rate-treat", rate_treat, "treatment event rate")->capture_default_str();
        app.add_option("--n-arm1", n_arm1, "persons per arm in group 1")->capture_default_str();
        app.add_option("--n-arm2", n_arm2, "persons per arm in group 2")->capture_default_str();
    }

    std::string resolved_mode() const {
        if (calibration != "auto") return calibration;
        return (theta1_opt->count() > 0 || theta2_opt->count() > 0) ? "direct" : "marginal";
    }

    AlternativeModel model(double alpha) const {
        const std::string mode = resolved_mode();
        AlternativeModel m{0.0, 0.0, rho};
        if (mode == "direct") {
            if (theta1_opt->count() == 0 || theta2_opt->count() == 0) {
                throw DomainError("direct calibration needs both --theta1 and --theta2");
            }
            m.theta1 = theta1;
            m.theta2 = theta2;
        } else if (mode == "design") {
            m.theta1 = theta_from_design({rate_control, rate_treat, n_arm1, n_arm1});
            m.theta2 = theta_from_design({rate_control, rate_treat, n_arm2, n_arm2});
        } else {
            m.theta1 = m.theta2 = theta_from_marginal_power(beta, alpha);
        }
        m.validate();
        return m;
    }
};

/// Shift as a function of group size, for the design searches.
struct GroupCalibration {
    std::string calibration = "marginal";
    double beta = 0.85;
    double reference_persons = 2400.0;
    double rate_control = 0.075;
    double rate_treat = 0.04875;

    void add_to(CLI::App& app) {
        app.add_option("--calibration", calibration, "design or marginal")
            ->check(CLI::IsMember({"design", "marginal"}))
            ->capture_default_str();
        app.add_option("--beta", beta, "marginal power at the reference group size")->capture_default_str();
        app.add_option("--reference-persons", reference_persons, "group size (both arms) with marginal power beta")
            ->capture_default_str();
        app.add_option("--rate-control", rate_control, "control event rate")->capture_default_str();
        app.add_option("--rate-treat", rate_treat, "treatment event rate")->capture_default_str();
    }

    ShiftCalibration get(double alpha) const {
        ShiftCalibration c;
        c.mode = calibration == "design" ? ShiftCalibration::Mode::design : ShiftCalibration::Mode::marginal;
        c.beta = beta;
        c.reference_persons = reference_persons;
        c.rate_control = rate_control;
        c.rate_treat = rate_treat;
        c.alpha = alpha;
        if (!(reference_persons > 0.0)) throw DomainError("--reference-persons must be positive");
        if (c.mode == ShiftCalibration::Mode::marginal) (void)theta_from_marginal_power(beta, alpha);
        return c;
    }
};

/// Objective of an optimal rule: a pure objective or explicit weights.
struct ObjectiveChoice {
    std::string objective = "combo";
    double w_any = 0.0;
    double w_avg = 0.0;
    double w_1 = 0.0;
    CLI::Option* w_any_opt = nullptr;
    CLI::Option* w_avg_opt = nullptr;
    CLI::Option* w_1_opt = nullptr;

    void add_to(CLI::App& app) {
        app.add_option("--objective", objective, "any, avg, pi1 or combo")->capture_default_str();
        w_any_opt = app.add_option("--w-any", w_any, "weight of pi_any (replaces --objective)");
        w_avg_opt = app.add_option("--w-avg", w_avg, "weight of pi_avg (replaces --objective)");
        w_1_opt = app.add_option("--w-1", w_1, "weight of pi_1 (replaces --objective)");
    }

    ObjectiveWeights weights() const {
        if (w_any_opt->count() + w_avg_opt->count() + w_1_opt->count() > 0) return {w_any, w_avg, w_1};
        return ObjectiveWeights::of(parse_objective(objective));
    }
};

/// A named column of a power table: an optimal rule for given weights or a builtin.
struct Column {
    std::string label;
    ProcedureFamily family;
};

inline Column column_for(const std::string& token, const ObjectiveChoice& choice) {
    if (token == "omt") return {"omt", ProcedureFamily::omt_for(choice.weights())};
    if (token.rfind("omt_", 0) == 0) {
        const Objective o = parse_objective(token.substr(4));
        return {"omt_" + std::string(to_string(o)), ProcedureFamily::omt_for(ObjectiveWeights::of(o))};
    }
    const ProcedureKind k = parse_procedure_kind(token);
    return {std::string(to_string(k)), ProcedureFamily::of(k)};
}

inline std::vector<Column> columns_for(const std::string& spec, const ObjectiveChoice& choice) {
    std::vector<std::string> tokens;
    if (spec == "core") {
        tokens = {"omt_avg", "omt_pi1", "omt_combo", "closed_stouffer", "hommel"};
    } else if (spec == "all") {
        tokens = {"omt_avg",  "omt_any",         "omt_pi1", "omt_combo",      "hommel",
                  "bittman", "closed_stouffer", "bonferroni", "fixed_sequence"};
    } else {
        tokens = split_list(spec);
    }
    if (tokens.empty()) throw DomainError("no procedures selected");
    std::vector<Column> cols;
    for (const auto& t : tokens) cols.push_back(column_for(t, choice));
    return cols;
}

inline Procedure build_single(const std::string& token, const ObjectiveChoice& choice, const AlternativeModel& model,
                              double alpha, const QuadratureConfig& q) {
    return column_for(token, choice).family.build(model, alpha, Objective::any, q);
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw DomainError("cannot open '" + path + "' for writing");
    return f;
}

/// Writes rows `measure,<col>...` for the four measures, 4 decimals.
inline void write_matrix(std::ostream& os, const std::vector<std::string>& labels,
                         const std::vector<PowerReport>& reports) {
    os << "measure";
    for (const auto& l : labels) os << ',' << l;
    os << '\n';
    for (auto m : kMeasures) {
        os << measure_name(m);
        for (const auto& r : reports) os << ',' << fixed4(r.get(m));
        os << '\n';
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

using Action = std::function<int(std::ostream& out, std::ostream& err)>;

/// Registers the command's options on `app` and returns the action to run
/// after parsing.
using Setup = std::function<Action(CLI::App& app)>;

inline Action setup_region(CLI::App& app) {
    auto common = std::make_shared<Common>();
    auto shift = std::make_shared<Shift>();
    auto choice = std::make_shared<ObjectiveChoice>();
    auto proc = std::make_shared<std::string>("omt");
    auto grid = std::make_shared<int>(256);
    auto z_lo = std::make_shared<double>(-5.0);
    auto z_hi = std::make_shared<double>(1.0);
    auto path = std::make_shared<std::string>("region.csv");
    common->add_to(app);
    shift->add_to(app);
    choice->add_to(app);
    app.add_option("--proc", *proc, "omt, omt_<objective> or a builtin procedure")->capture_default_str();
    app.add_option("--grid", *grid, "cells per axis")->capture_default_str();
    app.add_option("--z-lo", *z_lo, "lower end of both z axes")->capture_default_str();
    app.add_option("--z-hi", *z_hi, "upper end of both z axes")->capture_default_str();
    app.add_option("--out", *path, "CSV output path, - for standard output")->capture_default_str();
    return [=](std::ostream& out, std::ostream& err) {
        const auto q = common->quadrature_config();
        const auto model = shift->model(common->alpha);
        const Procedure p = build_single(*proc, *choice, model, common->alpha, q);
        const RegionGrid g = export_region(p, *grid, *z_lo, *z_hi);
        std::ostream& summary = *path == "-" ? err : out;
        if (*path == "-") {
            write_region_csv(out, g);
        } else {
            auto f = open_output(*path);
            write_region_csv(f, g);
        }
        const auto n = g.counts();
        summary << "procedure " << p.name() << "\nalpha " << sig6(p.alpha()) << "\ntheta1 " << sig6(model.theta1)
                << "\ntheta2 " << sig6(model.theta2) << '\n';
        if (p.kind() == ProcedureKind::omt || p.kind() == ProcedureKind::bittman ||
            p.kind() == ProcedureKind::closed_stouffer) {
            summary << "threshold " << sig6(p.threshold()) << '\n';
        }
        summary << "cells none " << n[0] << " only1 " << n[1] << " only2 " << n[2] << " both " << n[3] << '\n';
        return kOk;
    };
}

inline Action setup_power(CLI::App& app) {
    auto common = std::make_shared<Common>();
    auto shift = std::make_shared<Shift>();
    auto choice = std::make_shared<ObjectiveChoice>();
    auto procs = std::make_shared<std::string>("core");
    auto mc = std::make_shared<bool>(false);
    auto reps = std::make_shared<long>(1'000'000);
    auto seed = std::make_shared<std::uint64_t>(McConfig{}.seed);
    auto path = std::make_shared<std::string>("");
    common->add_to(app);
    shift->add_to(app);
    choice->add_to(app);
    app.add_option("--proc,--procedures", *procs, "core, all, or a comma list of procedures")
        ->capture_default_str();
    app.add_flag("--mc", *mc, "append Monte Carlo columns with standard errors");
    app.add_option("--reps", *reps, "Monte Carlo replications")->capture_default_str();
    app.add_option("--seed", *seed, "Monte Carlo seed")->capture_default_str();
    app.add_option("--out", *path, "also write the table to this CSV file");
    return [=](std::ostream& out, std::ostream&) {
        const auto q = common->quadrature_config();
        const auto model = shift->model(common->alpha);
        const McConfig mcc{*reps, *seed};
        if (*mc) mcc.validate();
        std::vector<std::string> labels;
        std::vector<PowerReport> reports;
        std::vector<double> fwer;
        for (const auto& col : columns_for(*procs, *choice)) {
            const Procedure p = col.family.build(model, common->alpha, Objective::any, q);
            labels.push_back(col.label);
            reports.push_back(evaluate_power(p, model, q));
            fwer.push_back(region_probability(p, RegionPart::any, {0.0, 0.0, model.rho}, q));
            if (*mc) {
                const PowerEstimate e = evaluate_power_mc(p, model, mcc);
                labels.push_back(col.label + "_mc");
                reports.push_back(e.mean);
                labels.push_back(col.label + "_se");
                reports.push_back(e.std_error);
                fwer.push_back(mc_estimate([&](ZScorePair z) { return p.decide_z(z).any() ? 1.0 : 0.0; },
                                           {0.0, 0.0, model.rho}, mcc)
                                   .mean);
                fwer.push_back(std::nan(""));
            }
        }
        std::ostringstream table;
        write_matrix(table, labels, reports);
        table << "fwer";
        for (double f : fwer) table << ',' << (std::isnan(f) ? std::string() : fixed4(f));
        table << '\n';
        out << "# alpha " << sig6(common->alpha) << " theta1 " << sig6(model.theta1) << " theta2 "
            << sig6(model.theta2) << " rho " << sig6(model.rho) << '\n'
            << table.str();
        if (!path->empty()) {
            auto f = open_output(*path);
            f << table.str();
        }
        return kOk;
    };
}

inline ProcedureFamily family_for(const std::string& token) {
    if (token == "own") return ProcedureFamily::own();
    return column_for(token, ObjectiveChoice{}).family;
}

inline Action setup_allocate(CLI::App& app) {
    auto common = std::make_shared<Common>();
    auto cal = std::make_shared<GroupCalibration>();
    auto total = std::make_shared<long>(4800);
    auto grid = std::make_shared<std::string>("0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1");
    auto measure = std::make_shared<std::string>("all");
    auto family = std::make_shared<std::string>("own");
    auto path = std::make_shared<std::string>("allocation.csv");
    common->add_to(app);
    cal->add_to(app);
    app.add_option("--N", *total, "total persons over both groups")->capture_default_str();
    app.add_option("--grid", *grid, "comma list of splits r in [0, 1]")->capture_default_str();
    app.add_option("--measure", *measure, "measure whose best split is reported, or all")->capture_default_str();
    app.add_option("--family", *family, "own (optimal rule per measure), omt_<objective> or a builtin")
        ->capture_default_str();
    app.add_option("--out", *path, "CSV output path, - for standard output")->capture_default_str();
    return [=](std::ostream& out, std::ostream& err) {
        const auto q = common->quadrature_config();
        const auto c = cal->get(common->alpha);
        const auto r_grid = parse_grid(*grid);
        std::vector<Objective> shown;
        if (*measure == "all") shown.assign(kMeasures.begin(), kMeasures.end());
        else shown.push_back(parse_objective(*measure));
        const auto res = allocation_search(*total, family_for(*family), c, r_grid, q);
        std::ostream& summary = *path == "-" ? err : out;
        if (*path == "-") {
            write_allocation_csv(out, res);
        } else {
            auto f = open_output(*path);
            write_allocation_csv(f, res);
        }
        for (auto m : shown) summary << "argmax " << measure_name(m) << ' ' << sig6(res.argmax(m)) << '\n';
        return kOk;
    };
}

inline Action setup_savings(CLI::App& app) {
    auto common = std::make_shared<Common>();
    auto cal = std::make_shared<GroupCalibration>();
    auto total = std::make_shared<long>(4800);
    auto measure = std::make_shared<std::string>("all");
    auto competitor = std::make_shared<std::string>("hommel");
    auto r = std::make_shared<double>(0.5);
    auto cap = std::make_shared<long>(2'000'000);
    common->add_to(app);
    cal->add_to(app);
    app.add_option("--N", *total, "reference total persons for the optimal rule")->capture_default_str();
    app.add_option("--measure", *measure, "pi_avg, pi_any, pi_1, pi_combo or all")->capture_default_str();
    app.add_option("--competitor", *competitor, "procedure whose required sample size is solved")
        ->capture_default_str();
    app.add_option("--r", *r, "split of persons to group 1")->capture_default_str();
    app.add_option("--n-cap", *cap, "largest sample size searched")->capture_default_str();
    return [=](std::ostream& out, std::ostream&) {
        const auto q = common->quadrature_config();
        const auto c = cal->get(common->alpha);
        std::vector<Objective> shown;
        if (*measure == "all") shown.assign(kMeasures.begin(), kMeasures.end());
        else shown.push_back(parse_objective(*measure));
        const ProcedureFamily comp = family_for(*competitor);
        out << "measure,omt_power,reference_n,required_n,saving_pct\n";
        for (auto m : shown) {
            const SavingsReport s = savings_vs(comp, m, *total, *r, c, q, *cap);
            out << measure_name(m) << ',' << fixed4(s.omt_power) << ',' << s.reference_n << ',' << s.required_n << ','
                << fixed4(s.saving_pct) << '\n';
        }
        return kOk;
    };
}

/// Event counts of one APEX group.
struct GroupCounts {
    long events_control;
    long n_control;
    long events_treat;
    long n_treat;
};

inline Action setup_apex(CLI::App& app) {
    auto common = std::make_shared<Common>();
    auto cal = std::make_shared<GroupCalibration>();
    auto g1 = std::make_shared<GroupCounts>(GroupCounts{166, 1956, 132, 1914});
    auto g2 = std::make_shared<GroupCounts>(GroupCounts{57, 1218, 33, 1198});
    auto procs = std::make_shared<std::string>("core");
    common->add_to(app);
    cal->add_to(app);
    app.add_option("--events-control1", g1->events_control, "group 1 control events")->capture_default_str();
    app.add_option("--n-control1", g1->n_control, "group 1 control arm size")->capture_default_str();
    app.add_option("--events-treat1", g1->events_treat, "group 1 treated events")->capture_default_str();
    app.add_option("--n-treat1", g1->n_treat, "group 1 treated arm size")->capture_default_str();
    app.add_option("--events-control2", g2->events_control, "group 2 control events")->capture_default_str();
    app.add_option("--n-control2", g2->n_control, "group 2 control arm size")->capture_default_str();
    app.add_option("--events-treat2", g2->events_treat, "group 2 treated events")->capture_default_str();
    app.add_option("--n-treat2", g2->n_treat, "group 2 treated arm size")->capture_default_str();
    app.add_option("--procedures", *procs, "columns of the power matrix")->capture_default_str();
    return [=](std::ostream& out, std::ostream&) {
        const auto q = common->quadrature_config();
        const double alpha = common->alpha;
        const auto c = cal->get(alpha);
        const std::array<GroupCounts, 2> groups{*g1, *g2};

        out << "group,events_control,n_control,events_treat,n_treat,p_value\n";
        std::array<double, 2> p{};
        for (int i = 0; i < 2; ++i) {
            const auto& g = groups[i];
            p[i] = observed_pvalue(g.events_control, g.n_control, g.events_treat, g.n_treat);
            out << i + 1 << ',' << g.events_control << ',' << g.n_control << ',' << g.events_treat << ','
                << g.n_treat << ',' << fixed4(p[i]) << '\n';
        }

        // Shifts at the realized arm sizes under both calibration modes.
        std::array<double, 2> th_design{}, th_marginal{};
        ShiftCalibration marginal = c;
        marginal.mode = ShiftCalibration::Mode::marginal;
        for (int i = 0; i < 2; ++i) {
            const auto& g = groups[i];
            th_design[i] = theta_from_design({c.rate_control, c.rate_treat, g.n_control, g.n_treat});
            th_marginal[i] = marginal.theta_for_group(g.n_control + g.n_treat);
        }
        out << "\ncalibration,theta1,theta2\n"
            << "design," << sig6(th_design[0]) << ',' << sig6(th_design[1]) << '\n'
            << "marginal," << sig6(th_marginal[0]) << ',' << sig6(th_marginal[1]) << '\n';

        const bool design = c.mode == ShiftCalibration::Mode::design;
        const AlternativeModel model{design ? th_design[0] : th_marginal[0], design ? th_design[1] : th_marginal[1],
                                     0.0};
        const PValuePair observed{p[0], p[1]};

        std::vector<Column> cols = columns_for(*procs, ObjectiveChoice{});
        std::vector<Column> decision_cols = columns_for("all", ObjectiveChoice{});
        out << "\nprocedure,reject_h1,reject_h2\n";
        for (const auto& col : decision_cols) {
            const Decision d = decide(col.family.build(model, alpha, Objective::any, q), observed);
            out << col.label << ',' << (d.d1 ? "yes" : "no") << ',' << (d.d2 ? "yes" : "no") << '\n';
        }

        std::vector<std::string> labels;
        std::vector<PowerReport> reports;
        for (const auto& col : cols) {
            labels.push_back(col.label);
            reports.push_back(evaluate_power(col.family.build(model, alpha, Objective::any, q), model, q));
        }
        out << "\n# power at " << (design ? "design" : "marginal") << " calibration\n";
        write_matrix(out, labels, reports);
        return kOk;
    };
}

/// Effective settings as `key=value` lines; options that are unset and have
/// no default are left out so that re-reading the dump leaves them unset.
inline std::string dump_config(const CLI::App& app) {
    std::vector<std::string> unset;
    for (const CLI::Option* o : app.get_options()) {
        if (o->count() == 0 && o->get_default_str().empty()) unset.push_back(o->get_single_name() + "=");
    }
    std::istringstream in(app.config_to_str(true, false));
    std::string out, line;
    while (std::getline(in, line)) {
        const bool skip = std::any_of(unset.begin(), unset.end(), [&](const std::string& k) { return line.rfind(k, 0) == 0; });
        if (!skip) out += line + '\n';
    }
    return out;
}

inline const std::map<std::string, std::pair<std::string, Setup>>& commands() {
    static const std::map<std::string, std::pair<std::string, Setup>> table{
        {"allocate", {"power over a grid of sample splits", setup_allocate}},
        {"apex", {"APEX trial p-values, decisions and power", setup_apex}},
        {"power", {"power measures of procedures at one alternative", setup_power}},
        {"region", {"rejection-region grid of a procedure as CSV", setup_region}},
        {"savings", {"sample size a competitor needs to match the optimal rule", setup_savings}},
    };
    return table;
}

inline std::string usage() {
    std::string s = "usage: omt <command> [options]\n\ncommands:\n";
    for (const auto& [name, entry] : commands()) {
        s += "  " + name + std::string(10 - name.size(), ' ') + entry.first + "\n";
    }
    s += "\nRun `omt <command> --help` for the options of a command.\n";
    return s;
}

}  // namespace detail

/// Runs one command. args excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    if (args.empty() || args[0] == "-h" || args[0] == "--help") {
        (args.empty() ? err : out) << detail::usage();
        return args.empty() ? kConfigError : kOk;
    }
    const auto& table = detail::commands();
    const auto it = table.find(args[0]);
    if (it == table.end()) {
        err << "unknown command '" << args[0] << "'\n" << detail::usage();
        return kConfigError;
    }

    CLI::App app(it->second.first, "omt " + it->first);
    app.set_config("--config", "", "read `key = value` settings from this file");
    app.allow_config_extras(CLI::config_extras_mode::error);
    bool dump = false;
    app.add_flag("--dump-config", dump, "print the effective settings and exit")->configurable(false);
    detail::Action action = it->second.second(app);

    try {
        std::vector<std::string> rest(args.rbegin(), args.rend() - 1);
        app.parse(rest);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    }
    if (dump) {
        out << detail::dump_config(app);
        return kOk;
    }

    try {
        return action(out, err);
    } catch (const Unachievable& e) {
        err << "unachievable: " << e.what() << '\n';
        return kUnachievable;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    }
}

}  // namespace omt::cli
