#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gflstab/csv.hpp"
#include "gflstab/pool.hpp"
#include "gflstab/roa.hpp"
#include "gflstab/sim.hpp"
#include "gflstab/validate.hpp"

using nlohmann::json;
using namespace gflstab;

namespace {

struct RunConfig {
    std::string subcommand;
    std::string scenario;       // builtin name or file path, as given
    std::string scenario_text;  // resolved scenario document (wins over `scenario`)
    std::string model = "full";
    std::string out;
    bool degrees = false;
    int workers = 0;
    // cct
    double t_lo = 0.01;
    double t_hi = 0.5;
    double resolution = 0.005;
    double settle = 30.0;
    // roa
    int n0 = 100;
    int n1 = 100;
    bool brute = false;
    double pll_alone_id = 0;  // 0 disables the standalone-PLL plane
    // sweep (Hz; a tvc entry of 0 means disabled)
    std::vector<double> sweep_pll, sweep_dvc, sweep_tvc;
    // validate-reduction
    double window_cap = 0.4;
    double first_window = 0.05;
};

json config_to_json(const RunConfig& c) {
    return json{{"subcommand", c.subcommand},
                {"scenario", c.scenario},
                {"scenario_text", c.scenario_text},
                {"model", c.model},
                {"out", c.out},
                {"degrees", c.degrees},
                {"workers", c.workers},
                {"t_lo", c.t_lo},
                {"t_hi", c.t_hi},
                {"resolution", c.resolution},
                {"settle", c.settle},
                {"n0", c.n0},
                {"n1", c.n1},
                {"brute", c.brute},
                {"pll_alone_id", c.pll_alone_id},
                {"sweep_pll", c.sweep_pll},
                {"sweep_dvc", c.sweep_dvc},
                {"sweep_tvc", c.sweep_tvc},
                {"window_cap", c.window_cap},
                {"first_window", c.first_window}};
}

template <typename T>
void take(const json& j, const char* key, T& dst) {
    if (j.contains(key)) j.at(key).get_to(dst);
}

void config_from_json(const json& j, RunConfig& c) {
    take(j, "subcommand", c.subcommand);
    take(j, "scenario", c.scenario);
    take(j, "scenario_text", c.scenario_text);
    take(j, "model", c.model);
    take(j, "out", c.out);
    take(j, "degrees", c.degrees);
    take(j, "workers", c.workers);
    take(j, "t_lo", c.t_lo);
    take(j, "t_hi", c.t_hi);
    take(j, "resolution", c.resolution);
    take(j, "settle", c.settle);
    take(j, "n0", c.n0);
    take(j, "n1", c.n1);
    take(j, "brute", c.brute);
    take(j, "pll_alone_id", c.pll_alone_id);
    take(j, "sweep_pll", c.sweep_pll);
    take(j, "sweep_dvc", c.sweep_dvc);
    take(j, "sweep_tvc", c.sweep_tvc);
    take(j, "window_cap", c.window_cap);
    take(j, "first_window", c.first_window);
}

int fail(const std::string& msg) {
    std::cerr << "gflstab: error: " << msg << "\n";
    return 2;
}

Scenario resolve_scenario(const RunConfig& cfg) {
    if (!cfg.scenario_text.empty())
        return parse_scenario(cfg.scenario_text, "config");
    if (cfg.scenario.empty())
        throw std::invalid_argument("no scenario given (use --scenario)");
    if (const Scenario* s = find_scenario(cfg.scenario)) return *s;
    std::ifstream probe(cfg.scenario);
    if (!probe.good())
        throw std::invalid_argument("scenario '" + cfg.scenario +
                                    "' is neither a built-in name nor a readable file");
    return load_scenario_file(cfg.scenario);
}

BandwidthSpec spec_of(const SystemParams& p) {
    BandwidthSpec bw;
    bw.omega_pll = p.omega_pll;
    bw.omega_dvc = p.omega_dvc;
    if (p.omega_tvc > 0) bw.omega_tvc = p.omega_tvc;
    return bw;
}

std::string angle_str(double rad, bool degrees) {
    char buf[48];
    if (degrees)
        std::snprintf(buf, sizeof buf, "%.6g deg", rad * 180.0 / kPi);
    else
        std::snprintf(buf, sizeof buf, "%.6g rad", rad);
    return buf;
}

std::string with_suffix(const std::string& path, const std::string& tag) {
    const std::size_t dot = path.find_last_of('.');
    const std::size_t slash = path.find_last_of('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return path + "." + tag;
    return path.substr(0, dot) + "." + tag + path.substr(dot);
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    os << content;
    if (!os) throw std::runtime_error("write to '" + path + "' failed");
}

ModelChoice choice_for(const std::string& model, const Scenario& sc) {
    if (model == "full") return ModelChoice::full_model();
    if (model == "reduced")
        return ModelChoice::reduced_model(classify_ordering(spec_of(sc.params)).ordering);
    throw std::invalid_argument("model must be full or reduced here, got '" + model +
                                "'");
}

// -- subcommand handlers -------------------------------------------------------

int run_simulate(const RunConfig& cfg, const Scenario& sc) {
    const bool both = cfg.model == "both";
    SimOptions opts;
    if (both) opts.integ.store_dense = true;

    std::vector<std::pair<std::string, SimResult>> runs;
    if (cfg.model == "full" || both)
        runs.emplace_back("full", simulate_scenario(ModelChoice::full_model(), sc, opts));
    if (cfg.model == "reduced" || both) {
        const ModelChoice mc = choice_for("reduced", sc);
        runs.emplace_back("reduced", simulate_scenario(mc, sc, opts));
        std::cout << "ordering=" << ordering_name(mc.ordering)
                  << " separation_ratio=" << classify_ordering(spec_of(sc.params)).separation_ratio
                  << "\n";
    }
    if (runs.empty()) return fail("unknown model '" + cfg.model + "'");

    for (const auto& [tag, r] : runs) {
        if (!cfg.out.empty()) {
            std::ostringstream os;
            write_trajectory_csv(os, r.traj);
            write_file(both ? with_suffix(cfg.out, tag) : cfg.out, os.str());
        }
        const StateVec x = r.traj.back_state();
        std::cout << "model=" << tag << " t_end=" << format_double(r.traj.t.back())
                  << " delta=" << angle_str(x[0], cfg.degrees)
                  << " i_d=" << format_double(x[2]) << " dv2=" << format_double(x[3])
                  << " i_q=" << format_double(x[4]) << "\n";
    }

    if (both) {
        const BandwidthOrdering o = runs[1].second.model.ordering;
        const Trajectory& tf = runs[0].second.traj;
        const Trajectory& tr = runs[1].second.traj;
        const double t_end = std::min(tf.t.back(), tr.t.back());
        double dev = 0;
        const int n = 800;
        for (int i = 0; i <= n; ++i) {
            const double t = t_end * i / n;
            const ReducedState sf = project_slow(o, FullState::from_array(tf.evaluate(t)));
            const StateVec xr = tr.evaluate(t);
            dev = std::max({dev, std::abs(sf.c0 - xr[0]), std::abs(sf.c1 - xr[1])});
        }
        std::cout << "max_slow_deviation=" << format_double(dev) << "\n";
    }

    const SimResult& head = runs.front().second;
    std::cout << "verdict=" << outcome_name(head.verdict.outcome)
              << " reason=" << reason_name(head.verdict.reason)
              << " slips=" << head.verdict.slip_count << "\n";
    return 0;
}

int run_cct(const RunConfig& cfg, const Scenario& sc) {
    if (cfg.model == "both") return fail("cct needs --model full or reduced");
    const ModelChoice mc = choice_for(cfg.model, sc);
    SimOptions opts;

    CctResult cr;
    try {
        cr = cct_search(mc, sc, cfg.t_lo, cfg.t_hi, cfg.resolution, opts, cfg.settle);
    } catch (const BracketError& e) {
        std::cout << "cct=none status=bracket-unstable\n";
        std::cout << "detail: " << e.what() << "\n";
        return 0;
    }

    if (!cfg.out.empty()) {
        std::ostringstream os;
        os << "clear_time,outcome,reason,slips,accepted\n";
        for (const CctTracePoint& pt : cr.trace)
            os << format_double(pt.clear_time) << ',' << outcome_name(pt.verdict.outcome)
               << ',' << reason_name(pt.verdict.reason) << ',' << pt.verdict.slip_count
               << ',' << (pt.accepted ? 1 : 0) << '\n';
        write_file(cfg.out, os.str());
    }

    if (cr.status == CctStatus::NoCctInRange) {
        std::cout << "cct=none status=no-cct-in-range t_hi="
                  << format_double(cr.cct) << "\n";
        return 0;
    }
    const CctTracePoint* at = nullptr;
    for (const CctTracePoint& pt : cr.trace)
        if (pt.accepted && pt.clear_time == cr.cct) at = &pt;
    std::cout << "cct=" << format_double(cr.cct)
              << " resolution=" << format_double(cr.resolution)
              << " evaluations=" << cr.trace.size() << " status=found\n";
    if (at)
        std::cout << "verdict=" << outcome_name(at->verdict.outcome)
                  << " reason=" << reason_name(at->verdict.reason)
                  << " slips=" << at->verdict.slip_count << "\n";
    return 0;
}

int run_roa(const RunConfig& cfg, const Scenario& sc) {
    const SystemParams& p = sc.params;
    RoaBoundary boundary;
    std::vector<ValidityLine> lines;
    std::string plane;
    double slow_rate = 0;
    std::optional<PlaneRhs> brute_rhs;  // set for the standalone plane

    if (cfg.pll_alone_id > 0) {
        boundary = pll_alone_roa(p, cfg.pll_alone_id);
        plane = "pll-alone";
        slow_rate = p.omega_pll;
        brute_rhs = pll_alone_rhs(p, cfg.pll_alone_id);
        std::cout << "plane=pll-alone i_d=" << format_double(cfg.pll_alone_id) << "\n";
    } else {
        const CompositeRoa comp = composite_roa(p);
        boundary = comp.slow;
        lines = comp.fast_limits;
        plane = ordering_name(comp.cls.ordering);
        slow_rate = is_dvc_slow(comp.cls.ordering) ? p.omega_dvc : p.omega_pll;
        std::cout << "plane=" << plane
                  << " separation_ratio=" << comp.cls.separation_ratio
                  << " advisory=" << (comp.cls.advisory ? 1 : 0) << "\n";
        for (const ValidityLine& l : lines)
            std::cout << "validity " << l.label << ": coord" << l.axis << "="
                      << format_double(l.value) << "\n";
    }

    std::cout << "sep=(" << format_double(boundary.sep.c0) << ","
              << format_double(boundary.sep.c1) << ") uep=("
              << format_double(boundary.uep.c0) << ","
              << format_double(boundary.uep.c1) << ") points="
              << boundary.curve().size() << " sep_enclosed="
              << (boundary.sep_enclosed ? 1 : 0) << "\n";

    if (!cfg.out.empty()) {
        std::ostringstream os;
        write_boundary_csv(os, boundary, lines, plane);
        write_file(cfg.out, os.str());
    }

    if (cfg.brute) {
        GridSpec spec{boundary.box, cfg.n0, cfg.n1};
        BruteForceOptions bopts;
        bopts.workers = resolve_workers(cfg.workers);
        const CompositeRoa* comp = nullptr;
        (void)comp;
        RoaGrid grid = brute_rhs
                           ? brute_force_roa(*brute_rhs, boundary.sep, spec, slow_rate, bopts)
                           : brute_force_roa(classify_ordering(spec_of(p)).ordering, p,
                                             spec, bopts);
        if (!cfg.out.empty()) {
            std::ostringstream os;
            write_grid_csv(os, grid);
            write_file(with_suffix(cfg.out, "grid"), os.str());
        }
        const AgreementStats st = agreement(boundary, grid);
        std::cout << "grid=" << cfg.n0 << "x" << cfg.n1
                  << " determinate=" << st.mutually_determinate
                  << " agreeing=" << st.agreeing
                  << " agreement=" << format_double(st.fraction) << "\n";
    }
    return 0;
}

int run_sweep(const RunConfig& cfg, const Scenario& sc) {
    if (cfg.sweep_pll.empty() || cfg.sweep_dvc.empty())
        return fail("sweep needs --pll and --dvc frequency lists (Hz)");
    if (cfg.model == "both") return fail("sweep needs --model full or reduced");
    const std::vector<double> tvc = cfg.sweep_tvc.empty()
                                        ? std::vector<double>{0.0}
                                        : cfg.sweep_tvc;

    struct Row {
        double f_pll, f_dvc, f_tvc;
        std::string text;
    };
    std::vector<Row> rows;
    for (double fp : cfg.sweep_pll)
        for (double fd : cfg.sweep_dvc)
            for (double ft : tvc) rows.push_back({fp, fd, ft, {}});

    run_parallel(rows.size(), resolve_workers(cfg.workers), [&](std::size_t i) {
        Row& row = rows[i];
        std::ostringstream os;
        os << format_double(row.f_pll) << ',' << format_double(row.f_dvc) << ','
           << format_double(row.f_tvc) << ',';
        try {
            Scenario s = sc;
            const BandwidthSpec bw = BandwidthSpec::from_hz(
                row.f_pll, row.f_dvc,
                row.f_tvc > 0 ? std::optional<double>(row.f_tvc) : std::nullopt);
            s.params.set_bandwidths(bw);
            const OrderingClass cls = classify_ordering(bw);
            const ModelChoice mc = cfg.model == "reduced"
                                       ? ModelChoice::reduced_model(cls.ordering)
                                       : ModelChoice::full_model();
            const SimResult r = simulate_scenario(mc, s, {});
            os << ordering_name(cls.ordering) << ','
               << format_double(cls.separation_ratio) << ',' << (cls.advisory ? 1 : 0)
               << ',' << outcome_name(r.verdict.outcome) << ','
               << reason_name(r.verdict.reason) << ',' << r.verdict.slip_count;
        } catch (const std::exception& e) {
            std::string what = e.what();
            for (char& ch : what)
                if (ch == ',' || ch == '\n') ch = ' ';
            os << ",,,error," << what << ",0";
        }
        row.text = os.str();
    });

    std::ostringstream os;
    os << "f_pll_hz,f_dvc_hz,f_tvc_hz,ordering,separation_ratio,advisory,verdict,"
          "reason,slips\n";
    std::size_t stable = 0, unstable = 0, other = 0;
    for (const Row& row : rows) {
        os << row.text << '\n';
        if (row.text.find(",Stable,") != std::string::npos)
            ++stable;
        else if (row.text.find(",Unstable,") != std::string::npos)
            ++unstable;
        else
            ++other;
    }
    if (!cfg.out.empty())
        write_file(cfg.out, os.str());
    else
        std::cout << os.str();
    std::cout << "rows=" << rows.size() << " stable=" << stable
              << " unstable=" << unstable << " other=" << other << "\n";
    return 0;
}

int run_validate(const RunConfig& cfg, const Scenario& sc) {
    ValidateOptions vopts;
    vopts.window_cap = cfg.window_cap;
    vopts.first_window = cfg.first_window;
    const ReductionReport r = validate_reduction(sc, vopts);
    std::cout << "ordering=" << ordering_name(r.ordering)
              << " separation_ratio=" << format_double(r.separation_ratio)
              << " advisory=" << (r.advisory ? 1 : 0) << "\n";
    std::cout << "err_base=" << format_double(r.err_base)
              << " err_half=" << format_double(r.err_half)
              << " ratio=" << format_double(r.ratio) << "\n";
    std::cout << "layer_window=" << format_double(r.window_end)
              << " raw=" << format_double(r.first_window_raw)
              << " corrected=" << format_double(r.first_window_corrected)
              << " improved=" << (r.first_window_corrected < r.first_window_raw ? 1 : 0)
              << "\n";
    return 0;
}

int run_equilibria(const RunConfig& cfg, const Scenario& sc) {
    const SystemParams& p = sc.params;
    const bool tvc = p.omega_tvc > 0;

    std::cout << "existence_threshold_u_g=" << format_double(existence_threshold(p))
              << " u_g=" << format_double(p.u_g) << "\n";

    auto print_pair = [&](const char* tag, const EquilibriumPair& pair, bool angle0) {
        if (!pair.exists) {
            std::cout << tag << ": none (margin=" << format_double(pair.margin)
                      << ")\n";
            return;
        }
        auto c = [&](double v) {
            return angle0 ? angle_str(v, cfg.degrees) : format_double(v);
        };
        std::cout << tag << ": sep=(" << c(pair.sep.c0) << ","
                  << format_double(pair.sep.c1) << ") uep=(" << c(pair.uep.c0) << ","
                  << format_double(pair.uep.c1) << ") margin="
                  << format_double(pair.margin)
                  << (pair.saddle_node ? " saddle-node" : "") << "\n";
    };
    print_pair("dvc-slow-plane", find_dvc_equilibria(p, tvc), false);
    print_pair("pll-slow-plane", find_pll_equilibria(p, tvc), true);

    auto print_full = [&](const char* tag, const FullState& x) {
        std::cout << tag << ": delta=" << angle_str(x.delta, cfg.degrees)
                  << " x_int_pll=" << format_double(x.x_int_pll)
                  << " i_d=" << format_double(x.i_d)
                  << " dv2=" << format_double(x.dv2)
                  << " i_q=" << format_double(x.i_q) << "\n";
    };
    try {
        print_full("full-sep", full_equilibrium(p, tvc));
        print_full("full-uep", full_equilibrium_unstable(p, tvc));
    } catch (const NoEquilibriumError& e) {
        std::cout << "full: none (" << e.what() << ")\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    std::string config_path;

    CLI::App app{"Transient-stability toolkit for grid-following converters"};
    app.require_subcommand(0, 1);
    app.fallthrough();  // accept global options after the subcommand name
    auto* opt_config =
        app.add_option("--config", config_path,
                       "JSON run config or a manifest from an earlier run");
    auto* opt_scenario = app.add_option("--scenario", cfg.scenario,
                                        "built-in scenario name or scenario file");
    auto* opt_model = app.add_option("--model", cfg.model, "full | reduced | both");
    auto* opt_out = app.add_option("--out", cfg.out, "output CSV path");
    auto* opt_degrees =
        app.add_flag("--degrees", cfg.degrees, "print angles in degrees");
    auto* opt_workers =
        app.add_option("--workers", cfg.workers,
                       "worker threads (default: GFLSTAB_WORKERS or hardware)");

    CLI::App* sub_sim = app.add_subcommand("simulate", "run one scenario");
    CLI::App* sub_cct =
        app.add_subcommand("cct", "bisect the critical fault-clearing time");
    auto* opt_tlo = sub_cct->add_option("--t-lo", cfg.t_lo, "bracket start (s)");
    auto* opt_thi = sub_cct->add_option("--t-hi", cfg.t_hi, "bracket end (s)");
    auto* opt_res =
        sub_cct->add_option("--resolution", cfg.resolution, "time grid step (s)");
    auto* opt_settle =
        sub_cct->add_option("--settle", cfg.settle, "post-clear horizon (s)");
    CLI::App* sub_roa =
        app.add_subcommand("roa", "trace the slow-plane attraction boundary");
    auto* opt_brute = sub_roa->add_flag("--brute", cfg.brute,
                                        "run the brute-force grid and compare");
    auto* opt_n0 = sub_roa->add_option("--n0", cfg.n0, "grid cells along coord 0");
    auto* opt_n1 = sub_roa->add_option("--n1", cfg.n1, "grid cells along coord 1");
    auto* opt_pll_alone = sub_roa->add_option(
        "--pll-alone-id", cfg.pll_alone_id,
        "standalone PLL plane at this fixed d-axis current (pu)");
    CLI::App* sub_sweep =
        app.add_subcommand("sweep", "verdict grid over bandwidth combinations");
    auto* opt_spll =
        sub_sweep->add_option("--pll", cfg.sweep_pll, "PLL bandwidths (Hz)");
    auto* opt_sdvc =
        sub_sweep->add_option("--dvc", cfg.sweep_dvc, "DVC bandwidths (Hz)");
    auto* opt_stvc = sub_sweep->add_option("--tvc", cfg.sweep_tvc,
                                           "TVC bandwidths (Hz, 0 = off)");
    CLI::App* sub_val = app.add_subcommand(
        "validate-reduction", "full-vs-reduced deviation and layer-correction report");
    auto* opt_wcap =
        sub_val->add_option("--window", cfg.window_cap, "deviation window end (s)");
    auto* opt_fwin = sub_val->add_option("--first-window", cfg.first_window,
                                         "initial layer window (s)");
    CLI::App* sub_eq =
        app.add_subcommand("equilibria", "reduced pairs, full rest points, threshold");

    CLI11_PARSE(app, argc, argv);

    // Config file fills everything not given on the command line.
    if (opt_config->count() > 0) {
        std::ifstream is(config_path);
        if (!is) return fail("cannot read config '" + config_path + "'");
        json j;
        try {
            j = json::parse(is);
        } catch (const json::parse_error& e) {
            return fail("config '" + config_path + "': " + e.what());
        }
        if (j.contains("config")) j = j.at("config");  // manifest rerun
        RunConfig from_file = cfg;
        try {
            config_from_json(j, from_file);
        } catch (const json::exception& e) {
            return fail("config '" + config_path + "': " + e.what());
        }
        RunConfig merged = from_file;
        if (opt_scenario->count()) {
            merged.scenario = cfg.scenario;
            merged.scenario_text.clear();
        }
        if (opt_model->count()) merged.model = cfg.model;
        if (opt_out->count()) merged.out = cfg.out;
        if (opt_degrees->count()) merged.degrees = cfg.degrees;
        if (opt_workers->count()) merged.workers = cfg.workers;
        if (opt_tlo->count()) merged.t_lo = cfg.t_lo;
        if (opt_thi->count()) merged.t_hi = cfg.t_hi;
        if (opt_res->count()) merged.resolution = cfg.resolution;
        if (opt_settle->count()) merged.settle = cfg.settle;
        if (opt_brute->count()) merged.brute = cfg.brute;
        if (opt_n0->count()) merged.n0 = cfg.n0;
        if (opt_n1->count()) merged.n1 = cfg.n1;
        if (opt_pll_alone->count()) merged.pll_alone_id = cfg.pll_alone_id;
        if (opt_spll->count()) merged.sweep_pll = cfg.sweep_pll;
        if (opt_sdvc->count()) merged.sweep_dvc = cfg.sweep_dvc;
        if (opt_stvc->count()) merged.sweep_tvc = cfg.sweep_tvc;
        if (opt_wcap->count()) merged.window_cap = cfg.window_cap;
        if (opt_fwin->count()) merged.first_window = cfg.first_window;
        cfg = merged;
    }

    if (sub_sim->parsed()) cfg.subcommand = "simulate";
    else if (sub_cct->parsed()) cfg.subcommand = "cct";
    else if (sub_roa->parsed()) cfg.subcommand = "roa";
    else if (sub_sweep->parsed()) cfg.subcommand = "sweep";
    else if (sub_val->parsed()) cfg.subcommand = "validate-reduction";
    else if (sub_eq->parsed()) cfg.subcommand = "equilibria";
    if (cfg.subcommand.empty())
        return fail("no subcommand given (and none found in the config)");

    // Equilibria and boundary tracing only need a parameter set; default to
    // the event-free baseline when no scenario was named.
    if (cfg.scenario.empty() && cfg.scenario_text.empty() &&
        (cfg.subcommand == "roa" || cfg.subcommand == "equilibria"))
        cfg.scenario = "steady";

    const auto t_start = std::chrono::steady_clock::now();
    int rc = 0;
    try {
        Scenario sc = resolve_scenario(cfg);
        cfg.scenario_text = serialize_scenario(sc);

        if (cfg.subcommand == "simulate") rc = run_simulate(cfg, sc);
        else if (cfg.subcommand == "cct") rc = run_cct(cfg, sc);
        else if (cfg.subcommand == "roa") rc = run_roa(cfg, sc);
        else if (cfg.subcommand == "sweep") rc = run_sweep(cfg, sc);
        else if (cfg.subcommand == "validate-reduction") rc = run_validate(cfg, sc);
        else if (cfg.subcommand == "equilibria") rc = run_equilibria(cfg, sc);
        else return fail("unknown subcommand '" + cfg.subcommand + "'");
    } catch (const ScenarioParseError& e) {
        return fail(e.what());
    } catch (const std::invalid_argument& e) {
        return fail(e.what());
    } catch (const std::exception& e) {
        std::cerr << "gflstab: " << e.what() << "\n";
        return 1;
    }

    if (rc == 0 && !cfg.out.empty()) {
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
                .count();
        json manifest{{"tool", "gflstab"},
                      {"version", kToolVersion},
                      {"wall_time_s", wall},
                      {"config", config_to_json(cfg)}};
        write_file(cfg.out + ".manifest.json", manifest.dump(2) + "\n");
        std::cout << "manifest=" << cfg.out + ".manifest.json" << "\n";
    }
    return rc;
}
