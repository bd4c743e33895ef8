#include "gflstab/scenarios.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace gflstab {

namespace {

std::string fmt(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fmt_short(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

}  // namespace

const char* sag_convention_name(SagConvention c) {
    return c == SagConvention::DropTo ? "drop-to" : "drop-by";
}

std::string Event::label() const {
    struct V {
        std::string operator()(const VoltageSag& e) const {
            return "sag(" + fmt_short(e.depth) + ")";
        }
        std::string operator()(const FaultClear&) const { return "clear"; }
        std::string operator()(const PhaseJump& e) const {
            return "phase-jump(" + fmt_short(e.dphi) + ")";
        }
        std::string operator()(const PowerStep& e) const {
            return "power-step(" + fmt_short(e.p_new) + ")";
        }
        std::string operator()(const BandwidthSwitch& e) const {
            std::string s = "bandwidth-switch(pll=" + fmt_short(e.bw.omega_pll / (2 * kPi)) +
                            "Hz,dvc=" + fmt_short(e.bw.omega_dvc / (2 * kPi)) + "Hz";
            if (e.bw.omega_tvc)
                s += ",tvc=" + fmt_short(*e.bw.omega_tvc / (2 * kPi)) + "Hz";
            return s + ")";
        }
        std::string operator()(const TvcToggle& e) const {
            return e.on ? "tvc-on" : "tvc-off";
        }
    };
    return std::visit(V{}, kind);
}

void Scenario::validate() const {
    double prev = -std::numeric_limits<double>::infinity();
    for (const Event& ev : events) {
        if (ev.time < prev)
            throw std::invalid_argument("scenario '" + name +
                                        "': event times must be non-decreasing");
        prev = ev.time;
        if (const auto* sag = std::get_if<VoltageSag>(&ev.kind)) {
            if (!(sag->depth > 0 && sag->depth <= 1))
                throw std::invalid_argument("scenario '" + name +
                                            "': sag depth must be in (0, 1]");
        } else if (const auto* pj = std::get_if<PhaseJump>(&ev.kind)) {
            if (!(pj->dphi > -kPi && pj->dphi <= kPi))
                throw std::invalid_argument("scenario '" + name +
                                            "': phase jump must be in (-pi, pi]");
        } else if (const auto* tt = std::get_if<TvcToggle>(&ev.kind)) {
            if (tt->on && !(tt->omega_tvc > 0))
                throw std::invalid_argument("scenario '" + name +
                                            "': tvc-on requires a positive bandwidth");
        }
    }
    if (!events.empty() && horizon < events.back().time)
        throw std::invalid_argument("scenario '" + name +
                                    "': horizon shorter than last event");
    params.validate();
}

void apply_event(const Event& ev, FullState& state, SystemParams& params,
                 SagConvention convention, double u_g_nominal) {
    struct V {
        FullState& s;
        SystemParams& p;
        SagConvention conv;
        double u_nom;
        void operator()(const VoltageSag& e) const {
            p.u_g = conv == SagConvention::DropTo ? e.depth * u_nom
                                                  : (1.0 - e.depth) * u_nom;
        }
        void operator()(const FaultClear&) const { p.u_g = u_nom; }
        void operator()(const PhaseJump& e) const { s.delta += e.dphi; }
        void operator()(const PowerStep& e) const { p.p_in = e.p_new; }
        void operator()(const BandwidthSwitch& e) const { p.set_bandwidths(e.bw); }
        void operator()(const TvcToggle& e) const {
            p.omega_tvc = e.on ? e.omega_tvc : 0.0;
        }
    };
    std::visit(V{state, params, convention, u_g_nominal}, ev.kind);
}

namespace {

Scenario make(const std::string& name, const BandwidthSpec& bw, double horizon,
              std::vector<Event> events) {
    Scenario s;
    s.name = name;
    s.params = SystemParams::make_default(bw);
    s.horizon = horizon;
    s.events = std::move(events);
    return s;
}

Event at(double t, EventKind k) { return Event{t, std::move(k)}; }

std::vector<Scenario> build_catalog() {
    std::vector<Scenario> cat;
    const double deg = kPi / 180.0;

    cat.push_back(make("steady", BandwidthSpec::from_hz(15, 2), 5, {}));

    cat.push_back(make("sag09-pllfast", BandwidthSpec::from_hz(15, 2), 25,
                       {at(0, VoltageSag{0.9}), at(0.16, FaultClear{})}));
    cat.push_back(make("sag09-dvcfast", BandwidthSpec::from_hz(2, 15), 25,
                       {at(0, VoltageSag{0.9}), at(0.20, FaultClear{})}));
    cat.push_back(make("sag09-tvcslow", BandwidthSpec::from_hz(16, 2, 0.3), 25,
                       {at(0, VoltageSag{0.9}), at(0.24, FaultClear{})}));
    cat.push_back(make("sag09-pll-slowdown", BandwidthSpec::from_hz(16, 2, 0.3), 25,
                       {at(0, VoltageSag{0.9}), at(0.24, FaultClear{}),
                        at(0.35, BandwidthSwitch{BandwidthSpec::from_hz(0.4, 2, 0.3)})}));

    cat.push_back(make("sag06-tvc-pllfast", BandwidthSpec::from_hz(15, 2, 20), 25,
                       {at(0, VoltageSag{0.6}), at(0.08, FaultClear{})}));
    cat.push_back(make("sag06-tvc-dvcfast", BandwidthSpec::from_hz(2, 15, 20), 25,
                       {at(0, VoltageSag{0.6}), at(0.10, FaultClear{})}));
    cat.push_back(make("sag06-dvc-slowdown", BandwidthSpec::from_hz(2, 15, 20), 25,
                       {at(0, VoltageSag{0.6}), at(0.10, FaultClear{}),
                        at(0.10, BandwidthSwitch{BandwidthSpec::from_hz(2, 0.4, 20)})}));

    for (double d : {15.0, 19.0, 21.0, 25.0, 48.0}) {
        char nm[40];
        std::snprintf(nm, sizeof nm, "phase-jump-%02.0f", d);
        cat.push_back(make(nm, BandwidthSpec::from_hz(1, 8), 20,
                           {at(0, PhaseJump{d * deg})}));
    }
    // The PLL integrator bleeds off at ~0.25/s regardless of bandwidth, so
    // the tail window needs a longer watch than the sluggish-PLL jumps.
    cat.push_back(make("phase-jump-fast-48", BandwidthSpec::from_hz(20, 8), 30,
                       {at(0, PhaseJump{48 * deg})}));

    {
        Scenario s = make("power-step-00", BandwidthSpec::from_hz(18, 3), 25,
                          {at(0, PowerStep{1.0})});
        s.params.p_in = 0.0;
        cat.push_back(s);
    }
    {
        Scenario s = make("power-step-045", BandwidthSpec::from_hz(18, 3), 25,
                          {at(0, PowerStep{1.0})});
        s.params.p_in = 0.45;
        cat.push_back(s);
    }
    {
        Scenario s = make("power-step-02-slowpll", BandwidthSpec::from_hz(0.4, 3), 30,
                          {at(0, PowerStep{1.0})});
        s.params.p_in = 0.2;
        cat.push_back(s);
    }
    {
        Scenario s = make("restart", BandwidthSpec::from_hz(0.5, 3, 20), 20,
                          {at(0, PowerStep{1.0})});
        s.params.p_in = 0.0;
        // DC link pre-charged to its upper clamp, converter idle.
        s.initial_state = FullState{0, 0, 0, 2.75, 0};
        cat.push_back(s);
    }

    for (const Scenario& s : cat) s.validate();
    return cat;
}

}  // namespace

const std::vector<Scenario>& builtin_scenarios() {
    static const std::vector<Scenario> cat = build_catalog();
    return cat;
}

const Scenario* find_scenario(const std::string& name) {
    for (const Scenario& s : builtin_scenarios())
        if (s.name == name) return &s;
    return nullptr;
}

Scenario with_clear_time(const Scenario& base, double t_clear) {
    if (!(t_clear >= 0))
        throw std::invalid_argument("with_clear_time: clearing time must be >= 0");
    Scenario s = base;
    int found = 0;
    for (Event& ev : s.events)
        if (std::holds_alternative<FaultClear>(ev.kind)) {
            ev.time = t_clear;
            ++found;
        }
    if (found != 1)
        throw std::invalid_argument("with_clear_time: scenario '" + base.name +
                                    "' must contain exactly one clear event, has " +
                                    std::to_string(found));
    std::stable_sort(s.events.begin(), s.events.end(),
                     [](const Event& a, const Event& b) { return a.time < b.time; });
    if (s.horizon < t_clear)
        throw std::invalid_argument("with_clear_time: clear time beyond horizon");
    s.validate();
    return s;
}

namespace {

double parse_double(const std::string& v, int line, const std::string& origin) {
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw ScenarioParseError(origin + ":" + std::to_string(line) +
                                 ": not a number: '" + v + "'");
    return d;
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream iss(s);
    std::string tok;
    while (iss >> tok) out.push_back(tok);
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
    Scenario s;
    double f_pll = 15, f_dvc = 2, f_tvc = 0;
    // Scalar overrides collected first so key order does not matter.
    std::vector<std::pair<std::string, double>> scalars;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        raw = trim(raw);
        if (raw.empty()) continue;
        const auto eq = raw.find('=');
        if (eq == std::string::npos)
            throw ScenarioParseError(origin + ":" + std::to_string(line) +
                                     ": expected 'key = value'");
        const std::string key = trim(raw.substr(0, eq));
        const std::string val = trim(raw.substr(eq + 1));

        if (key == "name") {
            s.name = val;
        } else if (key == "sag_convention") {
            if (val == "drop-to")
                s.sag_convention = SagConvention::DropTo;
            else if (val == "drop-by")
                s.sag_convention = SagConvention::DropBy;
            else
                throw ScenarioParseError(origin + ":" + std::to_string(line) +
                                         ": sag_convention must be drop-to or drop-by");
        } else if (key == "horizon") {
            s.horizon = parse_double(val, line, origin);
        } else if (key == "f_pll_hz") {
            f_pll = parse_double(val, line, origin);
        } else if (key == "f_dvc_hz") {
            f_dvc = parse_double(val, line, origin);
        } else if (key == "f_tvc_hz") {
            f_tvc = parse_double(val, line, origin);
        } else if (key == "u_g" || key == "x_g" || key == "r_g" || key == "omega_s" ||
                   key == "p_in" || key == "c_dc" || key == "v_dc_ref" ||
                   key == "k_v" || key == "v_t_ref" || key == "i_q_fixed" ||
                   key == "zeta_pll" || key == "zeta_dvc" || key == "i_limit" ||
                   key == "v_dc_min" || key == "v_dc_max") {
            scalars.emplace_back(key, parse_double(val, line, origin));
        } else if (key == "initial_state") {
            const auto tok = split_ws(val);
            if (tok.size() != 5)
                throw ScenarioParseError(origin + ":" + std::to_string(line) +
                                         ": initial_state needs 5 values");
            FullState st;
            st.delta = parse_double(tok[0], line, origin);
            st.x_int_pll = parse_double(tok[1], line, origin);
            st.i_d = parse_double(tok[2], line, origin);
            st.dv2 = parse_double(tok[3], line, origin);
            st.i_q = parse_double(tok[4], line, origin);
            s.initial_state = st;
        } else if (key == "event") {
            const auto tok = split_ws(val);
            if (tok.size() < 2)
                throw ScenarioParseError(origin + ":" + std::to_string(line) +
                                         ": event needs '<time> <kind> [args]'");
            Event ev;
            ev.time = parse_double(tok[0], line, origin);
            const std::string& kind = tok[1];
            auto need = [&](std::size_t n) {
                if (tok.size() != 2 + n)
                    throw ScenarioParseError(origin + ":" + std::to_string(line) +
                                             ": event '" + kind + "' takes " +
                                             std::to_string(n) + " argument(s)");
            };
            if (kind == "sag") {
                need(1);
                ev.kind = VoltageSag{parse_double(tok[2], line, origin)};
            } else if (kind == "clear") {
                need(0);
                ev.kind = FaultClear{};
            } else if (kind == "phase-jump") {
                need(1);
                ev.kind = PhaseJump{parse_double(tok[2], line, origin)};
            } else if (kind == "power-step") {
                need(1);
                ev.kind = PowerStep{parse_double(tok[2], line, origin)};
            } else if (kind == "bandwidth-switch") {
                need(3);
                const double p = parse_double(tok[2], line, origin);
                const double d = parse_double(tok[3], line, origin);
                const double t = parse_double(tok[4], line, origin);
                ev.kind = BandwidthSwitch{BandwidthSpec::from_hz(
                    p, d, t > 0 ? std::optional<double>(t) : std::nullopt)};
            } else if (kind == "tvc-on") {
                need(1);
                ev.kind = TvcToggle{true, parse_double(tok[2], line, origin)};
            } else if (kind == "tvc-off") {
                need(0);
                ev.kind = TvcToggle{false, 0};
            } else {
                throw ScenarioParseError(origin + ":" + std::to_string(line) +
                                         ": unknown event kind '" + kind + "'");
            }
            s.events.push_back(ev);
        } else {
            throw ScenarioParseError(origin + ":" + std::to_string(line) +
                                     ": unknown key '" + key + "'");
        }
    }

    BandwidthSpec bw = BandwidthSpec::from_hz(
        f_pll, f_dvc, f_tvc > 0 ? std::optional<double>(f_tvc) : std::nullopt);
    s.params = SystemParams::make_default(bw);
    for (const auto& [key, v] : scalars) {
        if (key == "u_g") s.params.u_g = v;
        else if (key == "x_g") s.params.x_g = v;
        else if (key == "r_g") s.params.r_g = v;
        else if (key == "omega_s") s.params.omega_s = v;
        else if (key == "p_in") s.params.p_in = v;
        else if (key == "c_dc") s.params.c_dc = v;
        else if (key == "v_dc_ref") s.params.v_dc_ref = v;
        else if (key == "k_v") s.params.k_v = v;
        else if (key == "v_t_ref") s.params.v_t_ref = v;
        else if (key == "i_q_fixed") s.params.i_q_fixed = v;
        else if (key == "zeta_pll") s.params.zeta_pll = v;
        else if (key == "zeta_dvc") s.params.zeta_dvc = v;
        else if (key == "i_limit") s.params.limits.i_limit = v;
        else if (key == "v_dc_min") s.params.limits.v_dc_min = v;
        else if (key == "v_dc_max") s.params.limits.v_dc_max = v;
    }
    // Gains depend on c_dc/omega_s/zeta, so rederive after scalar overrides.
    s.params.set_bandwidths(bw);

    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        throw ScenarioParseError(origin + ": " + e.what());
    }
    return s;
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ScenarioParseError("cannot open scenario file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_scenario(ss.str(), path);
}

std::string serialize_scenario(const Scenario& s) {
    std::ostringstream out;
    const SystemParams& p = s.params;
    out << "name = " << s.name << "\n";
    out << "f_pll_hz = " << fmt(p.omega_pll / (2 * kPi)) << "\n";
    out << "f_dvc_hz = " << fmt(p.omega_dvc / (2 * kPi)) << "\n";
    out << "f_tvc_hz = " << fmt(p.omega_tvc / (2 * kPi)) << "\n";
    out << "u_g = " << fmt(p.u_g) << "\n";
    out << "x_g = " << fmt(p.x_g) << "\n";
    out << "r_g = " << fmt(p.r_g) << "\n";
    out << "omega_s = " << fmt(p.omega_s) << "\n";
    out << "p_in = " << fmt(p.p_in) << "\n";
    out << "c_dc = " << fmt(p.c_dc) << "\n";
    out << "v_dc_ref = " << fmt(p.v_dc_ref) << "\n";
    out << "k_v = " << fmt(p.k_v) << "\n";
    out << "v_t_ref = " << fmt(p.v_t_ref) << "\n";
    out << "i_q_fixed = " << fmt(p.i_q_fixed) << "\n";
    out << "zeta_pll = " << fmt(p.zeta_pll) << "\n";
    out << "zeta_dvc = " << fmt(p.zeta_dvc) << "\n";
    out << "i_limit = " << fmt(p.limits.i_limit) << "\n";
    out << "v_dc_min = " << fmt(p.limits.v_dc_min) << "\n";
    out << "v_dc_max = " << fmt(p.limits.v_dc_max) << "\n";
    out << "sag_convention = " << sag_convention_name(s.sag_convention) << "\n";
    out << "horizon = " << fmt(s.horizon) << "\n";
    if (s.initial_state) {
        const FullState& st = *s.initial_state;
        out << "initial_state = " << fmt(st.delta) << " " << fmt(st.x_int_pll) << " "
            << fmt(st.i_d) << " " << fmt(st.dv2) << " " << fmt(st.i_q) << "\n";
    }
    for (const Event& ev : s.events) {
        out << "event = " << fmt(ev.time) << " ";
        struct V {
            std::ostringstream& o;
            void operator()(const VoltageSag& e) const { o << "sag " << fmt(e.depth); }
            void operator()(const FaultClear&) const { o << "clear"; }
            void operator()(const PhaseJump& e) const {
                o << "phase-jump " << fmt(e.dphi);
            }
            void operator()(const PowerStep& e) const {
                o << "power-step " << fmt(e.p_new);
            }
            void operator()(const BandwidthSwitch& e) const {
                o << "bandwidth-switch " << fmt(e.bw.omega_pll / (2 * kPi)) << " "
                  << fmt(e.bw.omega_dvc / (2 * kPi)) << " "
                  << fmt(e.bw.omega_tvc ? *e.bw.omega_tvc / (2 * kPi) : 0.0);
            }
            void operator()(const TvcToggle& e) const {
                if (e.on)
                    o << "tvc-on " << fmt(e.omega_tvc);
                else
                    o << "tvc-off";
            }
        };
        std::visit(V{out}, ev.kind);
        out << "\n";
    }
    return out.str();
}

}  // namespace gflstab
