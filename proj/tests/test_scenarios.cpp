#include <doctest.h>

#include <cmath>
#include <set>
#include <variant>

#include "gflstab/scenarios.hpp"

using namespace gflstab;

TEST_CASE("builtin catalog is populated, valid and uniquely named") {
    const auto& cat = builtin_scenarios();
    CHECK(cat.size() >= 14);
    std::set<std::string> names;
    for (const Scenario& s : cat) {
        CHECK_NOTHROW(s.validate());
        CHECK(names.insert(s.name).second);
    }
    CHECK(find_scenario("steady") != nullptr);
    CHECK(find_scenario("sag09-pllfast") != nullptr);
    CHECK(find_scenario("restart") != nullptr);
    CHECK(find_scenario("no-such-scenario") == nullptr);
}

TEST_CASE("event application") {
    SystemParams base = SystemParams::make_default(BandwidthSpec::from_hz(15, 2));
    const double nominal = base.u_g;

    SUBCASE("sag, drop-to reading") {
        SystemParams p = base;
        FullState st;
        apply_event({0, VoltageSag{0.9}}, st, p, SagConvention::DropTo, nominal);
        CHECK(p.u_g == doctest::Approx(0.9 * nominal).epsilon(1e-15));
        apply_event({0.2, FaultClear{}}, st, p, SagConvention::DropTo, nominal);
        CHECK(p.u_g == nominal);
    }
    SUBCASE("sag, drop-by reading") {
        SystemParams p = base;
        FullState st;
        apply_event({0, VoltageSag{0.9}}, st, p, SagConvention::DropBy, nominal);
        CHECK(p.u_g == doctest::Approx(0.1 * nominal).epsilon(1e-12));
    }
    SUBCASE("phase jump displaces the angle only") {
        SystemParams p = base;
        FullState st;
        st.delta = 0.3;
        st.i_d = 1.2;
        apply_event({0, PhaseJump{0.5}}, st, p, SagConvention::DropTo, nominal);
        CHECK(st.delta == doctest::Approx(0.8).epsilon(1e-15));
        CHECK(st.i_d == 1.2);
        CHECK(p.u_g == nominal);
    }
    SUBCASE("power step") {
        SystemParams p = base;
        FullState st;
        apply_event({0, PowerStep{0.45}}, st, p, SagConvention::DropTo, nominal);
        CHECK(p.p_in == 0.45);
    }
    SUBCASE("bandwidth switch recomputes gains, keeps states") {
        SystemParams p = base;
        FullState st;
        st.x_int_pll = 7.0;
        apply_event({0, BandwidthSwitch{BandwidthSpec::from_hz(0.4, 2)}}, st, p,
                    SagConvention::DropTo, nominal);
        CHECK(p.omega_pll == doctest::Approx(2 * kPi * 0.4).epsilon(1e-15));
        CHECK(p.k_p_pll == doctest::Approx(p.omega_pll).epsilon(1e-15));
        CHECK(st.x_int_pll == 7.0);
    }
    SUBCASE("voltage-control toggle") {
        SystemParams p = base;
        FullState st;
        apply_event({0, TvcToggle{true, 2 * kPi * 20}}, st, p, SagConvention::DropTo,
                    nominal);
        CHECK(p.omega_tvc == doctest::Approx(2 * kPi * 20).epsilon(1e-15));
        apply_event({1, TvcToggle{false, 0}}, st, p, SagConvention::DropTo, nominal);
        CHECK(p.omega_tvc == 0.0);
    }
}

TEST_CASE("event labels") {
    CHECK(Event{0, VoltageSag{0.9}}.label() == "sag(0.9)");
    CHECK(Event{0, FaultClear{}}.label() == "clear");
}

TEST_CASE("clear-time rescheduling") {
    const Scenario& base = *find_scenario("sag09-pllfast");
    const Scenario moved = with_clear_time(base, 0.25);
    REQUIRE(moved.events.size() == base.events.size());
    bool found = false;
    for (const Event& ev : moved.events)
        if (std::holds_alternative<FaultClear>(ev.kind)) {
            found = true;
            CHECK(ev.time == 0.25);
        }
    CHECK(found);
    for (std::size_t i = 1; i < moved.events.size(); ++i)
        CHECK(moved.events[i - 1].time <= moved.events[i].time);

    // No clear event at all, clear beyond the horizon, ordering violations.
    CHECK_THROWS_AS(with_clear_time(*find_scenario("steady"), 0.1),
                    std::invalid_argument);
    CHECK_THROWS_AS(with_clear_time(base, 1e9), std::invalid_argument);
    CHECK_THROWS_AS(with_clear_time(base, -0.1), std::invalid_argument);
}

TEST_CASE("scenario validation rejects malformed inputs") {
    Scenario s;
    s.name = "t";
    s.params = SystemParams::make_default(BandwidthSpec::from_hz(15, 2));
    s.horizon = 10;

    s.events = {{0.5, VoltageSag{0.9}}, {0.2, FaultClear{}}};
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);

    s.events = {{0.0, VoltageSag{0.9}}, {20.0, FaultClear{}}};
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);

    s.events = {{0.0, VoltageSag{0.0}}};
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s.events = {{0.0, VoltageSag{1.5}}};
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);

    s.events = {{0.0, PhaseJump{4.0}}};
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);

    s.events = {{0.0, VoltageSag{0.9}}, {0.2, FaultClear{}}};
    CHECK_NOTHROW(s.validate());
}

TEST_CASE("serialize/parse round-trip is the identity on the catalog") {
    for (const Scenario& s : builtin_scenarios()) {
        const std::string once = serialize_scenario(s);
        const Scenario back = parse_scenario(once, s.name);
        CHECK(serialize_scenario(back) == once);
        CHECK(back.name == s.name);
        CHECK(back.events.size() == s.events.size());
        CHECK(back.horizon == s.horizon);
        CHECK(back.params.k_p_pll == s.params.k_p_pll);
        CHECK(back.params.k_i_dvc == s.params.k_i_dvc);
        CHECK(back.initial_state.has_value() == s.initial_state.has_value());
    }
}

TEST_CASE("parsing a handwritten document") {
    const std::string text =
        "# comment line\n"
        "name = demo\n"
        "f_pll_hz = 15\n"
        "f_dvc_hz = 2\n"
        "u_g = 0.95\n"
        "horizon = 12\n"
        "sag_convention = drop-by\n"
        "event = 0 sag 0.4\n"
        "event = 0.3 clear\n"
        "initial_state = 0.1 0 1.0 0 0\n";
    const Scenario s = parse_scenario(text, "demo.scn");
    CHECK(s.name == "demo");
    CHECK(s.params.u_g == 0.95);
    CHECK(s.sag_convention == SagConvention::DropBy);
    CHECK(s.horizon == 12);
    REQUIRE(s.events.size() == 2);
    CHECK(std::get<VoltageSag>(s.events[0].kind).depth == 0.4);
    REQUIRE(s.initial_state.has_value());
    CHECK(s.initial_state->i_d == 1.0);
}

TEST_CASE("parser gain rule honors scalar overrides") {
    const Scenario s = parse_scenario(
        "name = t\nf_pll_hz = 2\nf_dvc_hz = 2\nc_dc = 25\n", "t");
    CHECK(s.params.k_p_dvc == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("parse errors carry the origin and line number") {
    auto message_of = [](const std::string& text) {
        try {
            parse_scenario(text, "bad.scn");
        } catch (const ScenarioParseError& e) {
            return std::string(e.what());
        }
        return std::string();
    };

    std::string m = message_of("name = t\nu_g = oops\n");
    CHECK(m.find("bad.scn:2") != std::string::npos);

    m = message_of("name = t\nnot_a_key = 1\n");
    CHECK(m.find("unknown key") != std::string::npos);

    m = message_of("name = t\njust some words\n");
    CHECK(m.find("bad.scn:2") != std::string::npos);

    m = message_of("name = t\nevent = 0 sag\n");
    CHECK(m.find("argument") != std::string::npos);

    m = message_of("name = t\nevent = 0 explode 1\n");
    CHECK(m.find("unknown event kind") != std::string::npos);

    CHECK_THROWS_AS(load_scenario_file("/no/such/file.scn"), ScenarioParseError);
}
