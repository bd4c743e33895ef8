#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gflstab/model.hpp"
#include "gflstab/params.hpp"

namespace gflstab {

// How a sag depth maps onto the grid voltage: DropTo sets U_g = depth * nominal,
// DropBy sets U_g = (1 - depth) * nominal. DropTo is the default reading; the
// field exists because published sag figures are quoted both ways.
enum class SagConvention { DropTo, DropBy };

const char* sag_convention_name(SagConvention c);

struct VoltageSag {
    double depth = 0;  // pu, in (0, 1]
};
struct FaultClear {};
struct PhaseJump {
    double dphi = 0;  // rad, in (-pi, pi], added to delta
};
struct PowerStep {
    double p_new = 0;  // pu
};
struct BandwidthSwitch {
    BandwidthSpec bw;  // gains recomputed from the rule; states carry over
};
struct TvcToggle {
    bool on = false;
    double omega_tvc = 0;  // rad/s, used when turning on
};

using EventKind =
    std::variant<VoltageSag, FaultClear, PhaseJump, PowerStep, BandwidthSwitch, TvcToggle>;

struct Event {
    double time = 0;  // s
    EventKind kind;
    std::string label() const;  // e.g. "sag(0.9)", "clear"
};

struct Scenario {
    std::string name;
    SystemParams params;  // pre-event parameter set, bandwidths included
    SagConvention sag_convention = SagConvention::DropTo;
    std::vector<Event> events;  // times non-decreasing
    double horizon = 25;        // s
    // When set, replaces the pre-event equilibration as the initial state.
    std::optional<FullState> initial_state;

    // Enforces: event times non-decreasing, horizon >= last event time,
    // depth in (0,1], dphi in (-pi,pi]. Throws std::invalid_argument.
    void validate() const;
};

// Applies one event to the running (state, params) pair. u_g_nominal is the
// pre-fault grid voltage FaultClear restores. Phase jumps displace delta;
// everything else only touches params.
void apply_event(const Event& ev, FullState& state, SystemParams& params,
                 SagConvention convention, double u_g_nominal);

// Named catalog covering the voltage-sag, phase-jump, power-step, restart and
// runtime-bandwidth-switch experiments.
const std::vector<Scenario>& builtin_scenarios();

// nullptr when the name is not in the catalog.
const Scenario* find_scenario(const std::string& name);

// Copy of `base` with the single FaultClear event moved to t_clear. Throws
// std::invalid_argument when the scenario has no or multiple FaultClear events
// or the new time breaks event ordering.
Scenario with_clear_time(const Scenario& base, double t_clear);

struct ScenarioParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Key-value text format, one scenario per document. Unknown keys are
// rejected; errors carry the offending line number.
Scenario parse_scenario(const std::string& text, const std::string& origin = "scenario");
Scenario load_scenario_file(const std::string& path);
std::string serialize_scenario(const Scenario& s);

}  // namespace gflstab
