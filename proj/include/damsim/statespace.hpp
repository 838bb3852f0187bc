#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "damsim/netlist.hpp"

namespace damsim {

struct TopologyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConnectivityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class StateRole { CapacitorVoltage, InductorCurrent };

struct StateInfo {
    std::string label;                 // member ids joined with '+'
    StateRole role;
    std::vector<std::string> members;  // physical element ids backing this state
};

// Recovery data for one physical capacitor inside a (possibly merged) state:
// v_elem = sign * x[state] + dc_offset . u
struct CapMember {
    int state = -1;
    double sign = 1.0;
    double capacitance_f = 0.0;
    Eigen::RowVectorXd dc_offset;
};

// Explicit LTI realization of one switch configuration:
//   x' = A x + B u + Bdot u'
//   y  = C x + D u + Ddot u'
// u is the vector of source values (order = `inputs`), y the probe vector.
struct StateSpaceModel {
    Eigen::MatrixXd A, B, Bdot;
    Eigen::MatrixXd C, D, Ddot;
    std::vector<StateInfo> states;
    std::vector<std::string> inputs;   // source ids
    std::vector<std::string> outputs;  // probe names
    std::map<std::string, CapMember> cap_members;
    std::map<std::string, int> inductor_state;  // inductor id -> state index

    int order() const { return static_cast<int>(states.size()); }
    int state_index(const std::string& label) const;
};

// Additional synthetic inputs used internally by the Laplace analysis: a unit
// current injected into a node (appended after the netlist sources in `u`).
struct CurrentInjection {
    std::string node;
};

// Builds the minimal-order model for one switch configuration. Switches are
// replaced by r_on when closed and by r_off || c_parallel when open.
// Capacitors that are parallel after contracting ideal (0-ohm) source branches
// merge into a single state; other capacitor loops and inductor cutsets raise
// TopologyError naming the elements involved. A subgraph with no path to
// ground raises ConnectivityError.
StateSpaceModel assemble(const Netlist& net, const SwitchConfiguration& config,
                         const std::vector<CurrentInjection>& injections = {});

// Per-element state snapshot; keys match the model's state labels.
struct CircuitState {
    double t = 0.0;
    std::map<std::string, double> values;
};

CircuitState state_from_vector(const StateSpaceModel& m, const Eigen::VectorXd& x, double t);
Eigen::VectorXd vector_from_state(const StateSpaceModel& m, const CircuitState& s);

// Builds a state vector from per-physical-element values (capacitor voltages
// and inductor currents); members of a merged group must agree once source
// offsets are removed (u is needed for that). Missing elements default to 0.
Eigen::VectorXd state_vector_from_elements(const StateSpaceModel& m,
                                           const std::map<std::string, double>& values,
                                           const Eigen::VectorXd& u);

// Carries a state across a switch event: persisting capacitor voltages and
// inductor currents map by element id; merged groups take the charge-weighted
// value of surviving members; states with no predecessor start at 0.
Eigen::VectorXd carry_state(const StateSpaceModel& from, const Eigen::VectorXd& x_from,
                            const StateSpaceModel& to, const Eigen::VectorXd& u_at_event);

}  // namespace damsim
