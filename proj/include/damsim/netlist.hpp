#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace damsim {

struct NetlistError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ElementKind { Resistor, Capacitor, Inductor };

struct Element {
    std::string id;
    ElementKind kind;
    double value;  // Ohm, F or H
    std::string node_a, node_b;
};

enum class SourceKind { Sinusoid, Dc, Piecewise };

// One segment of a piecewise-defined drive; from t_start until the next
// segment the source is either a sinusoid or a constant.
struct DriveSegment {
    double t_start_s = 0.0;
    bool is_sinusoid = false;
    double amplitude_v = 0.0;
    double frequency_hz = 0.0;
    double phase_rad = 0.0;
    double level_v = 0.0;
};

struct Source {
    std::string id;
    SourceKind kind = SourceKind::Sinusoid;
    double amplitude_v = 0.0;
    double frequency_hz = 0.0;
    double phase_rad = 0.0;
    double dc_level_v = 0.0;
    std::vector<DriveSegment> segments;  // Piecewise only
    std::string node_pos, node_neg;
    double series_resistance_ohm = 0.0;
};

enum class SwitchKind { Spst, Spdt };

struct Switch {
    std::string id;
    SwitchKind kind;
    std::vector<std::string> nodes;  // SPST: {a, b}; SPDT: {pole, throw1, throw2}
    double r_on_ohm;
    double r_off_ohm;
    double c_parallel_f;
};

struct Probe {
    enum Kind { NodeVoltage, ElementVoltage, ElementCurrent };
    std::string name;
    Kind kind;
    std::string target;  // node name or element id
};

// SPST: 0 = OFF, 1 = ON.  SPDT: 1 or 2 = closed throw (the other is open).
using SwitchConfiguration = std::map<std::string, int>;

struct Netlist {
    std::vector<Element> elements;
    std::vector<Source> sources;
    std::vector<Switch> switches;
    std::vector<Probe> probes;
    std::string ground = "gnd";

    const Element* find_element(const std::string& id) const;
    const Source* find_source(const std::string& id) const;
    const Probe* find_probe(const std::string& name) const;

    // Structural checks: declared nodes, positive values, r_off > r_on,
    // unique ids. Connectivity is checked per-configuration at assembly.
    void validate() const;
};

// Every switch in its listed "default" state: SPST ON, SPDT throw 1.
SwitchConfiguration default_configuration(const Netlist& n);

// Checks that `config` covers every switch id exactly once with a legal
// position; throws NetlistError otherwise.
void check_configuration(const Netlist& n, const SwitchConfiguration& config);

// Parses the structured netlist text format:
//
//   [elements]
//   Lm  inductor  1750nH  n1 ant
//   [sources]
//   vcw sinusoid amplitude=1V freq=28.38MHz phase=0rad nodes=src gnd rs=0Ohm
//   [switches]
//   S1 spst nodes=src n1 r_on=5Ohm r_off=27MOhm c_par=4pF
//   [probes]
//   v_a   node ant
//   v_rad elem R
//
// '#' starts a comment. Unknown sections or malformed lines are errors.
Netlist parse_netlist(const std::string& text);
Netlist load_netlist(const std::string& path);

}  // namespace damsim
