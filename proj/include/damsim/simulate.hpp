#pragma once

#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "damsim/statespace.hpp"

namespace damsim {

struct ScheduleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ProbeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Waveform {
    std::string label;
    double t0_s = 0.0;
    double dt_s = 0.0;
    std::vector<double> samples;

    double time_at(size_t i) const { return t0_s + dt_s * static_cast<double>(i); }
};

struct SwitchEvent {
    double t_s;
    SwitchConfiguration config;
};

struct SwitchSchedule {
    SwitchConfiguration initial;
    std::vector<SwitchEvent> events;  // strictly increasing times
};

// Time-varying drive for the netlist sources. A phase step at t applies to a
// sinusoid source from that instant on; piecewise sources carry their own
// segments in the netlist.
struct PhaseStep {
    double t_s;
    double phase_rad;
};

struct Drives {
    // source id -> phase steps (sinusoid sources only); absent = netlist phase
    std::map<std::string, std::vector<PhaseStep>> phase_tracks;
    // source id -> amplitude/level override (absent = netlist value)
    std::map<std::string, double> level_overrides;
};

struct PhasorSolution {
    std::vector<std::complex<double>> states;  // per state label
    std::vector<std::complex<double>> probes;  // per probe name
    double frequency_hz = 0.0;

    std::complex<double> probe(const StateSpaceModel& m, const std::string& name) const;
};

// Steady-state response of one configuration to a single sinusoid source with
// the given amplitude at its netlist frequency (all other sources zero).
PhasorSolution steady_state_phasor(const StateSpaceModel& m, const std::string& source_id,
                                   double amplitude_v, double frequency_hz);

// Instants in [t0, t1) where A*cos(w t + phase(phasor) + source_phase) peaks.
std::vector<double> peak_times(std::complex<double> va_phasor, double source_phase_rad,
                               double frequency_hz, double t0_s, double t1_s);

struct SimulationResult {
    std::vector<Waveform> waveforms;  // one per requested probe
    CircuitState final_state;
    Eigen::VectorXd final_x;
};

// Piecewise-exact simulation: within each inter-event segment the state and
// the source oscillators are advanced by the matrix exponential of the
// augmented system; probes are evaluated analytically at the sample instants.
// Initial state defaults to zero; pass `initial` keyed like the initial
// configuration's labels to override.
SimulationResult simulate(const Netlist& net, const SwitchSchedule& schedule,
                          const Drives& drives, double t_end_s, double sample_interval_s,
                          const std::vector<std::string>& probe_names,
                          const std::optional<CircuitState>& initial = std::nullopt);

// Total stored energy 1/2 sum(C v^2) + 1/2 sum(L i^2) for a state vector.
double stored_energy(const Netlist& net, const StateSpaceModel& m, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& u);

}  // namespace damsim
