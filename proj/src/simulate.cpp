#include "damsim/simulate.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace damsim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string config_key(const SwitchConfiguration& c) {
    std::ostringstream os;
    for (const auto& [k, v] : c) os << k << '=' << v << ';';
    return os.str();
}

struct ActiveDrive {
    bool is_sin = false;
    double amplitude = 0.0;
    double omega = 0.0;
    double phase = 0.0;
    double level = 0.0;
};

ActiveDrive resolve_drive(const Source& s, const Drives& drives, double t) {
    ActiveDrive d;
    auto level_of = [&](double v) {
        auto it = drives.level_overrides.find(s.id);
        return it != drives.level_overrides.end() ? it->second : v;
    };
    if (s.kind == SourceKind::Dc) {
        d.level = level_of(s.dc_level_v);
        return d;
    }
    if (s.kind == SourceKind::Piecewise) {
        const DriveSegment* seg = &s.segments.front();
        for (const auto& g : s.segments)
            if (g.t_start_s <= t + 1e-18) seg = &g;
        if (seg->is_sinusoid) {
            d.is_sin = true;
            d.amplitude = seg->amplitude_v;
            d.omega = kTwoPi * seg->frequency_hz;
            d.phase = seg->phase_rad;
        } else {
            d.level = seg->level_v;
        }
        return d;
    }
    d.is_sin = true;
    d.amplitude = level_of(s.amplitude_v);
    d.omega = kTwoPi * s.frequency_hz;
    d.phase = s.phase_rad;
    auto it = drives.phase_tracks.find(s.id);
    if (it != drives.phase_tracks.end()) {
        for (const auto& st : it->second)
            if (st.t_s <= t + 1e-18) d.phase = st.phase_rad;
    }
    return d;
}

// State + source-oscillator augmentation for one configuration and one drive
// structure (per-source kind and frequency). Amplitudes and phases live in
// the auxiliary initial values, so the exponential cache stays valid across
// phase jumps.
struct AugSystem {
    const StateSpaceModel* model = nullptr;
    Eigen::MatrixXd Aa;
    Eigen::MatrixXd Ca;               // probe rows over augmented state
    std::vector<int> aux_start;       // per source
    std::vector<ActiveDrive> shape;   // is_sin/omega define the structure
    int n = 0, na = 0;
    std::map<long long, Eigen::MatrixXd> exp_cache;

    void build(const StateSpaceModel& m, const std::vector<ActiveDrive>& drv) {
        model = &m;
        shape = drv;
        n = m.order();
        na = 0;
        aux_start.clear();
        for (const auto& d : drv) {
            aux_start.push_back(n + na);
            na += d.is_sin ? 2 : 1;
        }
        Aa = Eigen::MatrixXd::Zero(n + na, n + na);
        Aa.topLeftCorner(n, n) = m.A;
        for (size_t si = 0; si < drv.size(); ++si) {
            int j = aux_start[si];
            if (drv[si].is_sin) {
                double w = drv[si].omega;
                Aa.block(0, j, n, 1) += m.B.col(si);
                Aa.block(0, j + 1, n, 1) += m.Bdot.col(si) * (-w);
                Aa(j, j + 1) = -w;
                Aa(j + 1, j) = w;
            } else {
                Aa.block(0, j, n, 1) += m.B.col(si);
            }
        }
        Ca = Eigen::MatrixXd::Zero(m.C.rows(), n + na);
        Ca.leftCols(n) = m.C;
        for (size_t si = 0; si < drv.size(); ++si) {
            int j = aux_start[si];
            Ca.col(j) += m.D.col(si);
            if (drv[si].is_sin) Ca.col(j + 1) += m.Ddot.col(si) * (-drv[si].omega);
        }
    }

    Eigen::VectorXd aux_at(double t, const std::vector<ActiveDrive>& drv) const {
        Eigen::VectorXd a(na);
        int j = 0;
        for (const auto& d : drv) {
            if (d.is_sin) {
                a(j++) = d.amplitude * std::cos(d.omega * t + d.phase);
                a(j++) = d.amplitude * std::sin(d.omega * t + d.phase);
            } else {
                a(j++) = d.level;
            }
        }
        return a;
    }

    Eigen::VectorXd u_at(double t, const std::vector<ActiveDrive>& drv) const {
        Eigen::VectorXd u(drv.size());
        for (size_t i = 0; i < drv.size(); ++i)
            u(i) = drv[i].is_sin
                       ? drv[i].amplitude * std::cos(drv[i].omega * t + drv[i].phase)
                       : drv[i].level;
        return u;
    }

    const Eigen::MatrixXd& exp_for(double dt) {
        long long key = llround(dt * 1e18);
        auto it = exp_cache.find(key);
        if (it != exp_cache.end()) return it->second;
        Eigen::MatrixXd E = (Aa * dt).exp();
        return exp_cache.emplace(key, std::move(E)).first->second;
    }
};

std::string shape_key(const std::vector<ActiveDrive>& drv) {
    std::ostringstream os;
    for (const auto& d : drv) os << (d.is_sin ? 's' : 'd') << ':' << d.omega << ';';
    return os.str();
}

}  // namespace

std::complex<double> PhasorSolution::probe(const StateSpaceModel& m,
                                           const std::string& name) const {
    for (size_t i = 0; i < m.outputs.size(); ++i)
        if (m.outputs[i] == name) return probes[i];
    throw ProbeError("unknown probe '" + name + "'");
}

PhasorSolution steady_state_phasor(const StateSpaceModel& m, const std::string& source_id,
                                   double amplitude_v, double frequency_hz) {
    if (!(frequency_hz > 0.0)) throw NumericalError("phasor analysis needs frequency > 0");
    int si = -1;
    for (size_t i = 0; i < m.inputs.size(); ++i)
        if (m.inputs[i] == source_id) si = static_cast<int>(i);
    if (si < 0) throw NetlistError("unknown source '" + source_id + "'");
    const double w = kTwoPi * frequency_hz;
    const int n = m.order();
    Eigen::MatrixXcd lhs =
        std::complex<double>(0, w) * Eigen::MatrixXcd::Identity(n, n) - m.A.cast<std::complex<double>>();
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(lhs);
    if (!lu.isInvertible())
        throw NumericalError("singular system at drive frequency " +
                             std::to_string(frequency_hz) + " Hz");
    Eigen::VectorXcd rhs =
        (m.B.col(si) + std::complex<double>(0, w) * m.Bdot.col(si)) * amplitude_v;
    Eigen::VectorXcd x = lu.solve(rhs);
    PhasorSolution sol;
    sol.frequency_hz = frequency_hz;
    sol.states.assign(x.data(), x.data() + n);
    Eigen::VectorXcd y = m.C.cast<std::complex<double>>() * x +
                         (m.D.col(si) + std::complex<double>(0, w) * m.Ddot.col(si)) *
                             amplitude_v;
    sol.probes.assign(y.data(), y.data() + y.size());
    return sol;
}

std::vector<double> peak_times(std::complex<double> va_phasor, double source_phase_rad,
                               double frequency_hz, double t0_s, double t1_s) {
    if (std::abs(va_phasor) == 0.0)
        throw NumericalError("zero-amplitude phasor has no peaks");
    const double w = kTwoPi * frequency_hz;
    const double phi = std::arg(va_phasor) + source_phase_rad;
    std::vector<double> out;
    long long k0 = static_cast<long long>(std::ceil((w * t0_s + phi) / kTwoPi - 1e-12));
    for (long long k = k0;; ++k) {
        double t = (kTwoPi * static_cast<double>(k) - phi) / w;
        if (t >= t1_s) break;
        if (t >= t0_s) out.push_back(t);
    }
    return out;
}

SimulationResult simulate(const Netlist& net, const SwitchSchedule& schedule,
                          const Drives& drives, double t_end_s, double sample_interval_s,
                          const std::vector<std::string>& probe_names,
                          const std::optional<CircuitState>& initial) {
    if (!(sample_interval_s > 0.0)) throw ScheduleError("sample interval must be > 0");
    for (size_t i = 0; i < schedule.events.size(); ++i) {
        double t = schedule.events[i].t_s;
        if (t < 0.0 || t > t_end_s)
            throw ScheduleError("switch event outside [0, t_end]");
        if (i > 0 && !(t > schedule.events[i - 1].t_s)) {
            if (t == schedule.events[i - 1].t_s)
                throw ScheduleError("two switch events at identical time " +
                                    std::to_string(t));
            throw ScheduleError("switch event times must be strictly increasing");
        }
    }

    // breakpoints: config changes plus any phase step (oscillator re-pin)
    struct Break {
        double t;
        const SwitchConfiguration* config;  // nullptr = keep current
    };
    std::vector<Break> breaks;
    for (const auto& ev : schedule.events) breaks.push_back({ev.t_s, &ev.config});
    for (const auto& [src, steps] : drives.phase_tracks)
        for (const auto& st : steps)
            if (st.t_s > 0.0 && st.t_s < t_end_s) breaks.push_back({st.t_s, nullptr});
    std::sort(breaks.begin(), breaks.end(), [](const Break& a, const Break& b) {
        return a.t < b.t || (a.t == b.t && a.config == nullptr && b.config != nullptr);
    });

    std::map<std::string, StateSpaceModel> model_cache;
    auto model_for = [&](const SwitchConfiguration& c) -> StateSpaceModel& {
        std::string key = config_key(c);
        auto it = model_cache.find(key);
        if (it == model_cache.end()) it = model_cache.emplace(key, assemble(net, c)).first;
        return it->second;
    };

    std::vector<int> probe_idx;
    {
        StateSpaceModel& m0 = model_for(schedule.initial);
        for (const auto& name : probe_names) {
            auto it = std::find(m0.outputs.begin(), m0.outputs.end(), name);
            if (it == m0.outputs.end())
                throw ProbeError("requested probe '" + name + "' is not declared");
            probe_idx.push_back(static_cast<int>(it - m0.outputs.begin()));
        }
    }

    const size_t nsamp = static_cast<size_t>(std::floor(t_end_s / sample_interval_s)) + 1;
    SimulationResult res;
    for (const auto& name : probe_names) {
        Waveform w;
        w.label = name;
        w.dt_s = sample_interval_s;
        w.samples.resize(nsamp, 0.0);
        res.waveforms.push_back(std::move(w));
    }

    std::map<std::string, AugSystem> aug_cache;

    SwitchConfiguration cur_config = schedule.initial;
    StateSpaceModel* model = &model_for(cur_config);
    std::vector<ActiveDrive> drv;
    for (const auto& s : net.sources) drv.push_back(resolve_drive(s, drives, 0.0));

    auto aug_for = [&](const StateSpaceModel& m, const std::vector<ActiveDrive>& d)
        -> AugSystem& {
        std::string key = config_key(cur_config) + '|' + shape_key(d);
        auto it = aug_cache.find(key);
        if (it == aug_cache.end()) {
            it = aug_cache.emplace(key, AugSystem{}).first;
            it->second.build(m, d);
        }
        return it->second;
    };

    Eigen::VectorXd x;
    if (initial) {
        x = vector_from_state(*model, *initial);
    } else {
        x = Eigen::VectorXd::Zero(model->order());
    }

    double t_seg = 0.0;
    size_t next_break = 0;
    size_t k = 0;  // next sample index to fill
    while (t_seg <= t_end_s) {
        double t_next = t_end_s;
        const SwitchConfiguration* cfg_change = nullptr;
        if (next_break < breaks.size()) {
            t_next = std::min(t_end_s, breaks[next_break].t);
            cfg_change = breaks[next_break].config;
        }
        AugSystem& aug = aug_for(*model, drv);
        Eigen::VectorXd z(aug.n + aug.na);
        z.head(aug.n) = x;
        z.tail(aug.na) = aug.aux_at(t_seg, drv);
        double tz = t_seg;
        while (k < nsamp && static_cast<double>(k) * sample_interval_s <= t_next + 1e-18) {
            double ts = static_cast<double>(k) * sample_interval_s;
            double tau = ts - tz;
            if (tau > 1e-18) {
                if (std::abs(tau - sample_interval_s) < 1e-18)
                    z = aug.exp_for(sample_interval_s) * z;
                else
                    z = aug.exp_for(tau) * z;
                tz = ts;
            }
            Eigen::VectorXd y = aug.Ca * z;
            for (size_t pi = 0; pi < probe_idx.size(); ++pi)
                res.waveforms[pi].samples[k] = y(probe_idx[pi]);
            ++k;
        }
        if (t_next - tz > 1e-18) z = aug.exp_for(t_next - tz) * z;
        x = z.head(aug.n);
        if (t_next >= t_end_s && next_break >= breaks.size()) {
            t_seg = t_next;
            break;
        }
        // apply the break: refresh drives, switch config if present
        double t_ev = t_next;
        std::vector<ActiveDrive> drv_new;
        for (const auto& s : net.sources) drv_new.push_back(resolve_drive(s, drives, t_ev));
        if (cfg_change) {
            StateSpaceModel* next_model = &model_for(*cfg_change);
            Eigen::VectorXd u_ev(drv_new.size());
            for (size_t i = 0; i < drv_new.size(); ++i) {
                const auto& d = drv_new[i];
                u_ev(i) = d.is_sin ? d.amplitude * std::cos(d.omega * t_ev + d.phase)
                                   : d.level;
            }
            x = carry_state(*model, x, *next_model, u_ev);
            cur_config = *cfg_change;
            model = next_model;
        }
        drv = std::move(drv_new);
        ++next_break;
        t_seg = t_ev;
        if (t_seg >= t_end_s && k >= nsamp) break;
    }

    res.final_x = x;
    res.final_state = state_from_vector(*model, x, t_end_s);
    return res;
}

double stored_energy(const Netlist& net, const StateSpaceModel& m, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& u) {
    double e = 0.0;
    for (const auto& [id, cm] : m.cap_members) {
        double v = cm.sign * x(cm.state) + cm.dc_offset.head(u.size()) * u;
        e += 0.5 * cm.capacitance_f * v * v;
    }
    for (const auto& [id, sidx] : m.inductor_state) {
        const Element* el = net.find_element(id);
        if (!el) continue;
        e += 0.5 * el->value * x(sidx) * x(sidx);
    }
    return e;
}

}  // namespace damsim
