#include "damsim/netlist.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "damsim/units.hpp"

namespace damsim {

namespace {

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

// splits "key=value"; returns empty key when no '='
std::pair<std::string, std::string> keyval(const std::string& tok) {
    auto p = tok.find('=');
    if (p == std::string::npos) return {"", tok};
    return {tok.substr(0, p), tok.substr(p + 1)};
}

}  // namespace

const Element* Netlist::find_element(const std::string& id) const {
    for (const auto& e : elements)
        if (e.id == id) return &e;
    return nullptr;
}

const Source* Netlist::find_source(const std::string& id) const {
    for (const auto& s : sources)
        if (s.id == id) return &s;
    return nullptr;
}

const Probe* Netlist::find_probe(const std::string& name) const {
    for (const auto& p : probes)
        if (p.name == name) return &p;
    return nullptr;
}

void Netlist::validate() const {
    std::set<std::string> ids;
    auto add_id = [&](const std::string& id, const char* what) {
        if (!ids.insert(id).second)
            throw NetlistError(std::string("duplicate ") + what + " id '" + id + "'");
    };
    for (const auto& e : elements) {
        add_id(e.id, "element");
        if (!(e.value > 0.0))
            throw NetlistError("element '" + e.id + "' must have a strictly positive value");
        if (e.node_a == e.node_b)
            throw NetlistError("element '" + e.id + "' connects a node to itself");
    }
    for (const auto& s : sources) {
        add_id(s.id, "source");
        if (s.series_resistance_ohm < 0.0)
            throw NetlistError("source '" + s.id + "' has negative series resistance");
        if (s.kind == SourceKind::Sinusoid && s.frequency_hz <= 0.0)
            throw NetlistError("source '" + s.id + "' needs a positive frequency");
        if (s.kind == SourceKind::Piecewise) {
            if (s.segments.empty())
                throw NetlistError("piecewise source '" + s.id + "' has no segments");
            for (size_t i = 1; i < s.segments.size(); ++i)
                if (!(s.segments[i].t_start_s > s.segments[i - 1].t_start_s))
                    throw NetlistError("piecewise source '" + s.id +
                                       "' segment times must increase");
        }
    }
    for (const auto& sw : switches) {
        add_id(sw.id, "switch");
        size_t need = sw.kind == SwitchKind::Spst ? 2 : 3;
        if (sw.nodes.size() != need)
            throw NetlistError("switch '" + sw.id + "' needs " + std::to_string(need) +
                               " nodes");
        if (!(sw.r_on_ohm > 0.0) || !(sw.r_off_ohm > 0.0) || sw.c_parallel_f < 0.0)
            throw NetlistError("switch '" + sw.id + "' has non-positive resistance values");
        if (!(sw.r_off_ohm > sw.r_on_ohm))
            throw NetlistError("switch '" + sw.id + "' requires r_off > r_on");
    }
    std::set<std::string> declared;
    declared.insert(ground);
    for (const auto& e : elements) {
        declared.insert(e.node_a);
        declared.insert(e.node_b);
    }
    for (const auto& s : sources) {
        declared.insert(s.node_pos);
        declared.insert(s.node_neg);
    }
    for (const auto& sw : switches)
        for (const auto& n : sw.nodes) declared.insert(n);
    for (const auto& p : probes) {
        if (p.kind == Probe::NodeVoltage) {
            if (!declared.count(p.target))
                throw NetlistError("probe '" + p.name + "' references undeclared node '" +
                                   p.target + "'");
        } else if (!find_element(p.target)) {
            throw NetlistError("probe '" + p.name + "' references unknown element '" +
                               p.target + "'");
        }
    }
}

SwitchConfiguration default_configuration(const Netlist& n) {
    SwitchConfiguration c;
    for (const auto& sw : n.switches) c[sw.id] = 1;
    return c;
}

void check_configuration(const Netlist& n, const SwitchConfiguration& config) {
    if (config.size() != n.switches.size())
        throw NetlistError("switch configuration must cover every switch exactly once");
    for (const auto& sw : n.switches) {
        auto it = config.find(sw.id);
        if (it == config.end())
            throw NetlistError("configuration is missing switch '" + sw.id + "'");
        int pos = it->second;
        if (sw.kind == SwitchKind::Spst && pos != 0 && pos != 1)
            throw NetlistError("SPST switch '" + sw.id + "' position must be 0 or 1");
        if (sw.kind == SwitchKind::Spdt && pos != 1 && pos != 2)
            throw NetlistError("SPDT switch '" + sw.id + "' position must be 1 or 2");
    }
}

Netlist parse_netlist(const std::string& text) {
    Netlist net;
    std::istringstream is(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto toks = tokenize(line);
        if (toks.empty()) continue;
        auto err = [&](const std::string& msg) {
            throw NetlistError("netlist line " + std::to_string(lineno) + ": " + msg);
        };
        if (toks[0].front() == '[') {
            if (toks.size() != 1 || toks[0].back() != ']') err("malformed section header");
            section = toks[0].substr(1, toks[0].size() - 2);
            if (section != "elements" && section != "sources" && section != "switches" &&
                section != "probes" && section != "options")
                err("unknown section '" + section + "'");
            continue;
        }
        if (section == "elements") {
            if (toks.size() != 5) err("element needs: id kind value node_a node_b");
            Element e;
            e.id = toks[0];
            if (toks[1] == "resistor")
                e.kind = ElementKind::Resistor, e.value = parse_quantity(toks[2], "Ohm");
            else if (toks[1] == "capacitor")
                e.kind = ElementKind::Capacitor, e.value = parse_quantity(toks[2], "F");
            else if (toks[1] == "inductor")
                e.kind = ElementKind::Inductor, e.value = parse_quantity(toks[2], "H");
            else
                err("unknown element kind '" + toks[1] + "'");
            e.node_a = toks[3];
            e.node_b = toks[4];
            net.elements.push_back(e);
        } else if (section == "sources") {
            if (toks.size() < 3) err("source needs: id kind key=value...");
            Source s;
            s.id = toks[0];
            if (toks[1] == "sinusoid")
                s.kind = SourceKind::Sinusoid;
            else if (toks[1] == "dc")
                s.kind = SourceKind::Dc;
            else if (toks[1] == "piecewise")
                s.kind = SourceKind::Piecewise;
            else
                err("unknown source kind '" + toks[1] + "'");
            for (size_t i = 2; i < toks.size(); ++i) {
                auto [k, v] = keyval(toks[i]);
                if (k == "amplitude")
                    s.amplitude_v = parse_quantity(v, "V");
                else if (k == "freq")
                    s.frequency_hz = parse_quantity(v, "Hz");
                else if (k == "phase")
                    s.phase_rad = parse_quantity(v, "rad");
                else if (k == "level")
                    s.dc_level_v = parse_quantity(v, "V");
                else if (k == "nodes") {
                    s.node_pos = v;
                    if (i + 1 >= toks.size()) err("nodes= needs two node names");
                    s.node_neg = toks[++i];
                } else if (k == "rs")
                    s.series_resistance_ohm = parse_quantity(v, "Ohm");
                else if (k == "segments") {
                    // t:(sin amp freq phase | dc level) separated by ';'
                    std::istringstream segs(v);
                    std::string part;
                    while (std::getline(segs, part, ';')) {
                        std::istringstream ps(part);
                        std::string f;
                        std::vector<std::string> fs;
                        while (std::getline(ps, f, ':')) fs.push_back(f);
                        DriveSegment d;
                        if (fs.size() == 5 && fs[1] == "sin") {
                            d.t_start_s = parse_quantity(fs[0], "s");
                            d.is_sinusoid = true;
                            d.amplitude_v = parse_quantity(fs[2], "V");
                            d.frequency_hz = parse_quantity(fs[3], "Hz");
                            d.phase_rad = parse_quantity(fs[4], "rad");
                        } else if (fs.size() == 3 && fs[1] == "dc") {
                            d.t_start_s = parse_quantity(fs[0], "s");
                            d.level_v = parse_quantity(fs[2], "V");
                        } else {
                            err("bad piecewise segment '" + part + "'");
                        }
                        s.segments.push_back(d);
                    }
                } else
                    err("unknown source key '" + k + "'");
            }
            if (s.node_pos.empty()) err("source '" + s.id + "' is missing nodes=");
            net.sources.push_back(s);
        } else if (section == "switches") {
            if (toks.size() < 3) err("switch needs: id kind key=value...");
            Switch sw;
            sw.id = toks[0];
            if (toks[1] == "spst")
                sw.kind = SwitchKind::Spst;
            else if (toks[1] == "spdt")
                sw.kind = SwitchKind::Spdt;
            else
                err("unknown switch kind '" + toks[1] + "'");
            for (size_t i = 2; i < toks.size(); ++i) {
                auto [k, v] = keyval(toks[i]);
                if (k == "nodes") {
                    sw.nodes.push_back(v);
                    size_t extra = sw.kind == SwitchKind::Spst ? 1 : 2;
                    for (size_t j = 0; j < extra; ++j) {
                        if (i + 1 >= toks.size()) err("nodes= needs more node names");
                        sw.nodes.push_back(toks[++i]);
                    }
                } else if (k == "r_on")
                    sw.r_on_ohm = parse_quantity(v, "Ohm");
                else if (k == "r_off")
                    sw.r_off_ohm = parse_quantity(v, "Ohm");
                else if (k == "c_par")
                    sw.c_parallel_f = parse_quantity(v, "F");
                else
                    err("unknown switch key '" + k + "'");
            }
            net.switches.push_back(sw);
        } else if (section == "probes") {
            if (toks.size() != 3) err("probe needs: name kind target");
            Probe p;
            p.name = toks[0];
            if (toks[1] == "node")
                p.kind = Probe::NodeVoltage;
            else if (toks[1] == "elem")
                p.kind = Probe::ElementVoltage;
            else if (toks[1] == "current")
                p.kind = Probe::ElementCurrent;
            else
                err("unknown probe kind '" + toks[1] + "'");
            p.target = toks[2];
            net.probes.push_back(p);
        } else if (section == "options") {
            auto [k, v] = keyval(toks[0]);
            if (k == "ground")
                net.ground = v;
            else
                err("unknown option '" + k + "'");
        } else {
            err("content before any [section]");
        }
    }
    net.validate();
    return net;
}

Netlist load_netlist(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw NetlistError("cannot open netlist file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_netlist(ss.str());
}

}  // namespace damsim
