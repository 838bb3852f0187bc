#include "damsim/statespace.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace damsim {

namespace {

struct Branch {
    std::string id;
    ElementKind kind;
    double value;
    std::string a, b;
};

// Expands switches into primitive branches and sources into (ideal source +
// optional series resistor with an internal node).
struct Expanded {
    std::vector<Branch> branches;
    std::vector<Source> ideal_sources;  // series_resistance already split off
};

Expanded expand(const Netlist& net, const SwitchConfiguration& config) {
    check_configuration(net, config);
    Expanded out;
    for (const auto& e : net.elements)
        out.branches.push_back({e.id, e.kind, e.value, e.node_a, e.node_b});
    for (const auto& s : net.sources) {
        Source ideal = s;
        if (s.series_resistance_ohm > 0.0) {
            std::string mid = "_" + s.id + "_int";
            out.branches.push_back(
                {s.id + "_rs", ElementKind::Resistor, s.series_resistance_ohm, s.node_pos, mid});
            ideal.node_pos = mid;
        }
        ideal.series_resistance_ohm = 0.0;
        out.ideal_sources.push_back(ideal);
    }
    auto add_switch_branch = [&](const std::string& id, const std::string& a,
                                 const std::string& b, const Switch& sw, bool on) {
        if (on) {
            out.branches.push_back({id + "_ron", ElementKind::Resistor, sw.r_on_ohm, a, b});
        } else {
            out.branches.push_back({id + "_roff", ElementKind::Resistor, sw.r_off_ohm, a, b});
            if (sw.c_parallel_f > 0.0)
                out.branches.push_back({id + "_csw", ElementKind::Capacitor, sw.c_parallel_f, a, b});
        }
    };
    for (const auto& sw : net.switches) {
        int pos = config.at(sw.id);
        if (sw.kind == SwitchKind::Spst) {
            add_switch_branch(sw.id, sw.nodes[0], sw.nodes[1], sw, pos == 1);
        } else {
            add_switch_branch(sw.id + "_t1", sw.nodes[0], sw.nodes[1], sw, pos == 1);
            add_switch_branch(sw.id + "_t2", sw.nodes[0], sw.nodes[2], sw, pos == 2);
        }
    }
    return out;
}

struct UnionFind {
    std::map<std::string, std::string> parent;
    std::string find(const std::string& x) {
        auto it = parent.find(x);
        if (it == parent.end()) {
            parent[x] = x;
            return x;
        }
        if (it->second == x) return x;
        std::string r = find(it->second);
        parent[x] = r;
        return r;
    }
};

}  // namespace

int StateSpaceModel::state_index(const std::string& label) const {
    for (size_t i = 0; i < states.size(); ++i)
        if (states[i].label == label) return static_cast<int>(i);
    return -1;
}

StateSpaceModel assemble(const Netlist& net, const SwitchConfiguration& config,
                         const std::vector<CurrentInjection>& injections) {
    net.validate();
    Expanded ex = expand(net, config);
    const std::string& gnd = net.ground;

    std::set<std::string> node_set;
    for (const auto& br : ex.branches) {
        node_set.insert(br.a);
        node_set.insert(br.b);
    }
    for (const auto& s : ex.ideal_sources) {
        node_set.insert(s.node_pos);
        node_set.insert(s.node_neg);
    }
    node_set.insert(gnd);

    // connectivity to ground through any branch or source
    {
        UnionFind cc;
        for (const auto& br : ex.branches) cc.parent.try_emplace(br.a, br.a), cc.parent.try_emplace(br.b, br.b);
        auto link = [&](const std::string& a, const std::string& b) {
            cc.parent[cc.find(a)] = cc.find(b);
        };
        for (const auto& br : ex.branches) link(br.a, br.b);
        for (const auto& s : ex.ideal_sources) link(s.node_pos, s.node_neg);
        for (const auto& n : node_set)
            if (cc.find(n) != cc.find(gnd))
                throw ConnectivityError("node '" + n +
                                        "' has no path to ground in this configuration");
    }

    const int m = static_cast<int>(ex.ideal_sources.size());

    // rigid components: contract ideal source edges; offset[n] maps node
    // potential to component-root potential plus offset . u
    UnionFind uf;
    std::map<std::string, Eigen::RowVectorXd> offset;
    for (const auto& n : node_set) offset[n] = Eigen::RowVectorXd::Zero(m);
    for (int si = 0; si < m; ++si) {
        const auto& s = ex.ideal_sources[si];
        std::string ra = uf.find(s.node_pos), rb = uf.find(s.node_neg);
        if (ra == rb) continue;  // source closes a rigid loop; its row still pins it
        Eigen::RowVectorXd delta = Eigen::RowVectorXd::Zero(m);
        delta(si) = 1.0;
        Eigen::RowVectorXd shift = delta - (offset[s.node_pos] - offset[s.node_neg]);
        for (const auto& n : node_set)
            if (uf.find(n) == ra) offset[n] += shift;
        uf.parent[ra] = rb;
    }
    for (const auto& n : node_set) {
        Eigen::RowVectorXd root_off = offset[uf.find(n)];
        offset[n] -= root_off;
    }

    std::vector<Branch> caps, inds, ress;
    for (const auto& br : ex.branches) {
        if (br.kind == ElementKind::Capacitor)
            caps.push_back(br);
        else if (br.kind == ElementKind::Inductor)
            inds.push_back(br);
        else
            ress.push_back(br);
    }

    // group capacitors by rigid node pair (orientation-aware); a capacitor with
    // both ends in one rigid component is pinned by sources and carries no state
    struct GroupMember {
        Branch br;
        double sign;
    };
    std::map<std::pair<std::string, std::string>, std::vector<GroupMember>> group_map;
    std::vector<Branch> pinned;
    for (const auto& br : caps) {
        std::string ra = uf.find(br.a), rb = uf.find(br.b);
        if (ra == rb) {
            pinned.push_back(br);
            continue;
        }
        auto key = ra < rb ? std::make_pair(ra, rb) : std::make_pair(rb, ra);
        double sign = (ra == key.first) ? 1.0 : -1.0;
        group_map[key].push_back({br, sign});
    }
    std::vector<std::vector<GroupMember>> groups;
    for (auto& [key, g] : group_map) groups.push_back(std::move(g));

    // capacitor-loop detection beyond parallel merges: spanning forest over the
    // contracted graph using one edge per group; a second group edge closing a
    // cycle means an irreducible loop of capacitors/ideal sources.
    {
        UnionFind loops;
        for (const auto& g : groups) {
            std::string ra = uf.find(g[0].br.a), rb = uf.find(g[0].br.b);
            ra = loops.find(ra), rb = loops.find(rb);
            if (ra == rb) {
                std::string names;
                for (const auto& g2 : groups)
                    for (const auto& mb : g2) names += mb.br.id + " ";
                throw TopologyError(
                    "irreducible capacitor loop (only parallel merging is supported); "
                    "capacitors involved: " + names);
            }
            loops.parent[ra] = rb;
        }
    }
    // inductor cutset detection: contract every non-inductor branch and source;
    // KCL at a contracted supernode then constrains inductor currents alone.
    {
        UnionFind cut;
        for (const auto& br : ress) cut.parent[cut.find(br.a)] = cut.find(br.b);
        for (const auto& br : caps) cut.parent[cut.find(br.a)] = cut.find(br.b);
        for (const auto& s : ex.ideal_sources)
            cut.parent[cut.find(s.node_pos)] = cut.find(s.node_neg);
        for (const auto& inj : injections) cut.find(inj.node);
        std::set<std::string> supernodes;
        for (const auto& n : node_set) supernodes.insert(cut.find(n));
        size_t components;
        {
            UnionFind all = cut;
            for (const auto& br : inds) all.parent[all.find(br.a)] = all.find(br.b);
            std::set<std::string> c2;
            for (const auto& n : node_set) c2.insert(all.find(n));
            components = c2.size();
        }
        if (!inds.empty() && supernodes.size() - components > 0) {
            std::string names;
            for (const auto& br : inds) names += br.id + " ";
            throw TopologyError(
                "inductor cutset (inductor currents are not independent); inductors: " +
                names);
        }
    }

    const int ng = static_cast<int>(groups.size());
    const int nl = static_cast<int>(inds.size());
    const int ns = ng + nl;

    StateSpaceModel mdl;
    for (const auto& g : groups) {
        StateInfo si;
        si.role = StateRole::CapacitorVoltage;
        for (const auto& mb : g) {
            si.members.push_back(mb.br.id);
            if (!si.label.empty()) si.label += "+";
            si.label += mb.br.id;
        }
        mdl.states.push_back(si);
    }
    for (const auto& br : inds)
        mdl.states.push_back({br.id, StateRole::InductorCurrent, {br.id}});
    for (const auto& s : ex.ideal_sources) mdl.inputs.push_back(s.id);

    // unknowns: non-ground node voltages, capacitor currents, source currents
    std::vector<std::string> nodes;
    for (const auto& n : node_set)
        if (n != gnd) nodes.push_back(n);
    std::map<std::string, int> nidx;
    for (size_t i = 0; i < nodes.size(); ++i) nidx[nodes[i]] = static_cast<int>(i);
    const int nn = static_cast<int>(nodes.size());
    const int nc = static_cast<int>(caps.size());
    std::map<std::string, int> cidx;
    for (int i = 0; i < nc; ++i) cidx[caps[i].id] = i;
    const int mi = static_cast<int>(injections.size());
    const int N = nn + nc + m;
    const int mu = m + mi;  // total inputs: sources then injections

    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(N, N);
    Eigen::MatrixXd RX = Eigen::MatrixXd::Zero(N, ns);
    Eigen::MatrixXd RU = Eigen::MatrixXd::Zero(N, mu);
    Eigen::MatrixXd RUD = Eigen::MatrixXd::Zero(N, mu);

    auto vcol = [&](const std::string& n) -> int { return n == gnd ? -1 : nidx.at(n); };

    int row = 0;
    for (const auto& n : nodes) {
        for (const auto& br : ress) {
            double s = br.a == n ? 1.0 : (br.b == n ? -1.0 : 0.0);
            if (s == 0.0) continue;
            int ia = vcol(br.a), ib = vcol(br.b);
            if (ia >= 0) M(row, ia) += s / br.value;
            if (ib >= 0) M(row, ib) -= s / br.value;
        }
        for (const auto& br : caps) {
            if (br.a == n) M(row, nn + cidx[br.id]) += 1.0;
            if (br.b == n) M(row, nn + cidx[br.id]) -= 1.0;
        }
        for (int li = 0; li < nl; ++li) {
            if (inds[li].a == n) RX(row, ng + li) -= 1.0;
            if (inds[li].b == n) RX(row, ng + li) += 1.0;
        }
        for (int si = 0; si < m; ++si) {
            if (ex.ideal_sources[si].node_pos == n) M(row, nn + nc + si) += 1.0;
            if (ex.ideal_sources[si].node_neg == n) M(row, nn + nc + si) -= 1.0;
        }
        for (int ji = 0; ji < mi; ++ji)
            if (injections[ji].node == n) RU(row, m + ji) += 1.0;  // injected into node
        ++row;
    }
    // group representative constraint rows and member current-split rows
    for (int gi = 0; gi < ng; ++gi) {
        const auto& g = groups[gi];
        const auto& rep = g[0];
        int ia = vcol(rep.br.a), ib = vcol(rep.br.b);
        if (ia >= 0) M(row, ia) += 1.0;
        if (ib >= 0) M(row, ib) -= 1.0;
        // v_a - v_b = sign*x + (off_a - off_b).u
        RX(row, gi) = rep.sign;
        RU.block(row, 0, 1, m) = offset[rep.br.a] - offset[rep.br.b];
        ++row;
        for (size_t k = 1; k < g.size(); ++k) {
            const auto& mb = g[k];
            M(row, nn + cidx[mb.br.id]) += 1.0 / (mb.br.value * mb.sign);
            M(row, nn + cidx[rep.br.id]) -= 1.0 / (rep.br.value * rep.sign);
            Eigen::RowVectorXd doff =
                (offset[mb.br.a] - offset[mb.br.b]) / mb.sign -
                (offset[rep.br.a] - offset[rep.br.b]) / rep.sign;
            RUD.block(row, 0, 1, m) = doff;
            ++row;
        }
    }
    for (const auto& br : pinned) {
        M(row, nn + cidx[br.id]) = 1.0;
        RUD.block(row, 0, 1, m) = br.value * (offset[br.a] - offset[br.b]);
        ++row;
    }
    for (int si = 0; si < m; ++si) {
        const auto& s = ex.ideal_sources[si];
        int ia = vcol(s.node_pos), ib = vcol(s.node_neg);
        if (ia >= 0) M(row, ia) += 1.0;
        if (ib >= 0) M(row, ib) -= 1.0;
        RU(row, si) += 1.0;
        ++row;
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (!lu.isInvertible()) {
        throw TopologyError(
            "degenerate topology: the algebraic network equations are singular "
            "(irreducible capacitor loop, inductor cutset, or floating subnetwork)");
    }
    Eigen::MatrixXd RHS(N, ns + 2 * mu);
    RHS << RX, RU, RUD;
    Eigen::MatrixXd S = lu.solve(RHS);

    mdl.A = Eigen::MatrixXd::Zero(ns, ns);
    mdl.B = Eigen::MatrixXd::Zero(ns, mu);
    mdl.Bdot = Eigen::MatrixXd::Zero(ns, mu);
    for (int gi = 0; gi < ng; ++gi) {
        const auto& rep = groups[gi][0];
        Eigen::RowVectorXd r = S.row(nn + cidx[rep.br.id]) / (rep.br.value * rep.sign);
        Eigen::RowVectorXd doff_full = Eigen::RowVectorXd::Zero(mu);
        doff_full.head(m) = (offset[rep.br.a] - offset[rep.br.b]) / rep.sign;
        mdl.A.row(gi) = r.segment(0, ns);
        mdl.B.row(gi) = r.segment(ns, mu);
        mdl.Bdot.row(gi) = r.segment(ns + mu, mu) - doff_full;
    }
    for (int li = 0; li < nl; ++li) {
        const auto& br = inds[li];
        Eigen::RowVectorXd va = br.a == gnd ? Eigen::RowVectorXd::Zero(S.cols())
                                            : Eigen::RowVectorXd(S.row(nidx[br.a]));
        Eigen::RowVectorXd vb = br.b == gnd ? Eigen::RowVectorXd::Zero(S.cols())
                                            : Eigen::RowVectorXd(S.row(nidx[br.b]));
        Eigen::RowVectorXd d = (va - vb) / br.value;
        mdl.A.row(ng + li) = d.segment(0, ns);
        mdl.B.row(ng + li) = d.segment(ns, mu);
        mdl.Bdot.row(ng + li) = d.segment(ns + mu, mu);
    }

    for (int gi = 0; gi < ng; ++gi)
        for (const auto& mb : groups[gi]) {
            CapMember cm;
            cm.state = gi;
            cm.sign = mb.sign;
            cm.capacitance_f = mb.br.value;
            cm.dc_offset = offset[mb.br.a] - offset[mb.br.b];
            mdl.cap_members[mb.br.id] = cm;
        }
    for (int li = 0; li < nl; ++li) mdl.inductor_state[inds[li].id] = ng + li;

    // probe rows
    const auto& probes = net.probes;
    mdl.C = Eigen::MatrixXd::Zero(probes.size(), ns);
    mdl.D = Eigen::MatrixXd::Zero(probes.size(), mu);
    mdl.Ddot = Eigen::MatrixXd::Zero(probes.size(), mu);
    auto node_row = [&](const std::string& n) -> Eigen::RowVectorXd {
        if (n == gnd) return Eigen::RowVectorXd::Zero(S.cols());
        return S.row(nidx.at(n));
    };
    for (size_t pi = 0; pi < probes.size(); ++pi) {
        const auto& p = probes[pi];
        mdl.outputs.push_back(p.name);
        Eigen::RowVectorXd r;
        if (p.kind == Probe::NodeVoltage) {
            r = node_row(p.target);
        } else {
            const Branch* target = nullptr;
            for (const auto& br : ex.branches)
                if (br.id == p.target) target = &br;
            if (!target)
                throw NetlistError("probe '" + p.name + "' targets element '" + p.target +
                                   "' which is absent in this configuration");
            Eigen::RowVectorXd dv = node_row(target->a) - node_row(target->b);
            if (p.kind == Probe::ElementVoltage) {
                r = dv;
            } else {  // ElementCurrent
                if (target->kind == ElementKind::Resistor) {
                    r = dv / target->value;
                } else if (target->kind == ElementKind::Capacitor) {
                    r = S.row(nn + cidx.at(target->id));
                } else {
                    r = Eigen::RowVectorXd::Zero(S.cols());
                    r(mdl.inductor_state.at(target->id)) = 1.0;
                }
            }
        }
        mdl.C.row(pi) = r.segment(0, ns);
        mdl.D.row(pi) = r.segment(ns, mu);
        mdl.Ddot.row(pi) = r.segment(ns + mu, mu);
    }
    for (const auto& inj : injections) mdl.inputs.push_back("_inj_" + inj.node);
    return mdl;
}

CircuitState state_from_vector(const StateSpaceModel& m, const Eigen::VectorXd& x, double t) {
    CircuitState s;
    s.t = t;
    for (int i = 0; i < m.order(); ++i) s.values[m.states[i].label] = x(i);
    return s;
}

Eigen::VectorXd vector_from_state(const StateSpaceModel& m, const CircuitState& s) {
    if (s.values.size() != m.states.size())
        throw NetlistError("circuit state keys do not match the model's state labels");
    Eigen::VectorXd x(m.order());
    for (int i = 0; i < m.order(); ++i) {
        auto it = s.values.find(m.states[i].label);
        if (it == s.values.end())
            throw NetlistError("circuit state is missing label '" + m.states[i].label + "'");
        x(i) = it->second;
    }
    return x;
}

Eigen::VectorXd state_vector_from_elements(const StateSpaceModel& m,
                                           const std::map<std::string, double>& values,
                                           const Eigen::VectorXd& u) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(m.order());
    std::map<std::string, double> unused = values;
    for (int i = 0; i < m.order(); ++i) {
        const auto& st = m.states[i];
        if (st.role == StateRole::InductorCurrent) {
            auto it = values.find(st.label);
            if (it != values.end()) {
                x(i) = it->second;
                unused.erase(st.label);
            }
            continue;
        }
        bool set = false;
        for (const auto& mem : st.members) {
            auto it = values.find(mem);
            if (it == values.end()) continue;
            const auto& cm = m.cap_members.at(mem);
            double cand = (it->second - cm.dc_offset.head(u.size()) * u) / cm.sign;
            if (set && std::abs(cand - x(i)) > 1e-9 * (1.0 + std::abs(x(i))))
                throw NetlistError("inconsistent voltages for merged capacitors at state '" +
                                   st.label + "'");
            x(i) = cand;
            set = true;
            unused.erase(mem);
        }
    }
    if (!unused.empty())
        throw NetlistError("initial state names element '" + unused.begin()->first +
                           "' which has no state in this configuration");
    return x;
}

Eigen::VectorXd carry_state(const StateSpaceModel& from, const Eigen::VectorXd& x_from,
                            const StateSpaceModel& to, const Eigen::VectorXd& u_at_event) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(to.order());
    const int m_from = static_cast<int>(from.inputs.size());
    const int m_to = static_cast<int>(to.inputs.size());
    // map источника values between models by id
    auto u_for = [&](const StateSpaceModel& mdl) {
        Eigen::VectorXd u = Eigen::VectorXd::Zero(mdl.inputs.size());
        for (size_t i = 0; i < mdl.inputs.size(); ++i)
            for (size_t j = 0; j < to.inputs.size(); ++j)
                if (mdl.inputs[i] == to.inputs[j] && j < (size_t)u_at_event.size())
                    u(i) = u_at_event(j);
        return u;
    };
    Eigen::VectorXd uf = u_for(from), ut = u_for(to);
    (void)m_from;
    (void)m_to;
    for (int i = 0; i < to.order(); ++i) {
        const auto& st = to.states[i];
        if (st.role == StateRole::InductorCurrent) {
            int prev = from.inductor_state.count(st.label)
                           ? from.inductor_state.at(st.label)
                           : -1;
            x(i) = prev >= 0 ? x_from(prev) : 0.0;
            continue;
        }
        // charge-weighted over surviving members; equals the common node
        // voltage when a single predecessor exists
        double qsum = 0.0, csum = 0.0;
        for (const auto& mem : st.members) {
            auto it = from.cap_members.find(mem);
            if (it == from.cap_members.end()) continue;
            const auto& cm_old = it->second;
            double v_elem = cm_old.sign * x_from(cm_old.state) + cm_old.dc_offset * uf;
            const auto& cm_new = to.cap_members.at(mem);
            double x_cand = (v_elem - cm_new.dc_offset * ut) / cm_new.sign;
            qsum += cm_new.capacitance_f * x_cand;
            csum += cm_new.capacitance_f;
        }
        x(i) = csum > 0.0 ? qsum / csum : 0.0;
    }
    return x;
}

}  // namespace damsim
