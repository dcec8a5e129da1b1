#include "bptns/bp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace bptns {

namespace pauli {
Eigen::Matrix2cd I() { return Eigen::Matrix2cd::Identity(); }
Eigen::Matrix2cd X() {
    Eigen::Matrix2cd m;
    m << 0, 1, 1, 0;
    return m;
}
Eigen::Matrix2cd Y() {
    Eigen::Matrix2cd m;
    m << 0, cplx(0, -1), cplx(0, 1), 0;
    return m;
}
Eigen::Matrix2cd Z() {
    Eigen::Matrix2cd m;
    m << 1, 0, 0, -1;
    return m;
}
}  // namespace pauli

void validate(const BpConfig &cfg) {
    if (!(cfg.tol > 0.0) || cfg.max_iters < 1 || cfg.damping < 0.0 || cfg.damping >= 1.0) {
        throw std::invalid_argument("BP config: need tol > 0, max_iters >= 1, damping in [0,1)");
    }
}

namespace {

Tensor message_tensor(const Eigen::MatrixXcd &m, const Index &ket) {
    Tensor t({ket, ket.prime()});
    const auto d = static_cast<Eigen::Index>(ket.dim);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            t.data()[i * d + j] = m(i, j);
        }
    }
    return t;
}

Tensor op_tensor(const Eigen::MatrixXcd &op, std::vector<Index> out, std::vector<Index> in) {
    // op[(out), (in)] with out/in multi-indices in row-major order.
    std::vector<Index> inds = std::move(out);
    inds.insert(inds.end(), in.begin(), in.end());
    Tensor t(std::move(inds));
    const auto rows = op.rows();
    const auto cols = op.cols();
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            t.data()[i * cols + j] = op(i, j);
        }
    }
    return t;
}

// Conjugate copy with every bond leg primed (the bra layer).
Tensor bra_of(const Tensor &ket, const Index &phys) {
    std::vector<Index> from, to;
    for (const auto &i : ket.indices()) {
        if (i != phys) {
            from.push_back(i);
            to.push_back(i.prime());
        }
    }
    return conj(replace_indices(ket, from, to));
}

void normalize_message(Eigen::MatrixXcd &m) {
    m = 0.5 * (m + m.adjoint()).eval();
    const double tr = m.trace().real();
    if (!(tr > 0.0) || !std::isfinite(tr)) {
        throw std::runtime_error("BP message lost positivity (trace " + std::to_string(tr) + ")");
    }
    m /= tr;
}

std::vector<VertexId> bfs_order(const LatticeGraph &g) {
    std::vector<VertexId> order;
    std::vector<bool> seen(g.num_vertices(), false);
    for (VertexId root = 0; root < g.num_vertices(); ++root) {
        if (seen[root]) {
            continue;
        }
        std::deque<VertexId> q{root};
        seen[root] = true;
        while (!q.empty()) {
            VertexId v = q.front();
            q.pop_front();
            order.push_back(v);
            for (VertexId w : g.neighbors(v)) {
                if (!seen[w]) {
                    seen[w] = true;
                    q.push_back(w);
                }
            }
        }
    }
    return order;
}

// Site tensor with every incoming message except the one on `skip_edge`
// attached on the ket side (those legs become primed).
Tensor absorb_messages(const NormNetwork &net, const std::vector<Eigen::MatrixXcd> &msgs, VertexId v,
                       int skip_edge) {
    const auto &g = *net.graph;
    Tensor a = net.sites[v];
    for (int id : g.incident(v)) {
        if (id == skip_edge) {
            continue;
        }
        const VertexId u = g.edge(id).other(v);
        a = contract(a, message_tensor(msgs[message_slot(g, u, v)], net.bond_index[id]));
    }
    return a;
}

// Factor X with X X^dagger = m, dropping the null space.
Eigen::MatrixXcd psd_root(const Eigen::MatrixXcd &m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(m);
    const Eigen::VectorXd &w = eig.eigenvalues();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = 0; k < w.size(); ++k) {
        if (w[k] > 0.0) {
            keep.push_back(k);
        }
    }
    if (keep.empty()) {
        throw std::runtime_error("BP message lost positivity (no positive eigenvalue)");
    }
    Eigen::MatrixXcd x(m.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) {
        x.col(static_cast<Eigen::Index>(j)) = eig.eigenvectors().col(keep[j]) * std::sqrt(w[keep[j]]);
    }
    return x;
}

// All outgoing messages of v, in the order of g.incident(v). With
// M_u = X_u X_u^dagger the message on edge k is B_k B_k^dagger, where B_k is
// the site tensor with every X_u (u != k) attached; partial products are
// shared between the outgoing edges.
std::vector<Eigen::MatrixXcd> vertex_messages(const NormNetwork &net, const std::vector<Eigen::MatrixXcd> &msgs,
                                              VertexId v) {
    const auto &g = *net.graph;
    const auto &inc = g.incident(v);
    const std::size_t d = inc.size();
    std::vector<Tensor> roots(d);
    for (std::size_t j = 0; j < d; ++j) {
        const int id = inc[j];
        const Index &bond = net.bond_index[id];
        const Eigen::MatrixXcd x = psd_root(msgs[message_slot(g, g.edge(id).other(v), v)]);
        roots[j] = from_matrix(x, {bond}, {make_index(static_cast<int>(x.cols()), "root")});
    }
    auto finish = [&](const Tensor &b, std::size_t k) {
        const Index row[] = {net.bond_index[inc[k]]};
        const MatrixC bm = to_matrix(b, row);
        Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(bm.rows(), bm.rows());
        out.selfadjointView<Eigen::Lower>().rankUpdate(bm);
        out = out.selfadjointView<Eigen::Lower>();
        normalize_message(out);
        return out;
    };
    std::vector<Eigen::MatrixXcd> out(d);
    Tensor prefix = net.sites[v];  // site with roots 0..k-1 attached
    for (std::size_t k = 0; k < d; ++k) {
        Tensor b = prefix;
        for (std::size_t j = k + 1; j < d; ++j) {
            b = contract(b, roots[j]);
        }
        out[k] = finish(b, k);
        if (k + 1 < d) {
            prefix = contract(prefix, roots[k]);
        }
    }
    return out;
}

Index phys_leg(const NormNetwork &net, VertexId v) {
    const auto &g = *net.graph;
    for (const auto &i : net.sites[v].indices()) {
        bool is_bond = false;
        for (int id : g.incident(v)) {
            is_bond = is_bond || i == net.bond_index[id];
        }
        if (!is_bond) {
            return i;
        }
    }
    throw std::logic_error("site tensor without physical leg");
}

}  // namespace

int message_slot(const LatticeGraph &g, VertexId from, VertexId to) {
    const int id = g.edge_id(from, to);
    if (id < 0) {
        throw std::invalid_argument("no edge between the given vertices");
    }
    return 2 * id + (from == g.edge(id).a ? 0 : 1);
}

const Eigen::MatrixXcd &MessageSet::from_to(const LatticeGraph &g, VertexId from, VertexId to) const {
    return messages.at(message_slot(g, from, to));
}

NormNetwork make_norm_network(const VidalTNS &state) {
    NormNetwork net;
    net.graph = &state.graph();
    net.sites = absorb_sqrt_bonds(state);
    for (int id = 0; id < state.graph().num_edges(); ++id) {
        net.bond_index.push_back(state.bond(id).index);
        net.bond_weights.push_back(state.bond(id).lambda);
    }
    return net;
}

MessageSet bp_fixed_point(const NormNetwork &net, const BpConfig &cfg) {
    validate(cfg);
    const auto &g = *net.graph;
    MessageSet out;
    out.messages.resize(2 * g.num_edges());
    for (int id = 0; id < g.num_edges(); ++id) {
        const int d = net.bond_index[id].dim;
        Eigen::MatrixXcd init = Eigen::MatrixXcd::Identity(d, d);
        if (cfg.init == MessageInit::bond_weights && static_cast<int>(net.bond_weights[id].size()) == d) {
            for (int k = 0; k < d; ++k) {
                init(k, k) = net.bond_weights[id][k];
            }
        }
        normalize_message(init);
        out.messages[2 * id] = init;
        out.messages[2 * id + 1] = init;
    }

    auto relax = [&](Eigen::MatrixXcd &slot, Eigen::MatrixXcd fresh) {
        if (cfg.damping > 0.0) {
            fresh = (1.0 - cfg.damping) * fresh + cfg.damping * slot;
            normalize_message(fresh);
        }
        const double d = (fresh - slot).norm();
        slot = std::move(fresh);
        return d;
    };

    const auto order = bfs_order(g);
    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        double delta = 0.0;
        if (cfg.schedule == BpSchedule::parallel) {
            std::vector<Eigen::MatrixXcd> next = out.messages;
            for (VertexId v = 0; v < g.num_vertices(); ++v) {
                auto fresh = vertex_messages(net, out.messages, v);
                const auto &inc = g.incident(v);
                for (std::size_t k = 0; k < inc.size(); ++k) {
                    const int slot = message_slot(g, v, g.edge(inc[k]).other(v));
                    delta = std::max(delta, relax(next[slot], std::move(fresh[k])));
                }
            }
            out.messages = std::move(next);
        } else {
            // Leaves-to-root then root-to-leaves; exact after one sweep on trees.
            // The messages into v do not change while v is visited.
            auto visit = [&](VertexId v) {
                auto fresh = vertex_messages(net, out.messages, v);
                const auto &inc = g.incident(v);
                for (std::size_t k = 0; k < inc.size(); ++k) {
                    const int slot = message_slot(g, v, g.edge(inc[k]).other(v));
                    delta = std::max(delta, relax(out.messages[slot], std::move(fresh[k])));
                }
            };
            for (auto it = order.rbegin(); it != order.rend(); ++it) {
                visit(*it);
            }
            for (VertexId v : order) {
                visit(v);
            }
        }
        out.iterations_used = iter;
        out.final_delta = delta;
        if (delta < cfg.tol) {
            out.converged = true;
            break;
        }
    }
    return out;
}

MessageSet bp_fixed_point(const VidalTNS &state, const BpConfig &cfg) {
    return bp_fixed_point(make_norm_network(state), cfg);
}

cplx local_contraction(const NormNetwork &net, const MessageSet &msgs, VertexId v, const Eigen::Matrix2cd *op) {
    const Index p = phys_leg(net, v);
    Tensor a = absorb_messages(net, msgs.messages, v, -1);
    if (op != nullptr) {
        Index tmp = make_index(2, "tmp");
        a = replace_index(contract(op_tensor(*op, {tmp}, {p}), a), tmp, p);
    }
    return contract(a, bra_of(net.sites[v], p)).scalar_value();
}

double log_norm_bp(const VidalTNS &state, const MessageSet &msgs) {
    const NormNetwork net = make_norm_network(state);
    const auto &g = state.graph();
    double log_z = 2.0 * state.log_scale();
    for (VertexId v = 0; v < g.num_vertices(); ++v) {
        const double zv = local_contraction(net, msgs, v).real();
        if (!(zv > 0.0)) {
            throw std::runtime_error("BP vertex normalization is not positive");
        }
        log_z += std::log(zv);
    }
    for (int id = 0; id < g.num_edges(); ++id) {
        const auto &m1 = msgs.messages[2 * id];
        const auto &m2 = msgs.messages[2 * id + 1];
        const double ze = (m1.array() * m2.array()).sum().real();
        if (!(ze > 0.0)) {
            throw std::runtime_error("BP edge normalization is not positive");
        }
        log_z -= std::log(ze);
    }
    return log_z;
}

double tns_norm(const VidalTNS &state) {
    const MessageSet msgs = bp_fixed_point(state);
    return std::exp(log_norm_bp(state, msgs));
}

namespace {

struct HermitianRoot {
    Eigen::MatrixXcd root;
    Eigen::MatrixXcd inverse_root;  // pseudo-inverse on the retained range
    bool clipped = false;
    double min_relative = 1.0;
};

HermitianRoot hermitian_root(const Eigen::MatrixXcd &m, double tol) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (m + m.adjoint()));
    const Eigen::VectorXd &ev = es.eigenvalues();
    const double top = ev.maxCoeff();
    Eigen::VectorXd s(ev.size()), si(ev.size());
    HermitianRoot out;
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
        const double rel = ev[k] / top;
        out.min_relative = std::min(out.min_relative, rel);
        if (rel > tol) {
            s[k] = std::sqrt(ev[k]);
            si[k] = 1.0 / s[k];
        } else {
            s[k] = 0.0;
            si[k] = 0.0;
            out.clipped = true;
        }
    }
    const auto &w = es.eigenvectors();
    out.root = w * s.asDiagonal() * w.adjoint();
    out.inverse_root = w * si.asDiagonal() * w.adjoint();
    return out;
}

}  // namespace

VidalTNS vidal_gauge(const VidalTNS &state, const MessageSet &msgs, GaugeReport *report) {
    const auto &g = state.graph();
    constexpr double kPinvTol = 1e-13;
    constexpr double kDropTol = 1e-14;
    GaugeReport rep;

    VidalTNS out = state;
    std::vector<Tensor> sites = absorb_sqrt_bonds(state);
    for (int id = 0; id < g.num_edges(); ++id) {
        const Edge &e = g.edge(id);
        const Index &b = state.bond(id).index;
        const HermitianRoot x = hermitian_root(msgs.messages[2 * id], kPinvTol);
        const HermitianRoot y = hermitian_root(msgs.messages[2 * id + 1], kPinvTol);
        rep.pseudo_inverse_used = rep.pseudo_inverse_used || x.clipped || y.clipped;
        rep.min_message_eigenvalue = std::min({rep.min_message_eigenvalue, x.min_relative, y.min_relative});

        const DenseSvd svd = dense_svd(x.root.transpose() * y.root, true);
        const Eigen::VectorXd &sv = svd.s;
        Eigen::Index keep = 0;
        while (keep < sv.size() && sv[keep] > kDropTol * sv[0]) {
            ++keep;
        }
        keep = std::max<Eigen::Index>(keep, 1);
        const Eigen::MatrixXcd ga = x.inverse_root.transpose() * svd.u.leftCols(keep);
        const Eigen::MatrixXcd gb = y.inverse_root.transpose() * svd.v.leftCols(keep).conjugate();

        Bond nb;
        nb.index = make_index(static_cast<int>(keep), b.tag);
        double ss = 0.0;
        for (Eigen::Index k = 0; k < keep; ++k) {
            ss += sv[k] * sv[k];
        }
        const double snorm = std::sqrt(ss);
        for (Eigen::Index k = 0; k < keep; ++k) {
            nb.lambda.push_back(sv[k] / snorm);
        }
        out.add_log_scale(std::log(snorm));

        sites[e.a] = contract(sites[e.a], op_tensor(ga, {b}, {nb.index}));
        sites[e.b] = contract(sites[e.b], op_tensor(gb, {b}, {nb.index}));
        out.set_bond(id, std::move(nb));
    }
    for (VertexId v = 0; v < g.num_vertices(); ++v) {
        out.set_gamma(v, std::move(sites[v]));
        // Normalize so that the grouped tensors are exact isometries.
        const Tensor w = out.weighted_gamma(v, 1.0);
        const double z = std::pow(norm(w), 2);
        if (!(z > 0.0)) {
            throw std::runtime_error("regauged site tensor vanished");
        }
        out.gamma(v) *= 1.0 / std::sqrt(z);
        out.add_log_scale(0.5 * std::log(z));
    }
    if (report != nullptr) {
        *report = rep;
    }
    return out;
}

GaugeResult bp_gauge(const VidalTNS &state, const BpConfig &cfg) {
    GaugeResult r;
    r.messages = bp_fixed_point(state, cfg);
    r.state = vidal_gauge(state, r.messages, &r.report);
    return r;
}

namespace {

double ratio(const Tensor &ket, const Tensor &with_op) {
    const cplx num = contract(conj(ket), with_op).scalar_value();
    const cplx den = contract(conj(ket), ket).scalar_value();
    return (num / den).real();
}

Tensor apply_op(const Tensor &t, const Eigen::MatrixXcd &op, std::vector<Index> phys) {
    std::vector<Index> tmp;
    for (const auto &p : phys) {
        tmp.push_back(make_index(p.dim, "tmp"));
    }
    Tensor r = contract(op_tensor(op, tmp, phys), t);
    return replace_indices(std::move(r), tmp, phys);
}

}  // namespace

double expect_local(const VidalTNS &state, VertexId v, const Eigen::Matrix2cd &op) {
    const Tensor t = state.weighted_gamma(v, 1.0);
    const Tensor o = apply_op(t, op, {state.phys(v)});
    return ratio(t, o);
}

double expect_local(const VidalTNS &state, const MessageSet &msgs, VertexId v, const Eigen::Matrix2cd &op) {
    const NormNetwork net = make_norm_network(state);
    const cplx num = local_contraction(net, msgs, v, &op);
    const cplx den = local_contraction(net, msgs, v);
    return (num / den).real();
}

namespace {

// Two site tensors joined over the edge with everything else weighted.
Tensor pair_tensor(const VidalTNS &state, int edge_id) {
    const Edge &e = state.graph().edge(edge_id);
    Tensor a = state.weighted_gamma(e.a, 1.0, edge_id);
    scale_leg(a, state.bond(edge_id).index, state.bond(edge_id).lambda);
    return contract(a, state.weighted_gamma(e.b, 1.0, edge_id));
}

}  // namespace

double expect_two_site(const VidalTNS &state, int edge_id, const Eigen::Matrix4cd &op) {
    const Edge &e = state.graph().edge(edge_id);
    const Tensor t = pair_tensor(state, edge_id);
    const Tensor o = apply_op(t, op, {state.phys(e.a), state.phys(e.b)});
    return ratio(t, o);
}

double expect_two_site(const VidalTNS &state, const MessageSet &msgs, int edge_id, const Eigen::Matrix4cd &op) {
    const auto &g = state.graph();
    const Edge &e = g.edge(edge_id);
    const NormNetwork net = make_norm_network(state);
    Tensor ka = absorb_messages(net, msgs.messages, e.a, edge_id);
    Tensor kb = absorb_messages(net, msgs.messages, e.b, edge_id);
    // Primed legs of ka/kb are the bra sides of the absorbed messages; the
    // shared bond is summed separately within the ket and bra layers.
    Tensor ket = contract(ka, kb);
    Tensor bra = contract(bra_of(net.sites[e.a], state.phys(e.a)), bra_of(net.sites[e.b], state.phys(e.b)));
    const Tensor with_op = apply_op(ket, op, {state.phys(e.a), state.phys(e.b)});
    const cplx num = contract(bra, with_op).scalar_value();
    const cplx den = contract(bra, ket).scalar_value();
    return (num / den).real();
}

}  // namespace bptns
