#include "bptns/evolve.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

namespace bptns {

void validate(const TrotterConfig &cfg) {
    if (cfg.chi_max < 1 || cfg.n_steps < 0 || cfg.cutoff < 0.0) {
        throw std::invalid_argument("Trotter config: need chi_max >= 1, n_steps >= 0, cutoff >= 0");
    }
    validate(cfg.bp);
}

GateLayer build_step(const LatticeGraph &graph, double theta_h, bool dagger) {
    GateLayer layer;
    layer.x_angle = dagger ? -theta_h : theta_h;
    layer.zz_angle = dagger ? -std::numbers::pi / 4 : std::numbers::pi / 4;
    layer.zz_first = dagger;
    for (VertexId v = 0; v < graph.num_vertices(); ++v) {
        layer.x_sites.push_back(v);
    }
    layer.zz_gates = graph.edges();
    std::sort(layer.zz_gates.begin(), layer.zz_gates.end());
    return layer;
}

Eigen::Matrix2cd rx_gate(double theta) {
    const double c = std::cos(theta / 2);
    const double s = std::sin(theta / 2);
    Eigen::Matrix2cd m;
    m << c, cplx(0, -s), cplx(0, -s), c;
    return m;
}

Eigen::Matrix4cd zz_gate(double angle) {
    const cplx p = std::polar(1.0, angle);
    const cplx q = std::conj(p);
    Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
    m(0, 0) = p;
    m(1, 1) = q;
    m(2, 2) = q;
    m(3, 3) = p;
    return m;
}

namespace {

template <typename M>
void require_unitary(const M &g) {
    const double err = (g.adjoint() * g - M::Identity()).norm();
    if (err > 1e-10) {
        throw std::invalid_argument("gate is not unitary");
    }
}

Tensor gate_tensor(const Eigen::MatrixXcd &g, const std::vector<Index> &out, const std::vector<Index> &in) {
    std::vector<Index> inds = out;
    inds.insert(inds.end(), in.begin(), in.end());
    Tensor t(std::move(inds));
    const auto c = g.cols();
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
        for (Eigen::Index j = 0; j < c; ++j) {
            t.data()[i * c + j] = g(i, j);
        }
    }
    return t;
}

std::vector<double> inverse_weights(const std::vector<double> &lambda) {
    const double top = *std::max_element(lambda.begin(), lambda.end());
    std::vector<double> inv(lambda.size());
    for (std::size_t k = 0; k < lambda.size(); ++k) {
        inv[k] = lambda[k] > 1e-15 * top ? 1.0 / lambda[k] : 0.0;
    }
    return inv;
}

// Splits the site tensor into (Q over the other bonds) x (R over bond to the
// reduced leg, physical leg and the edge leg). Q is empty for a leaf.
struct Reduced {
    bool has_q = false;
    Tensor q;
    Tensor r;
};

Reduced reduce_site(const VidalTNS &state, VertexId v, int edge_id) {
    Reduced out;
    Tensor a = state.weighted_gamma(v, 1.0, edge_id);
    std::vector<Index> others;
    for (int id : state.graph().incident(v)) {
        if (id != edge_id) {
            others.push_back(state.bond(id).index);
        }
    }
    std::size_t other_size = 1;
    for (const auto &i : others) {
        other_size *= static_cast<std::size_t>(i.dim);
    }
    // QR only pays off when the other legs are larger than the kept pair.
    if (others.empty() || other_size <= 4 * static_cast<std::size_t>(state.bond(edge_id).index.dim)) {
        out.r = std::move(a);
        return out;
    }
    auto [q, r] = qr(a, others, "reduced");
    out.has_q = true;
    out.q = std::move(q);
    out.r = std::move(r);
    return out;
}

Tensor restore_site(const VidalTNS &state, VertexId v, int edge_id, const Reduced &red, Tensor piece) {
    Tensor g = red.has_q ? contract(red.q, piece) : std::move(piece);
    for (int id : state.graph().incident(v)) {
        if (id != edge_id) {
            scale_leg(g, state.bond(id).index, inverse_weights(state.bond(id).lambda));
        }
    }
    return g;
}

}  // namespace

void apply_single_site(VidalTNS &state, VertexId v, const Eigen::Matrix2cd &gate) {
    require_unitary(gate);
    const Index &p = state.phys(v);
    Index out = make_index(2, "tmp");
    Tensor t = contract(gate_tensor(gate, {out}, {p}), state.gamma(v));
    state.set_gamma(v, replace_index(std::move(t), out, p));
}

double simple_update(VidalTNS &state, int edge_id, const Eigen::Matrix4cd &gate, int chi_max, double cutoff) {
    require_unitary(gate);
    const Edge e = state.graph().edge(edge_id);
    const Bond old = state.bond(edge_id);
    const Index pa = state.phys(e.a);
    const Index pb = state.phys(e.b);

    Reduced ra = reduce_site(state, e.a, edge_id);
    Reduced rb = reduce_site(state, e.b, edge_id);
    Tensor left = ra.r;
    scale_leg(left, old.index, old.lambda);
    Tensor theta = contract(left, rb.r);

    Index oa = make_index(2, "tmp"), ob = make_index(2, "tmp");
    theta = contract(gate_tensor(gate, {oa, ob}, {pa, pb}), theta);
    theta = replace_indices(std::move(theta), std::vector<Index>{oa, ob}, std::vector<Index>{pa, pb});

    std::vector<Index> rows;
    for (const auto &i : theta.indices()) {
        if (ra.r.has_index(i)) {
            rows.push_back(i);
        }
    }
    auto svd = svd_truncate(theta, rows, chi_max, cutoff, old.index.tag);

    double ss = 0.0;
    for (double s : svd.s.values) {
        ss += s * s;
    }
    const double snorm = std::sqrt(ss);
    Bond nb;
    nb.index = svd.s.row;
    nb.index.tag = old.index.tag;
    for (double s : svd.s.values) {
        nb.lambda.push_back(s / snorm);
    }
    state.add_log_scale(std::log(snorm));

    Tensor new_a = restore_site(state, e.a, edge_id, ra, replace_index(svd.u, svd.s.row, nb.index));
    Tensor new_b = restore_site(state, e.b, edge_id, rb, replace_index(svd.v, svd.s.col, nb.index));
    state.set_bond(edge_id, nb);
    state.set_gamma(e.a, std::move(new_a));
    state.set_gamma(e.b, std::move(new_b));
    return svd.discarded_weight;
}

std::vector<StepDiagnostics> trotter_evolve(VidalTNS &state, const TrotterConfig &cfg, const StepCallback &cb) {
    validate(cfg);
    state.set_chi_max(cfg.chi_max);
    const GateLayer layer = build_step(state.graph(), cfg.theta_h, cfg.dagger);
    const Eigen::Matrix2cd rx = rx_gate(layer.x_angle);
    const Eigen::Matrix4cd zz = zz_gate(layer.zz_angle);
    std::vector<StepDiagnostics> out;

    for (int step = 1; step <= cfg.n_steps; ++step) {
        const auto t0 = std::chrono::steady_clock::now();
        StepDiagnostics d;
        d.step = step;
        auto x_layer = [&] {
            if (layer.x_angle == 0.0) {
                return;
            }
            for (VertexId v : layer.x_sites) {
                apply_single_site(state, v, rx);
            }
        };
        auto gauge = [&] {
            GaugeResult g = bp_gauge(state, cfg.bp);
            state = std::move(g.state);
            d.bp_iters += g.messages.iterations_used;
            d.bp_delta = std::max(d.bp_delta, g.messages.final_delta);
            d.bp_converged = d.bp_converged && g.messages.converged;
        };
        auto zz_layer = [&] {
            for (const Edge &e : layer.zz_gates) {
                d.discarded_weight += simple_update(state, state.graph().edge_id(e.a, e.b), zz, cfg.chi_max, cfg.cutoff);
                if (cfg.gauge_every_gate) {
                    gauge();
                }
            }
        };
        if (layer.zz_first) {
            zz_layer();
            x_layer();
        } else {
            x_layer();
            zz_layer();
        }
        if (cfg.gauge_every_step && !cfg.gauge_every_gate) {
            gauge();
        }
        d.chi_used = state.max_bond_dim();
        std::vector<int> all(state.graph().num_edges());
        for (int id = 0; id < state.graph().num_edges(); ++id) {
            all[id] = id;
        }
        d.entropy = entropy_per_edge(state, all);
        d.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.push_back(d);
        if (cb) {
            cb(state, d);
        }
    }
    return out;
}

double entropy_per_edge(const VidalTNS &state, const std::vector<int> &cut_edges) {
    if (cut_edges.empty()) {
        return 0.0;
    }
    double s = 0.0;
    for (int id : cut_edges) {
        s += bond_entropy(state.bond(id).lambda);
    }
    return s / static_cast<double>(cut_edges.size());
}

ChiFit extrapolate_chi(const std::vector<std::pair<double, double>> &chi_y) {
    std::set<double> distinct;
    for (const auto &[chi, y] : chi_y) {
        if (!(chi > 0.0)) {
            throw std::invalid_argument("extrapolate_chi: chi must be positive");
        }
        distinct.insert(chi);
    }
    if (distinct.size() < 2) {
        throw std::invalid_argument("extrapolate_chi: need at least two distinct chi values");
    }
    const auto n = static_cast<Eigen::Index>(chi_y.size());
    Eigen::MatrixXd design(n, 2);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        design(k, 0) = 1.0;
        design(k, 1) = 1.0 / chi_y[k].first;
        rhs[k] = chi_y[k].second;
    }
    const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(rhs);
    ChiFit fit;
    fit.intercept = coef[0];
    fit.slope = coef[1];
    fit.residual = std::sqrt((design * coef - rhs).squaredNorm() / static_cast<double>(n));
    return fit;
}

}  // namespace bptns
