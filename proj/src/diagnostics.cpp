#include "bptns/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>

namespace bptns {

namespace {

// Conjugate copy with every bond leg primed; the physical leg stays shared.
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

Tensor with_op(const Tensor &ket, const Index &phys, const Eigen::Matrix2cd &op) {
    Index tmp = make_index(2, "op");
    Tensor g({tmp, phys});
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            g.data()[i * 2 + j] = op(i, j);
        }
    }
    return replace_index(contract(g, ket), tmp, phys);
}

std::vector<Index> legs_except(const Tensor &t, const std::vector<Index> &rows) {
    std::vector<Index> out;
    for (const auto &i : t.indices()) {
        if (std::find(rows.begin(), rows.end(), i) == rows.end()) {
            out.push_back(i);
        }
    }
    return out;
}

// t carries the legs {ka, ka', kb, kb'}; rows are the a side.
EdgeEnvironment make_environment(const Tensor &t, const Index &row_ket, const Index &col_ket, int edge_id,
                                 EnvironmentMethod method, int boundary_dim) {
    const std::vector<Index> order{row_ket, row_ket.prime(), col_ket, col_ket.prime()};
    if (t.rank() != 4) {
        throw std::logic_error("edge environment: unexpected open legs");
    }
    const Tensor p = permute(t, order);
    const std::vector<Index> rows{row_ket, row_ket.prime()};
    EdgeEnvironment env;
    env.edge_id = edge_id;
    env.method = method;
    env.boundary_dim = boundary_dim;
    env.matrix = to_matrix(p, rows);
    const double n = env.matrix.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw std::domain_error("edge environment vanished or overflowed");
    }
    env.matrix /= n;
    const Eigen::VectorXd sv = singular_values(env.matrix);
    env.sigma.assign(sv.data(), sv.data() + sv.size());
    return env;
}

struct Scaled {
    Tensor t;
    double log_scale = 0.0;  // true value is t * exp(log_scale)
};

Scaled contract_in_order(const std::vector<const Tensor *> &seq) {
    Scaled acc;
    for (const Tensor *t : seq) {
        acc.t = contract(acc.t, *t);
        const double n = norm(acc.t);
        if (n > 0.0 && std::isfinite(n)) {
            acc.t *= 1.0 / n;
            acc.log_scale += std::log(n);
        }
    }
    return acc;
}

// Contracts seq[0, split) forwards and seq[split, end) backwards, then joins
// the two halves. Keeps the open legs of a cut edge out of the long sweep.
Tensor contract_split(const std::vector<const Tensor *> &seq, std::size_t split) {
    const Scaled left = contract_in_order({seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(split)});
    const Scaled right = contract_in_order({seq.rbegin(), seq.rend() - static_cast<std::ptrdiff_t>(split)});
    return contract(left.t, right.t);
}

}  // namespace

EdgeEnvironment edge_environment_exact(const VidalTNS &state, int edge_id, std::size_t max_elements) {
    const auto &g = state.graph();
    if (edge_id < 0 || edge_id >= g.num_edges()) {
        throw std::out_of_range("edge_environment_exact: bad edge id");
    }
    const Edge e = g.edge(edge_id);
    const int n = g.num_vertices();
    const Index ka = state.bond(edge_id).index;
    const Index kb = make_index(ka.dim, "cut");

    std::vector<Tensor> kets(n), bras(n);
    for (VertexId v = 0; v < n; ++v) {
        kets[v] = state.weighted_gamma(v, 0.5);
        if (v == e.b) {
            kets[v] = replace_index(std::move(kets[v]), ka, kb);
        }
        bras[v] = bra_of(kets[v], state.phys(v));
    }

    // Number of entries left after contracting the listed tensors.
    auto result_size = [](std::initializer_list<const Tensor *> ts) {
        std::map<std::uint64_t, std::pair<int, int>> seen;  // uid -> (dim, count)
        for (const Tensor *t : ts) {
            for (const auto &i : t->indices()) {
                auto &slot = seen[i.uid];
                slot.first = i.dim;
                ++slot.second;
            }
        }
        double size = 1.0;
        for (const auto &[uid, dc] : seen) {
            if (dc.second == 1) {
                size *= dc.first;
            }
        }
        return size;
    };

    std::vector<bool> absorbed(n, false);
    Tensor acc;
    for (int step = 0; step < n; ++step) {
        VertexId pick = -1;
        double best = std::numeric_limits<double>::infinity();
        if (step == 0) {
            pick = e.a;
            best = result_size({&acc, &kets[pick], &bras[pick]});
        } else {
            for (VertexId v = 0; v < n; ++v) {
                if (absorbed[v]) {
                    continue;
                }
                bool adjacent = false;
                for (VertexId w : g.neighbors(v)) {
                    adjacent = adjacent || absorbed[w];
                }
                if (!adjacent) {
                    continue;
                }
                const double size = result_size({&acc, &kets[v], &bras[v]});
                if (size < best) {
                    best = size;
                    pick = v;
                }
            }
            if (pick < 0) {
                pick = static_cast<VertexId>(std::find(absorbed.begin(), absorbed.end(), false) - absorbed.begin());
                best = result_size({&acc, &kets[pick], &bras[pick]});
            }
        }
        const double half = result_size({&acc, &kets[pick]});
        if (std::max(best, half) > static_cast<double>(max_elements)) {
            throw std::length_error("edge_environment_exact: contraction too large for exact evaluation");
        }
        acc = contract(contract(acc, kets[pick]), bras[pick]);
        const double nrm = norm(acc);
        if (nrm > 0.0) {
            acc *= 1.0 / nrm;
        }
        absorbed[pick] = true;
    }
    return make_environment(acc, ka, kb, edge_id, EnvironmentMethod::exact, 0);
}

double bp_error_estimate(std::span<const double> sigma) {
    if (sigma.empty()) {
        throw std::invalid_argument("bp_error_estimate: empty spectrum");
    }
    const auto top = std::max_element(sigma.begin(), sigma.end());
    double total = 0.0, tail = 0.0;
    for (auto it = sigma.begin(); it != sigma.end(); ++it) {
        total += *it * *it;
        if (it != top) {
            tail += *it * *it;
        }
    }
    if (!(total > 0.0)) {
        throw std::invalid_argument("bp_error_estimate: all-zero spectrum");
    }
    const double t = tail / total;
    // 1 - sqrt(1 - t) without cancellation for small t.
    return t / (1.0 + std::sqrt(1.0 - t));
}

double bp_error_estimate(const EdgeEnvironment &env) { return bp_error_estimate(env.sigma); }

void validate(const BoundaryMpsConfig &cfg) {
    if (cfg.max_dim < 1 || cfg.cutoff < 0.0 || cfg.power_iterations < 0) {
        throw std::invalid_argument("boundary MPS config: need D >= 1, cutoff >= 0, power_iterations >= 0");
    }
}

namespace {

struct Truncation {
    Eigen::MatrixXcd u;
    Eigen::VectorXd s;
    Eigen::MatrixXcd v;
    double discarded = 0.0;
};

Eigen::MatrixXcd orthonormal_columns(const Eigen::MatrixXcd &y) {
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(y);
    return qr.householderQ() * Eigen::MatrixXcd::Identity(y.rows(), y.cols());
}

// Rank-k truncated SVD. Large matrices go through a randomized range finder
// with power iterations; small ones are decomposed directly.
Truncation truncated_svd(const Eigen::MatrixXcd &m, int k, double cutoff, int power_iterations, std::mt19937_64 &rng) {
    const Eigen::Index small = std::min(m.rows(), m.cols());
    const Eigen::Index sample = static_cast<Eigen::Index>(k) + 10;
    Eigen::MatrixXcd u, v;
    Eigen::VectorXd s;
    if (2 * sample >= small) {
        DenseSvd svd = dense_svd(m);
        u = std::move(svd.u);
        s = std::move(svd.s);
        v = std::move(svd.v);
    } else {
        std::normal_distribution<double> nd;
        Eigen::MatrixXcd omega(m.cols(), sample);
        for (Eigen::Index j = 0; j < sample; ++j) {
            for (Eigen::Index i = 0; i < m.cols(); ++i) {
                omega(i, j) = cplx(nd(rng), nd(rng));
            }
        }
        Eigen::MatrixXcd q = orthonormal_columns(m * omega);
        for (int it = 0; it < power_iterations; ++it) {
            const Eigen::MatrixXcd z = orthonormal_columns(m.adjoint() * q);
            q = orthonormal_columns(m * z);
        }
        const Eigen::MatrixXcd b = q.adjoint() * m;
        DenseSvd svd = dense_svd(b);
        u = q * svd.u;
        s = std::move(svd.s);
        v = std::move(svd.v);
    }
    const double smax = s.size() > 0 ? s[0] : 0.0;
    Eigen::Index keep = 0;
    while (keep < s.size() && keep < k && s[keep] > cutoff * smax && s[keep] > 0.0) {
        ++keep;
    }
    keep = std::max<Eigen::Index>(keep, 1);
    Truncation t;
    t.u = u.leftCols(keep);
    t.s = s.head(keep);
    t.v = v.leftCols(keep);
    const double total = m.squaredNorm();
    t.discarded = total > 0.0 ? std::max(0.0, total - t.s.squaredNorm()) / total : 0.0;
    return t;
}

struct Mps {
    std::vector<Tensor> sites;
    std::vector<int> legs;  // edge carried by each site, in chain order
};

std::optional<Index> shared_index(const Tensor &a, const Tensor &b) {
    for (const Index &i : a.indices()) {
        if (b.has_index(i)) {
            return i;
        }
    }
    return std::nullopt;
}

// Right-canonical copy: every site but the first becomes a row isometry, so
// zip-up truncations of the next row are made in the correct metric.
Mps right_canonical(Mps m) {
    for (std::size_t j = m.sites.size(); j-- > 1;) {
        const auto bond = shared_index(m.sites[j - 1], m.sites[j]);
        if (!bond) {
            throw std::logic_error("boundary MPS: neighbouring sites share no bond");
        }
        const Index row[] = {*bond};
        const Eigen::MatrixXcd mat = to_matrix(m.sites[j], row);
        std::vector<Index> cols;
        for (const Index &i : m.sites[j].indices()) {
            if (i != *bond) {
                cols.push_back(i);
            }
        }
        // mat = L Q with Q's rows orthonormal, from the QR of mat^H.
        Eigen::HouseholderQR<Eigen::MatrixXcd> qr(mat.adjoint());
        const Eigen::Index k = std::min(mat.rows(), mat.cols());
        const Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(mat.cols(), k);
        const Eigen::MatrixXcd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
        const Index nb = make_index(static_cast<int>(k), "bmps");
        m.sites[j] = from_matrix(q.adjoint(), {nb}, cols);
        Tensor prev = contract(m.sites[j - 1], from_matrix(r.adjoint(), {*bond}, {nb}));
        const double nrm = norm(prev);
        if (nrm > 0.0) {
            prev *= 1.0 / nrm;
        }
        m.sites[j - 1] = std::move(prev);
    }
    return m;
}

}  // namespace

struct BoundaryContractor::Impl {
    LatticeGraph graph;
    BoundaryMpsConfig cfg;
    std::vector<Tensor> kets, bras;
    std::vector<Index> phys, bond_index;
    std::vector<std::vector<VertexId>> line_rows;
    std::vector<std::vector<int>> up_edges, down_edges;
    std::vector<std::optional<Mps>> top, top_bridged, bottom, bottom_bridged;
    std::mt19937_64 rng{0x5eedb0u};
    double max_discarded = 0.0;

    Impl(const VidalTNS &state, BoundaryMpsConfig c) : graph(state.graph()), cfg(c) {
        validate(cfg);
        if (!graph.has_rows()) {
            throw std::invalid_argument("boundary MPS needs row geometry on the lattice");
        }
        const int rows = graph.num_rows();
        if (rows % 2 == 0) {
            throw std::invalid_argument("boundary MPS: rows must start and end with a line row");
        }
        const int n = graph.num_vertices();
        for (VertexId v = 0; v < n; ++v) {
            kets.push_back(state.weighted_gamma(v, 0.5));
            phys.push_back(state.phys(v));
            bras.push_back(bra_of(kets.back(), phys.back()));
        }
        for (int id = 0; id < graph.num_edges(); ++id) {
            bond_index.push_back(state.bond(id).index);
        }
        for (int r = 0; r < rows; r += 2) {
            line_rows.push_back(graph.row_vertices(r));
        }
        up_edges.resize(n);
        down_edges.resize(n);
        std::vector<int> pos_in_row(n, 0);
        for (int r = 0; r < rows; ++r) {
            const auto verts = graph.row_vertices(r);
            for (std::size_t k = 0; k < verts.size(); ++k) {
                pos_in_row[verts[k]] = static_cast<int>(k);
            }
        }
        for (VertexId v = 0; v < n; ++v) {
            for (int id : graph.incident(v)) {
                const VertexId w = graph.edge(id).other(v);
                const int dr = graph.row_of(w) - graph.row_of(v);
                if (dr == 0) {
                    if (graph.row_of(v) % 2 == 1) {
                        throw std::invalid_argument("boundary MPS: bridge rows cannot have internal edges");
                    }
                    if (std::abs(pos_in_row[w] - pos_in_row[v]) != 1) {
                        throw std::invalid_argument("boundary MPS: line rows must be chains in column order");
                    }
                } else if (dr == -1) {
                    up_edges[v].push_back(id);
                } else if (dr == 1) {
                    down_edges[v].push_back(id);
                } else {
                    throw std::invalid_argument("boundary MPS: edge skips a row");
                }
            }
            auto by_col = [&](int x, int y) {
                const int cx = graph.col_of(graph.edge(x).other(v));
                const int cy = graph.col_of(graph.edge(y).other(v));
                return cx != cy ? cx < cy : x < y;
            };
            std::sort(up_edges[v].begin(), up_edges[v].end(), by_col);
            std::sort(down_edges[v].begin(), down_edges[v].end(), by_col);
            if (graph.row_of(v) % 2 == 1 && (up_edges[v].size() != 1 || down_edges[v].size() != 1)) {
                throw std::invalid_argument("boundary MPS: bridge vertices need one neighbour above and below");
            }
        }
        const auto nl = line_rows.size();
        top.resize(nl);
        top_bridged.resize(nl);
        bottom.resize(nl);
        bottom_bridged.resize(nl);
    }

    int last_line() const { return static_cast<int>(line_rows.size()) - 1; }

    VertexId bridge_of(int edge_id) const {
        const Edge &e = graph.edge(edge_id);
        return graph.row_of(e.a) % 2 == 1 ? e.a : e.b;
    }

    int other_edge_of_bridge(VertexId b, int edge_id) const {
        for (int id : graph.incident(b)) {
            if (id != edge_id) {
                return id;
            }
        }
        throw std::logic_error("bridge vertex without a second edge");
    }

    // Zip-up of one line row into a boundary MPS. `downward` consumes the
    // row's up legs and emits its down legs.
    Mps absorb_row(const Mps *in_raw, int line, bool downward) {
        std::optional<Mps> canonical;
        if (in_raw != nullptr) {
            canonical = right_canonical(*in_raw);
        }
        const Mps *in = canonical ? &*canonical : nullptr;
        const auto &in_edges = downward ? up_edges : down_edges;
        const auto &out_edges = downward ? down_edges : up_edges;
        Mps out;
        Tensor c;
        std::size_t next = 0;
        std::optional<Index> left;
        for (VertexId w : line_rows[line]) {
            for (int f : in_edges[w]) {
                if (in == nullptr || next >= in->legs.size() || in->legs[next] != f) {
                    throw std::logic_error("boundary MPS: bridge order does not match the row order");
                }
                c = contract(c, in->sites[next++]);
            }
            c = contract(contract(c, kets[w]), bras[w]);
            for (int f : out_edges[w]) {
                std::vector<Index> rows;
                if (left) {
                    rows.push_back(*left);
                }
                rows.push_back(bond_index[f]);
                rows.push_back(bond_index[f].prime());
                const std::vector<Index> cols = legs_except(c, rows);
                const Eigen::MatrixXcd m = to_matrix(c, rows);
                Truncation t = truncated_svd(m, cfg.max_dim, cfg.cutoff, cfg.power_iterations, rng);
                max_discarded = std::max(max_discarded, t.discarded);
                Index nb = make_index(static_cast<int>(t.s.size()), "bmps");
                out.sites.push_back(from_matrix(t.u, rows, {nb}));
                out.legs.push_back(f);
                const Eigen::MatrixXcd rest = t.s.asDiagonal() * t.v.adjoint();
                c = from_matrix(rest, {nb}, cols);
                left = nb;
            }
            const double nrm = norm(c);
            if (nrm > 0.0) {
                c *= 1.0 / nrm;
            }
        }
        if (in != nullptr && next != in->legs.size()) {
            throw std::logic_error("boundary MPS: unconsumed boundary legs");
        }
        if (!out.sites.empty()) {
            out.sites.back() = contract(out.sites.back(), c);
        }
        return out;
    }

    Mps absorb_bridges(const Mps &in) {
        Mps out = in;
        for (std::size_t j = 0; j < in.sites.size(); ++j) {
            const VertexId b = bridge_of(in.legs[j]);
            Tensor t = contract(contract(in.sites[j], kets[b]), bras[b]);
            const double nrm = norm(t);
            if (nrm > 0.0) {
                t *= 1.0 / nrm;
            }
            out.sites[j] = std::move(t);
            out.legs[j] = other_edge_of_bridge(b, in.legs[j]);
        }
        return out;
    }

    const Mps &top_after(int line) {
        if (!top[line]) {
            top[line] = absorb_row(line == 0 ? nullptr : &top_bridged_after(line - 1), line, true);
        }
        return *top[line];
    }

    const Mps &top_bridged_after(int line) {
        if (!top_bridged[line]) {
            top_bridged[line] = absorb_bridges(top_after(line));
        }
        return *top_bridged[line];
    }

    const Mps &bottom_after(int line) {
        if (!bottom[line]) {
            bottom[line] = absorb_row(line == last_line() ? nullptr : &bottom_bridged_after(line + 1), line, false);
        }
        return *bottom[line];
    }

    const Mps &bottom_bridged_after(int line) {
        if (!bottom_bridged[line]) {
            bottom_bridged[line] = absorb_bridges(bottom_after(line));
        }
        return *bottom_bridged[line];
    }

    // Tensors of a line row sandwiched between the boundaries above and below,
    // in contraction order. `ket_of`/`bra_of_v` supply possibly modified tensors.
    template <typename KetFn, typename BraFn>
    std::vector<const Tensor *> row_sequence(int line, const KetFn &ket_of, const BraFn &bra_fn) {
        const Mps *above = line > 0 ? &top_bridged_after(line - 1) : nullptr;
        const Mps *below = line < last_line() ? &bottom_bridged_after(line + 1) : nullptr;
        std::vector<const Tensor *> seq;
        std::size_t ia = 0, ib = 0;
        for (VertexId w : line_rows[line]) {
            for (int f : up_edges[w]) {
                if (above == nullptr || above->legs.at(ia) != f) {
                    throw std::logic_error("boundary MPS: upper boundary out of order");
                }
                seq.push_back(&above->sites[ia++]);
            }
            for (int f : down_edges[w]) {
                if (below == nullptr || below->legs.at(ib) != f) {
                    throw std::logic_error("boundary MPS: lower boundary out of order");
                }
                seq.push_back(&below->sites[ib++]);
            }
            seq.push_back(&ket_of(w));
            seq.push_back(&bra_fn(w));
        }
        return seq;
    }

    // Boundaries meeting across a bridge row: the upper one carries the legs
    // of edge set `legs`, the lower one the same legs.
    std::pair<const Mps *, const Mps *> across(int edge_id) {
        const Edge &e = graph.edge(edge_id);
        const VertexId upper = graph.row_of(e.a) < graph.row_of(e.b) ? e.a : e.b;
        const int r = graph.row_of(upper);
        if (r % 2 == 0) {
            return {&top_after(r / 2), &bottom_bridged_after(r / 2 + 1)};
        }
        return {&top_bridged_after((r - 1) / 2), &bottom_after((r + 1) / 2)};
    }

    EdgeEnvironment edge_environment(int edge_id) {
        if (edge_id < 0 || edge_id >= graph.num_edges()) {
            throw std::out_of_range("edge_environment_bmps: bad edge id");
        }
        const Edge e = graph.edge(edge_id);
        const Index ka = bond_index[edge_id];
        const Index kb = make_index(ka.dim, "cut");
        auto rename = [&](const Tensor &t) {
            Tensor r = t;
            if (r.has_index(ka)) {
                r = replace_index(std::move(r), ka, kb);
            }
            if (r.has_index(ka.prime())) {
                r = replace_index(std::move(r), ka.prime(), kb.prime());
            }
            return r;
        };
        VertexId near;  // vertex whose legs keep the original index
        Tensor acc;
        if (graph.row_of(e.a) == graph.row_of(e.b)) {
            near = graph.col_of(e.a) < graph.col_of(e.b) ? e.a : e.b;
            const VertexId far = e.other(near);
            const Tensor ket_far = rename(kets[far]);
            const Tensor bra_far = rename(bras[far]);
            auto ket_fn = [&](VertexId w) -> const Tensor & { return w == far ? ket_far : kets[w]; };
            auto bra_fn = [&](VertexId w) -> const Tensor & { return w == far ? bra_far : bras[w]; };
            const auto seq = row_sequence(graph.row_of(near) / 2, ket_fn, bra_fn);
            const auto split = std::find(seq.begin(), seq.end(), &bras[near]) - seq.begin() + 1;
            acc = contract_split(seq, static_cast<std::size_t>(split));
        } else {
            near = graph.row_of(e.a) < graph.row_of(e.b) ? e.a : e.b;
            auto [upper, lower] = across(edge_id);
            if (upper->legs != lower->legs) {
                throw std::logic_error("boundary MPS: boundaries disagree on the crossing legs");
            }
            std::vector<Tensor> renamed(lower->sites.size());
            std::vector<const Tensor *> seq;
            std::size_t split = 0;
            for (std::size_t j = 0; j < upper->sites.size(); ++j) {
                renamed[j] = upper->legs[j] == edge_id ? rename(lower->sites[j]) : lower->sites[j];
                seq.push_back(&upper->sites[j]);
                if (upper->legs[j] == edge_id) {
                    split = seq.size();
                }
                seq.push_back(&renamed[j]);
            }
            acc = contract_split(seq, split);
        }
        const bool near_is_a = near == e.a;
        return make_environment(acc, near_is_a ? ka : kb, near_is_a ? kb : ka, edge_id,
                                EnvironmentMethod::boundary_mps, cfg.max_dim);
    }

    double expect_local(VertexId v, const Eigen::Matrix2cd &op) {
        if (v < 0 || v >= graph.num_vertices()) {
            throw std::out_of_range("expect_local_bmps: vertex out of range");
        }
        const Tensor ket_op = with_op(kets[v], phys[v], op);
        auto value = [&](bool with) {
            const int r = graph.row_of(v);
            if (r % 2 == 0) {
                auto ket_fn = [&](VertexId w) -> const Tensor & { return with && w == v ? ket_op : kets[w]; };
                auto bra_fn = [&](VertexId w) -> const Tensor & { return bras[w]; };
                return contract_in_order(row_sequence(r / 2, ket_fn, bra_fn));
            }
            const Mps &upper = top_after((r - 1) / 2);
            const Mps &lower = bottom_after((r + 1) / 2);
            if (upper.sites.size() != lower.sites.size()) {
                throw std::logic_error("boundary MPS: boundaries around a bridge row differ in length");
            }
            std::vector<const Tensor *> seq;
            for (std::size_t j = 0; j < upper.sites.size(); ++j) {
                const VertexId b = bridge_of(upper.legs[j]);
                if (lower.legs[j] != other_edge_of_bridge(b, upper.legs[j])) {
                    throw std::logic_error("boundary MPS: bridge order differs above and below");
                }
                seq.push_back(&upper.sites[j]);
                seq.push_back(with && b == v ? &ket_op : &kets[b]);
                seq.push_back(&bras[b]);
                seq.push_back(&lower.sites[j]);
            }
            return contract_in_order(seq);
        };
        const Scaled num = value(true);
        const Scaled den = value(false);
        return (num.t.scalar_value() / den.t.scalar_value() * std::exp(num.log_scale - den.log_scale)).real();
    }
};

BoundaryContractor::BoundaryContractor(const VidalTNS &state, BoundaryMpsConfig cfg)
    : impl_(std::make_unique<Impl>(state, cfg)) {}
BoundaryContractor::~BoundaryContractor() = default;
BoundaryContractor::BoundaryContractor(BoundaryContractor &&) noexcept = default;
BoundaryContractor &BoundaryContractor::operator=(BoundaryContractor &&) noexcept = default;

EdgeEnvironment BoundaryContractor::edge_environment(int edge_id) { return impl_->edge_environment(edge_id); }
double BoundaryContractor::expect_local(VertexId v, const Eigen::Matrix2cd &op) { return impl_->expect_local(v, op); }
double BoundaryContractor::max_discarded_weight() const { return impl_->max_discarded; }

EdgeEnvironment edge_environment_bmps(const VidalTNS &state, int edge_id, const BoundaryMpsConfig &cfg) {
    return BoundaryContractor(state, cfg).edge_environment(edge_id);
}

double expect_local_bmps(const VidalTNS &state, VertexId v, const Eigen::Matrix2cd &op, const BoundaryMpsConfig &cfg) {
    return BoundaryContractor(state, cfg).expect_local(v, op);
}

int default_error_edge(const LatticeGraph &graph, VertexId v) {
    const auto &inc = graph.incident(v);
    if (inc.empty()) {
        throw std::invalid_argument("default_error_edge: isolated vertex");
    }
    return inc.front();
}

VidalTNS weakly_entangled_ring(int length, double weak, std::uint64_t seed) {
    const LatticeGraph g = build_ring(length);
    VidalTNS s(g, 2);
    const double nrm = std::sqrt(1.0 + weak * weak);
    for (int id = 0; id < g.num_edges(); ++id) {
        s.set_bond(id, Bond{make_index(2, "ring"), {1.0 / nrm, weak / nrm}});
    }
    // Close to a product state: one dominant entry plus a weak random part.
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::vector<cplx> data(8);
    for (auto &x : data) {
        x = weak * cplx(nd(rng), nd(rng));
    }
    data[0] += 1.0;
    for (VertexId v = 0; v < length; ++v) {
        const int left = g.edge_id((v + length - 1) % length, v);
        const int right = g.edge_id(v, (v + 1) % length);
        s.set_gamma(v, Tensor({s.phys(v), s.bond(left).index, s.bond(right).index}, data));
    }
    return s;
}

RingScaling ring_bp_error_scaling(const std::vector<int> &lengths, const RingFamily &family) {
    if (lengths.size() < 3) {
        throw std::invalid_argument("ring_bp_error_scaling: need at least three ring sizes");
    }
    RingScaling out;
    out.lengths = lengths;
    std::sort(out.lengths.begin(), out.lengths.end());
    for (int l : out.lengths) {
        const VidalTNS state = family(l);
        out.errors.push_back(bp_error_estimate(edge_environment_exact(state, 0)));
    }
    std::vector<std::pair<double, double>> pts;
    for (std::size_t k = 0; k < out.errors.size(); ++k) {
        if (out.errors[k] > 0.0) {
            pts.emplace_back(out.lengths[k], std::log(out.errors[k]));
        }
        if (k > 0 && out.errors[k - 1] > 0.0 && !(out.errors[k] < out.errors[k - 1])) {
            out.monotone = false;
        }
        if (k > 0 && out.errors[k - 1] == 0.0 && out.errors[k] > 0.0) {
            out.monotone = false;
        }
    }
    if (pts.size() < 2) {
        out.c = std::numeric_limits<double>::infinity();
        return out;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(pts.size());
    for (auto [x, y] : pts) {
        sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    out.intercept = (sy - slope * sx) / n;
    out.c = -slope;
    double ss = 0.0;
    for (auto [x, y] : pts) {
        const double r = y - (out.intercept + slope * x);
        ss += r * r;
    }
    out.fit_residual = std::sqrt(ss / n);
    out.gapped = out.fit_residual < 0.5;
    return out;
}

}  // namespace bptns
