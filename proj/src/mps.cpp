#include "bptns/mps.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "bptns/oracle.hpp"
#include "bptns/tensor.hpp"
#include "json.hpp"

namespace bptns {

SiteOrdering::SiteOrdering(std::string name, std::vector<VertexId> sites)
    : name_(std::move(name)), sites_(std::move(sites)), position_(sites_.size(), -1) {
    for (std::size_t k = 0; k < sites_.size(); ++k) {
        const VertexId v = sites_[k];
        if (v < 0 || v >= static_cast<VertexId>(sites_.size()) || position_[v] != -1) {
            throw std::invalid_argument("ordering '" + name_ + "' is not a permutation (entry " + std::to_string(k) +
                                        " = " + std::to_string(v) + ")");
        }
        position_[v] = static_cast<int>(k);
    }
}

SiteOrdering reference_ordering(const LatticeGraph &graph) {
    std::vector<VertexId> sites(static_cast<std::size_t>(graph.num_vertices()));
    for (VertexId v = 0; v < graph.num_vertices(); ++v) {
        sites[v] = v;
    }
    return {"reference", std::move(sites)};
}

SiteOrdering snake_ordering(const LatticeGraph &graph) {
    if (!graph.has_rows()) {
        throw std::invalid_argument("snake ordering needs row geometry");
    }
    std::vector<VertexId> sites;
    for (int r = 0; r < graph.num_rows(); ++r) {
        auto row = graph.row_vertices(r);
        if ((r / 2) % 2 == 1) {
            std::reverse(row.begin(), row.end());
        }
        sites.insert(sites.end(), row.begin(), row.end());
    }
    return {"snake", std::move(sites)};
}

SiteOrdering ordering_from_json(const std::string &text) {
    const auto j = nlohmann::json::parse(text);
    return {j.value("name", std::string("custom")), j.at("sites").get<std::vector<VertexId>>()};
}

std::string to_json(const SiteOrdering &ordering) {
    nlohmann::json j;
    j["name"] = ordering.name();
    j["sites"] = ordering.sites();
    return j.dump();
}

SiteOrdering load_ordering(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open ordering file " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ordering_from_json(ss.str());
}

SiteOrdering resolve_ordering(const LatticeGraph &graph, const std::string &name_or_path) {
    SiteOrdering o;
    if (name_or_path == "reference") {
        o = reference_ordering(graph);
    } else if (name_or_path == "snake") {
        o = snake_ordering(graph);
    } else {
        o = load_ordering(name_or_path);
    }
    if (o.length() != graph.num_vertices()) {
        throw std::invalid_argument("ordering covers " + std::to_string(o.length()) + " sites, lattice has " +
                                    std::to_string(graph.num_vertices()));
    }
    return o;
}

int DiagonalMpo::bond_dim(int cut) const {
    if (cut < first || cut >= last()) {
        return 1;
    }
    return static_cast<int>(w[cut - first][0].cols());
}

int DiagonalMpo::max_bond_dim() const {
    int d = 1;
    for (const auto &t : w) {
        d = std::max(d, static_cast<int>(t[0].cols()));
    }
    return d;
}

std::complex<double> DiagonalMpo::value(std::span<const int> bits) const {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(1, 1);
    for (std::size_t k = 0; k < w.size(); ++k) {
        m = m * w[k][bits[first + k]];
    }
    return m(0, 0);
}

namespace {

Eigen::MatrixXcd scalar_matrix(cplx x) {
    Eigen::MatrixXcd m(1, 1);
    m(0, 0) = x;
    return m;
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd &a, const Eigen::MatrixXcd &b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

struct Split {
    Eigen::MatrixXcd q;  // isometry
    Eigen::MatrixXcd r;
};

Split thin_qr(const Eigen::MatrixXcd &m) {
    const Eigen::Index k = std::min(m.rows(), m.cols());
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(m);
    Split s;
    s.q = qr.householderQ() * Eigen::MatrixXcd::Identity(m.rows(), k);
    s.r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    return s;
}

Eigen::MatrixXcd stack_rows(const SiteTensor &a) {
    Eigen::MatrixXcd m(2 * a[0].rows(), a[0].cols());
    m << a[0], a[1];
    return m;
}

Eigen::MatrixXcd stack_cols(const SiteTensor &a) {
    Eigen::MatrixXcd m(a[0].rows(), 2 * a[0].cols());
    m << a[0], a[1];
    return m;
}

// Left-to-right QR, then right-to-left SVD dropping singular values below
// tol * sigma_max. Exact up to tol; leaves small O(1) entries everywhere.
void compress_diagonal(std::vector<SiteTensor> &w) {
    const std::size_t n = w.size();
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const Eigen::Index dl = w[k][0].rows();
        Split s = thin_qr(stack_rows(w[k]));
        w[k][0] = s.q.topRows(dl);
        w[k][1] = s.q.bottomRows(dl);
        for (auto &x : w[k + 1]) {
            x = s.r * x;
        }
    }
    for (std::size_t k = n - 1; k >= 1; --k) {
        const Eigen::Index dr = w[k][0].cols();
        const DenseSvd svd = dense_svd(stack_cols(w[k]));
        Eigen::Index keep = 0;
        while (keep < svd.s.size() && svd.s[keep] > 1e-12 * svd.s[0]) {
            ++keep;
        }
        keep = std::max<Eigen::Index>(keep, 1);
        const Eigen::MatrixXcd vh = svd.v.leftCols(keep).adjoint();
        w[k][0] = std::sqrt(2.0) * vh.leftCols(dr);
        w[k][1] = std::sqrt(2.0) * vh.rightCols(dr);
        const Eigen::MatrixXcd us = svd.u.leftCols(keep) * svd.s.head(keep).asDiagonal();
        for (auto &x : w[k - 1]) {
            x = x * us / std::sqrt(2.0);
        }
    }
}

struct Group {
    std::vector<Edge> gates;
    std::vector<std::pair<int, int>> spans;
};

bool fits(const Group &g, int lo, int hi) {
    for (const auto &[a, b] : g.spans) {
        if (b <= lo || a >= hi) {
            continue;
        }
        // Overlapping cuts: every gate crossing a shared cut must share the
        // new gate's left endpoint, or every one its right endpoint.
        bool clash = false;
        const int c0 = std::max(a, lo), c1 = std::min(b, hi);
        for (int c = c0; c < c1 && !clash; ++c) {
            bool same_left = true, same_right = true;
            for (const auto &[x, y] : g.spans) {
                if (x <= c && c < y) {
                    same_left = same_left && x == lo;
                    same_right = same_right && y == hi;
                }
            }
            clash = !same_left && !same_right;
        }
        if (clash) {
            return false;
        }
    }
    return true;
}

DiagonalMpo build_mpo(const Group &g, const SiteOrdering &ordering, double angle) {
    int p = ordering.length(), q = -1;
    for (const auto &[lo, hi] : g.spans) {
        p = std::min(p, lo);
        q = std::max(q, hi);
    }
    DiagonalMpo mpo;
    mpo.gates = g.gates;
    mpo.first = p;
    mpo.w.assign(static_cast<std::size_t>(q - p + 1), {scalar_matrix(1.0), scalar_matrix(1.0)});
    const cplx c = std::cos(angle), is = cplx(0.0, std::sin(angle));
    for (const auto &[lo, hi] : g.spans) {
        for (int k = p; k <= q; ++k) {
            auto &w = mpo.w[k - p];
            for (int s = 0; s < 2; ++s) {
                const double z = s == 0 ? 1.0 : -1.0;
                Eigen::MatrixXcd f;
                if (k < lo || k > hi) {
                    f = scalar_matrix(1.0);
                } else if (k == lo) {
                    f.resize(1, 2);
                    f << 1.0, z;
                } else if (k == hi) {
                    f.resize(2, 1);
                    f << c, is * z;
                } else {
                    f = Eigen::MatrixXcd::Identity(2, 2);
                }
                w[s] = kron(w[s], f);
            }
        }
        compress_diagonal(mpo.w);
    }
    if (mpo.max_bond_dim() > 2) {
        throw std::logic_error("ZZ group does not compress to bond dimension 2");
    }
    return mpo;
}

}  // namespace

std::vector<DiagonalMpo> decompose_zz_gates(const std::vector<Edge> &gates, const SiteOrdering &ordering, double angle,
                                            int max_mpos) {
    struct Placed {
        Edge e;
        int lo, hi;
    };
    std::vector<Placed> order;
    for (const Edge &e : gates) {
        if (e.a < 0 || e.b < 0 || e.a >= ordering.length() || e.b >= ordering.length() || e.a == e.b) {
            throw std::out_of_range("decompose_zz_gates: gate outside the ordering");
        }
        const int pa = ordering.position_of(e.a), pb = ordering.position_of(e.b);
        order.push_back({e, std::min(pa, pb), std::max(pa, pb)});
    }
    std::stable_sort(order.begin(), order.end(),
                     [](const Placed &x, const Placed &y) { return std::tie(x.lo, x.hi) < std::tie(y.lo, y.hi); });
    std::vector<Group> groups;
    for (const Placed &g : order) {
        auto it = std::find_if(groups.begin(), groups.end(), [&](const Group &grp) { return fits(grp, g.lo, g.hi); });
        if (it == groups.end()) {
            groups.emplace_back();
            it = std::prev(groups.end());
        }
        it->gates.push_back(g.e);
        it->spans.emplace_back(g.lo, g.hi);
    }
    if (max_mpos > 0 && static_cast<int>(groups.size()) > max_mpos) {
        std::string msg = "ZZ layer needs " + std::to_string(groups.size()) + " MPOs under ordering '" +
                          ordering.name() + "'; gates beyond the limit:";
        for (std::size_t k = static_cast<std::size_t>(max_mpos); k < groups.size(); ++k) {
            for (const Edge &e : groups[k].gates) {
                msg += " (" + std::to_string(e.a) + "," + std::to_string(e.b) + ")";
            }
        }
        throw std::runtime_error(msg);
    }
    std::vector<DiagonalMpo> out;
    out.reserve(groups.size());
    for (const Group &g : groups) {
        out.push_back(build_mpo(g, ordering, angle));
    }
    return out;
}

std::vector<DiagonalMpo> decompose_zz_layer(const LatticeGraph &graph, const SiteOrdering &ordering, double angle,
                                            int max_mpos) {
    if (ordering.length() != graph.num_vertices()) {
        throw std::invalid_argument("decompose_zz_layer: ordering does not cover the lattice");
    }
    return decompose_zz_gates(graph.edges(), ordering, angle, max_mpos);
}

MpsState::MpsState(int length) {
    if (length < 1) {
        throw std::invalid_argument("MpsState: length must be positive");
    }
    sites_.assign(static_cast<std::size_t>(length), {scalar_matrix(1.0), scalar_matrix(0.0)});
}

int MpsState::max_bond_dim() const {
    int d = 1;
    for (int k = 0; k + 1 < length(); ++k) {
        d = std::max(d, bond_dim(k));
    }
    return d;
}

void MpsState::move_center(int k) {
    if (k < 0 || k >= length()) {
        throw std::out_of_range("MpsState::move_center");
    }
    while (center_ < k) {
        auto &a = sites_[center_];
        const Eigen::Index dl = a[0].rows();
        Split s = thin_qr(stack_rows(a));
        a[0] = s.q.topRows(dl);
        a[1] = s.q.bottomRows(dl);
        for (auto &x : sites_[center_ + 1]) {
            x = s.r * x;
        }
        ++center_;
    }
    while (center_ > k) {
        auto &a = sites_[center_];
        const Eigen::Index dr = a[0].cols();
        Split s = thin_qr(stack_cols(a).adjoint());
        const Eigen::MatrixXcd qh = s.q.adjoint();
        a[0] = qh.leftCols(dr);
        a[1] = qh.rightCols(dr);
        const Eigen::MatrixXcd rh = s.r.adjoint();
        for (auto &x : sites_[center_ - 1]) {
            x = x * rh;
        }
        --center_;
    }
}

void MpsState::apply_single(int k, const Eigen::Matrix2cd &u) {
    auto &a = sites_.at(k);
    const Eigen::MatrixXcd a0 = a[0];
    a[0] = u(0, 0) * a0 + u(0, 1) * a[1];
    a[1] = u(1, 0) * a0 + u(1, 1) * a[1];
}

double MpsState::apply_mpo(const DiagonalMpo &mpo, int chi, double cutoff) {
    if (mpo.w.empty()) {
        return 0.0;
    }
    if (chi < 1) {
        throw std::invalid_argument("apply_mpo: chi must be >= 1");
    }
    const int p = mpo.first, q = mpo.last();
    if (p < 0 || q >= length()) {
        throw std::out_of_range("apply_mpo: MPO outside the chain");
    }
    move_center(p);
    for (int k = p; k <= q; ++k) {
        for (int s = 0; s < 2; ++s) {
            sites_[k][s] = kron(sites_[k][s], mpo.w[k - p][s]);
        }
    }
    // The block p..q is no longer canonical; a QR sweep restores it and
    // leaves the center at q.
    move_center(q);
    double eps = 0.0;
    for (int k = q; k > p; --k) {
        auto &a = sites_[k];
        if (mpo.bond_dim(k - 1) == 1) {
            move_center(k - 1);
            continue;
        }
        const Eigen::Index dr = a[0].cols();
        const DenseSvd svd = dense_svd(stack_cols(a));
        const double total = svd.s.squaredNorm();
        Eigen::Index keep = 0;
        while (keep < svd.s.size() && keep < chi && svd.s[keep] > cutoff * svd.s[0]) {
            ++keep;
        }
        keep = std::max<Eigen::Index>(keep, 1);
        const double kept = svd.s.head(keep).squaredNorm();
        eps += total > 0.0 ? std::max(0.0, total - kept) / total : 0.0;
        const Eigen::MatrixXcd vh = svd.v.leftCols(keep).adjoint();
        a[0] = vh.leftCols(dr);
        a[1] = vh.rightCols(dr);
        const Eigen::VectorXd s = svd.s.head(keep) * std::sqrt(total / kept);
        const Eigen::MatrixXcd us = svd.u.leftCols(keep) * s.asDiagonal();
        for (auto &x : sites_[k - 1]) {
            x = x * us;
        }
        center_ = k - 1;
    }
    return eps;
}

double MpsState::expect_local(int k, const Eigen::Matrix2cd &op) {
    move_center(k);
    const auto &a = sites_[k];
    cplx num = 0.0;
    for (int s = 0; s < 2; ++s) {
        for (int t = 0; t < 2; ++t) {
            if (op(s, t) != cplx(0.0)) {
                num += op(s, t) * (a[s].conjugate().cwiseProduct(a[t])).sum();
            }
        }
    }
    const double den = a[0].squaredNorm() + a[1].squaredNorm();
    return num.real() / den;
}

double MpsState::norm() const {
    const auto &a = sites_[center_];
    return std::sqrt(a[0].squaredNorm() + a[1].squaredNorm());
}

double MpsState::canonical_residual() const {
    double worst = 0.0;
    for (int k = 0; k < length(); ++k) {
        const auto &a = sites_[k];
        Eigen::MatrixXcd g;
        if (k < center_) {
            g = a[0].adjoint() * a[0] + a[1].adjoint() * a[1];
        } else if (k > center_) {
            g = a[0] * a[0].adjoint() + a[1] * a[1].adjoint();
        } else {
            continue;
        }
        g -= Eigen::MatrixXcd::Identity(g.rows(), g.cols());
        worst = std::max(worst, g.cwiseAbs().maxCoeff());
    }
    return worst;
}

Eigen::VectorXcd MpsState::to_dense(int max_sites) const {
    if (length() > max_sites) {
        throw std::length_error("MpsState::to_dense: too many sites");
    }
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Ones(1, 1);
    for (const auto &a : sites_) {
        Eigen::MatrixXcd next(acc.rows() * 2, a[0].cols());
        for (Eigen::Index r = 0; r < acc.rows(); ++r) {
            next.row(2 * r) = acc.row(r) * a[0];
            next.row(2 * r + 1) = acc.row(r) * a[1];
        }
        acc = std::move(next);
    }
    return acc.col(0);
}

double accumulated_error(std::span<const double> epsilon, ErrorForm form) {
    for (double e : epsilon) {
        if (!(e >= 0.0 && e <= 1.0)) {
            throw std::invalid_argument("accumulated_error: epsilon outside [0, 1]");
        }
    }
    if (epsilon.empty()) {
        return 0.0;
    }
    if (form == ErrorForm::product) {
        double keep = 1.0;
        for (double e : epsilon) {
            keep *= 1.0 - e;
        }
        return 1.0 - keep;
    }
    const double inv_n = 1.0 / static_cast<double>(epsilon.size());
    double sum = 0.0;
    for (double e : epsilon) {
        sum += std::pow(1.0 - e, inv_n);
    }
    return 1.0 - sum;
}

MpsResult mps_evolve(const LatticeGraph &graph, const SiteOrdering &ordering, const TrotterConfig &cfg, VertexId target,
                     const MpsOptions &opts) {
    validate(cfg);
    if (cfg.dagger) {
        throw std::invalid_argument("mps_evolve: only forward evolution is supported");
    }
    if (target < 0 || target >= graph.num_vertices()) {
        throw std::out_of_range("mps_evolve: target out of range");
    }
    if (ordering.length() != graph.num_vertices()) {
        throw std::invalid_argument("mps_evolve: ordering does not cover the lattice");
    }
    const int n = cfg.n_steps;
    const int len = graph.num_vertices();
    const GateLayer full = build_step(graph, cfg.theta_h, false);
    const Eigen::Matrix2cd rx = rx_gate(full.x_angle);
    Eigen::Matrix2cd z = Eigen::Matrix2cd::Zero();
    z(0, 0) = 1.0;
    z(1, 1) = -1.0;

    // Light-cone layers for the deepest run; a run of depth d uses the last d.
    std::vector<GateLayer> layers;
    if (opts.lcdr) {
        layers = lightcone_reduce(graph, {target}, n, true).layers;
    } else {
        layers.assign(static_cast<std::size_t>(n), full);
    }
    std::vector<std::optional<std::vector<DiagonalMpo>>> mpos(layers.size());
    auto mpos_of = [&](std::size_t idx) -> const std::vector<DiagonalMpo> & {
        if (!mpos[idx]) {
            if (!opts.lcdr && idx > 0) {
                mpos[idx] = *mpos[0];
            } else {
                mpos[idx] = decompose_zz_gates(layers[idx].zz_gates, ordering, full.zz_angle, opts.max_mpos);
            }
        }
        return *mpos[idx];
    };

    MpsResult out;
    auto record = [&](int step, double zval, const MpsRun &run, int count, int max_bond) {
        const std::span<const double> eps(run.epsilon.data(), static_cast<std::size_t>(count));
        out.steps.push_back({step, zval, count, max_bond, accumulated_error(eps, ErrorForm::printed),
                             accumulated_error(eps, ErrorForm::product)});
    };

    const int runs = opts.lcdr ? n : std::min(n, 1);
    for (int r = 0; r < runs; ++r) {
        const int depth = opts.lcdr ? r + 1 : n;
        const std::size_t offset = opts.lcdr ? static_cast<std::size_t>(n - depth) : 0;
        MpsState psi(len);
        MpsRun run;
        run.depth = depth;
        for (int t = 1; t <= depth; ++t) {
            const std::size_t idx = offset + static_cast<std::size_t>(t - 1);
            for (VertexId v : layers[idx].x_sites) {
                psi.apply_single(ordering.position_of(v), rx);
            }
            for (const DiagonalMpo &mpo : mpos_of(idx)) {
                run.epsilon.push_back(psi.apply_mpo(mpo, cfg.chi_max, cfg.cutoff));
                run.step_of.push_back(t);
            }
            if (!opts.lcdr) {
                record(t, psi.expect_local(ordering.position_of(target), z), run,
                       static_cast<int>(run.epsilon.size()), psi.max_bond_dim());
            }
        }
        if (opts.lcdr) {
            record(depth, psi.expect_local(ordering.position_of(target), z), run, static_cast<int>(run.epsilon.size()),
                   psi.max_bond_dim());
        }
        out.runs.push_back(std::move(run));
    }
    return out;
}

}  // namespace bptns
