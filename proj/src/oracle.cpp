#include "bptns/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

namespace bptns {

int DenseState::qubit_of(VertexId v) const {
    const auto it = std::find(vertex_order.begin(), vertex_order.end(), v);
    return it == vertex_order.end() ? -1 : static_cast<int>(it - vertex_order.begin());
}

DenseState zero_state(std::vector<VertexId> vertex_order) {
    const int n = static_cast<int>(vertex_order.size());
    if (n > kDenseQubitCeiling) {
        throw std::length_error("dense state: " + std::to_string(n) + " qubits exceeds the ceiling of " +
                                std::to_string(kDenseQubitCeiling));
    }
    DenseState psi;
    psi.vertex_order = std::move(vertex_order);
    psi.amplitudes = Eigen::VectorXcd::Zero(Eigen::Index{1} << n);
    psi.amplitudes[0] = 1.0;
    return psi;
}

namespace {

std::uint64_t bit_of(const DenseState &psi, int qubit) {
    return std::uint64_t{1} << (psi.num_qubits() - 1 - qubit);
}

// Neumaier-compensated running sum; long amplitude sums otherwise lose
// about sqrt(2^n) ulps.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

int require_qubit(const DenseState &psi, VertexId v) {
    const int q = psi.qubit_of(v);
    if (q < 0) {
        throw std::out_of_range("dense state does not hold vertex " + std::to_string(v));
    }
    return q;
}

}  // namespace

void apply_rx(DenseState &psi, int qubit, double theta) {
    const double c = std::cos(theta / 2);
    const cplx ms(0.0, -std::sin(theta / 2));
    const auto stride = bit_of(psi, qubit);
    const auto size = static_cast<std::uint64_t>(psi.amplitudes.size());
    cplx *amp = psi.amplitudes.data();
    for (std::uint64_t base = 0; base < size; base += 2 * stride) {
        for (std::uint64_t k = base; k < base + stride; ++k) {
            const cplx a0 = amp[k];
            const cplx a1 = amp[k + stride];
            amp[k] = c * a0 + ms * a1;
            amp[k + stride] = ms * a0 + c * a1;
        }
    }
}

void apply_zz_layer(DenseState &psi, const std::vector<std::pair<int, int>> &pairs, double angle) {
    if (pairs.empty()) {
        return;
    }
    std::vector<std::uint64_t> masks;
    masks.reserve(pairs.size());
    for (auto [a, b] : pairs) {
        masks.push_back(bit_of(psi, a) | bit_of(psi, b));
    }
    const int m = static_cast<int>(pairs.size());
    // Phase depends only on how many pairs are anti-aligned.
    std::vector<cplx> phase(static_cast<std::size_t>(m) + 1);
    for (int d = 0; d <= m; ++d) {
        phase[d] = std::polar(1.0, angle * (m - 2 * d));
    }
    const auto size = static_cast<std::uint64_t>(psi.amplitudes.size());
    cplx *amp = psi.amplitudes.data();
    for (std::uint64_t k = 0; k < size; ++k) {
        int d = 0;
        for (auto mask : masks) {
            d += std::popcount(k & mask) == 1;
        }
        amp[k] *= phase[d];
    }
}

double expect_z(const DenseState &psi, VertexId v) {
    const auto bit = bit_of(psi, require_qubit(psi, v));
    CompensatedSum s;
    for (Eigen::Index k = 0; k < psi.amplitudes.size(); ++k) {
        const double p = std::norm(psi.amplitudes[k]);
        s.add((static_cast<std::uint64_t>(k) & bit) ? -p : p);
    }
    return s.value();
}

double expect_pauli(const DenseState &psi, const PauliString &p) {
    if (p.phase() % 2 != 0) {
        throw std::invalid_argument("expect_pauli: string is not Hermitian");
    }
    std::uint64_t xmask = 0, zmask = 0;
    int y_count = 0;
    for (VertexId v : p.support()) {
        const auto bit = bit_of(psi, require_qubit(psi, v));
        if (p.x(v)) xmask |= bit;
        if (p.z(v)) zmask |= bit;
        y_count += p.x(v) && p.z(v);
    }
    // Y = i X Z on each site: <psi| i^y X^x Z^z |psi>.
    const cplx iy = std::pow(cplx(0, 1), y_count);
    CompensatedSum re, im;
    const auto *amp = psi.amplitudes.data();
    for (std::uint64_t k = 0; k < static_cast<std::uint64_t>(psi.amplitudes.size()); ++k) {
        const double sign = std::popcount(k & zmask) % 2 ? -1.0 : 1.0;
        const cplx term = std::conj(amp[k ^ xmask]) * sign * amp[k];
        re.add(term.real());
        im.add(term.imag());
    }
    const double global = p.phase() == 0 ? 1.0 : -1.0;
    return global * (iy * cplx(re.value(), im.value())).real();
}

namespace {

void run_layer(DenseState &psi, const GateLayer &layer, double x_angle, double zz_angle) {
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(layer.zz_gates.size());
    for (const Edge &e : layer.zz_gates) {
        pairs.emplace_back(require_qubit(psi, e.a), require_qubit(psi, e.b));
    }
    auto x_part = [&] {
        if (x_angle == 0.0) {
            return;
        }
        for (VertexId v : layer.x_sites) {
            apply_rx(psi, require_qubit(psi, v), x_angle);
        }
    };
    if (layer.zz_first) {
        apply_zz_layer(psi, pairs, zz_angle);
        x_part();
    } else {
        x_part();
        apply_zz_layer(psi, pairs, zz_angle);
    }
}

}  // namespace

DenseState sv_evolve(const LatticeGraph &graph, const TrotterConfig &cfg, const DenseStepCallback &cb) {
    if (cfg.n_steps < 0) {
        throw std::invalid_argument("sv_evolve: negative step count");
    }
    std::vector<VertexId> order(static_cast<std::size_t>(graph.num_vertices()));
    for (int v = 0; v < graph.num_vertices(); ++v) {
        order[v] = v;
    }
    DenseState psi = zero_state(std::move(order));
    const GateLayer layer = build_step(graph, cfg.theta_h, cfg.dagger);
    for (int step = 1; step <= cfg.n_steps; ++step) {
        run_layer(psi, layer, layer.x_angle, layer.zz_angle);
        if (cb) {
            cb(step, psi);
        }
    }
    return psi;
}

ReducedCircuit lightcone_reduce(const LatticeGraph &graph, const std::vector<VertexId> &targets, int n_steps,
                                bool diagonal_observable) {
    if (n_steps < 0) {
        throw std::invalid_argument("lightcone_reduce: negative step count");
    }
    std::set<VertexId> cone;
    for (VertexId v : targets) {
        if (v < 0 || v >= graph.num_vertices()) {
            throw std::out_of_range("lightcone_reduce: target out of range");
        }
        cone.insert(v);
    }
    ReducedCircuit out;
    out.layers.resize(static_cast<std::size_t>(n_steps));
    for (int t = n_steps; t >= 1; --t) {
        GateLayer &layer = out.layers[t - 1];
        if (!(diagonal_observable && t == n_steps)) {
            std::set<VertexId> grown = cone;
            for (const Edge &e : graph.edges()) {
                if (cone.count(e.a) || cone.count(e.b)) {
                    layer.zz_gates.push_back(e);
                    grown.insert(e.a);
                    grown.insert(e.b);
                }
            }
            cone = std::move(grown);
        }
        layer.x_sites.assign(cone.begin(), cone.end());
    }
    out.qubits.assign(cone.begin(), cone.end());
    return out;
}

DenseState sv_run(const ReducedCircuit &circuit, double theta_h) {
    DenseState psi = zero_state(circuit.qubits);
    for (const GateLayer &layer : circuit.layers) {
        run_layer(psi, layer, theta_h, std::numbers::pi / 4);
    }
    return psi;
}

double lightcone_expect_z(const LatticeGraph &graph, VertexId v, double theta_h, int n_steps) {
    return expect_z(sv_run(lightcone_reduce(graph, {v}, n_steps, true), theta_h), v);
}

Tableau tableau_evolve(const LatticeGraph &graph, double theta_h, int n_steps) {
    clifford_quarter_turns(theta_h);
    if (n_steps < 0) {
        throw std::invalid_argument("tableau_evolve: negative step count");
    }
    const int n = graph.num_vertices();
    Tableau t;
    for (int v = 0; v < n; ++v) {
        t.stabilizers.push_back(PauliString::single(n, v, 'Z'));
        t.destabilizers.push_back(PauliString::single(n, v, 'X'));
    }
    for (int step = 0; step < n_steps; ++step) {
        for (int k = 0; k < n; ++k) {
            t.stabilizers[k] = conjugate_step(t.stabilizers[k], graph, false, theta_h);
            t.destabilizers[k] = conjugate_step(t.destabilizers[k], graph, false, theta_h);
        }
    }
    return t;
}

int tableau_expect(const Tableau &t, const PauliString &p) {
    if (p.phase() % 2 != 0) {
        throw std::invalid_argument("tableau_expect: string is not Hermitian");
    }
    for (const auto &s : t.stabilizers) {
        if (!p.commutes_with(s)) {
            return 0;
        }
    }
    PauliString q(p.num_qubits());
    for (int k = 0; k < t.num_qubits(); ++k) {
        if (!p.commutes_with(t.destabilizers[k])) {
            q = q * t.stabilizers[k];
        }
    }
    if (!q.same_operator(p)) {
        throw std::logic_error("tableau_expect: inconsistent tableau");
    }
    const int diff = ((p.phase() - q.phase()) % 4 + 4) % 4;
    return diff == 0 ? 1 : -1;
}

}  // namespace bptns
