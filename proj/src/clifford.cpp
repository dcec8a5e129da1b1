#include "bptns/clifford.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace bptns {

PauliString::PauliString(int num_qubits)
    : x_(static_cast<std::size_t>(num_qubits), 0), z_(static_cast<std::size_t>(num_qubits), 0) {
    if (num_qubits < 0) {
        throw std::invalid_argument("PauliString: negative qubit count");
    }
}

PauliString PauliString::single(int num_qubits, VertexId v, char op) {
    PauliString p(num_qubits);
    p.set_op(v, op);
    return p;
}

char PauliString::op(VertexId v) const {
    static constexpr char table[2][2] = {{'I', 'Z'}, {'X', 'Y'}};
    return table[x_[v]][z_[v]];
}

void PauliString::set_op(VertexId v, char op) {
    if (v < 0 || v >= num_qubits()) {
        throw std::out_of_range("PauliString: site out of range");
    }
    switch (op) {
    case 'I': x_[v] = 0, z_[v] = 0; break;
    case 'X': x_[v] = 1, z_[v] = 0; break;
    case 'Y': x_[v] = 1, z_[v] = 1; break;
    case 'Z': x_[v] = 0, z_[v] = 1; break;
    default: throw std::invalid_argument(std::string("PauliString: unknown operator ") + op);
    }
}

int PauliString::weight() const {
    int w = 0;
    for (std::size_t v = 0; v < x_.size(); ++v) {
        w += (x_[v] | z_[v]) != 0;
    }
    return w;
}

std::vector<VertexId> PauliString::support() const {
    std::vector<VertexId> out;
    for (std::size_t v = 0; v < x_.size(); ++v) {
        if (x_[v] | z_[v]) {
            out.push_back(static_cast<VertexId>(v));
        }
    }
    return out;
}

bool PauliString::same_operator(const PauliString &other) const {
    return x_ == other.x_ && z_ == other.z_;
}

bool PauliString::commutes_with(const PauliString &other) const {
    if (num_qubits() != other.num_qubits()) {
        throw std::invalid_argument("PauliString: size mismatch");
    }
    int s = 0;
    for (std::size_t v = 0; v < x_.size(); ++v) {
        s += (x_[v] & other.z_[v]) ^ (z_[v] & other.x_[v]);
    }
    return s % 2 == 0;
}

namespace {

// Exponent of i picked up by sigma(x1,z1) * sigma(x2,z2).
int product_phase(int x1, int z1, int x2, int z2) {
    if (x1 == 0 && z1 == 0) {
        return 0;
    }
    if (x1 == 1 && z1 == 1) {
        return z2 - x2;
    }
    if (x1 == 1) {
        return z2 * (2 * x2 - 1);
    }
    return x2 * (1 - 2 * z2);
}

}  // namespace

PauliString PauliString::operator*(const PauliString &other) const {
    if (num_qubits() != other.num_qubits()) {
        throw std::invalid_argument("PauliString: size mismatch");
    }
    PauliString out(num_qubits());
    int k = phase_ + other.phase_;
    for (std::size_t v = 0; v < x_.size(); ++v) {
        k += product_phase(x_[v], z_[v], other.x_[v], other.z_[v]);
        out.x_[v] = x_[v] ^ other.x_[v];
        out.z_[v] = z_[v] ^ other.z_[v];
    }
    out.set_phase(k);
    return out;
}

PauliString parse_pauli(const std::string &text, int num_qubits) {
    PauliString p(num_qubits);
    std::istringstream in(text);
    std::string token;
    bool first = true;
    int phase = 0;
    bool seen_identity = false;
    while (in >> token) {
        std::size_t pos = 0;
        if (first) {
            if (pos < token.size() && (token[pos] == '-' || token[pos] == '+')) {
                phase += token[pos] == '-' ? 2 : 0;
                ++pos;
            }
            if (pos < token.size() && token[pos] == 'i') {
                phase += 1;
                ++pos;
            }
            first = false;
            if (pos == token.size()) {
                continue;
            }
        }
        const char op = token[pos++];
        if (op == 'I' && pos == token.size()) {
            seen_identity = true;
            continue;
        }
        if (op != 'X' && op != 'Y' && op != 'Z') {
            throw std::invalid_argument("parse_pauli: bad token '" + token + "'");
        }
        std::string list = token.substr(pos);
        if (list.empty()) {
            throw std::invalid_argument("parse_pauli: operator without sites in '" + token + "'");
        }
        std::istringstream sites(list);
        std::string item;
        while (std::getline(sites, item, ',')) {
            if (item.empty() || !std::all_of(item.begin(), item.end(), [](unsigned char c) { return std::isdigit(c); })) {
                throw std::invalid_argument("parse_pauli: bad site list in '" + token + "'");
            }
            const int v = std::stoi(item);
            if (v >= num_qubits) {
                throw std::invalid_argument("parse_pauli: site " + item + " out of range");
            }
            if (p.op(v) != 'I') {
                throw std::invalid_argument("parse_pauli: site " + item + " listed twice");
            }
            p.set_op(v, op);
        }
    }
    if (seen_identity && !p.is_identity()) {
        throw std::invalid_argument("parse_pauli: 'I' mixed with other operators");
    }
    p.set_phase(phase);
    return p;
}

std::string to_string(const PauliString &p) {
    static constexpr const char *prefix[4] = {"", "i", "-", "-i"};
    std::string out = prefix[p.phase()];
    if (p.is_identity()) {
        return out + "I";
    }
    bool any = false;
    for (char op : {'X', 'Y', 'Z'}) {
        std::string list;
        for (VertexId v : p.support()) {
            if (p.op(v) == op) {
                list += (list.empty() ? "" : ",") + std::to_string(v);
            }
        }
        if (!list.empty()) {
            out += (any ? " " : "") + std::string(1, op) + list;
            any = true;
        }
    }
    return out;
}

PauliString conjugate_by_rotation(const PauliString &p, const PauliString &q, int alpha_sign) {
    if (p.commutes_with(q)) {
        return p;
    }
    PauliString out = p * q;
    out.set_phase(out.phase() + (alpha_sign > 0 ? 1 : 3));
    return out;
}

int clifford_quarter_turns(double theta) {
    const double k = theta / (std::numbers::pi / 2);
    const double r = std::round(k);
    if (std::abs(k - r) > 1e-12) {
        throw std::invalid_argument("angle is not a Clifford point (multiple of pi/2)");
    }
    return static_cast<int>(r);
}

PauliString conjugate_step(const PauliString &p, const LatticeGraph &graph, bool dagger, double theta) {
    if (p.num_qubits() != graph.num_vertices()) {
        throw std::invalid_argument("conjugate_step: string and graph sizes differ");
    }
    const int turns = clifford_quarter_turns(theta);
    const int n = graph.num_vertices();
    // Rx(k pi/2) = exp(-i (pi/4) X)^k, so |k| rotations with alpha = sign(k) pi/4.
    const int x_reps = std::abs(turns) % 4;
    const int x_sign = (turns > 0) != dagger ? 1 : -1;
    // exp(+i pi/4 ZZ) has alpha = -pi/4.
    const int zz_sign = dagger ? 1 : -1;

    auto x_layer = [&](PauliString s) {
        for (int v = 0; v < n; ++v) {
            if (!s.x(v) && !s.z(v)) {
                continue;
            }
            const PauliString q = PauliString::single(n, v, 'X');
            for (int r = 0; r < x_reps; ++r) {
                s = conjugate_by_rotation(s, q, x_sign);
            }
        }
        return s;
    };
    auto zz_layer = [&](PauliString s) {
        for (const Edge &e : graph.edges()) {
            PauliString q(n);
            q.set_op(e.a, 'Z');
            q.set_op(e.b, 'Z');
            s = conjugate_by_rotation(s, q, zz_sign);
        }
        return s;
    };
    // U = ZZ * X: U p U^dagger conjugates by the X layer first.
    return dagger ? x_layer(zz_layer(p)) : zz_layer(x_layer(p));
}

std::optional<Generator> find_generator(const PauliString &target, const LatticeGraph &graph, int max_steps) {
    if (max_steps < 0 || max_steps > 12) {
        throw std::invalid_argument("find_generator: max_steps must be in 0..12");
    }
    const int n = graph.num_vertices();
    if (target.num_qubits() != n) {
        throw std::invalid_argument("find_generator: string and graph sizes differ");
    }
    std::vector<PauliString> current;
    current.reserve(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
        current.push_back(PauliString::single(n, v, 'Z'));
    }
    for (int steps = 0; steps <= max_steps; ++steps) {
        for (int v = 0; v < n; ++v) {
            if (current[v].same_operator(target)) {
                const int diff = ((target.phase() - current[v].phase()) % 4 + 4) % 4;
                if (diff % 2 == 0) {
                    return Generator{v, steps, diff == 0 ? 1 : -1};
                }
            }
        }
        if (steps < max_steps) {
            for (auto &s : current) {
                s = conjugate_step(s, graph, false);
            }
        }
    }
    return std::nullopt;
}

double measure_string_extended(VidalTNS state, const Generator &gen, const TrotterConfig &cfg) {
    if (gen.steps < 0) {
        throw std::invalid_argument("measure_string_extended: negative step count");
    }
    TrotterConfig back = cfg;
    back.theta_h = std::numbers::pi / 2;
    back.n_steps = gen.steps;
    back.dagger = true;
    trotter_evolve(state, back);
    return gen.sign * expect_local(state, gen.site, pauli::Z());
}

double expect_on_zero_state(const PauliString &p) {
    for (int v = 0; v < p.num_qubits(); ++v) {
        if (p.x(v)) {
            return 0.0;
        }
    }
    static constexpr double re[4] = {1.0, 0.0, -1.0, 0.0};
    return re[p.phase()];
}

}  // namespace bptns
