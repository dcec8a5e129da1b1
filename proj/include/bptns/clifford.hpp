#pragma once

// Pauli strings and their Heisenberg evolution through U(theta) at Clifford
// angles (theta a multiple of pi/2).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bptns/evolve.hpp"
#include "bptns/lattice.hpp"

namespace bptns {

/// i^phase * prod_v P_v with P_v in {I, X, Y, Z} selected by (x_v, z_v):
/// (1,0) = X, (0,1) = Z, (1,1) = Y.
class PauliString {
public:
    PauliString() = default;
    explicit PauliString(int num_qubits);

    static PauliString single(int num_qubits, VertexId v, char op);

    int num_qubits() const { return static_cast<int>(x_.size()); }
    /// Exponent k of the global factor i^k, in 0..3.
    int phase() const { return phase_; }
    void set_phase(int k) { phase_ = ((k % 4) + 4) % 4; }

    bool x(VertexId v) const { return x_[v] != 0; }
    bool z(VertexId v) const { return z_[v] != 0; }
    char op(VertexId v) const;
    void set_op(VertexId v, char op);

    int weight() const;
    std::vector<VertexId> support() const;
    bool is_identity() const { return weight() == 0; }

    /// True when the operators agree including the global phase.
    friend bool operator==(const PauliString &a, const PauliString &b) = default;
    /// True when the operators agree up to the global phase.
    bool same_operator(const PauliString &other) const;

    bool commutes_with(const PauliString &other) const;

    /// Operator product this * other with the phase tracked exactly.
    PauliString operator*(const PauliString &other) const;

private:
    std::vector<std::uint8_t> x_;
    std::vector<std::uint8_t> z_;
    int phase_ = 0;
};

/// Parses "X13,29,31 Y9,30 Z8,12,17,28,32" with an optional leading "-", "i"
/// or "-i". "I" is the identity. Throws std::invalid_argument.
PauliString parse_pauli(const std::string &text, int num_qubits);

/// Inverse of parse_pauli.
std::string to_string(const PauliString &p);

/// p -> exp(-i alpha Q) p exp(i alpha Q) for alpha = +-pi/4.
PauliString conjugate_by_rotation(const PauliString &p, const PauliString &q, int alpha_sign);

/// U p U^dagger (dagger = false) or U^dagger p U (dagger = true) for one
/// Trotter step with X angle theta. Throws unless theta is a multiple of pi/2.
PauliString conjugate_step(const PauliString &p, const LatticeGraph &graph, bool dagger,
                           double theta = 1.5707963267948966);

/// Number of quarter turns for a Clifford angle. Throws otherwise.
int clifford_quarter_turns(double theta);

struct Generator {
    VertexId site = 0;
    int steps = 0;
    int sign = 1;  // target = sign * U^steps Z_site U^-steps
};

/// Smallest steps, then smallest site, with U^steps Z_site U^-steps equal to
/// target up to a sign. max_steps <= 12.
std::optional<Generator> find_generator(const PauliString &target, const LatticeGraph &graph, int max_steps);

/// <psi| target |psi> through further evolution by U(pi/2)^dagger: the state
/// is evolved gen.steps adjoint steps with cfg's truncation settings and Z at
/// gen.site is measured with BP.
double measure_string_extended(VidalTNS state, const Generator &gen, const TrotterConfig &cfg);

/// <0...0| p |0...0>.
double expect_on_zero_state(const PauliString &p);

}  // namespace bptns
