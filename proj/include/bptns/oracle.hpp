#pragma once

// Reference engines: dense state vectors with light-cone reduction, and a
// stabilizer tableau for the Clifford angles.

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "bptns/clifford.hpp"
#include "bptns/evolve.hpp"
#include "bptns/lattice.hpp"

namespace bptns {

inline constexpr int kDenseQubitCeiling = 26;

/// Amplitudes over the listed vertices; vertex_order[0] is the most
/// significant bit.
struct DenseState {
    Eigen::VectorXcd amplitudes;
    std::vector<VertexId> vertex_order;

    int num_qubits() const { return static_cast<int>(vertex_order.size()); }
    /// Bit position of a vertex, or -1 if it is not simulated.
    int qubit_of(VertexId v) const;
};

DenseState zero_state(std::vector<VertexId> vertex_order);

void apply_rx(DenseState &psi, int qubit, double theta);
/// exp(i angle Z_a Z_b) for every listed qubit pair.
void apply_zz_layer(DenseState &psi, const std::vector<std::pair<int, int>> &pairs, double angle);

double expect_z(const DenseState &psi, VertexId v);
/// <psi| p |psi> for a string over graph vertices; sites outside the state
/// must be identity.
double expect_pauli(const DenseState &psi, const PauliString &p);

using DenseStepCallback = std::function<void(int step, const DenseState &)>;

/// Exact evolution of cfg.n_steps steps (cfg.dagger honoured) from |0...0>.
/// Throws std::length_error above kDenseQubitCeiling qubits.
DenseState sv_evolve(const LatticeGraph &graph, const TrotterConfig &cfg, const DenseStepCallback &cb = {});

/// Gates of a circuit restricted to the backward causal cone of a target set.
struct ReducedCircuit {
    std::vector<VertexId> qubits;      // vertices that carry any gate, ascending
    std::vector<GateLayer> layers;     // one per step, in time order
};

/// Keeps only gates inside the reverse light cone of `targets` after
/// n_steps forward steps. With diagonal_observable the final ZZ layer, which
/// commutes with any Z-diagonal observable, is dropped too.
ReducedCircuit lightcone_reduce(const LatticeGraph &graph, const std::vector<VertexId> &targets, int n_steps,
                                bool diagonal_observable = false);

/// Runs a reduced circuit from |0...0> on its own qubits.
DenseState sv_run(const ReducedCircuit &circuit, double theta_h);

/// <Z_v> after n_steps via the light cone of v.
double lightcone_expect_z(const LatticeGraph &graph, VertexId v, double theta_h, int n_steps);

/// Stabilizer tableau: stabilizers[k] and destabilizers[k] pair up.
struct Tableau {
    std::vector<PauliString> stabilizers;
    std::vector<PauliString> destabilizers;

    int num_qubits() const { return static_cast<int>(stabilizers.size()); }
};

/// |0...0> evolved by n_steps of U(theta_h); theta_h must be a multiple of pi/2.
Tableau tableau_evolve(const LatticeGraph &graph, double theta_h, int n_steps);

/// -1, 0 or +1. The string must be Hermitian.
int tableau_expect(const Tableau &t, const PauliString &p);

}  // namespace bptns
