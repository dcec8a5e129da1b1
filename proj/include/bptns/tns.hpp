#pragma once

// Tensor network state in Vidal form: one site tensor per vertex and one
// positive diagonal bond per edge. The represented vector is
//
//   |psi> = exp(log_scale) * contract(all gamma, all lambda)
//
// with every bond normalized to sum(lambda^2) = 1.

#include <cstdint>
#include <string>
#include <vector>

#include "bptns/lattice.hpp"
#include "bptns/tensor.hpp"

namespace bptns {

struct Bond {
    Index index;                 // shared by the two site tensors of the edge
    std::vector<double> lambda;  // length index.dim
};

class VidalTNS {
public:
    VidalTNS() = default;
    VidalTNS(LatticeGraph graph, int chi_max);

    const LatticeGraph &graph() const { return graph_; }
    int num_sites() const { return graph_.num_vertices(); }

    int chi_max() const { return chi_max_; }
    void set_chi_max(int chi) { chi_max_ = chi; }

    const Index &phys(VertexId v) const { return phys_[v]; }
    const Tensor &gamma(VertexId v) const { return gamma_[v]; }
    Tensor &gamma(VertexId v) { return gamma_[v]; }
    void set_gamma(VertexId v, Tensor t);

    const Bond &bond(int edge_id) const { return bonds_[edge_id]; }
    void set_bond(int edge_id, Bond b);
    int bond_dim(int edge_id) const { return bonds_[edge_id].index.dim; }
    int max_bond_dim() const;

    double log_scale() const { return log_scale_; }
    void add_log_scale(double d) { log_scale_ += d; }
    void set_log_scale(double s) { log_scale_ = s; }

    /// Gamma of v with each incident bond weighted by lambda^power.
    Tensor weighted_gamma(VertexId v, double power, int skip_edge = -1) const;

private:
    LatticeGraph graph_;
    int chi_max_ = 1;
    std::vector<Index> phys_;
    std::vector<Tensor> gamma_;
    std::vector<Bond> bonds_;
    double log_scale_ = 0.0;
};

/// |0...0> (all spins up) with unit bonds.
VidalTNS init_product_state(const LatticeGraph &graph, int chi_max = 1);

/// Random site tensors with uniform bond dimension and random normalized
/// positive bonds. Not gauged; used for tests and diagnostics.
VidalTNS random_state(const LatticeGraph &graph, int bond_dim, std::uint64_t seed);

/// Site tensors in the symmetric gauge: sqrt(lambda) absorbed on every leg.
std::vector<Tensor> absorb_sqrt_bonds(const VidalTNS &state);

/// Max over both endpoints of ||C - I||_F / ||I||_F where C is the grouped
/// site tensor (full lambda on the other legs) contracted with its conjugate.
double vidal_residual(const VidalTNS &state, int edge_id);
double max_vidal_residual(const VidalTNS &state);

inline constexpr int kDefaultDenseCeiling = 26;

/// Amplitudes in the computational basis. Vertex 0 is the most significant
/// bit and |0> is spin up. Includes exp(log_scale).
Eigen::VectorXcd to_dense(const VidalTNS &state, int max_qubits = kDefaultDenseCeiling);

/// <psi|psi> from the belief propagation fixed point (exact on trees).
double tns_norm(const VidalTNS &state);

/// Entropy in bits of one bond spectrum: -sum p log2 p with p = lambda^2,
/// entries below 1e-15 skipped.
double bond_entropy(const std::vector<double> &lambda);

/// Self-describing JSON checkpoint.
void save_checkpoint(const VidalTNS &state, const std::string &path);
VidalTNS load_checkpoint(const std::string &path);
std::string checkpoint_to_string(const VidalTNS &state);
VidalTNS checkpoint_from_string(const std::string &text);

}  // namespace bptns
