#pragma once

// Belief propagation on the norm network <psi|psi>, regauging into the Vidal
// form from converged messages, and expectation values under the rank-1
// environment approximation.

#include <vector>

#include <Eigen/Dense>

#include "bptns/tns.hpp"

namespace bptns {

enum class BpSchedule { sequential_sweep, parallel };
enum class MessageInit { bond_weights, identity };

struct BpConfig {
    double tol = 1e-12;
    int max_iters = 200;
    BpSchedule schedule = BpSchedule::sequential_sweep;
    double damping = 0.0;
    MessageInit init = MessageInit::bond_weights;
};

void validate(const BpConfig &cfg);

/// Site tensors of the norm network in the symmetric gauge. Bra legs are the
/// primed copies of the ket bond indices.
struct NormNetwork {
    const LatticeGraph *graph = nullptr;
    std::vector<Tensor> sites;
    std::vector<Index> bond_index;                 // per edge
    std::vector<std::vector<double>> bond_weights;  // per edge, used to seed messages
};

NormNetwork make_norm_network(const VidalTNS &state);

/// Messages are indexed by directed edge: slot 2*edge for a->b and 2*edge+1
/// for b->a (a < b). Each is a trace-one Hermitian matrix [ket, bra].
struct MessageSet {
    std::vector<Eigen::MatrixXcd> messages;
    int iterations_used = 0;
    bool converged = false;
    double final_delta = 0.0;

    const Eigen::MatrixXcd &from_to(const LatticeGraph &g, VertexId from, VertexId to) const;
};

int message_slot(const LatticeGraph &g, VertexId from, VertexId to);

MessageSet bp_fixed_point(const NormNetwork &net, const BpConfig &cfg = {});
MessageSet bp_fixed_point(const VidalTNS &state, const BpConfig &cfg = {});

/// Contraction of site v against its incoming messages with `op` on the
/// physical leg (identity when op is empty).
cplx local_contraction(const NormNetwork &net, const MessageSet &msgs, VertexId v,
                       const Eigen::Matrix2cd *op = nullptr);

struct GaugeReport {
    bool pseudo_inverse_used = false;
    double min_message_eigenvalue = 1.0;  // smallest relative eigenvalue seen
};

/// Vidal form from BP messages. The returned state represents the same
/// vector; its bonds are the normalized singular values of the whitened edge
/// crossings.
VidalTNS vidal_gauge(const VidalTNS &state, const MessageSet &msgs, GaugeReport *report = nullptr);

struct GaugeResult {
    VidalTNS state;
    MessageSet messages;
    GaugeReport report;
};

/// Messages plus regauge in one call.
GaugeResult bp_gauge(const VidalTNS &state, const BpConfig &cfg = {});

/// <O_v> assuming the state is Vidal-gauged (bond weights as environment).
double expect_local(const VidalTNS &state, VertexId v, const Eigen::Matrix2cd &op);
/// <O_v> in any gauge using fixed-point messages of the state's norm network.
double expect_local(const VidalTNS &state, const MessageSet &msgs, VertexId v, const Eigen::Matrix2cd &op);

/// Two-site expectation on edge (a, b), a < b; op basis index is 2*s_a + s_b.
double expect_two_site(const VidalTNS &state, int edge_id, const Eigen::Matrix4cd &op);
double expect_two_site(const VidalTNS &state, const MessageSet &msgs, int edge_id, const Eigen::Matrix4cd &op);

/// BP estimate of log <psi|psi> (includes the state's log scale).
double log_norm_bp(const VidalTNS &state, const MessageSet &msgs);

namespace pauli {
Eigen::Matrix2cd I();
Eigen::Matrix2cd X();
Eigen::Matrix2cd Y();
Eigen::Matrix2cd Z();
}  // namespace pauli

}  // namespace bptns
