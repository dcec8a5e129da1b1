#pragma once

// Kicked transverse-field Ising dynamics on a Vidal TNS.
//
// One step is U(theta) = prod_edges exp(i pi/4 Z Z) * prod_v Rx(theta) with
// Rx(theta) = exp(-i theta X / 2); the X layer acts first.

#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bptns/bp.hpp"
#include "bptns/tns.hpp"

namespace bptns {

struct TrotterConfig {
    double theta_h = 0.0;
    int n_steps = 0;
    int chi_max = 1;
    double cutoff = 1e-14;
    bool gauge_every_step = true;
    bool gauge_every_gate = false;
    bool dagger = false;
    BpConfig bp;
};

void validate(const TrotterConfig &cfg);

struct GateLayer {
    double x_angle = 0.0;            // Rx angle applied to every site
    double zz_angle = 0.0;           // exp(i zz_angle Z Z) on every edge
    bool zz_first = false;           // true for the adjoint step
    std::vector<VertexId> x_sites;   // ascending
    std::vector<Edge> zz_gates;      // lexicographic
};

GateLayer build_step(const LatticeGraph &graph, double theta_h, bool dagger);

Eigen::Matrix2cd rx_gate(double theta);
/// exp(i angle Z Z) in the basis 2*s_a + s_b.
Eigen::Matrix4cd zz_gate(double angle);

/// Exact one-site gate on the physical leg. Throws for non-unitary input.
void apply_single_site(VidalTNS &state, VertexId v, const Eigen::Matrix2cd &gate);

/// Reduced-tensor simple update of a two-site gate on an edge. The gate basis
/// is 2*s_a + s_b with a < b. Returns the discarded weight of the truncation.
double simple_update(VidalTNS &state, int edge_id, const Eigen::Matrix4cd &gate, int chi_max, double cutoff);

struct StepDiagnostics {
    int step = 0;
    int chi_used = 1;
    double discarded_weight = 0.0;  // summed over the gates of the step
    int bp_iters = 0;
    double bp_delta = 0.0;
    bool bp_converged = true;
    double entropy = 0.0;           // mean bond entropy in bits
    double wall_seconds = 0.0;
};

using StepCallback = std::function<void(const VidalTNS &, const StepDiagnostics &)>;

/// Apply cfg.n_steps Trotter steps in place. The callback runs after every
/// step (after regauging).
std::vector<StepDiagnostics> trotter_evolve(VidalTNS &state, const TrotterConfig &cfg, const StepCallback &cb = {});

/// Mean bond entropy (bits) over the given edges.
double entropy_per_edge(const VidalTNS &state, const std::vector<int> &cut_edges);

struct ChiFit {
    double intercept = 0.0;  // chi -> infinity estimate
    double slope = 0.0;
    double residual = 0.0;   // root mean square
};

/// Ordinary least squares of y against 1/chi.
ChiFit extrapolate_chi(const std::vector<std::pair<double, double>> &chi_y);

}  // namespace bptns
