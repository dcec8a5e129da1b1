#pragma once

// How good is the rank-1 BP environment? Edge environments from exact and
// boundary-MPS contraction of the norm network, the separability-based error
// estimate, and its decay on rings.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bptns/tns.hpp"

namespace bptns {

enum class EnvironmentMethod { exact, boundary_mps };

/// Norm network with one edge cut, in the symmetric gauge. Rows are
/// (ket, bra) on the e.a side, columns (ket, bra) on the e.b side, with the
/// ket index running slowest. Scaled to unit Frobenius norm.
struct EdgeEnvironment {
    int edge_id = -1;
    Eigen::MatrixXcd matrix;
    std::vector<double> sigma;  // descending
    EnvironmentMethod method = EnvironmentMethod::exact;
    int boundary_dim = 0;       // D for boundary_mps
};

/// Exact contraction, absorbing vertices one at a time from e.a in the order
/// that keeps the open frontier smallest. Throws std::length_error when an
/// intermediate would exceed max_elements entries.
EdgeEnvironment edge_environment_exact(const VidalTNS &state, int edge_id, std::size_t max_elements = std::size_t{1} << 24);

/// 1 - sqrt(sigma_1^2 / sum sigma_i^2), evaluated without cancellation.
/// Throws std::invalid_argument on an empty or all-zero spectrum.
double bp_error_estimate(std::span<const double> sigma);
double bp_error_estimate(const EdgeEnvironment &env);

struct BoundaryMpsConfig {
    int max_dim = 16;          // D
    double cutoff = 1e-14;      // relative singular value cutoff
    int power_iterations = 2;   // refinement passes of the truncated SVD
};

void validate(const BoundaryMpsConfig &cfg);

/// Row-by-row boundary MPS contraction of the norm network. The graph must
/// carry row geometry: even rows are chains ordered by column, odd rows hold
/// bridge vertices with one neighbour above and one below.
class BoundaryContractor {
public:
    BoundaryContractor(const VidalTNS &state, BoundaryMpsConfig cfg);
    ~BoundaryContractor();
    BoundaryContractor(BoundaryContractor &&) noexcept;
    BoundaryContractor &operator=(BoundaryContractor &&) noexcept;

    EdgeEnvironment edge_environment(int edge_id);
    double expect_local(VertexId v, const Eigen::Matrix2cd &op);

    /// Largest discarded weight of any truncation so far.
    double max_discarded_weight() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

EdgeEnvironment edge_environment_bmps(const VidalTNS &state, int edge_id, const BoundaryMpsConfig &cfg);
double expect_local_bmps(const VidalTNS &state, VertexId v, const Eigen::Matrix2cd &op, const BoundaryMpsConfig &cfg);

/// Lowest-id edge incident to v: the default edge for tracking the error
/// next to an observable.
int default_error_edge(const LatticeGraph &graph, VertexId v);

/// Translation-invariant ring of bond dimension 2 whose bond spectrum is
/// (1, weak) before normalisation. Same site tensor on every vertex.
VidalTNS weakly_entangled_ring(int length, double weak = 0.3, std::uint64_t seed = 7);

using RingFamily = std::function<VidalTNS(int length)>;

struct RingScaling {
    std::vector<int> lengths;
    std::vector<double> errors;
    double c = 0.0;            // error ~ exp(intercept - c l); +inf when every error is 0
    double intercept = 0.0;
    double fit_residual = 0.0;  // RMS of the log fit
    bool monotone = true;       // strictly decreasing (or identically zero)
    bool gapped = true;         // log fit residual below 0.5
};

/// Error estimate on one edge of each ring, fitted as log(error) = a - c l.
/// Needs at least three lengths.
RingScaling ring_bp_error_scaling(const std::vector<int> &lengths, const RingFamily &family);

}  // namespace bptns
