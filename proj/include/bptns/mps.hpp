#pragma once

// Matrix product state cross-check: a 1D ordering of the lattice, the ZZ
// layer as a few commuting bond-2 MPOs, and evolution with light-cone depth
// reduction and per-MPO truncation error tracking.

#include <array>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bptns/evolve.hpp"
#include "bptns/lattice.hpp"

namespace bptns {

/// Vertex at each chain position and the inverse map.
class SiteOrdering {
public:
    SiteOrdering() = default;
    /// Throws std::invalid_argument unless `sites` is a permutation of 0..n-1.
    SiteOrdering(std::string name, std::vector<VertexId> sites);

    const std::string &name() const { return name_; }
    int length() const { return static_cast<int>(sites_.size()); }
    VertexId vertex_at(int position) const { return sites_[position]; }
    int position_of(VertexId v) const { return position_[v]; }
    const std::vector<VertexId> &sites() const { return sites_; }

private:
    std::string name_;
    std::vector<VertexId> sites_;
    std::vector<int> position_;
};

/// Sites in vertex-id order; on Eagle this is the processor's own numbering.
SiteOrdering reference_ordering(const LatticeGraph &graph);
/// Rows of the drawing read alternately left-to-right and right-to-left,
/// each bridge row in the direction of the line row above it. Needs rows.
SiteOrdering snake_ordering(const LatticeGraph &graph);

/// {"name": ..., "sites": [v at position 0, v at position 1, ...]}
SiteOrdering ordering_from_json(const std::string &text);
std::string to_json(const SiteOrdering &ordering);
SiteOrdering load_ordering(const std::string &path);
/// "reference", "snake", or a path to an ordering file.
SiteOrdering resolve_ordering(const LatticeGraph &graph, const std::string &name_or_path);

/// Diagonal operator as an MPO over positions [first, last]; identity
/// elsewhere. w[k][s] is the (left x right) bond matrix for physical value
/// s at position first + k.
struct DiagonalMpo {
    std::vector<Edge> gates;  // vertex pairs, in application order
    int first = 0;
    std::vector<std::array<Eigen::MatrixXcd, 2>> w;

    int last() const { return first + static_cast<int>(w.size()) - 1; }
    int bond_dim(int cut) const;  // between positions cut and cut + 1
    int max_bond_dim() const;
    /// Diagonal entry for a basis state given in chain positions.
    std::complex<double> value(std::span<const int> bits) const;
};

/// Splits exp(i angle Z_a Z_b) over `gates` into commuting groups whose
/// product is a bond-dimension-2 MPO under `ordering`. Gates crossing the
/// same cut share a group only when they all share one endpoint on the same
/// side of it. With max_mpos > 0, more groups throw std::runtime_error
/// naming the gates that did not fit.
std::vector<DiagonalMpo> decompose_zz_gates(const std::vector<Edge> &gates, const SiteOrdering &ordering,
                                            double angle, int max_mpos = 0);
std::vector<DiagonalMpo> decompose_zz_layer(const LatticeGraph &graph, const SiteOrdering &ordering,
                                            double angle = std::numbers::pi / 4, int max_mpos = 0);

using SiteTensor = std::array<Eigen::MatrixXcd, 2>;  // A[s]: left x right

/// Mixed-canonical MPS over chain positions, starting in |0...0>.
class MpsState {
public:
    explicit MpsState(int length);

    int length() const { return static_cast<int>(sites_.size()); }
    int center() const { return center_; }
    const SiteTensor &site(int k) const { return sites_[k]; }
    int bond_dim(int cut) const { return static_cast<int>(sites_[cut][0].cols()); }
    int max_bond_dim() const;

    void move_center(int k);
    void apply_single(int k, const Eigen::Matrix2cd &u);
    /// Applies the MPO, then truncates every bond it touched to chi with a
    /// relative singular value cutoff. Returns the discarded weight summed
    /// over those bonds; the state is renormalised.
    double apply_mpo(const DiagonalMpo &mpo, int chi, double cutoff);

    double expect_local(int k, const Eigen::Matrix2cd &op);
    double norm() const;
    /// Largest deviation from isometry over sites away from the center.
    double canonical_residual() const;
    /// Amplitudes with position 0 as the most significant bit.
    Eigen::VectorXcd to_dense(int max_sites = 26) const;

private:
    std::vector<SiteTensor> sites_;
    int center_ = 0;
};

/// How per-MPO errors combine into E_n.
enum class ErrorForm {
    printed,  // 1 - sum_i (1 - eps_i)^(1/N)
    product,  // 1 - prod_i (1 - eps_i)
};

double accumulated_error(std::span<const double> epsilon, ErrorForm form = ErrorForm::printed);

/// Discarded weights of one simulation, in application order.
struct MpsRun {
    int depth = 0;
    std::vector<double> epsilon;
    std::vector<int> step_of;  // Trotter step of each MPO application
};

struct MpsStepResult {
    int step = 0;
    double z = 1.0;
    int mpo_applications = 0;  // N up to this step
    int max_bond = 1;
    double error_printed = 0.0;
    double error_product = 0.0;
};

struct MpsResult {
    std::vector<MpsStepResult> steps;
    std::vector<MpsRun> runs;  // one per depth with LCDR, otherwise one
};

struct MpsOptions {
    bool lcdr = true;
    int max_mpos = 0;
};

/// <Z_target> after each of cfg.n_steps forward steps. The X layer is
/// applied exactly, each ZZ MPO is followed by truncation to cfg.chi_max.
/// With LCDR every depth is its own run that keeps only the gates inside
/// the remaining light cone of the target.
MpsResult mps_evolve(const LatticeGraph &graph, const SiteOrdering &ordering, const TrotterConfig &cfg, VertexId target,
                     const MpsOptions &opts = {});

}  // namespace bptns
