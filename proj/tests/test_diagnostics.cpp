#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "bptns/bp.hpp"
#include "bptns/diagnostics.hpp"
#include "bptns/evolve.hpp"
#include "dense_oracle.hpp"

using namespace bptns;

namespace {

VidalTNS evolved(const LatticeGraph &g, double theta, int steps, int chi) {
    VidalTNS s = init_product_state(g, chi);
    TrotterConfig cfg;
    cfg.theta_h = theta;
    cfg.n_steps = steps;
    cfg.chi_max = chi;
    trotter_evolve(s, cfg);
    return s;
}

// |<a, b>| for unit-norm matrices: 1 when they agree up to a phase.
double overlap(const Eigen::MatrixXcd &a, const Eigen::MatrixXcd &b) {
    return std::abs((a.adjoint() * b).trace());
}

}  // namespace

TEST(Diagnostics, ErrorEstimateArithmetic) {
    const std::vector<double> rank1{2.0, 0.0, 0.0};
    EXPECT_EQ(bp_error_estimate(rank1), 0.0);
    const std::vector<double> flat{1.0, 1.0};
    EXPECT_NEAR(bp_error_estimate(flat), 1.0 - std::sqrt(0.5), 1e-15);
    const std::vector<double> s{0.9, 0.3, 0.1};
    const std::vector<double> scaled{9.0, 3.0, 1.0};
    const double direct = 1.0 - 0.9 / std::sqrt(0.81 + 0.09 + 0.01);
    EXPECT_NEAR(bp_error_estimate(s), direct, 1e-15);
    EXPECT_NEAR(bp_error_estimate(scaled), direct, 1e-15);
    // Tiny tails survive without cancellation.
    const std::vector<double> tiny{1.0, 1e-10};
    EXPECT_NEAR(bp_error_estimate(tiny) / 0.5e-20, 1.0, 1e-9);
    EXPECT_THROW(bp_error_estimate(std::vector<double>{}), std::invalid_argument);
    EXPECT_THROW(bp_error_estimate(std::vector<double>{0.0, 0.0}), std::invalid_argument);
}

TEST(Diagnostics, TreeEnvironmentsAreRankOne) {
    for (auto g : {build_chain(6), build_heavy_hex_grid(1, 1)}) {
        if (g.num_edges() != g.num_vertices() - 1) {
            continue;  // only trees separate under a single cut
        }
        auto s = random_state(g, 3, 11);
        for (int e = 0; e < g.num_edges(); ++e) {
            auto env = edge_environment_exact(s, e);
            EXPECT_NEAR(env.matrix.norm(), 1.0, 1e-12);
            EXPECT_LT(bp_error_estimate(env), 1e-14) << "edge " << e;
        }
    }
    auto p = init_product_state(build_heavy_hex_grid(1, 1));
    for (int e = 0; e < 3; ++e) {
        EXPECT_EQ(bp_error_estimate(edge_environment_exact(p, e)), 0.0);
    }
}

TEST(Diagnostics, RingEnvironmentMatchesTransferMatrixPower) {
    const int l = 5, chi = 2;
    auto s = weakly_entangled_ring(l, 0.4, 3);
    // Transfer matrix with sqrt weights on both legs, built from the stored tensor.
    const auto &lam = s.bond(0).lambda;
    const Index left = s.bond(s.graph().edge_id(l - 1, 0)).index;
    const Index right = s.bond(0).index;
    const Tensor t = permute(s.gamma(0), std::vector<Index>{s.phys(0), left, right});
    Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(chi * chi, chi * chi);
    for (int p = 0; p < 2; ++p)
        for (int a = 0; a < chi; ++a)
            for (int ap = 0; ap < chi; ++ap)
                for (int b = 0; b < chi; ++b)
                    for (int bp = 0; bp < chi; ++bp) {
                        const double w = std::sqrt(lam[a] * lam[ap] * lam[b] * lam[bp]);
                        e(a * chi + ap, b * chi + bp) +=
                            w * t.storage()[(p * chi + a) * chi + b] * std::conj(t.storage()[(p * chi + ap) * chi + bp]);
                    }
    // Cutting edge (0,1): the b side starts at vertex 1, runs around, ends at 0.
    Eigen::MatrixXcd ref = e;
    for (int k = 1; k < l; ++k) {
        ref = ref * e;
    }
    ref.transposeInPlace();
    ref /= ref.norm();
    auto env = edge_environment_exact(s, s.graph().edge_id(0, 1));
    EXPECT_NEAR(overlap(env.matrix, ref), 1.0, 1e-12);
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(ref);
    for (int k = 0; k < chi * chi; ++k) {
        EXPECT_NEAR(env.sigma[k], svd.singularValues()[k], 1e-12);
    }
    EXPECT_GT(bp_error_estimate(env), 1e-8);
}

TEST(Diagnostics, ExactContractionRefusesLargeNetworks) {
    auto s = random_state(build_heavy_hex_grid(1, 2), 2, 4);
    EXPECT_THROW(edge_environment_exact(s, 0, 64), std::length_error);
    EXPECT_THROW(edge_environment_exact(s, -1), std::out_of_range);
}

TEST(Diagnostics, BoundaryMpsMatchesExactEnvironment) {
    auto g = build_heavy_hex_grid(1, 2);
    auto s = evolved(g, 0.6, 4, 4);
    BoundaryContractor bmps(s, {32, 1e-14, 2});
    double worst = 0.0;
    for (int e = 0; e < g.num_edges(); ++e) {
        auto exact = edge_environment_exact(s, e);
        auto approx = bmps.edge_environment(e);
        EXPECT_EQ(approx.method, EnvironmentMethod::boundary_mps);
        EXPECT_EQ(approx.boundary_dim, 32);
        ASSERT_EQ(approx.sigma.size(), exact.sigma.size());
        for (std::size_t k = 0; k < exact.sigma.size(); ++k) {
            EXPECT_NEAR(approx.sigma[k], exact.sigma[k], 1e-8) << "edge " << e;
        }
        EXPECT_NEAR(overlap(approx.matrix, exact.matrix), 1.0, 1e-8) << "edge " << e;
        worst = std::max(worst, bp_error_estimate(exact));
    }
    EXPECT_GT(worst, 1e-12);  // the loops do register
    EXPECT_LT(bmps.max_discarded_weight(), 1e-10);
}

TEST(Diagnostics, BoundaryMpsEnvironmentAtLargeBond) {
    // chi = 12: carrying the split legs through a whole row would need
    // D * chi^6 entries.
    auto g = build_heavy_hex_grid(1, 1);
    auto s = evolved(g, 0.785, 8, 12);
    BoundaryContractor bmps(s, {12, 1e-14, 2});
    for (int e : g.incident(0)) {
        const auto env = bmps.edge_environment(e);
        const int chi = s.bond(e).index.dim;
        EXPECT_EQ(env.matrix.rows(), chi * chi);
        const double err = bp_error_estimate(env);
        EXPECT_GE(err, 0.0);
        EXPECT_LT(err, 1.0);
    }
}

TEST(Diagnostics, BoundaryMpsExpectationMatchesDense) {
    auto g = build_heavy_hex_grid(1, 2);
    const int n = g.num_vertices();
    auto s = evolved(g, 0.45, 3, 8);
    const auto psi = to_dense(s);
    const double nrm = psi.squaredNorm();
    BoundaryContractor bmps(s, {64, 1e-14, 2});
    for (VertexId v = 0; v < n; ++v) {
        const double ref = testref::expect_z(psi, n, v) / nrm;
        EXPECT_NEAR(bmps.expect_local(v, pauli::Z()), ref, 1e-8) << "vertex " << v;
    }
    testref::Vec flipped = psi;
    testref::apply1(flipped, n, 4, testref::pauli_x());
    const double x_ref = psi.dot(flipped).real() / nrm;
    EXPECT_NEAR(expect_local_bmps(s, 4, pauli::X(), {64, 1e-14, 2}), x_ref, 1e-8);
}

TEST(Diagnostics, BoundaryMpsOnProductStateAgreesWithBp) {
    auto g = build_eagle_127();
    auto s = evolved(g, 0.2, 1, 1);
    BoundaryContractor bmps(s, {4, 1e-14, 1});
    for (VertexId v : {0, 14, 62, 113, 126}) {
        EXPECT_NEAR(bmps.expect_local(v, pauli::Z()), expect_local(s, v, pauli::Z()), 1e-12);
    }
    EXPECT_EQ(bp_error_estimate(bmps.edge_environment(default_error_edge(g, 62))), 0.0);
}

TEST(Diagnostics, BoundaryMpsNeedsRowGeometry) {
    auto s = init_product_state(build_ring(6));
    EXPECT_THROW(BoundaryContractor(s, {}), std::invalid_argument);
    auto t = init_product_state(build_heavy_hex_grid(1, 1));
    EXPECT_THROW(BoundaryContractor(t, {0, 1e-14, 2}), std::invalid_argument);
    EXPECT_THROW(BoundaryContractor(t, {4, -1.0, 2}), std::invalid_argument);
}

TEST(Diagnostics, DefaultErrorEdgeTouchesVertex) {
    auto g = build_eagle_127();
    for (VertexId v = 0; v < g.num_vertices(); ++v) {
        const Edge &e = g.edge(default_error_edge(g, v));
        EXPECT_TRUE(e.a == v || e.b == v);
    }
}

TEST(Diagnostics, RingErrorDecaysExponentially) {
    auto weak = ring_bp_error_scaling({4, 6, 8, 10, 12}, [](int l) { return weakly_entangled_ring(l); });
    ASSERT_EQ(weak.errors.size(), 5u);
    EXPECT_GT(weak.c, 0.0);
    EXPECT_TRUE(weak.monotone);
    EXPECT_TRUE(weak.gapped);
    for (double err : weak.errors) {
        EXPECT_GT(err, 0.0);
    }

    auto product = ring_bp_error_scaling({3, 5, 7}, [](int l) { return init_product_state(build_ring(l)); });
    EXPECT_EQ(product.c, std::numeric_limits<double>::infinity());
    EXPECT_TRUE(product.monotone);
    EXPECT_THROW(ring_bp_error_scaling({3, 4}, [](int l) { return init_product_state(build_ring(l)); }),
                 std::invalid_argument);
}
