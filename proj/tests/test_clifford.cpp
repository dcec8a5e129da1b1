#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "bptns/clifford.hpp"
#include "dense_oracle.hpp"

using namespace bptns;
using testref::Mat;

namespace {

constexpr double kHalfPi = std::numbers::pi / 2;

Mat dense_pauli(const PauliString &p) {
    const int n = p.num_qubits();
    Mat m = Mat::Identity(Eigen::Index{1} << n, Eigen::Index{1} << n);
    for (int v = 0; v < n; ++v) {
        switch (p.op(v)) {
        case 'X': m = testref::embed1(testref::pauli_x(), v, n) * m; break;
        case 'Y': m = testref::embed1(testref::pauli_y(), v, n) * m; break;
        case 'Z': m = testref::embed1(testref::pauli_z(), v, n) * m; break;
        default: break;
        }
    }
    static const testref::cplx phases[4] = {1.0, {0, 1}, -1.0, {0, -1}};
    return phases[p.phase()] * m;
}

PauliString random_string(int n, std::mt19937_64 &rng) {
    PauliString p(n);
    std::uniform_int_distribution<int> pick(0, 3);
    for (int v = 0; v < n; ++v) {
        p.set_op(v, "IXYZ"[pick(rng)]);
    }
    p.set_phase(pick(rng));
    return p;
}

// <psi|P|psi> by applying the string amplitude by amplitude.
double dense_string_expect(const Eigen::VectorXcd &psi, const PauliString &p) {
    const int n = p.num_qubits();
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(psi.size());
    for (Eigen::Index b = 0; b < psi.size(); ++b) {
        Eigen::Index target = b;
        testref::cplx f = 1.0;
        for (int v = 0; v < n; ++v) {
            const int shift = n - 1 - v;
            const int s = static_cast<int>((b >> shift) & 1);
            const double sgn = s ? -1.0 : 1.0;
            switch (p.op(v)) {
            case 'X': target ^= Eigen::Index{1} << shift; break;
            case 'Y': target ^= Eigen::Index{1} << shift, f *= testref::cplx(0, sgn); break;
            case 'Z': f *= sgn; break;
            default: break;
            }
        }
        out[target] += f * psi[b];
    }
    static const testref::cplx phases[4] = {1.0, {0, 1}, -1.0, {0, -1}};
    return (phases[p.phase()] * psi.dot(out)).real();
}

}  // namespace

TEST(Clifford, ProductMatchesDense) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        auto a = random_string(3, rng), b = random_string(3, rng);
        EXPECT_LT((dense_pauli(a * b) - dense_pauli(a) * dense_pauli(b)).norm(), 1e-12);
        const Mat ca = dense_pauli(a), cb = dense_pauli(b);
        EXPECT_EQ(a.commutes_with(b), (ca * cb - cb * ca).norm() < 1e-12);
    }
}

TEST(Clifford, SingleSiteStepOnIsolatedVertex) {
    LatticeGraph g(1, {});
    auto p = conjugate_step(PauliString::single(1, 0, 'Z'), g, false);
    EXPECT_EQ(p.op(0), 'Y');
    const Mat u = testref::rx(kHalfPi);
    EXPECT_LT((dense_pauli(p) - u * testref::pauli_z() * u.adjoint()).norm(), 1e-14);
    EXPECT_EQ(to_string(p), "-Y0");
}

TEST(Clifford, StepMatchesDenseConjugation) {
    std::mt19937_64 rng(2);
    const LatticeGraph graphs[] = {build_chain(3), build_ring(4), LatticeGraph(4, {{0, 1}, {1, 2}, {1, 3}})};
    for (const auto &g : graphs) {
        const int n = g.num_vertices();
        for (double theta : {0.0, kHalfPi, std::numbers::pi, -kHalfPi}) {
            const Mat u = testref::trotter_step_full(g, theta);
            for (int trial = 0; trial < 12; ++trial) {
                auto p = random_string(n, rng);
                const Mat d = dense_pauli(p);
                EXPECT_LT((dense_pauli(conjugate_step(p, g, false, theta)) - u * d * u.adjoint()).norm(), 1e-12);
                EXPECT_LT((dense_pauli(conjugate_step(p, g, true, theta)) - u.adjoint() * d * u).norm(), 1e-12);
            }
        }
    }
}

TEST(Clifford, NonCliffordAngleRejected) {
    auto g = build_chain(2);
    EXPECT_THROW(conjugate_step(PauliString(2), g, false, 0.3), std::invalid_argument);
}

TEST(Clifford, WeightTenStringOnEagle) {
    auto g = build_eagle_127();
    auto p = PauliString::single(127, 13, 'Z');
    for (int k = 0; k < 5; ++k) {
        p = conjugate_step(p, g, false);
    }
    EXPECT_EQ(to_string(p), "X13,29,31 Y9,30 Z8,12,17,28,32");
    EXPECT_EQ(p, parse_pauli("X13,29,31 Y9,30 Z8,12,17,28,32", 127));
    EXPECT_EQ(p.weight(), 10);
}

TEST(Clifford, IdentityAndInverse) {
    auto g = build_heavy_hex_grid(1, 2);
    const int n = g.num_vertices();
    PauliString id(n);
    for (int k = 0; k < 4; ++k) {
        id = conjugate_step(id, g, false);
    }
    EXPECT_TRUE(id.is_identity());
    EXPECT_EQ(id.phase(), 0);

    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        auto p = random_string(n, rng);
        EXPECT_EQ(conjugate_step(conjugate_step(p, g, false), g, true), p);
        EXPECT_EQ(conjugate_step(conjugate_step(p, g, true), g, false), p);
    }
}

TEST(Clifford, PhasesStayInPauliGroup) {
    auto g = build_eagle_127();
    std::mt19937_64 rng(4);
    auto p = random_string(127, rng);
    p.set_phase(0);
    for (int k = 0; k < 8; ++k) {
        p = conjugate_step(p, g, false);
        // Hermitian in, Hermitian out.
        EXPECT_EQ(p.phase() % 2, 0);
    }
}

TEST(Clifford, SupportStaysInLightCone) {
    auto g = build_eagle_127();
    for (VertexId v : {0, 62, 113}) {
        auto p = PauliString::single(127, v, 'Z');
        for (int n = 1; n <= 6; ++n) {
            p = conjugate_step(p, g, false);
            const auto dist = g.distances_from({v});
            for (VertexId w : p.support()) {
                EXPECT_LE(dist[w], n);
            }
        }
    }
}

TEST(Clifford, ParseAndPrint) {
    for (std::string s : {"X13,29,31 Y9,30 Z8,12,17,28,32", "-Z4", "iX0 Z1", "-iY2", "I", "-I"}) {
        EXPECT_EQ(to_string(parse_pauli(s, 40)), s);
    }
    EXPECT_EQ(to_string(parse_pauli("Z2,1 X0", 3)), "X0 Z1,2");
    EXPECT_EQ(to_string(parse_pauli("- Z1", 3)), "-Z1");
    EXPECT_THROW(parse_pauli("Q1", 3), std::invalid_argument);
    EXPECT_THROW(parse_pauli("X1,1", 3), std::invalid_argument);
    EXPECT_THROW(parse_pauli("X1 Z1", 3), std::invalid_argument);
    EXPECT_THROW(parse_pauli("X7", 3), std::invalid_argument);
    EXPECT_THROW(parse_pauli("X", 3), std::invalid_argument);
    EXPECT_THROW(parse_pauli("X1,a", 3), std::invalid_argument);
}

TEST(Clifford, FindGenerator) {
    auto g = build_eagle_127();
    auto gen = find_generator(PauliString::single(127, 13, 'Z'), g, 3);
    ASSERT_TRUE(gen);
    EXPECT_EQ(gen->site, 13);
    EXPECT_EQ(gen->steps, 0);
    EXPECT_EQ(gen->sign, 1);

    gen = find_generator(parse_pauli("X13,29,31 Y9,30 Z8,12,17,28,32", 127), g, 6);
    ASSERT_TRUE(gen);
    EXPECT_EQ(gen->site, 13);
    EXPECT_EQ(gen->steps, 5);
    EXPECT_EQ(gen->sign, 1);

    auto neg = parse_pauli("-X13,29,31 Y9,30 Z8,12,17,28,32", 127);
    gen = find_generator(neg, g, 6);
    ASSERT_TRUE(gen);
    EXPECT_EQ(gen->sign, -1);

    // A Z on one site is never a product of two separated Z's.
    EXPECT_FALSE(find_generator(parse_pauli("Z0,126", 127), g, 4));
    EXPECT_THROW(find_generator(PauliString(127), g, 13), std::invalid_argument);
}

TEST(Clifford, WeightSeventeenObservableResolves) {
    // Exhaustive oracle: conjugate every single-site Z for up to 5 steps and
    // look the string up directly.
    auto g = build_eagle_127();
    const auto target = parse_pauli("X37,41,52,56,57,58,62,79 Y75 Z38,40,42,63,72,80,90,91", 127);
    ASSERT_EQ(target.weight(), 17);
    int found_site = -1, found_steps = -1;
    for (int steps = 0; steps <= 5 && found_site < 0; ++steps) {
        for (int v = 0; v < 127 && found_site < 0; ++v) {
            auto p = PauliString::single(127, v, 'Z');
            for (int k = 0; k < steps; ++k) {
                p = conjugate_step(p, g, false);
            }
            if (p.same_operator(target)) {
                found_site = v, found_steps = steps;
            }
        }
    }
    auto gen = find_generator(target, g, 5);
    ASSERT_TRUE(gen);
    EXPECT_EQ(gen->site, found_site);
    EXPECT_EQ(gen->steps, found_steps);
    EXPECT_EQ(gen->site, 58);
    EXPECT_EQ(gen->steps, 5);
    EXPECT_EQ(gen->sign, -1);
}

TEST(Clifford, ZeroStateExpectation) {
    EXPECT_EQ(expect_on_zero_state(parse_pauli("Z0,2", 3)), 1.0);
    EXPECT_EQ(expect_on_zero_state(parse_pauli("-Z1", 3)), -1.0);
    EXPECT_EQ(expect_on_zero_state(parse_pauli("X1", 3)), 0.0);
    EXPECT_EQ(expect_on_zero_state(PauliString(3)), 1.0);
}

TEST(Clifford, ExtendedMeasurementOfProductState) {
    auto g = build_heavy_hex_grid(1, 1);
    auto s = init_product_state(g, 4);
    TrotterConfig cfg;
    cfg.chi_max = 4;
    EXPECT_NEAR(measure_string_extended(s, Generator{3, 0, 1}, cfg), 1.0, 1e-14);
    EXPECT_NEAR(measure_string_extended(s, Generator{3, 0, -1}, cfg), -1.0, 1e-14);
}

TEST(Clifford, ExtendedMeasurementMatchesDense) {
    auto g = build_heavy_hex_grid(1, 1);
    const int n = g.num_vertices();
    const double theta = 0.3;
    const int steps = 2;
    auto target = PauliString::single(n, 4, 'Z');
    for (int k = 0; k < 2; ++k) {
        target = conjugate_step(target, g, false);
    }
    ASSERT_GT(target.weight(), 1);
    auto gen = find_generator(target, g, 4);
    ASSERT_TRUE(gen);

    TrotterConfig cfg;
    cfg.theta_h = theta;
    cfg.n_steps = steps;
    cfg.chi_max = 64;
    auto s = init_product_state(g, 64);
    trotter_evolve(s, cfg);
    const double bp = measure_string_extended(s, *gen, cfg);
    const double exact = dense_string_expect(testref::evolve(g, theta, steps), target);
    EXPECT_NEAR(bp, exact, 1e-6);
}
