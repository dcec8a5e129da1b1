#include <gtest/gtest.h>

#include <random>

#include "bptns/tensor.hpp"

using namespace bptns;

namespace {

Tensor random_tensor(std::vector<Index> inds, std::mt19937_64 &rng) {
    std::normal_distribution<double> nd;
    Tensor t(std::move(inds));
    for (auto &x : t.storage()) {
        x = cplx(nd(rng), nd(rng));
    }
    return t;
}

// Reference contraction of a[i,j,k] b[k,l,j] -> c[i,l] by explicit loops.
std::vector<cplx> loop_contract(const Tensor &a, const Tensor &b, int di, int dj, int dk, int dl) {
    std::vector<cplx> c(di * dl, 0.0);
    for (int i = 0; i < di; ++i)
        for (int l = 0; l < dl; ++l)
            for (int j = 0; j < dj; ++j)
                for (int k = 0; k < dk; ++k)
                    c[i * dl + l] += a.storage()[(i * dj + j) * dk + k] * b.storage()[(k * dl + l) * dj + j];
    return c;
}

}  // namespace

TEST(Tensor, ContractMatchesLoopNest) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        const int di = 2 + trial % 3, dj = 3, dk = 1 + trial % 4, dl = 4;
        Index i = make_index(di, "i"), j = make_index(dj, "j"), k = make_index(dk, "k"), l = make_index(dl, "l");
        Tensor a = random_tensor({i, j, k}, rng);
        Tensor b = random_tensor({k, l, j}, rng);
        Tensor c = contract(a, b);
        ASSERT_EQ(c.rank(), 2u);
        EXPECT_EQ(c.index(0), i);
        EXPECT_EQ(c.index(1), l);
        auto ref = loop_contract(a, b, di, dj, dk, dl);
        for (std::size_t n = 0; n < ref.size(); ++n) {
            EXPECT_NEAR(std::abs(c.storage()[n] - ref[n]), 0.0, 1e-12);
        }
    }
}

TEST(Tensor, IdentityContraction) {
    std::mt19937_64 rng(1);
    Index a = make_index(4), b = make_index(4);
    Tensor v = random_tensor({b}, rng);
    Tensor r = contract(delta(a, b), v);
    ASSERT_EQ(r.index(0), a);
    for (int n = 0; n < 4; ++n) {
        EXPECT_EQ(r.storage()[n], v.storage()[n]);
    }
}

TEST(Tensor, OuterProductNorm) {
    std::mt19937_64 rng(2);
    Tensor a = random_tensor({make_index(3), make_index(2)}, rng);
    Tensor b = random_tensor({make_index(5)}, rng);
    EXPECT_NEAR(norm(contract(a, b)), norm(a) * norm(b), 1e-12);
}

TEST(Tensor, DimensionMismatchThrows) {
    Index i = make_index(2);
    Index j{i.uid, 3, "bad"};
    EXPECT_THROW(contract(Tensor({i}), Tensor({j})), std::invalid_argument);
}

TEST(Tensor, PermuteKeepsValuesByIndex) {
    std::mt19937_64 rng(3);
    Index i = make_index(2), j = make_index(3), k = make_index(4);
    Tensor t = random_tensor({i, j, k}, rng);
    std::vector<Index> order{k, i, j};
    Tensor p = permute(t, order);
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 3; ++y)
            for (int z = 0; z < 4; ++z) {
                std::array<int, 3> a{x, y, z}, b{z, x, y};
                EXPECT_EQ(t.at(a), p.at(b));
            }
}

TEST(Tensor, Bilinearity) {
    std::mt19937_64 rng(4);
    Index i = make_index(3), j = make_index(2), k = make_index(3);
    Tensor a1 = random_tensor({i, j}, rng), a2 = random_tensor({j, i}, rng), b = random_tensor({j, k}, rng);
    const cplx s(0.3, -1.2);
    Tensor lhs = contract(a1 + s * a2, b);
    Tensor rhs = contract(a1, b) + s * contract(a2, b);
    EXPECT_LT(norm(lhs - rhs), 1e-12);
}

TEST(Tensor, PrimeIsInvolution) {
    Index i = make_index(2, "x");
    EXPECT_NE(i.prime(), i);
    EXPECT_EQ(i.prime().prime(), i);
    EXPECT_TRUE(i.prime().is_primed());
    EXPECT_FALSE(i.is_primed());
}

TEST(Svd, IdentityIsExact) {
    Index a = make_index(3), b = make_index(3);
    std::vector<Index> rows{a};
    auto r = svd_truncate(delta(a, b), rows, 8);
    ASSERT_EQ(r.s.values.size(), 3u);
    for (double s : r.s.values) {
        EXPECT_NEAR(s, 1.0, 1e-14);
    }
    EXPECT_EQ(r.discarded_weight, 0.0);
}

TEST(Svd, RankOneOuterProduct) {
    std::mt19937_64 rng(5);
    Index a = make_index(4), b = make_index(3);
    Tensor t = contract(random_tensor({a}, rng), random_tensor({b}, rng));
    std::vector<Index> rows{a};
    auto r = svd_truncate(t, rows, 1);
    EXPECT_LT(r.discarded_weight, 1e-28);
    Tensor us = r.u;
    scale_leg(us, r.s.row, r.s.values);
    Tensor rec = contract(replace_index(us, r.s.row, r.s.col), r.v);
    EXPECT_LT(norm(rec - t) / norm(t), 1e-13);
}

TEST(Svd, TruncationMatchesFullSpectrum) {
    std::mt19937_64 rng(6);
    Index a = make_index(4), b = make_index(4);
    Tensor t = random_tensor({a, b}, rng);
    Eigen::JacobiSVD<Eigen::MatrixXcd> ref(to_matrix(t, std::vector<Index>{a}));
    const auto &sv = ref.singularValues();
    std::vector<Index> rows{a};
    auto r = svd_truncate(t, rows, 2, 0.0);
    ASSERT_EQ(r.s.values.size(), 2u);
    EXPECT_NEAR(r.s.values[0], sv[0], 1e-12);
    EXPECT_NEAR(r.s.values[1], sv[1], 1e-12);
    const double tot = sv.squaredNorm();
    EXPECT_NEAR(r.discarded_weight, (sv[2] * sv[2] + sv[3] * sv[3]) / tot, 1e-12);
    // Best rank-2 approximation error equals the discarded tail.
    Tensor us = r.u;
    scale_leg(us, r.s.row, r.s.values);
    Tensor rec = contract(replace_index(us, r.s.row, r.s.col), r.v);
    EXPECT_NEAR(std::pow(norm(rec - t), 2), sv[2] * sv[2] + sv[3] * sv[3], 1e-10);
}

TEST(Svd, FullRankReconstructsAndParseval) {
    std::mt19937_64 rng(8);
    Index a = make_index(3), b = make_index(2), c = make_index(5);
    Tensor t = random_tensor({a, b, c}, rng);
    for (auto rows : {std::vector<Index>{a}, std::vector<Index>{c, a}, std::vector<Index>{b}}) {
        auto r = svd_truncate(t, rows, 100, 0.0);
        double ss = 0.0;
        for (double s : r.s.values) {
            ss += s * s;
        }
        EXPECT_NEAR(ss, std::pow(norm(t), 2), 1e-10);
        Tensor us = r.u;
        scale_leg(us, r.s.row, r.s.values);
        Tensor rec = contract(replace_index(us, r.s.row, r.s.col), r.v);
        EXPECT_LT(norm(rec - t) / norm(t), 1e-12);
        // Isometries.
        Tensor uu = contract(conj(replace_index(r.u, r.s.row, r.s.row.prime())), r.u);
        Tensor id = delta(r.s.row.prime(), r.s.row);
        EXPECT_LT(norm(uu - id), 1e-12);
        Tensor vv = contract(r.v, conj(replace_index(r.v, r.s.col, r.s.col.prime())));
        EXPECT_LT(norm(vv - delta(r.s.col, r.s.col.prime())), 1e-12);
    }
}

TEST(Svd, RejectsBadRowSets) {
    Index a = make_index(2), b = make_index(2);
    Tensor t({a, b});
    std::vector<Index> none, all{a, b};
    EXPECT_THROW(svd_truncate(t, none, 2), std::invalid_argument);
    EXPECT_THROW(svd_truncate(t, all, 2), std::invalid_argument);
}

TEST(Qr, ReconstructsWithIsometricQ) {
    std::mt19937_64 rng(9);
    Index a = make_index(3), b = make_index(4), c = make_index(2);
    Tensor t = random_tensor({a, b, c}, rng);
    std::vector<Index> rows{b, c};
    auto [q, r] = qr(t, rows);
    EXPECT_LT(norm(contract(q, r) - t), 1e-12);
    Index bond = q.index(2);
    Tensor qq = contract(conj(replace_index(q, bond, bond.prime())), q);
    EXPECT_LT(norm(qq - delta(bond.prime(), bond)), 1e-12);
}

TEST(PseudoInverse, Cases) {
    Index a = make_index(2), b = make_index(2);
    auto p = pseudo_inverse({a, b, {1.0, 1.0}}, 1e-12);
    EXPECT_EQ(p.values, (std::vector<double>{1.0, 1.0}));
    p = pseudo_inverse({a, b, {2.0, 0.0}}, 1e-12);
    EXPECT_EQ(p.values, (std::vector<double>{0.5, 0.0}));
    EXPECT_THROW(pseudo_inverse({a, b, {0.0, 0.0}}, 1e-12), std::domain_error);

    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    Index c = make_index(6), d = make_index(6);
    DiagTensor x{c, d, {}};
    for (int k = 0; k < 6; ++k) {
        x.values.push_back(k == 3 ? 0.0 : u(rng));
    }
    auto px = pseudo_inverse(x, 1e-12);
    for (int k = 0; k < 6; ++k) {
        EXPECT_NEAR(x.values[k] * px.values[k] * x.values[k], x.values[k], 1e-12);
    }
}
