#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "bptns/tns.hpp"
#include "dense_oracle.hpp"

using namespace bptns;

namespace {

LatticeGraph small_tree() {
    // 0-1-2-3 with a branch 1-4-5 and 2-6.
    return LatticeGraph(7, {{0, 1}, {1, 2}, {2, 3}, {1, 4}, {4, 5}, {2, 6}});
}

Eigen::VectorXcd dense_from_sites(const VidalTNS &s, const std::vector<Tensor> &sites) {
    Tensor acc;
    for (const auto &t : sites) {
        acc = contract(acc, t);
    }
    std::vector<Index> order;
    for (int v = 0; v < s.num_sites(); ++v) {
        order.push_back(s.phys(v));
    }
    acc = permute(acc, order);
    Eigen::VectorXcd out(acc.size());
    for (std::size_t k = 0; k < acc.size(); ++k) {
        out[k] = acc.storage()[k] * std::exp(s.log_scale());
    }
    return out;
}

}  // namespace

TEST(Tns, ProductState) {
    for (auto g : {build_ring(4), build_heavy_hex_grid(1, 1), small_tree()}) {
        auto s = init_product_state(g);
        auto psi = to_dense(s);
        EXPECT_EQ(psi.size(), Eigen::Index{1} << g.num_vertices());
        EXPECT_EQ(psi[0], cplx(1.0));
        EXPECT_NEAR(psi.norm(), 1.0, 1e-15);
        EXPECT_NEAR(tns_norm(s), 1.0, 1e-14);
        EXPECT_LT(max_vidal_residual(s), 1e-15);
    }
}

TEST(Tns, SymmetricGaugeRepresentsSameState) {
    auto g = build_ring(4);
    auto s = random_state(g, 3, 11);
    auto t = absorb_sqrt_bonds(s);
    EXPECT_LT((dense_from_sites(s, t) - to_dense(s)).norm() / to_dense(s).norm(), 1e-12);
}

TEST(Tns, SqrtBondWeights) {
    auto g = build_chain(2);
    auto s = init_product_state(g, 2);
    Bond b = s.bond(0);
    b.index = make_index(2, "b");
    b.lambda = {0.8, 0.6};
    s.set_bond(0, b);
    for (int v : {0, 1}) {
        Tensor t({s.phys(v), b.index});
        t.storage() = {1.0, 1.0, 0.0, 0.0};
        s.set_gamma(v, t);
    }
    auto sites = absorb_sqrt_bonds(s);
    std::array<int, 2> pos{0, 1};
    EXPECT_NEAR(std::abs(sites[0].at(pos)), std::sqrt(0.6), 1e-15);
    pos = {0, 0};
    EXPECT_NEAR(std::abs(sites[1].at(pos)), std::sqrt(0.8), 1e-15);
}

TEST(Tns, GaugeInvarianceOfDenseState) {
    auto g = build_heavy_hex_grid(1, 1);
    auto s = random_state(g, 2, 3);
    const auto before = to_dense(s);
    std::mt19937_64 rng(4);
    Eigen::MatrixXcd m = testref::random_matrix(2, 2, rng);
    Eigen::MatrixXcd minv = m.inverse();
    // Insert M M^-1 on edge 0: absorb lambda into side a first so the gauge
    // acts on a plain bond.
    const int id = 0;
    const Edge e = g.edge(id);
    Bond b = s.bond(id);
    Tensor ga = s.gamma(e.a);
    scale_leg(ga, b.index, b.lambda);
    Index nb = make_index(2, "new");
    auto as_tensor = [](const Eigen::MatrixXcd &x, const Index &r, const Index &c) {
        Tensor t({r, c});
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) t.storage()[i * 2 + j] = x(i, j);
        return t;
    };
    ga = contract(ga, as_tensor(m, b.index, nb));
    Tensor gb = contract(s.gamma(e.b), as_tensor(minv.transpose(), b.index, nb));
    s.set_bond(id, Bond{nb, {1.0, 1.0}});
    s.set_gamma(e.a, ga);
    s.set_gamma(e.b, gb);
    EXPECT_LT((to_dense(s) - before).norm() / before.norm(), 1e-12);
}

TEST(Tns, DenseCeiling) {
    auto s = init_product_state(build_ring(12));
    EXPECT_THROW(to_dense(s, 10), std::length_error);
}

TEST(Tns, BpNormExactOnTrees) {
    auto g = small_tree();
    auto s = random_state(g, 3, 5);
    s.set_log_scale(0.37);
    const double dense = to_dense(s).squaredNorm();
    EXPECT_NEAR(tns_norm(s) / dense, 1.0, 1e-12);
}

TEST(Tns, CheckpointRoundTrip) {
    auto s = random_state(build_heavy_hex_grid(1, 1), 2, 8);
    s.set_log_scale(-1.25);
    const auto path = std::filesystem::temp_directory_path() / "bptns_ckpt_test.json";
    save_checkpoint(s, path.string());
    auto back = load_checkpoint(path.string());
    std::filesystem::remove(path);
    EXPECT_EQ(back.log_scale(), s.log_scale());
    EXPECT_EQ(back.graph().edges(), s.graph().edges());
    EXPECT_LT((to_dense(back) - to_dense(s)).norm(), 1e-14);
    // Loaded indices are fresh.
    EXPECT_NE(back.bond(0).index, s.bond(0).index);
}

TEST(Tns, BondEntropy) {
    EXPECT_EQ(bond_entropy({1.0}), 0.0);
    EXPECT_NEAR(bond_entropy({1 / std::sqrt(2.0), 1 / std::sqrt(2.0)}), 1.0, 1e-15);
    std::vector<double> l = {0.7, 0.5, 0.3, 0.1};
    double n = 0;
    for (double x : l) n += x * x;
    for (double &x : l) x /= std::sqrt(n);
    double ref = 0;
    for (double x : l) ref += -x * x * std::log(x * x) / std::log(2.0);
    EXPECT_NEAR(bond_entropy(l), ref, 1e-14);
}
