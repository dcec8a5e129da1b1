#include <gtest/gtest.h>

#include <map>
#include <set>

#include "bptns/lattice.hpp"

using namespace bptns;

namespace {

bool rows_are_adjacent(const LatticeGraph &g) {
    for (const auto &e : g.edges()) {
        if (std::abs(g.row_of(e.a) - g.row_of(e.b)) > 1) {
            return false;
        }
    }
    return true;
}

// Degree-2 decorations counted per face: every cycle of the 1x1 grid.
int cycle_length_if_single_cycle(const LatticeGraph &g) {
    for (int v = 0; v < g.num_vertices(); ++v) {
        if (g.degree(v) != 2) {
            return -1;
        }
    }
    return g.is_connected() ? g.num_vertices() : -1;
}

}  // namespace

TEST(Lattice, SingleHeavyHex) {
    auto g = build_heavy_hex_grid(1, 1);
    EXPECT_EQ(g.num_vertices(), 12);
    EXPECT_EQ(g.num_edges(), 12);
    EXPECT_EQ(cycle_length_if_single_cycle(g), 12);
    EXPECT_TRUE(rows_are_adjacent(g));
}

TEST(Lattice, TwoFusedHexes) {
    auto g = build_heavy_hex_grid(1, 2);
    EXPECT_EQ(g.num_vertices(), 12 + 12 - 3);
    EXPECT_EQ(g.num_edges(), 12 + 12 - 2);
    EXPECT_TRUE(g.is_connected());
}

TEST(Lattice, GridDegreeBound) {
    for (int r = 1; r <= 4; ++r) {
        for (int c = 1; c <= 4; ++c) {
            auto g = build_heavy_hex_grid(r, c);
            EXPECT_LE(g.max_degree(), 3);
            EXPECT_TRUE(g.is_connected());
            EXPECT_TRUE(rows_are_adjacent(g));
            // Euler: independent cycles equal the number of hexagons.
            EXPECT_EQ(g.num_edges() - g.num_vertices() + 1, r * c);
        }
    }
}

TEST(Lattice, EagleMatchesGridDrawing) {
    auto eagle = build_eagle_127();
    auto drawn = build_eagle_from_grid();
    EXPECT_EQ(eagle.num_vertices(), 127);
    EXPECT_EQ(eagle.num_edges(), 144);
    EXPECT_EQ(eagle.max_degree(), 3);
    EXPECT_EQ(eagle.edges(), drawn.edges());
    EXPECT_TRUE(eagle.is_connected());
    EXPECT_EQ(eagle.degree(62), 3);
    EXPECT_EQ(eagle.row_of(62), 6);  // central line row of 13 drawing rows
    EXPECT_EQ(eagle.num_rows(), 13);
    EXPECT_EQ(eagle.degree(13), 1);
    EXPECT_EQ(eagle.degree(113), 1);
    EXPECT_EQ(eagle.neighbors(13), std::vector<VertexId>{12});
    EXPECT_EQ(eagle.neighbors(113), std::vector<VertexId>{114});
    EXPECT_TRUE(rows_are_adjacent(eagle));
}

TEST(Lattice, EagleIsGridPlusTwoLeaves) {
    auto grid = build_heavy_hex_grid(6, 3);
    EXPECT_EQ(grid.num_vertices() + 2, 127);
    EXPECT_EQ(grid.num_edges() + 2, 144);
}

TEST(Lattice, Ring) {
    for (int l : {3, 8, 12}) {
        auto g = build_ring(l);
        EXPECT_EQ(g.num_vertices(), l);
        EXPECT_EQ(g.num_edges(), l);
        for (int v = 0; v < l; ++v) {
            EXPECT_EQ(g.degree(v), 2);
        }
        for (int id = 0; id < l; ++id) {
            EXPECT_FALSE(g.is_periodic(id));
        }
    }
    EXPECT_THROW(build_ring(2), std::invalid_argument);
}

TEST(Lattice, UnitCellUnwrapsToHeavyHex) {
    auto cell = build_infinite_unit_cell();
    EXPECT_EQ(cell.num_vertices(), 5);
    EXPECT_EQ(cell.marked_vertex(), 3);
    std::multiset<int> degs;
    for (int v = 0; v < 5; ++v) {
        degs.insert(cell.degree(v));
    }
    EXPECT_EQ(degs, (std::multiset<int>{2, 2, 2, 3, 3}));

    // Tile 3x3 copies. Periodic edges connect to the neighbouring cell along
    // one lattice direction each; interior copies must show bulk degrees.
    const int n = 3;
    auto id = [&](int x, int y, int v) { return ((x * n) + y) * 5 + v; };
    std::map<int, std::set<int>> adj;
    for (int x = 0; x < n; ++x) {
        for (int y = 0; y < n; ++y) {
            for (int e = 0; e < cell.num_edges(); ++e) {
                auto ed = cell.edge(e);
                int x2 = x, y2 = y;
                if (cell.is_periodic(e)) {
                    (ed == Edge{1, 4} ? x2 : y2) += 1;
                }
                if (x2 >= n || y2 >= n) {
                    continue;
                }
                adj[id(x, y, ed.a)].insert(id(x2, y2, ed.b));
                adj[id(x2, y2, ed.b)].insert(id(x, y, ed.a));
            }
        }
    }
    for (int v = 0; v < 5; ++v) {
        EXPECT_EQ(static_cast<int>(adj[id(1, 1, v)].size()), cell.degree(v));
    }
    // Degree-3 sites only touch degree-2 sites, as in a decorated honeycomb.
    for (int v : {1, 3}) {
        for (int w : cell.neighbors(v)) {
            EXPECT_EQ(cell.degree(w), 2);
        }
    }
}

TEST(Lattice, JsonRoundTrip) {
    for (auto g : {build_heavy_hex_grid(2, 2), build_infinite_unit_cell(), build_ring(5)}) {
        auto back = lattice_from_json(to_json(g));
        EXPECT_EQ(back.edges(), g.edges());
        EXPECT_EQ(back.kind(), g.kind());
        for (int e = 0; e < g.num_edges(); ++e) {
            EXPECT_EQ(back.is_periodic(e), g.is_periodic(e));
        }
        EXPECT_EQ(back.has_rows(), g.has_rows());
        EXPECT_EQ(back.marked_vertex(), g.marked_vertex());
    }
}

TEST(Lattice, SpecParsing) {
    EXPECT_EQ(lattice_from_spec("grid 2x3").num_vertices(), build_heavy_hex_grid(2, 3).num_vertices());
    EXPECT_EQ(lattice_from_spec("ring 7").num_vertices(), 7);
    EXPECT_EQ(lattice_from_spec("eagle127").num_vertices(), 127);
    EXPECT_THROW(lattice_from_spec("torus"), std::invalid_argument);
}

TEST(Lattice, RejectsMultiEdgesAndLoops) {
    EXPECT_THROW(LatticeGraph(3, {{0, 1}, {1, 0}}), std::invalid_argument);
    EXPECT_THROW(LatticeGraph(3, {{1, 1}}), std::invalid_argument);
}
