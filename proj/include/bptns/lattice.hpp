#pragma once

// Qubit connectivity graphs: heavy-hex grids, the 127-qubit Eagle layout,
// rings and the periodic 5-site cell of the infinite heavy-hex lattice.

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bptns {

using VertexId = int;

/// Undirected edge stored with a < b.
struct Edge {
    VertexId a = 0;
    VertexId b = 0;

    VertexId other(VertexId v) const { return v == a ? b : a; }
    bool touches(VertexId v) const { return v == a || v == b; }
    friend bool operator==(const Edge &, const Edge &) = default;
    friend auto operator<=>(const Edge &, const Edge &) = default;
};

Edge make_edge(VertexId u, VertexId v);

enum class LatticeKind { heavy_hex_grid, eagle127, ring, infinite_unit_cell, custom };

std::string to_string(LatticeKind k);
LatticeKind lattice_kind_from_string(const std::string &s);

class LatticeGraph {
public:
    LatticeGraph() = default;

    /// Vertices are 0..num_vertices-1. Throws on self-loops, repeated edges or
    /// out-of-range endpoints.
    LatticeGraph(int num_vertices, std::vector<Edge> edges, LatticeKind kind = LatticeKind::custom);

    int num_vertices() const { return num_vertices_; }
    int num_edges() const { return static_cast<int>(edges_.size()); }
    const std::vector<Edge> &edges() const { return edges_; }
    const Edge &edge(int id) const { return edges_[id]; }

    /// Edge id of {u, v}, or -1.
    int edge_id(VertexId u, VertexId v) const;
    /// Edge ids incident to v, ascending.
    const std::vector<int> &incident(VertexId v) const { return incident_[v]; }
    std::vector<VertexId> neighbors(VertexId v) const;
    int degree(VertexId v) const { return static_cast<int>(incident_[v].size()); }
    int max_degree() const;

    LatticeKind kind() const { return kind_; }
    /// Grid shape for heavy_hex_grid, ring length in rows for ring.
    int shape_rows() const { return shape_rows_; }
    int shape_cols() const { return shape_cols_; }

    bool is_periodic(int edge_id) const { return periodic_[edge_id]; }
    void set_periodic(int edge_id, bool flag) { periodic_[edge_id] = flag; }

    /// Row geometry for row-by-row contraction. Empty when absent.
    bool has_rows() const { return !row_of_.empty(); }
    int row_of(VertexId v) const { return row_of_.at(v); }
    int col_of(VertexId v) const { return col_of_.at(v); }
    int num_rows() const;
    /// Vertices of a row ordered by column.
    std::vector<VertexId> row_vertices(int row) const;
    void set_geometry(std::vector<int> row_of, std::vector<int> col_of);

    /// Vertex used for the default observable, if the constructor designates one.
    std::optional<VertexId> marked_vertex() const { return marked_; }
    void set_marked_vertex(VertexId v) { marked_ = v; }

    bool is_connected() const;
    bool is_tree() const { return is_connected() && num_edges() == num_vertices_ - 1; }

    /// Graph distance from a set of sources to every vertex (-1 if unreachable).
    std::vector<int> distances_from(const std::vector<VertexId> &sources) const;

    void set_shape(int rows, int cols) {
        shape_rows_ = rows;
        shape_cols_ = cols;
    }

private:
    int num_vertices_ = 0;
    std::vector<Edge> edges_;
    std::vector<bool> periodic_;
    std::vector<std::vector<int>> incident_;
    std::vector<int> row_of_;
    std::vector<int> col_of_;
    LatticeKind kind_ = LatticeKind::custom;
    int shape_rows_ = 0;
    int shape_cols_ = 0;
    std::optional<VertexId> marked_;
};

/// rows x cols heavy hexagons with open boundaries. Line rows of the drawing
/// alternate with rows of vertical bridge qubits; numbering is row-major.
LatticeGraph build_heavy_hex_grid(int rows, int cols);

/// IBM Eagle coupling map, loaded from the bundled data file.
LatticeGraph build_eagle_127();

/// Eagle layout regenerated from the 6x3 grid drawing with the two corner
/// qubits attached; used to cross-check the bundled map.
LatticeGraph build_eagle_from_grid();

LatticeGraph build_ring(int length);

/// Open chain 0-1-...-(n-1).
LatticeGraph build_chain(int length);

/// Periodic 5-site cell of the infinite heavy-hex lattice. Vertices 1 and 3
/// have degree 3, vertex 3 is the marked observable site.
LatticeGraph build_infinite_unit_cell();

/// The bond of the unit cell whose spectrum defines the entropy density.
Edge unit_cell_entropy_edge();

std::string to_json(const LatticeGraph &g);
LatticeGraph lattice_from_json(const std::string &text);

/// Parses "eagle127", "grid RxC" / "grid:RxC", "ring L", "chain L", "infinite".
LatticeGraph lattice_from_spec(const std::string &spec);

}  // namespace bptns
