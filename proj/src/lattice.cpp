#include "bptns/lattice.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <regex>
#include <set>
#include <stdexcept>

#include "eagle127_data.hpp"
#include "json.hpp"

namespace bptns {

using nlohmann::json;

Edge make_edge(VertexId u, VertexId v) { return u < v ? Edge{u, v} : Edge{v, u}; }

std::string to_string(LatticeKind k) {
    switch (k) {
    case LatticeKind::heavy_hex_grid:
        return "heavy_hex_grid";
    case LatticeKind::eagle127:
        return "eagle127";
    case LatticeKind::ring:
        return "ring";
    case LatticeKind::infinite_unit_cell:
        return "infinite_unit_cell";
    case LatticeKind::custom:
        return "custom";
    }
    return "custom";
}

LatticeKind lattice_kind_from_string(const std::string &s) {
    for (auto k : {LatticeKind::heavy_hex_grid, LatticeKind::eagle127, LatticeKind::ring,
                   LatticeKind::infinite_unit_cell, LatticeKind::custom}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    throw std::invalid_argument("unknown lattice kind: " + s);
}

LatticeGraph::LatticeGraph(int num_vertices, std::vector<Edge> edges, LatticeKind kind)
    : num_vertices_(num_vertices), edges_(std::move(edges)), kind_(kind) {
    if (num_vertices < 1) {
        throw std::invalid_argument("graph needs at least one vertex");
    }
    std::set<Edge> seen;
    for (auto &e : edges_) {
        if (e.a == e.b) {
            throw std::invalid_argument("self-loop at vertex " + std::to_string(e.a));
        }
        e = make_edge(e.a, e.b);
        if (e.a < 0 || e.b >= num_vertices) {
            throw std::invalid_argument("edge endpoint out of range");
        }
        if (!seen.insert(e).second) {
            throw std::invalid_argument("repeated edge");
        }
    }
    periodic_.assign(edges_.size(), false);
    incident_.assign(num_vertices, {});
    for (int id = 0; id < num_edges(); ++id) {
        incident_[edges_[id].a].push_back(id);
        incident_[edges_[id].b].push_back(id);
    }
}

int LatticeGraph::edge_id(VertexId u, VertexId v) const {
    if (u < 0 || u >= num_vertices_ || v < 0 || v >= num_vertices_) {
        return -1;
    }
    const Edge e = make_edge(u, v);
    for (int id : incident_[u]) {
        if (edges_[id] == e) {
            return id;
        }
    }
    return -1;
}

std::vector<VertexId> LatticeGraph::neighbors(VertexId v) const {
    std::vector<VertexId> out;
    for (int id : incident_[v]) {
        out.push_back(edges_[id].other(v));
    }
    return out;
}

int LatticeGraph::max_degree() const {
    int d = 0;
    for (const auto &inc : incident_) {
        d = std::max(d, static_cast<int>(inc.size()));
    }
    return d;
}

int LatticeGraph::num_rows() const {
    if (row_of_.empty()) {
        return 0;
    }
    return *std::max_element(row_of_.begin(), row_of_.end()) + 1;
}

std::vector<VertexId> LatticeGraph::row_vertices(int row) const {
    std::vector<VertexId> out;
    for (VertexId v = 0; v < num_vertices_; ++v) {
        if (row_of_.at(v) == row) {
            out.push_back(v);
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [&](VertexId x, VertexId y) { return col_of_[x] < col_of_[y]; });
    return out;
}

void LatticeGraph::set_geometry(std::vector<int> row_of, std::vector<int> col_of) {
    if (static_cast<int>(row_of.size()) != num_vertices_ || row_of.size() != col_of.size()) {
        throw std::invalid_argument("geometry size mismatch");
    }
    for (const auto &e : edges_) {
        if (std::abs(row_of[e.a] - row_of[e.b]) > 1) {
            throw std::invalid_argument("edge spans more than one row");
        }
    }
    row_of_ = std::move(row_of);
    col_of_ = std::move(col_of);
}

std::vector<int> LatticeGraph::distances_from(const std::vector<VertexId> &sources) const {
    std::vector<int> dist(num_vertices_, -1);
    std::deque<VertexId> queue;
    for (VertexId s : sources) {
        if (dist[s] < 0) {
            dist[s] = 0;
            queue.push_back(s);
        }
    }
    while (!queue.empty()) {
        VertexId v = queue.front();
        queue.pop_front();
        for (VertexId w : neighbors(v)) {
            if (dist[w] < 0) {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    return dist;
}

bool LatticeGraph::is_connected() const {
    auto d = distances_from({0});
    return std::none_of(d.begin(), d.end(), [](int x) { return x < 0; });
}

namespace {

struct GridExtras {
    int extend_first_right = 0;  // extra positions after the last column of line row 0
    int extend_last_left = 0;    // extra positions before the first column of the last line row
};

LatticeGraph grid_impl(int rows, int cols, GridExtras extras, LatticeKind kind) {
    if (rows < 1 || cols < 1) {
        throw std::invalid_argument("heavy-hex grid needs rows, cols >= 1");
    }
    auto offset = [](int hex_row) { return hex_row % 2 == 0 ? 0 : 2; };
    std::vector<int> row_of, col_of;
    std::vector<Edge> edges;
    std::vector<std::map<int, VertexId>> line(rows + 1);
    int next = 0;
    auto add_vertex = [&](int row, int col) {
        row_of.push_back(row);
        col_of.push_back(col);
        return next++;
    };

    for (int r = 0; r <= rows; ++r) {
        int lo = 1 << 30;
        int hi = -1;
        for (int k : {r - 1, r}) {
            if (k >= 0 && k < rows) {
                lo = std::min(lo, offset(k));
                hi = std::max(hi, offset(k) + 4 * cols);
            }
        }
        if (r == 0) {
            hi += extras.extend_first_right;
        }
        if (r == rows) {
            lo -= extras.extend_last_left;
        }
        for (int p = lo; p <= hi; ++p) {
            line[r][p] = add_vertex(2 * r, p);
            if (p > lo) {
                edges.push_back(make_edge(line[r][p - 1], line[r][p]));
            }
        }
        if (r < rows) {
            for (int j = 0; j <= cols; ++j) {
                add_vertex(2 * r + 1, offset(r) + 4 * j);
            }
        }
    }
    // Bridges connect equal positions of adjacent line rows.
    for (VertexId v = 0; v < next; ++v) {
        if (row_of[v] % 2 == 1) {
            const int r = row_of[v] / 2;
            edges.push_back(make_edge(line[r].at(col_of[v]), v));
            edges.push_back(make_edge(v, line[r + 1].at(col_of[v])));
        }
    }
    std::sort(edges.begin(), edges.end());
    LatticeGraph g(next, std::move(edges), kind);
    g.set_geometry(std::move(row_of), std::move(col_of));
    g.set_shape(rows, cols);
    return g;
}

}  // namespace

LatticeGraph build_heavy_hex_grid(int rows, int cols) {
    return grid_impl(rows, cols, {}, LatticeKind::heavy_hex_grid);
}

LatticeGraph build_eagle_from_grid() {
    LatticeGraph g = grid_impl(6, 3, {1, 1}, LatticeKind::eagle127);
    g.set_marked_vertex(62);
    return g;
}

LatticeGraph build_eagle_127() {
    const json doc = json::parse(detail::kEagle127CouplingMap);
    const int n = doc.at("num_qubits").get<int>();
    std::vector<Edge> edges;
    for (const auto &pair : doc.at("edges")) {
        edges.push_back(make_edge(pair.at(0).get<int>(), pair.at(1).get<int>()));
    }
    std::sort(edges.begin(), edges.end());
    LatticeGraph g(n, std::move(edges), LatticeKind::eagle127);
    // Row geometry comes from the drawing; the data file only fixes the edges.
    LatticeGraph drawn = build_eagle_from_grid();
    std::vector<int> row_of(n), col_of(n);
    for (VertexId v = 0; v < n; ++v) {
        row_of[v] = drawn.row_of(v);
        col_of[v] = drawn.col_of(v);
    }
    g.set_geometry(std::move(row_of), std::move(col_of));
    g.set_shape(6, 3);
    g.set_marked_vertex(62);
    return g;
}

LatticeGraph build_ring(int length) {
    if (length < 3) {
        throw std::invalid_argument("ring length must be >= 3");
    }
    std::vector<Edge> edges;
    for (int v = 0; v < length; ++v) {
        edges.push_back(make_edge(v, (v + 1) % length));
    }
    std::sort(edges.begin(), edges.end());
    LatticeGraph g(length, std::move(edges), LatticeKind::ring);
    g.set_shape(length, 1);
    g.set_marked_vertex(0);
    return g;
}

LatticeGraph build_chain(int length) {
    if (length < 1) {
        throw std::invalid_argument("chain length must be >= 1");
    }
    std::vector<Edge> edges;
    for (int v = 0; v + 1 < length; ++v) {
        edges.push_back({v, v + 1});
    }
    LatticeGraph g(length, std::move(edges), LatticeKind::custom);
    g.set_geometry(std::vector<int>(length, 0), [&] {
        std::vector<int> c(length);
        for (int v = 0; v < length; ++v) {
            c[v] = v;
        }
        return c;
    }());
    return g;
}

LatticeGraph build_infinite_unit_cell() {
    // 1 and 3 are the two honeycomb sites; 0, 2, 4 decorate the three bonds
    // between them. Two of those bonds wrap around the cell.
    std::vector<Edge> edges = {{0, 1}, {0, 3}, {1, 2}, {1, 4}, {2, 3}, {3, 4}};
    LatticeGraph g(5, edges, LatticeKind::infinite_unit_cell);
    g.set_periodic(g.edge_id(1, 4), true);
    g.set_periodic(g.edge_id(0, 3), true);
    g.set_marked_vertex(3);
    return g;
}

Edge unit_cell_entropy_edge() { return {0, 3}; }

std::string to_json(const LatticeGraph &g) {
    json doc;
    doc["kind"] = to_string(g.kind());
    std::vector<int> verts(g.num_vertices());
    for (int v = 0; v < g.num_vertices(); ++v) {
        verts[v] = v;
    }
    doc["vertices"] = verts;
    json edges = json::array();
    json periodic = json::array();
    for (int id = 0; id < g.num_edges(); ++id) {
        const auto &e = g.edge(id);
        edges.push_back({e.a, e.b});
        if (g.is_periodic(id)) {
            periodic.push_back({e.a, e.b});
        }
    }
    doc["edges"] = edges;
    doc["periodic_edges"] = periodic;
    if (g.has_rows()) {
        json rows = json::array();
        for (int v = 0; v < g.num_vertices(); ++v) {
            rows.push_back({g.row_of(v), g.col_of(v)});
        }
        doc["rows"] = rows;
    } else {
        doc["rows"] = nullptr;
    }
    doc["shape"] = {g.shape_rows(), g.shape_cols()};
    if (g.marked_vertex()) {
        doc["marked_vertex"] = *g.marked_vertex();
    }
    return doc.dump();
}

LatticeGraph lattice_from_json(const std::string &text) {
    const json doc = json::parse(text);
    const int n = static_cast<int>(doc.at("vertices").size());
    for (int v = 0; v < n; ++v) {
        if (doc["vertices"][v].get<int>() != v) {
            throw std::invalid_argument("graph JSON: vertices must be 0..n-1 in order");
        }
    }
    std::vector<Edge> edges;
    for (const auto &p : doc.at("edges")) {
        edges.push_back(make_edge(p.at(0).get<int>(), p.at(1).get<int>()));
    }
    LatticeGraph g(n, edges, lattice_kind_from_string(doc.at("kind").get<std::string>()));
    for (const auto &p : doc.at("periodic_edges")) {
        const int id = g.edge_id(p.at(0).get<int>(), p.at(1).get<int>());
        if (id < 0) {
            throw std::invalid_argument("graph JSON: periodic edge not in edge list");
        }
        g.set_periodic(id, true);
    }
    if (doc.contains("rows") && !doc["rows"].is_null()) {
        std::vector<int> row_of, col_of;
        for (const auto &rc : doc["rows"]) {
            row_of.push_back(rc.at(0).get<int>());
            col_of.push_back(rc.at(1).get<int>());
        }
        g.set_geometry(std::move(row_of), std::move(col_of));
    }
    if (doc.contains("shape")) {
        g.set_shape(doc["shape"].at(0).get<int>(), doc["shape"].at(1).get<int>());
    }
    if (doc.contains("marked_vertex")) {
        g.set_marked_vertex(doc["marked_vertex"].get<int>());
    }
    return g;
}

LatticeGraph lattice_from_spec(const std::string &spec) {
    static const std::regex grid_re(R"(^grid[ :]?(\d+)x(\d+)$)");
    static const std::regex ring_re(R"(^ring[ :]?(\d+)$)");
    static const std::regex chain_re(R"(^chain[ :]?(\d+)$)");
    std::smatch m;
    if (spec == "eagle127") {
        return build_eagle_127();
    }
    if (spec == "infinite") {
        return build_infinite_unit_cell();
    }
    if (std::regex_match(spec, m, grid_re)) {
        return build_heavy_hex_grid(std::stoi(m[1]), std::stoi(m[2]));
    }
    if (std::regex_match(spec, m, ring_re)) {
        return build_ring(std::stoi(m[1]));
    }
    if (std::regex_match(spec, m, chain_re)) {
        return build_chain(std::stoi(m[1]));
    }
    throw std::invalid_argument("unknown lattice: " + spec);
}

}  // namespace bptns
