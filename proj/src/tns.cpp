#include "bptns/tns.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace bptns {

using nlohmann::json;

VidalTNS::VidalTNS(LatticeGraph graph, int chi_max) : graph_(std::move(graph)), chi_max_(chi_max) {
    if (chi_max < 1) {
        throw std::invalid_argument("chi_max must be >= 1");
    }
    const int n = graph_.num_vertices();
    phys_.reserve(n);
    for (int v = 0; v < n; ++v) {
        phys_.push_back(make_index(2, "site:" + std::to_string(v)));
    }
    bonds_.resize(graph_.num_edges());
    for (int id = 0; id < graph_.num_edges(); ++id) {
        const Edge &e = graph_.edge(id);
        bonds_[id].index = make_index(1, "bond:(" + std::to_string(e.a) + "," + std::to_string(e.b) + ")");
        bonds_[id].lambda = {1.0};
    }
    gamma_.resize(n);
    for (int v = 0; v < n; ++v) {
        std::vector<Index> inds{phys_[v]};
        for (int id : graph_.incident(v)) {
            inds.push_back(bonds_[id].index);
        }
        gamma_[v] = Tensor(std::move(inds));
    }
}

void VidalTNS::set_gamma(VertexId v, Tensor t) {
    if (!t.has_index(phys_[v]) || t.rank() != 1 + graph_.incident(v).size()) {
        throw std::invalid_argument("site tensor legs do not match the graph");
    }
    for (int id : graph_.incident(v)) {
        if (!t.has_index(bonds_[id].index)) {
            throw std::invalid_argument("site tensor is missing a bond leg");
        }
    }
    gamma_[v] = std::move(t);
}

void VidalTNS::set_bond(int edge_id, Bond b) {
    if (static_cast<int>(b.lambda.size()) != b.index.dim) {
        throw std::invalid_argument("bond weights do not match the bond dimension");
    }
    bonds_[edge_id] = std::move(b);
}

int VidalTNS::max_bond_dim() const {
    int d = 1;
    for (const auto &b : bonds_) {
        d = std::max(d, b.index.dim);
    }
    return d;
}

Tensor VidalTNS::weighted_gamma(VertexId v, double power, int skip_edge) const {
    Tensor t = gamma_[v];
    for (int id : graph_.incident(v)) {
        if (id == skip_edge) {
            continue;
        }
        const auto &b = bonds_[id];
        std::vector<double> w(b.lambda.size());
        for (std::size_t k = 0; k < w.size(); ++k) {
            w[k] = std::pow(b.lambda[k], power);
        }
        scale_leg(t, b.index, w);
    }
    return t;
}

VidalTNS init_product_state(const LatticeGraph &graph, int chi_max) {
    VidalTNS s(graph, chi_max);
    for (int v = 0; v < graph.num_vertices(); ++v) {
        s.gamma(v).storage()[0] = 1.0;  // spin up, all bond positions 0
    }
    return s;
}

VidalTNS random_state(const LatticeGraph &graph, int bond_dim, std::uint64_t seed) {
    VidalTNS s(graph, bond_dim);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud(0.2, 1.0);
    for (int id = 0; id < graph.num_edges(); ++id) {
        Bond b = s.bond(id);
        b.index.dim = bond_dim;
        b.lambda.resize(bond_dim);
        double ss = 0.0;
        for (auto &x : b.lambda) {
            x = ud(rng);
            ss += x * x;
        }
        for (auto &x : b.lambda) {
            x /= std::sqrt(ss);
        }
        std::sort(b.lambda.rbegin(), b.lambda.rend());
        s.set_bond(id, b);
    }
    for (int v = 0; v < graph.num_vertices(); ++v) {
        std::vector<Index> inds{s.phys(v)};
        for (int id : graph.incident(v)) {
            inds.push_back(s.bond(id).index);
        }
        Tensor t(std::move(inds));
        for (auto &x : t.storage()) {
            x = cplx(nd(rng), nd(rng));
        }
        s.set_gamma(v, std::move(t));
    }
    return s;
}

std::vector<Tensor> absorb_sqrt_bonds(const VidalTNS &state) {
    std::vector<Tensor> out;
    out.reserve(state.num_sites());
    for (int v = 0; v < state.num_sites(); ++v) {
        out.push_back(state.weighted_gamma(v, 0.5));
    }
    return out;
}

double vidal_residual(const VidalTNS &state, int edge_id) {
    const Edge &e = state.graph().edge(edge_id);
    const Index &b = state.bond(edge_id).index;
    double worst = 0.0;
    for (VertexId v : {e.a, e.b}) {
        Tensor t = state.weighted_gamma(v, 1.0, edge_id);
        Tensor c = contract(conj(replace_index(t, b, b.prime())), t);
        Tensor id = delta(b.prime(), b);
        worst = std::max(worst, norm(c - id) / std::sqrt(static_cast<double>(b.dim)));
    }
    return worst;
}

double max_vidal_residual(const VidalTNS &state) {
    double r = 0.0;
    for (int id = 0; id < state.graph().num_edges(); ++id) {
        r = std::max(r, vidal_residual(state, id));
    }
    return r;
}

Eigen::VectorXcd to_dense(const VidalTNS &state, int max_qubits) {
    const auto &g = state.graph();
    const int n = g.num_vertices();
    if (n > max_qubits) {
        throw std::length_error("state has " + std::to_string(n) + " qubits, dense ceiling is " +
                                std::to_string(max_qubits));
    }
    // Breadth-first accumulation keeps the open boundary small on grids.
    std::vector<VertexId> order;
    std::vector<bool> seen(n, false);
    for (VertexId root = 0; root < n; ++root) {
        if (seen[root]) {
            continue;
        }
        std::deque<VertexId> queue{root};
        seen[root] = true;
        while (!queue.empty()) {
            VertexId v = queue.front();
            queue.pop_front();
            order.push_back(v);
            for (VertexId w : g.neighbors(v)) {
                if (!seen[w]) {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    Tensor acc;
    for (VertexId v : order) {
        Tensor t = state.gamma(v);
        for (int id : g.incident(v)) {
            if (g.edge(id).a == v) {
                scale_leg(t, state.bond(id).index, state.bond(id).lambda);
            }
        }
        acc = contract(acc, t);
    }
    std::vector<Index> phys_order;
    for (VertexId v = 0; v < n; ++v) {
        phys_order.push_back(state.phys(v));
    }
    acc = permute(acc, phys_order);
    Eigen::VectorXcd out(static_cast<Eigen::Index>(acc.size()));
    const double scale = std::exp(state.log_scale());
    for (std::size_t k = 0; k < acc.size(); ++k) {
        out[static_cast<Eigen::Index>(k)] = acc.storage()[k] * scale;
    }
    return out;
}

double bond_entropy(const std::vector<double> &lambda) {
    double s = 0.0;
    for (double l : lambda) {
        const double p = l * l;
        if (p > 1e-15) {
            s -= p * std::log2(p);
        }
    }
    return s;
}

namespace {

json index_to_json(const Index &i) { return {{"uid", i.uid}, {"dim", i.dim}, {"tag", i.tag}}; }

}  // namespace

std::string checkpoint_to_string(const VidalTNS &state) {
    json doc;
    doc["format"] = "bptns-checkpoint";
    doc["version"] = 1;
    doc["graph"] = json::parse(to_json(state.graph()));
    doc["chi_max"] = state.chi_max();
    doc["log_scale"] = state.log_scale();
    json sites = json::array();
    for (int v = 0; v < state.num_sites(); ++v) {
        const Tensor &t = state.gamma(v);
        json inds = json::array();
        for (const auto &i : t.indices()) {
            inds.push_back(index_to_json(i));
        }
        std::vector<double> re, im;
        re.reserve(t.size());
        im.reserve(t.size());
        for (const auto &x : t.storage()) {
            re.push_back(x.real());
            im.push_back(x.imag());
        }
        sites.push_back({{"vertex", v}, {"phys", index_to_json(state.phys(v))}, {"indices", inds},
                         {"re", re}, {"im", im}});
    }
    doc["sites"] = sites;
    json bonds = json::array();
    for (int id = 0; id < state.graph().num_edges(); ++id) {
        const auto &e = state.graph().edge(id);
        bonds.push_back({{"edge", {e.a, e.b}},
                         {"index", index_to_json(state.bond(id).index)},
                         {"lambda", state.bond(id).lambda}});
    }
    doc["bonds"] = bonds;
    return doc.dump();
}

VidalTNS checkpoint_from_string(const std::string &text) {
    const json doc = json::parse(text);
    if (doc.value("format", "") != "bptns-checkpoint" || doc.value("version", 0) != 1) {
        throw std::invalid_argument("not a version-1 bptns checkpoint");
    }
    LatticeGraph g = lattice_from_json(doc.at("graph").dump());
    VidalTNS s(g, doc.at("chi_max").get<int>());
    s.set_log_scale(doc.at("log_scale").get<double>());
    // Stored uids are remapped to fresh ones so they cannot collide with live indices.
    std::map<std::uint64_t, Index> remap;
    auto fresh = [&](const json &j) {
        const auto uid = j.at("uid").get<std::uint64_t>();
        auto it = remap.find(uid);
        if (it == remap.end()) {
            it = remap.emplace(uid, make_index(j.at("dim").get<int>(), j.at("tag").get<std::string>())).first;
        }
        return it->second;
    };
    for (const auto &site : doc.at("sites")) {
        const int v = site.at("vertex").get<int>();
        remap.emplace(site.at("phys").at("uid").get<std::uint64_t>(), s.phys(v));
    }
    for (const auto &b : doc.at("bonds")) {
        const int id = g.edge_id(b.at("edge").at(0).get<int>(), b.at("edge").at(1).get<int>());
        if (id < 0) {
            throw std::invalid_argument("checkpoint bond on unknown edge");
        }
        s.set_bond(id, Bond{fresh(b.at("index")), b.at("lambda").get<std::vector<double>>()});
    }
    for (const auto &site : doc.at("sites")) {
        const int v = site.at("vertex").get<int>();
        std::vector<Index> inds;
        for (const auto &j : site.at("indices")) {
            inds.push_back(fresh(j));
        }
        const auto re = site.at("re").get<std::vector<double>>();
        const auto im = site.at("im").get<std::vector<double>>();
        std::vector<cplx> data(re.size());
        for (std::size_t k = 0; k < re.size(); ++k) {
            data[k] = cplx(re[k], im[k]);
        }
        s.set_gamma(v, Tensor(std::move(inds), std::move(data)));
    }
    return s;
}

void save_checkpoint(const VidalTNS &state, const std::string &path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write checkpoint " + path);
    }
    out << checkpoint_to_string(state);
}

VidalTNS load_checkpoint(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read checkpoint " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return checkpoint_from_string(ss.str());
}

}  // namespace bptns
