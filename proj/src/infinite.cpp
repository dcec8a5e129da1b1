#include "bptns/infinite.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bptns/bp.hpp"
#include "bptns/tns.hpp"

namespace bptns {

namespace {

InfiniteStep snapshot(const VidalTNS &state, VertexId marked, int entropy_edge, int step) {
    InfiniteStep out;
    out.step = step;
    out.z = expect_local(state, marked, pauli::Z());
    const int m = state.graph().num_edges();
    out.spectra.reserve(static_cast<std::size_t>(m));
    for (int e = 0; e < m; ++e) {
        out.spectra.push_back(state.bond(e).lambda);
    }
    out.entropy = bond_entropy(out.spectra[entropy_edge]);
    return out;
}

}  // namespace

InfiniteRun infinite_evolve(const LatticeGraph &cell, const TrotterConfig &cfg, Edge entropy_edge) {
    validate(cfg);
    const auto marked = cell.marked_vertex();
    if (!marked) {
        throw std::invalid_argument("infinite_evolve: the cell has no marked vertex");
    }
    const int cut = cell.edge_id(entropy_edge.a, entropy_edge.b);
    if (cut < 0) {
        throw std::invalid_argument("infinite_evolve: entropy edge is not in the cell");
    }
    InfiniteRun run;
    run.theta_h = cfg.theta_h;
    run.chi = cfg.chi_max;
    VidalTNS state = init_product_state(cell, cfg.chi_max);
    run.steps.push_back(snapshot(state, *marked, cut, 0));
    trotter_evolve(state, cfg, [&](const VidalTNS &s, const StepDiagnostics &d) {
        run.steps.push_back(snapshot(s, *marked, cut, d.step));
        run.steps.back().discarded_weight = d.discarded_weight;
    });
    return run;
}

double cell_spectrum_asymmetry(const LatticeGraph &cell, const InfiniteStep &step) {
    double worst = 0.0;
    auto compare = [&](const std::vector<double> &a, const std::vector<double> &b) {
        std::vector<double> x = a, y = b;
        std::sort(x.rbegin(), x.rend());
        std::sort(y.rbegin(), y.rend());
        x.resize(std::max(x.size(), y.size()), 0.0);
        y.resize(x.size(), 0.0);
        for (std::size_t k = 0; k < x.size(); ++k) {
            worst = std::max(worst, std::abs(x[k] - y[k]));
        }
    };
    for (VertexId v = 0; v < cell.num_vertices(); ++v) {
        const auto &inc = cell.incident(v);
        if (inc.size() < 3) {
            continue;
        }
        for (std::size_t k = 1; k < inc.size(); ++k) {
            compare(step.spectra[inc[0]], step.spectra[inc[k]]);
        }
    }
    return worst;
}

InfiniteSweep extrapolate_entropy(std::vector<InfiniteRun> runs) {
    std::sort(runs.begin(), runs.end(), [](const InfiniteRun &a, const InfiniteRun &b) { return a.chi < b.chi; });
    if (runs.size() < 2 || runs.front().chi == runs.back().chi) {
        throw std::invalid_argument("extrapolate_entropy: need at least two distinct chi values");
    }
    const std::size_t len = runs.front().steps.size();
    for (const auto &r : runs) {
        if (r.steps.size() != len) {
            throw std::invalid_argument("extrapolate_entropy: runs differ in length");
        }
    }
    InfiniteSweep out;
    out.runs = std::move(runs);
    for (std::size_t t = 0; t < len; ++t) {
        std::vector<std::pair<double, double>> pts;
        for (const auto &run : out.runs) {
            pts.emplace_back(run.chi, run.steps[t].entropy);
        }
        const ChiFit fit = extrapolate_chi(pts);
        ExtrapolatedEntropy e;
        e.step = static_cast<int>(t);
        e.extrapolated = fit.intercept;
        e.residual = fit.residual;
        const double top = out.runs.back().steps[t].entropy;
        e.band_lo = std::min(top, fit.intercept);
        e.band_hi = std::max(top, fit.intercept);
        out.entropy.push_back(e);
    }
    return out;
}

InfiniteSweep infinite_entropy_extrapolated(double theta_h, int n_steps, std::vector<int> chis,
                                            const TrotterConfig &base) {
    std::sort(chis.begin(), chis.end());
    chis.erase(std::unique(chis.begin(), chis.end()), chis.end());
    if (chis.size() < 2) {
        throw std::invalid_argument("infinite_entropy_extrapolated: need at least two distinct chi values");
    }
    const LatticeGraph cell = build_infinite_unit_cell();
    std::vector<InfiniteRun> runs;
    for (int chi : chis) {
        TrotterConfig cfg = base;
        cfg.theta_h = theta_h;
        cfg.n_steps = n_steps;
        cfg.chi_max = chi;
        runs.push_back(infinite_evolve(cell, cfg));
    }
    return extrapolate_entropy(std::move(runs));
}

}  // namespace bptns
