#pragma once

// Thermodynamic limit through the periodic unit cell: BP on the cell is BP
// on the translation-invariant infinite lattice.

#include <vector>

#include "bptns/evolve.hpp"
#include "bptns/lattice.hpp"

namespace bptns {

struct InfiniteStep {
    int step = 0;
    double z = 1.0;        // <Z> on the marked vertex
    double entropy = 0.0;  // bits, across the entropy edge
    std::vector<std::vector<double>> spectra;  // lambda per edge id
    double discarded_weight = 0.0;
};

struct InfiniteRun {
    double theta_h = 0.0;
    int chi = 1;
    std::vector<InfiniteStep> steps;  // steps[0] is the initial state
};

/// Evolves |0...0> on the cell with trotter_evolve. The cell must carry a
/// marked vertex; entropy is the bond entropy of `entropy_edge`.
InfiniteRun infinite_evolve(const LatticeGraph &cell, const TrotterConfig &cfg,
                            Edge entropy_edge = unit_cell_entropy_edge());

/// Largest difference between sorted spectra of bonds the cell symmetry
/// maps onto each other (the three bonds at each honeycomb site).
double cell_spectrum_asymmetry(const LatticeGraph &cell, const InfiniteStep &step);

struct ExtrapolatedEntropy {
    int step = 0;
    double extrapolated = 0.0;  // A of s = A + B / chi
    double residual = 0.0;
    double band_lo = 0.0;       // between the largest-chi value and A
    double band_hi = 0.0;
    double band_width() const { return band_hi - band_lo; }
};

struct InfiniteSweep {
    std::vector<InfiniteRun> runs;  // one per chi, ascending
    std::vector<ExtrapolatedEntropy> entropy;  // one per step
};

/// Fits the entropy of each step in 1/chi across runs of equal length.
/// Needs at least two distinct chi values.
InfiniteSweep extrapolate_entropy(std::vector<InfiniteRun> runs);

/// Runs the cell at every chi, then extrapolate_entropy.
InfiniteSweep infinite_entropy_extrapolated(double theta_h, int n_steps, std::vector<int> chis,
                                            const TrotterConfig &base = {});

}  // namespace bptns
