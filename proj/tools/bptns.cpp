// bptns: command-line driver for the BP tensor network engine and its
// reference solvers. Every run writes results.csv (plus per-step JSON lines
// where relevant) and manifest.json into its --out directory.

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bptns/bp.hpp"
#include "bptns/clifford.hpp"
#include "bptns/diagnostics.hpp"
#include "bptns/evolve.hpp"
#include "bptns/infinite.hpp"
#include "bptns/lattice.hpp"
#include "bptns/mps.hpp"
#include "bptns/oracle.hpp"
#include "bptns/tns.hpp"
#include "run_support.hpp"

namespace {

using namespace bptns;
using namespace bptns::cli;
using nlohmann::json;

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

const std::vector<std::string> kObservableColumns = {"theta_h", "step", "chi", "observable", "value"};

struct EvolveFlags {
    std::string lattice = "eagle127";
    std::vector<std::string> thetas{"0"};
    int steps = 1;
    int chi = 8;
    double cutoff = 1e-14;
    bool gauge_every_step = true;
    double bp_tol = 1e-12;
    int bp_max_iters = 200;
    bool strict = false;
    std::string out = "bptns_out";
};

void add_lattice_flags(CLI::App *cmd, EvolveFlags &f) {
    cmd->add_option("--lattice", f.lattice, "eagle127 | grid RxC | ring L | chain L | infinite")
        ->capture_default_str();
    cmd->add_option("--steps", f.steps, "Trotter steps")->capture_default_str()->check(CLI::NonNegativeNumber);
    cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
}

void add_evolve_flags(CLI::App *cmd, EvolveFlags &f) {
    add_lattice_flags(cmd, f);
    cmd->add_option("--theta", f.thetas, "X angle(s); accepts pi/2 style values")->delimiter(',');
    cmd->add_option("--chi", f.chi, "Maximum bond dimension")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--cutoff", f.cutoff, "Relative singular value cutoff")->capture_default_str();
    cmd->add_flag("--gauge-every-step,!--no-gauge-every-step", f.gauge_every_step,
                  "Regauge with BP after every step");
    cmd->add_option("--bp-tol", f.bp_tol, "BP convergence tolerance")->capture_default_str();
    cmd->add_option("--bp-max-iters", f.bp_max_iters, "BP iteration cap")->capture_default_str();
    cmd->add_flag("--strict", f.strict, "Exit 3 when BP fails to converge");
}

TrotterConfig trotter_config(const EvolveFlags &f, double theta) {
    TrotterConfig cfg;
    cfg.theta_h = theta;
    cfg.n_steps = f.steps;
    cfg.chi_max = f.chi;
    cfg.cutoff = f.cutoff;
    cfg.gauge_every_step = f.gauge_every_step;
    cfg.bp.tol = f.bp_tol;
    cfg.bp.max_iters = f.bp_max_iters;
    validate(cfg);
    return cfg;
}

std::vector<double> parse_angles(const std::vector<std::string> &texts) {
    std::vector<double> out;
    for (const auto &t : texts) {
        out.push_back(parse_angle(t));
    }
    if (out.empty()) {
        throw UsageError("at least one --theta is required");
    }
    return out;
}

LatticeGraph load_lattice(const std::string &spec) {
    try {
        return lattice_from_spec(spec);
    } catch (const std::invalid_argument &e) {
        throw UsageError(e.what());
    }
}

json effective(const EvolveFlags &f) {
    return {{"lattice", f.lattice},   {"theta", f.thetas},       {"steps", f.steps},
            {"chi", f.chi},           {"cutoff", f.cutoff},      {"gauge_every_step", f.gauge_every_step},
            {"bp_tol", f.bp_tol},     {"bp_max_iters", f.bp_max_iters}, {"strict", f.strict},
            {"out", f.out}};
}

json with_effective(json config, json settings) {
    config["effective"] = std::move(settings);
    return config;
}

VertexId default_site(const LatticeGraph &g) { return g.marked_vertex().value_or(0); }

struct Observable {
    std::string label;
    VertexId site;
    Eigen::Matrix2cd op;
};

Eigen::Matrix2cd pauli_matrix(char op) {
    switch (op) {
    case 'X':
        return pauli::X();
    case 'Y':
        return pauli::Y();
    default:
        return pauli::Z();
    }
}

// One single-site Pauli per non-empty line, e.g. "Z62" or "X13".
std::vector<Observable> load_observables(const std::string &path, const LatticeGraph &g) {
    std::ifstream in(path);
    if (!in) {
        throw UsageError("cannot read observables file " + path);
    }
    std::vector<Observable> out;
    std::string line;
    while (std::getline(in, line)) {
        line.erase(std::find(line.begin(), line.end(), '#'), line.end());
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        PauliString p;
        try {
            p = parse_pauli(line, g.num_vertices());
        } catch (const std::invalid_argument &e) {
            throw UsageError(std::string("observables file: ") + e.what());
        }
        if (p.weight() != 1 || p.phase() != 0) {
            throw UsageError("observables file: only single-site Paulis are supported, got '" + line + "'");
        }
        const VertexId v = p.support().front();
        out.push_back({to_string(p), v, pauli_matrix(p.op(v))});
    }
    return out;
}

std::vector<Observable> all_z(const LatticeGraph &g) {
    std::vector<Observable> out;
    for (VertexId v = 0; v < g.num_vertices(); ++v) {
        out.push_back({"Z" + std::to_string(v), v, pauli::Z()});
    }
    return out;
}

std::vector<std::string> observable_row(double theta, int step, std::optional<int> chi, const std::string &label,
                                        double value) {
    return {format_double(theta), std::to_string(step), chi ? std::to_string(*chi) : "", label, format_double(value)};
}

double mean(const std::vector<double> &xs) {
    double s = 0.0;
    for (double x : xs) {
        s += x;
    }
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

// ---------------------------------------------------------------- simulate

struct SimulateFlags : EvolveFlags {
    std::string observables;
};

int run_simulate(const SimulateFlags &f, const json &config) {
    const LatticeGraph g = load_lattice(f.lattice);
    const auto thetas = parse_angles(f.thetas);
    const bool default_obs = f.observables.empty();
    const auto obs = default_obs ? all_z(g) : load_observables(f.observables, g);
    for (double th : thetas) {
        trotter_config(f, th);
    }
    RunRecord record("simulate", f.out, with_effective(config, effective(f)));

    struct Point {
        std::vector<std::vector<double>> values;  // [step][observable]
        std::vector<StepDiagnostics> diag;
        bool measure_converged = true;
    };
    std::vector<Point> points(thetas.size());
    parallel_for(static_cast<int>(thetas.size()), [&](int k) {
        const TrotterConfig cfg = trotter_config(f, thetas[k]);
        VidalTNS state = init_product_state(g, cfg.chi_max);
        auto &pt = points[k];
        pt.diag = trotter_evolve(state, cfg, [&](const VidalTNS &s, const StepDiagnostics &) {
            // A regauged state is its own BP environment; otherwise solve for messages.
            std::optional<MessageSet> msgs;
            if (!cfg.gauge_every_step) {
                msgs = bp_fixed_point(s, cfg.bp);
                pt.measure_converged = pt.measure_converged && msgs->converged;
            }
            std::vector<double> row;
            for (const auto &o : obs) {
                row.push_back(msgs ? expect_local(s, *msgs, o.site, o.op) : expect_local(s, o.site, o.op));
            }
            pt.values.push_back(std::move(row));
        });
    });

    CsvWriter csv(record.dir() / "results.csv", kObservableColumns);
    JsonlWriter steps(record.dir() / "steps.jsonl");
    bool converged = true;
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        const auto &pt = points[k];
        converged = converged && pt.measure_converged;
        for (std::size_t t = 0; t < pt.values.size(); ++t) {
            const int step = static_cast<int>(t) + 1;
            for (std::size_t j = 0; j < obs.size(); ++j) {
                csv.row(observable_row(thetas[k], step, f.chi, obs[j].label, pt.values[t][j]));
            }
            if (default_obs) {
                csv.row(observable_row(thetas[k], step, f.chi, "Zmean", mean(pt.values[t])));
            }
            const auto &d = pt.diag[t];
            converged = converged && d.bp_converged;
            steps.write({{"theta_h", thetas[k]},
                         {"step", d.step},
                         {"chi_used", d.chi_used},
                         {"discarded_weight", d.discarded_weight},
                         {"bp_iters", d.bp_iters},
                         {"bp_delta", d.bp_delta},
                         {"bp_converged", d.bp_converged},
                         {"entropy", d.entropy}});
        }
    }
    record.finish({{"bp_converged", converged}});
    if (f.strict && !converged) {
        throw NumericFailure("BP did not converge on every step (see steps.jsonl)");
    }
    return 0;
}

// ------------------------------------------------------------------- exact

struct ExactFlags : EvolveFlags {
    std::vector<int> targets;
};

int run_exact(const ExactFlags &f, const json &config) {
    const LatticeGraph g = load_lattice(f.lattice);
    const auto thetas = parse_angles(f.thetas);
    std::vector<VertexId> targets(f.targets.begin(), f.targets.end());
    const bool all_sites = targets.empty();
    if (all_sites) {
        for (VertexId v = 0; v < g.num_vertices(); ++v) {
            targets.push_back(v);
        }
    }
    for (VertexId v : targets) {
        if (v < 0 || v >= g.num_vertices()) {
            throw UsageError("--target-sites: vertex " + std::to_string(v) + " is not on the lattice");
        }
    }
    RunRecord record("exact", f.out, with_effective(config, effective(f)));
    std::vector<std::vector<std::vector<double>>> values(thetas.size());  // [theta][step][target]
    const bool whole = g.num_vertices() <= 20;
    parallel_for(static_cast<int>(thetas.size()), [&](int k) {
        auto &vals = values[k];
        if (whole) {
            TrotterConfig cfg;
            cfg.theta_h = thetas[k];
            cfg.n_steps = f.steps;
            sv_evolve(g, cfg, [&](int, const DenseState &psi) {
                std::vector<double> row;
                for (VertexId v : targets) {
                    row.push_back(expect_z(psi, v));
                }
                vals.push_back(std::move(row));
            });
            return;
        }
        for (int t = 1; t <= f.steps; ++t) {
            std::vector<double> row;
            for (VertexId v : targets) {
                row.push_back(lightcone_expect_z(g, v, thetas[k], t));
            }
            vals.push_back(std::move(row));
        }
    });
    CsvWriter csv(record.dir() / "results.csv", kObservableColumns);
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        for (std::size_t t = 0; t < values[k].size(); ++t) {
            const int step = static_cast<int>(t) + 1;
            for (std::size_t j = 0; j < targets.size(); ++j) {
                csv.row(observable_row(thetas[k], step, std::nullopt, "Z" + std::to_string(targets[j]),
                                       values[k][t][j]));
            }
            if (all_sites) {
                csv.row(observable_row(thetas[k], step, std::nullopt, "Zmean", mean(values[k][t])));
            }
        }
    }
    record.finish({{"method", whole ? "state_vector" : "light_cone"}});
    return 0;
}

// ---------------------------------------------------------------- clifford

struct CliffordFlags {
    EvolveFlags base;
    std::string theta = "pi/2";
    std::string pauli;
    bool find = false;
    int max_steps = 12;
};

int run_clifford(const CliffordFlags &f, const json &config) {
    const LatticeGraph g = load_lattice(f.base.lattice);
    const double theta = parse_angle(f.theta);
    try {
        clifford_quarter_turns(theta);
    } catch (const std::invalid_argument &) {
        throw UsageError("clifford: --theta must be a multiple of pi/2");
    }
    std::optional<PauliString> target;
    if (!f.pauli.empty()) {
        try {
            target = parse_pauli(f.pauli, g.num_vertices());
        } catch (const std::invalid_argument &e) {
            throw UsageError(std::string("--string: ") + e.what());
        }
    }
    json settings = effective(f.base);
    settings["theta"] = f.theta;
    settings["string"] = f.pauli;
    settings["find_generator"] = f.find;
    settings["max_steps"] = f.max_steps;
    RunRecord record("clifford", f.base.out, with_effective(config, settings));
    if (f.find) {
        if (!target) {
            throw UsageError("--find-generator needs --string");
        }
        const auto gen = find_generator(*target, g, f.max_steps);
        CsvWriter csv(record.dir() / "results.csv", {"string", "found", "site", "steps", "sign"});
        if (gen) {
            csv.row({to_string(*target), "1", std::to_string(gen->site), std::to_string(gen->steps),
                     std::to_string(gen->sign)});
            std::cout << to_string(*target) << " = " << (gen->sign < 0 ? "-" : "") << "U^" << gen->steps << " Z"
                      << gen->site << " U^-" << gen->steps << '\n';
        } else {
            csv.row({to_string(*target), "0", "", "", ""});
            std::cout << "no single-Z generator within " << f.max_steps << " steps\n";
        }
        record.finish({{"found", gen.has_value()}});
        return 0;
    }
    CsvWriter csv(record.dir() / "results.csv", kObservableColumns);
    for (int t = 1; t <= f.base.steps; ++t) {
        const Tableau tab = tableau_evolve(g, theta, t);
        if (target) {
            csv.row(observable_row(theta, t, std::nullopt, to_string(*target), tableau_expect(tab, *target)));
            continue;
        }
        std::vector<double> zs;
        for (VertexId v = 0; v < g.num_vertices(); ++v) {
            zs.push_back(tableau_expect(tab, PauliString::single(g.num_vertices(), v, 'Z')));
            csv.row(observable_row(theta, t, std::nullopt, "Z" + std::to_string(v), zs.back()));
        }
        csv.row(observable_row(theta, t, std::nullopt, "Zmean", mean(zs)));
    }
    record.finish();
    return 0;
}

// --------------------------------------------------------------------- mps

struct MpsFlags : EvolveFlags {
    std::string ordering = "snake";
    bool lcdr = true;
    std::optional<int> target;
    int max_mpos = 0;
};

int run_mps(const MpsFlags &f, const json &config) {
    const LatticeGraph g = load_lattice(f.lattice);
    const auto thetas = parse_angles(f.thetas);
    SiteOrdering ordering;
    try {
        ordering = resolve_ordering(g, f.ordering);
    } catch (const std::invalid_argument &e) {
        throw UsageError(e.what());
    } catch (const nlohmann::json::exception &e) {
        throw UsageError(std::string("ordering file: ") + e.what());
    }
    const VertexId target = f.target.value_or(default_site(g));
    if (target < 0 || target >= g.num_vertices()) {
        throw UsageError("--target is not on the lattice");
    }
    json settings = effective(f);
    settings["ordering"] = ordering.name();
    settings["lcdr"] = f.lcdr;
    settings["target"] = target;
    settings["max_mpos"] = f.max_mpos;
    RunRecord record("mps", f.out, with_effective(config, settings));
    std::vector<MpsResult> results(thetas.size());
    parallel_for(static_cast<int>(thetas.size()), [&](int k) {
        results[k] = mps_evolve(g, ordering, trotter_config(f, thetas[k]), target, {f.lcdr, f.max_mpos});
    });
    CsvWriter csv(record.dir() / "results.csv", kObservableColumns);
    JsonlWriter steps(record.dir() / "steps.jsonl");
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        for (const auto &s : results[k].steps) {
            csv.row(observable_row(thetas[k], s.step, f.chi, "Z" + std::to_string(target), s.z));
            steps.write({{"theta_h", thetas[k]},
                         {"step", s.step},
                         {"mpo_applications", s.mpo_applications},
                         {"max_bond", s.max_bond},
                         {"error_printed", s.error_printed},
                         {"error_product", s.error_product}});
        }
    }
    record.finish({{"ordering", ordering.name()}, {"target", target}});
    return 0;
}

// ---------------------------------------------------------------- infinite

struct InfiniteFlags : EvolveFlags {
    std::vector<int> chis{8, 16};
};

int run_infinite(const InfiniteFlags &f, const json &config) {
    const auto thetas = parse_angles(f.thetas);
    std::vector<int> chis = f.chis;
    std::sort(chis.begin(), chis.end());
    chis.erase(std::unique(chis.begin(), chis.end()), chis.end());
    if (chis.empty() || chis.front() < 1) {
        throw UsageError("--chis needs positive bond dimensions");
    }
    const LatticeGraph cell = build_infinite_unit_cell();
    json settings = effective(f);
    settings["chis"] = chis;
    RunRecord record("infinite", f.out, with_effective(config, settings));
    const std::size_t nc = chis.size();
    std::vector<InfiniteRun> runs(thetas.size() * nc);
    parallel_for(static_cast<int>(runs.size()), [&](int k) {
        EvolveFlags g = f;
        g.chi = chis[k % nc];
        runs[k] = infinite_evolve(cell, trotter_config(g, thetas[k / nc]));
    });
    CsvWriter csv(record.dir() / "results.csv",
                  {"theta_h", "step", "chi", "z_site3", "entropy", "extrapolated_entropy", "band"});
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        std::vector<InfiniteRun> group(runs.begin() + i * nc, runs.begin() + (i + 1) * nc);
        std::optional<InfiniteSweep> sweep;
        if (nc >= 2) {
            sweep = extrapolate_entropy(group);
        }
        for (std::size_t t = 0; t < group.front().steps.size(); ++t) {
            for (const auto &run : group) {
                const auto &s = run.steps[t];
                csv.row({format_double(thetas[i]), std::to_string(s.step), std::to_string(run.chi), format_double(s.z),
                         format_double(s.entropy), sweep ? format_double(sweep->entropy[t].extrapolated) : "",
                         sweep ? format_double(sweep->entropy[t].band_width()) : ""});
            }
        }
    }
    record.finish();
    return 0;
}

// ---------------------------------------------------------------- diagnose

struct DiagnoseFlags : EvolveFlags {
    std::vector<int> edges;
    std::string method = "bmps";
    int boundary_dim = 16;
    int power_iterations = 2;
};

int run_diagnose(const DiagnoseFlags &f, const json &config) {
    const LatticeGraph g = load_lattice(f.lattice);
    const auto thetas = parse_angles(f.thetas);
    std::vector<int> edges = f.edges;
    if (edges.empty()) {
        edges.push_back(default_error_edge(g, default_site(g)));
    }
    for (int e : edges) {
        if (e < 0 || e >= g.num_edges()) {
            throw UsageError("--edge " + std::to_string(e) + " is not an edge id");
        }
    }
    const BoundaryMpsConfig bcfg{f.boundary_dim, 1e-14, f.power_iterations};
    if (f.method == "bmps") {
        validate(bcfg);
    }
    json settings = effective(f);
    settings["edges"] = edges;
    settings["method"] = f.method;
    settings["D"] = f.boundary_dim;
    settings["power_iterations"] = f.power_iterations;
    RunRecord record("diagnose", f.out, with_effective(config, settings));
    std::vector<std::vector<EdgeEnvironment>> envs(thetas.size());
    parallel_for(static_cast<int>(thetas.size()), [&](int k) {
        const TrotterConfig cfg = trotter_config(f, thetas[k]);
        VidalTNS state = init_product_state(g, cfg.chi_max);
        trotter_evolve(state, cfg);
        if (f.method == "exact") {
            for (int e : edges) {
                envs[k].push_back(edge_environment_exact(state, e));
            }
            return;
        }
        BoundaryContractor bmps(state, bcfg);
        for (int e : edges) {
            envs[k].push_back(bmps.edge_environment(e));
        }
    });
    CsvWriter csv(record.dir() / "results.csv",
                  {"theta_h", "step", "chi", "edge", "a", "b", "method", "D", "bp_error", "sigma_1", "sigma_2"});
    JsonlWriter spectra(record.dir() / "spectra.jsonl");
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        for (const auto &env : envs[k]) {
            const Edge &e = g.edge(env.edge_id);
            const double s2 = env.sigma.size() > 1 ? env.sigma[1] : 0.0;
            csv.row({format_double(thetas[k]), std::to_string(f.steps), std::to_string(f.chi),
                     std::to_string(env.edge_id), std::to_string(e.a), std::to_string(e.b), f.method,
                     f.method == "bmps" ? std::to_string(f.boundary_dim) : "", format_double(bp_error_estimate(env)),
                     format_double(env.sigma.front()), format_double(s2)});
            spectra.write({{"theta_h", thetas[k]}, {"edge", env.edge_id}, {"sigma", env.sigma}});
        }
    }
    record.finish();
    return 0;
}

// ----------------------------------------------------------------- compare

struct CompareFlags {
    std::string left, right;
    std::string out = "bptns_out";
    std::optional<double> max_diff;
};

int run_compare(const CompareFlags &f, const json &config) {
    using Key = std::tuple<std::string, std::string, std::string>;
    auto load = [](const std::string &path) {
        const auto rows = read_csv(path);
        if (rows.empty()) {
            throw UsageError(path + " is empty");
        }
        const auto &head = rows.front();
        auto col = [&](const std::string &name) {
            const auto it = std::find(head.begin(), head.end(), name);
            if (it == head.end()) {
                throw UsageError(path + " has no '" + name + "' column");
            }
            return static_cast<std::size_t>(it - head.begin());
        };
        const std::size_t th = col("theta_h"), st = col("step"), ob = col("observable"), va = col("value");
        std::map<Key, double> out;
        for (std::size_t r = 1; r < rows.size(); ++r) {
            const auto &row = rows[r];
            if (row.size() != head.size()) {
                throw UsageError(path + ": row " + std::to_string(r + 1) + " has the wrong width");
            }
            const Key key{format_double(std::stod(row[th])), row[st], row[ob]};
            if (!out.emplace(key, std::stod(row[va])).second) {
                throw UsageError(path + ": duplicate point at row " + std::to_string(r + 1));
            }
        }
        return out;
    };
    const auto a = load(f.left);
    const auto b = load(f.right);
    RunRecord record("compare", f.out, with_effective(config, {{"left", f.left}, {"right", f.right}}));
    CsvWriter csv(record.dir() / "results.csv", {"theta_h", "step", "observable", "left", "right", "abs_diff"});
    double worst = 0.0;
    int matched = 0;
    for (const auto &[key, va] : a) {
        const auto it = b.find(key);
        if (it == b.end()) {
            continue;
        }
        const double d = std::abs(va - it->second);
        worst = std::max(worst, d);
        ++matched;
        const auto &[th, st, ob] = key;
        csv.row({th, st, ob, format_double(va), format_double(it->second), format_double(d)});
    }
    if (matched == 0) {
        throw UsageError("the two files share no (theta_h, step, observable) points");
    }
    std::cout << "matched " << matched << " points, max |diff| = " << format_double(worst) << '\n';
    record.finish({{"matched", matched}, {"max_abs_diff", worst}});
    if (f.max_diff && worst > *f.max_diff) {
        throw NumericFailure("max |diff| " + format_double(worst) + " exceeds " + format_double(*f.max_diff));
    }
    return 0;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Belief-propagation tensor network simulator for kicked Ising dynamics on heavy-hex lattices"};
    app.set_config("--config", "", "TOML/INI file supplying any flag; command-line flags win");
    app.require_subcommand(1);

    SimulateFlags sim;
    auto *sim_cmd = app.add_subcommand("simulate", "BP tensor network evolution on a finite lattice");
    add_evolve_flags(sim_cmd, sim);
    sim_cmd->add_option("--observables", sim.observables, "File with one single-site Pauli per line (e.g. Z62)");

    ExactFlags ex;
    auto *ex_cmd = app.add_subcommand("exact", "Dense state vector, light-cone reduced on large lattices");
    add_evolve_flags(ex_cmd, ex);
    ex_cmd->add_option("--target-sites", ex.targets, "Vertices to measure (default: all)")->delimiter(',');

    CliffordFlags cl;
    auto *cl_cmd = app.add_subcommand("clifford", "Stabilizer tableau at theta in {0, pi/2}");
    add_lattice_flags(cl_cmd, cl.base);
    cl_cmd->add_option("--theta", cl.theta, "Clifford angle")->capture_default_str();
    cl_cmd->add_option("--string", cl.pauli, "Pauli string, e.g. \"X13,29,31 Y9,30 Z8,12\"");
    cl_cmd->add_flag("--find-generator", cl.find, "Search for U^k Z_v U^-k equal to --string");
    cl_cmd->add_option("--max-steps", cl.max_steps, "Search depth for --find-generator")->capture_default_str();

    MpsFlags mp;
    auto *mp_cmd = app.add_subcommand("mps", "Matrix product state cross-check");
    add_evolve_flags(mp_cmd, mp);
    mp_cmd->add_option("--ordering", mp.ordering, "reference | snake | path to an ordering JSON")
        ->capture_default_str();
    mp_cmd->add_flag("--lcdr,!--no-lcdr", mp.lcdr, "Light-cone depth reduction");
    mp_cmd->add_option("--target", mp.target, "Measured vertex (default: the lattice's marked site)");
    mp_cmd->add_option("--max-mpos", mp.max_mpos, "Fail if a ZZ layer needs more MPOs (0: no limit)");

    InfiniteFlags inf;
    auto *inf_cmd = app.add_subcommand("infinite", "Periodic unit cell of the infinite heavy-hex lattice");
    add_evolve_flags(inf_cmd, inf);
    inf_cmd->add_option("--chis", inf.chis, "Bond dimensions to run and extrapolate over")->delimiter(',');

    DiagnoseFlags dg;
    auto *dg_cmd = app.add_subcommand("diagnose", "Edge environments and the BP error estimate");
    add_evolve_flags(dg_cmd, dg);
    dg_cmd->add_option("--edge", dg.edges, "Edge ids (default: first edge at the marked site)")->delimiter(',');
    dg_cmd->add_option("--method", dg.method, "exact | bmps")
        ->capture_default_str()
        ->check(CLI::IsMember({"exact", "bmps"}));
    dg_cmd->add_option("--D", dg.boundary_dim, "Boundary MPS bond dimension")->capture_default_str();
    dg_cmd->add_option("--power-iterations", dg.power_iterations, "Randomized SVD refinement passes")
        ->capture_default_str();

    CompareFlags cmp;
    auto *cmp_cmd = app.add_subcommand("compare", "Per-point absolute differences of two results.csv files");
    cmp_cmd->add_option("left", cmp.left, "First results file")->required()->check(CLI::ExistingFile);
    cmp_cmd->add_option("right", cmp.right, "Second results file")->required()->check(CLI::ExistingFile);
    cmp_cmd->add_option("--out", cmp.out, "Output directory")->capture_default_str();
    cmp_cmd->add_option("--max-diff", cmp.max_diff, "Exit 3 when any difference exceeds this");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        const json config = {{"argv", std::vector<std::string>(argv, argv + argc)},
                             {"explicit", app.config_to_str(false, false)}};
        if (*sim_cmd) return run_simulate(sim, config);
        if (*ex_cmd) return run_exact(ex, config);
        if (*cl_cmd) return run_clifford(cl, config);
        if (*mp_cmd) return run_mps(mp, config);
        if (*inf_cmd) return run_infinite(inf, config);
        if (*dg_cmd) return run_diagnose(dg, config);
        if (*cmp_cmd) return run_compare(cmp, config);
    } catch (const UsageError &e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument &e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::out_of_range &e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    }
    return kExitUsage;
}
