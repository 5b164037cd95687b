// qergo: command-line driver for spectrum analysis, lemma checks, L
// breakdowns, theorem-condition evaluation and Monte Carlo runs.
//
// Every subcommand writes one JSON document (stdout, or --out). Exit codes:
// 0 all enabled gates pass, 1 some gate failed, 2 usage / input error.

#include "qergo/io.hpp"
#include "qergo/montecarlo.hpp"
#include "qergo/precision.hpp"
#include "qergo/randomness.hpp"
#include "qergo/spectrum.hpp"
#include "qergo/typicality.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using qergo::io::json;

constexpr int exit_ok = 0;
constexpr int exit_gate_failed = 1;
constexpr int exit_usage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void emit(const json& doc, const std::string& out_path)
{
    const std::string text = doc.dump(2) + "\n";
    if(out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if(!out) {
        throw UsageError("cannot write '" + out_path + "'");
    }
    out << text;
}

std::vector<std::size_t> parse_dims(const std::string& text)
{
    std::vector<std::size_t> dims;
    std::stringstream ss(text);
    std::string item;
    while(std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(item, &pos);
            if(pos != item.size() || v <= 0) {
                throw std::invalid_argument(item);
            }
            dims.push_back(static_cast<std::size_t>(v));
        } catch(const std::exception&) {
            throw UsageError("--dims: '" + item + "' is not a positive integer");
        }
    }
    if(dims.empty()) {
        throw UsageError("--dims must list at least one cell rank");
    }
    return dims;
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
    std::string spectrum;
    std::int64_t snap = 0;
    std::string out;
};

int cmd_analyze(const AnalyzeArgs& a)
{
    std::optional<std::int64_t> snap;
    if(a.snap > 0) {
        snap = a.snap;
    }
    const auto spec = qergo::io::parse_spectrum(qergo::io::read_file(a.spectrum), snap);
    emit(qergo::io::spectrum_report(spec), a.out);
    return exit_ok;
}

// ---------------------------------------------------------------------------

struct LemmaArgs {
    std::size_t D = 100;
    std::size_t d = 10;
    std::size_t sphere_D = 50;
    std::size_t samples = 100'000;
    std::size_t ensemble = 200;
    std::uint64_t seed = qergo::default_seed;
    std::string log_base = "e";
    std::string out;
};

int cmd_verify_lemmas(const LemmaArgs& a)
{
    if(a.d == 0 || a.d > a.D) {
        throw UsageError("verify-lemmas needs 1 <= d <= D");
    }
    if(a.sphere_D < 2) {
        throw UsageError("--sphere-D must be >= 2");
    }
    const auto base = qergo::io::parse_log_base(a.log_base);
    qergo::Rng lemma2_rng = qergo::substream(a.seed, 0);
    qergo::Rng sphere_rng = qergo::substream(a.seed, 1);
    qergo::Rng lemma1_rng = qergo::substream(a.seed, 2);

    const auto lemma2 = qergo::lemma2_statistics(a.D, a.d, a.samples, lemma2_rng);
    const auto sphere = qergo::hypersphere_moments(a.sphere_D, a.samples, sphere_rng);

    json doc = {{"seed", a.seed},
                {"samples", a.samples},
                {"lemma2", qergo::io::to_json(lemma2)},
                {"hypersphere", qergo::io::to_json(sphere)}};
    doc["lemma2"]["D"] = a.D;
    doc["lemma2"]["d"] = a.d;
    doc["hypersphere"]["D"] = a.sphere_D;

    if(a.d < a.D) {
        json l1;
        if(a.ensemble < qergo::min_lemma1_ensemble) {
            l1["warning"] = "insufficient ensemble: lemma 1 statistics skipped";
        } else {
            const auto stats = qergo::lemma1_statistics(a.D, a.d, a.ensemble, lemma1_rng, base);
            l1 = qergo::io::to_json(stats);
            l1["ensemble"] = a.ensemble;
            const auto c = qergo::find_admissible_C<double>(static_cast<double>(a.D), static_cast<double>(a.d), base,
                                                            &stats);
            l1["admissible_C"] = c ? json(*c) : json(nullptr);
        }
        doc["lemma1"] = l1;
    }
    const bool pass = lemma2.pass() && sphere.pass();
    if(!lemma2.sufficient || !sphere.sufficient) {
        doc["warning"] = "insufficient samples: gates skipped";
    }
    doc["all_pass"] = pass;
    emit(doc, a.out);
    return pass ? exit_ok : exit_gate_failed;
}

// ---------------------------------------------------------------------------

struct ComputeArgs {
    std::string spectrum;
    std::string state;
    std::string dims;
    std::uint64_t seed = qergo::default_seed;
    std::string out;
    std::string trajectory;
    std::size_t trajectory_points = 1001;
};

constexpr double oracle_tolerance = 1e-9;
constexpr std::int64_t oracle_bandwidth_cap = 250'000;

int cmd_compute_l(const ComputeArgs& a)
{
    const auto spec = qergo::io::parse_spectrum(qergo::io::read_file(a.spectrum));
    const auto dims = parse_dims(a.dims);
    std::size_t total = 0;
    for(auto d : dims) {
        total += d;
    }
    if(total != spec.dimension()) {
        throw UsageError("--dims sum to " + std::to_string(total) + " but the spectrum dimension is " +
                         std::to_string(spec.dimension()));
    }
    qergo::Rng rng = qergo::substream(a.seed, 0);
    Eigen::VectorXcd amplitudes;
    if(!a.state.empty()) {
        amplitudes = qergo::io::parse_state(qergo::io::read_file(a.state));
        if(static_cast<std::size_t>(amplitudes.size()) != spec.dimension()) {
            throw UsageError("state length " + std::to_string(amplitudes.size()) +
                             " does not match the spectrum dimension " + std::to_string(spec.dimension()));
        }
    } else {
        amplitudes = qergo::sample_random_state(spec.dimension(), rng).amplitudes;
    }
    const auto state = qergo::prepare_state(amplitudes, spec);
    const auto dec = qergo::sample_decomposition(dims, spec.dimension(), rng);
    const auto structure = qergo::analyze(spec);
    const auto clock = qergo::integer_clock(spec);
    const bool oracle = clock.bandwidth <= oracle_bandwidth_cap;

    bool ok = true;
    json cells = json::array();
    for(std::size_t v = 0; v < dec.cell_count(); ++v) {
        const auto& cell = dec.cells[v];
        const auto b = qergo::compute_L_exact(state, cell, structure);
        const double gap = qergo::ergodicity_gap(state, cell);
        const double bound = qergo::l3r_bound(b.diag_sum, structure.sum_degeneracy());
        json c = qergo::io::to_json(b);
        c["nu"] = v + 1;
        c["ergodicity_gap"] = gap;
        c["l3r_bound"] = bound;
        const bool identities = b.split_residual() <= qergo::identity_tolerance &&
                                b.regroup_residual() <= qergo::identity_tolerance &&
                                std::abs(b.l3_r_imag) <= qergo::identity_tolerance;
        const bool chains = gap <= b.l_total + qergo::chain_slack && b.l3_r <= bound + qergo::chain_slack;
        c["identities_hold"] = identities;
        c["chains_hold"] = chains;
        ok = ok && identities && chains;
        if(oracle) {
            const double reference = qergo::oracle_deviation_average(state, cell);
            const double residual = std::abs(reference - b.l_total);
            c["oracle_L"] = reference;
            c["oracle_residual"] = residual;
            c["oracle_match"] = residual <= oracle_tolerance;
            ok = ok && residual <= oracle_tolerance;
        }
        cells.push_back(std::move(c));
    }
    json doc = {{"seed", a.seed},
                {"D", spec.dimension()},
                {"D_E", spec.level_count()},
                {"D_G", structure.gap_degeneracy()},
                {"D_F", structure.sum_degeneracy()},
                {"dims", dims},
                {"state_source", a.state.empty() ? "haar" : "file"}};
    if(oracle) {
        doc["oracle"] = {{"scaled_to_integer", clock.rescaled()},
                         {"time_scale", clock.scale.str()},
                         {"grid_points", qergo::exact_grid_size(2 * clock.bandwidth)}};
        if(clock.rescaled()) {
            doc["note"] = "rational spectrum scaled to integers by " + clock.scale.str() +
                          " for the discrete time-average oracle";
        }
    } else {
        doc["oracle"] = {{"skipped", "bandwidth too large for the discrete oracle"}};
    }
    doc["cells"] = std::move(cells);
    doc["all_pass"] = ok;
    if(!a.trajectory.empty()) {
        std::ofstream tr(a.trajectory);
        if(!tr) {
            throw UsageError("cannot write '" + a.trajectory + "'");
        }
        // One period of the integer clock, in clock time.
        qergo::write_trajectory(tr, qergo::on_integer_clock(state), dec, 2.0 * std::numbers::pi,
                                a.trajectory_points);
    }
    emit(doc, a.out);
    return ok ? exit_ok : exit_gate_failed;
}

// ---------------------------------------------------------------------------

struct TheoremArgs {
    std::string D = "2^100";
    std::string d = "1e8";
    std::string M = "1e22";
    std::string DF = "2";
    std::string epsilon = "1";
    std::string delta = "1";
    std::string delta_prime = "1";
    std::string C = "1e6";
    std::string margin = "10";
    unsigned precision_bits = qergo::default_precision_bits;
    std::string log_base = "e";
    std::string out;
};

int cmd_check_theorem(const TheoremArgs& a)
{
    if(a.precision_bits < 64) {
        throw UsageError("--precision-bits must be >= 64");
    }
    qergo::PrecisionScope scope(a.precision_bits);
    using qergo::HighPrecision;
    using qergo::parse_high_precision;
    using qergo::to_sci_string;
    const auto base = qergo::io::parse_log_base(a.log_base);
    const HighPrecision D = parse_high_precision(a.D);
    const HighPrecision d = parse_high_precision(a.d);
    const HighPrecision DF = parse_high_precision(a.DF);
    qergo::BasicTheoremParams<HighPrecision> p;
    p.epsilon = parse_high_precision(a.epsilon);
    p.delta = parse_high_precision(a.delta);
    p.delta_prime = parse_high_precision(a.delta_prime);
    p.cells = parse_high_precision(a.M);
    p.C = parse_high_precision(a.C);
    try {
        p.validate();
    } catch(const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const auto tc = qergo::theorem_condition(p, d, D, DF, base);
    const HighPrecision crossover = qergo::c_crossover(D, d, base);
    const auto admissible = qergo::find_admissible_C(D, d, base);
    const bool impact = qergo::resonance_impact_small(D, p.cells, DF, parse_high_precision(a.margin), base);
    const HighPrecision impact_rhs = HighPrecision(10) * qergo::log_in(D, base) / D * p.cells * p.cells;

    auto num = [](const HighPrecision& x) {
        return json{{"value", to_sci_string(x)}, {"approx", x.convert_to<double>()}};
    };
    json doc = {
        {"precision_bits", a.precision_bits},
        {"log_base", qergo::io::to_string(base)},
        {"inputs",
         {{"D", to_sci_string(D)}, {"d", to_sci_string(d)}, {"M", to_sci_string(p.cells)}, {"D_F", to_sci_string(DF)},
          {"epsilon", to_sci_string(p.epsilon)}, {"delta", to_sci_string(p.delta)},
          {"delta_prime", to_sci_string(p.delta_prime)}, {"C", to_sci_string(p.C)}}},
        {"log_D_over_D", num(tc.log_ratio)},
        {"d_over_D", num(tc.rhs_mid)},
        {"bracket", num(tc.bracket)},
        {"lhs", num(tc.lhs)},
        {"rhs_mid", num(tc.rhs_mid)},
        {"rhs_hi", num(tc.rhs_hi)},
        {"holds", tc.holds},
        {"C_crossover", num(crossover)},
        {"admissible_C", admissible ? num(*admissible) : json(nullptr)},
        {"resonance_impact_rhs", num(impact_rhs)},
        {"resonance_impact_small", impact},
    };
    if(d <= D) {
        doc["mean_L_bound"] = num(qergo::mean_L_bound(D, d, DF, base));
    }
    emit(doc, a.out);
    return exit_ok;
}

// ---------------------------------------------------------------------------

struct RunArgs {
    std::string config;
    std::string out;
    std::string table;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<unsigned> threads;
};

int cmd_run(const RunArgs& a)
{
    const std::filesystem::path path(a.config);
    auto config = qergo::io::parse_config(qergo::io::read_file(path), path.parent_path());
    if(a.seed) {
        config.seed = *a.seed;
    }
    if(a.trials) {
        if(*a.trials == 0) {
            throw UsageError("--trials must be >= 1");
        }
        config.trials = *a.trials;
    }
    if(a.threads) {
        config.threads = *a.threads;
    }
    const auto report = qergo::run_experiment(config);
    json doc = {{"config", qergo::io::config_to_json(config)}, {"report", qergo::io::report_to_json(report)}};
    emit(doc, a.out);
    if(!a.table.empty()) {
        std::ofstream t(a.table);
        if(!t) {
            throw UsageError("cannot write '" + a.table + "'");
        }
        qergo::io::write_trial_table(t, report);
    }
    return report.all_pass() ? exit_ok : exit_gate_failed;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"qergo: ergodicity and normal-typicality laboratory for degenerate / resonant spectra"};
    app.require_subcommand(1);

    AnalyzeArgs analyze;
    auto* an = app.add_subcommand("analyze", "Gap / energy-sum structure of a spectrum file");
    an->add_option("spectrum", analyze.spectrum, "Spectrum JSON file")->required();
    an->add_option("--snap-denominator", analyze.snap,
                   "Accept floating-point energies, snapped to multiples of 1/N (approximate)");
    an->add_option("--out", analyze.out, "Output path (default stdout)");

    LemmaArgs lemmas;
    auto* vl = app.add_subcommand("verify-lemmas", "Monte Carlo checks of the projection and hypersphere moments");
    vl->add_option("--D", lemmas.D, "Dimension for the projection statistics");
    vl->add_option("--d", lemmas.d, "Projection rank");
    vl->add_option("--sphere-D", lemmas.sphere_D, "Dimension for the hypersphere moments");
    vl->add_option("--samples", lemmas.samples, "Samples per moment estimate");
    vl->add_option("--ensemble", lemmas.ensemble, "Haar unitaries for the max-overlap statistics");
    vl->add_option("--seed", lemmas.seed, "Master seed");
    vl->add_option("--log-base", lemmas.log_base, "Logarithm base: e or 10");
    vl->add_option("--out", lemmas.out, "Output path (default stdout)");

    ComputeArgs compute;
    auto* cl = app.add_subcommand("compute-l", "Exact L breakdown per cell, with the time-average oracle");
    cl->add_option("spectrum", compute.spectrum, "Spectrum JSON file")->required();
    cl->add_option("--state", compute.state, "State JSON file (default: Haar state from the seed)");
    cl->add_option("--dims", compute.dims, "Comma-separated cell ranks, e.g. 2,2")->required();
    cl->add_option("--seed", compute.seed, "Master seed");
    cl->add_option("--out", compute.out, "Output path (default stdout)");
    cl->add_option("--trajectory", compute.trajectory, "Write a columnar (tau, weights) dump over one period");
    cl->add_option("--trajectory-points", compute.trajectory_points, "Rows in the trajectory dump");

    TheoremArgs theorem;
    auto* ct = app.add_subcommand("check-theorem", "Evaluate the typicality condition in high precision");
    ct->add_option("--D", theorem.D, "Hilbert-space dimension (accepts 2^100, 1e30, ...)");
    ct->add_option("--d", theorem.d, "Cell dimension");
    ct->add_option("--M", theorem.M, "Number of cells");
    ct->add_option("--DF", theorem.DF, "Maximum energy-sum degeneracy D_F");
    ct->add_option("--epsilon", theorem.epsilon, "epsilon > 0");
    ct->add_option("--delta", theorem.delta, "delta in (0, 1]");
    ct->add_option("--delta-prime", theorem.delta_prime, "delta' in (0, 1]");
    ct->add_option("--C", theorem.C, "Constant C > 1");
    ct->add_option("--margin", theorem.margin, "Margin factor for the resonance-impact comparison");
    ct->add_option("--precision-bits", theorem.precision_bits, "MPFR mantissa bits");
    ct->add_option("--log-base", theorem.log_base, "Logarithm base: e or 10");
    ct->add_option("--out", theorem.out, "Output path (default stdout)");

    RunArgs run;
    auto* rn = app.add_subcommand("run", "Monte Carlo experiment over Haar-random decompositions");
    rn->add_option("config", run.config, "Experiment config JSON")->required();
    rn->add_option("--out", run.out, "Report path (default stdout)");
    rn->add_option("--table", run.table, "Columnar per-trial dump path");
    rn->add_option("--seed", run.seed, "Override the config seed");
    rn->add_option("--trials", run.trials, "Override the trial count");
    rn->add_option("--threads", run.threads, "Worker threads (0: all cores)");

    try {
        app.parse(argc, argv);
    } catch(const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if(an->parsed()) {
            return cmd_analyze(analyze);
        }
        if(vl->parsed()) {
            return cmd_verify_lemmas(lemmas);
        }
        if(cl->parsed()) {
            return cmd_compute_l(compute);
        }
        if(ct->parsed()) {
            return cmd_check_theorem(theorem);
        }
        if(rn->parsed()) {
            return cmd_run(run);
        }
    } catch(const qergo::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    } catch(const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return exit_usage;
    } catch(const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return exit_usage;
    } catch(const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    }
    return exit_usage;
}
