// Acceptance run: one PASS/FAIL line per criterion. Exit status 0 iff all pass.

#include "oracles.hpp"

#include "qergo/io.hpp"
#include "qergo/montecarlo.hpp"
#include "qergo/precision.hpp"
#include "qergo/typicality.hpp"

#include <array>
#include <sys/wait.h>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#ifndef QERGO_CLI
#error "QERGO_CLI must name the command-line binary"
#endif
#ifndef QERGO_DATA
#error "QERGO_DATA must name the sample-input directory"
#endif

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string sci(double x)
{
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << x;
    return os.str();
}

struct Command {
    int status = -1;
    std::string out;
};

Command run_command(const std::string& cmd)
{
    Command r;
    FILE* pipe = popen((cmd + " 2>/dev/null").c_str(), "r");
    if(pipe == nullptr) {
        return r;
    }
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) {
        r.out.append(buf.data(), n);
    }
    const int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

const std::string cli = QERGO_CLI;
const std::string data = QERGO_DATA;

// Shared between criteria 1 and 6.
struct ChainAudit {
    std::size_t cells = 0;
    std::size_t ergodicity_violations = 0;
    std::size_t bound_violations = 0;
    double worst_ergodicity = -1.0;
    double worst_bound = -1.0;
};
ChainAudit chain_audit;

Outcome oracle_equivalence()
{
    const auto t0 = Clock::now();
    std::mt19937_64 gen(qergo::substream(qergo::default_seed, 101)());
    qergo::Rng rng = qergo::substream(qergo::default_seed, 102);
    std::uniform_int_distribution<std::size_t> pick_D(4, 12);
    double worst = 0.0;
    std::size_t cells = 0;
    for(int trial = 0; trial < 200; ++trial) {
        const std::size_t D = pick_D(gen);
        const std::size_t levels = std::uniform_int_distribution<std::size_t>(2, std::min<std::size_t>(D, 10))(gen);
        const auto width = std::uniform_int_distribution<std::int64_t>(static_cast<std::int64_t>(levels) - 1, 12)(gen);
        const auto spec = oracle::integer_spectrum(oracle::random_levels(levels, width, gen),
                                                   oracle::random_composition(D, levels, gen));
        const std::size_t M = std::uniform_int_distribution<std::size_t>(1, std::min<std::size_t>(D, 4))(gen);
        const auto dims = oracle::random_composition(D, M, gen);
        const auto state = qergo::prepare_state(qergo::sample_random_state(D, rng).amplitudes, spec);
        const auto dec = qergo::sample_decomposition(dims, D, rng);
        const auto structure = qergo::analyze(spec);
        for(const auto& cell : dec.cells) {
            const auto b = qergo::compute_L_exact(state, cell, structure);
            worst = std::max(worst, std::abs(b.l_total - qergo::oracle_deviation_average(state, cell)));
            ++cells;

            const double gap = qergo::ergodicity_gap(state, cell);
            const double bound = qergo::l3r_bound(b.diag_sum, structure.sum_degeneracy());
            ++chain_audit.cells;
            chain_audit.worst_ergodicity = std::max(chain_audit.worst_ergodicity, gap - b.l_total);
            chain_audit.worst_bound = std::max(chain_audit.worst_bound, b.l3_r - bound);
            chain_audit.ergodicity_violations += gap > b.l_total + qergo::chain_slack ? 1 : 0;
            chain_audit.bound_violations += b.l3_r > bound + qergo::chain_slack ? 1 : 0;
        }
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-9 && secs < 60.0, "200 triples (" + std::to_string(cells) + " cells), max |L - oracle| = " +
                                              sci(worst) + ", " + sci(secs) + " s (limit 60 s)"};
}

Outcome nonresonant_collapse()
{
    const auto t0 = Clock::now();
    std::mt19937_64 gen(qergo::substream(qergo::default_seed, 201)());
    qergo::Rng rng = qergo::substream(qergo::default_seed, 202);
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t bad_l3r = 0;
    std::size_t bad_df = 0;
    while(accepted < 1000) {
        const std::size_t levels = 2 + accepted % 9;
        const auto width = std::uniform_int_distribution<std::int64_t>(static_cast<std::int64_t>(levels * levels),
                                                                       static_cast<std::int64_t>(8 * levels * levels))(gen);
        const auto e = oracle::random_levels(levels, width, gen);
        const auto spec = oracle::integer_spectrum(e);
        if(oracle::max_nonzero_gap_count(oracle::energies(spec)) != 1) {
            ++rejected;
            continue;
        }
        ++accepted;
        const auto structure = qergo::analyze(spec);
        bad_df += structure.sum_degeneracy() == 2 ? 0 : 1;
        const auto state = qergo::prepare_state(qergo::sample_random_state(levels, rng).amplitudes, spec);
        const std::vector<std::size_t> dims{1, levels - 1};
        const auto dec = qergo::sample_decomposition(dims, levels, rng);
        for(const auto& cell : dec.cells) {
            bad_l3r += qergo::compute_L_exact(state, cell, structure).l3_r == 0.0 ? 0 : 1;
        }
    }
    const double secs = seconds_since(t0);
    return {bad_l3r == 0 && bad_df == 0 && secs < 30.0,
            "1000 spectra (" + std::to_string(rejected) + " resonant draws rejected), nonzero L3_r: " +
                std::to_string(bad_l3r) + ", D_F != 2: " + std::to_string(bad_df) + ", " + sci(secs) +
                " s (limit 30 s)"};
}

Outcome degenerate_reduction()
{
    std::mt19937_64 gen(qergo::substream(qergo::default_seed, 301)());
    qergo::Rng rng = qergo::substream(qergo::default_seed, 302);
    const std::vector<std::vector<std::size_t>> patterns{{3, 2, 1}, {2, 2}, {1, 4, 1, 2}, {5, 1}, {2, 1, 1, 3, 1}};
    double worst = 0.0;
    for(int trial = 0; trial < 100; ++trial) {
        const auto& g = patterns[static_cast<std::size_t>(trial) % patterns.size()];
        const std::size_t D = std::accumulate(g.begin(), g.end(), std::size_t{0});
        const auto spec = oracle::integer_spectrum(oracle::random_levels(g.size(), static_cast<std::int64_t>(g.size()) + trial % 10, gen), g);
        const auto state = qergo::prepare_state(qergo::sample_random_state(D, rng).amplitudes, spec);
        const auto dims = oracle::random_composition(D, 1 + static_cast<std::size_t>(trial) % 3, gen);
        const auto dec = qergo::sample_decomposition(dims, D, rng);
        for(const auto& cell : dec.cells) {
            worst = std::max(worst, std::abs(qergo::exact_time_avg_weight(state, cell) -
                                             qergo::oracle_time_avg_weight(state, cell)));
        }
    }
    return {worst <= 1e-10, "100 degenerate instances, max |shell-diagonal - oracle| = " + sci(worst)};
}

std::string moment_line(const qergo::MomentReport& r)
{
    std::string s;
    for(const auto& g : r.rows) {
        s += "; " + g.name + " " + sci(g.estimate) + " vs " + sci(g.target) + " (" +
             sci(std::abs(g.estimate - g.target) / g.std_error) + " se)";
    }
    return s;
}

Outcome lemma2_moments()
{
    const auto t0 = Clock::now();
    qergo::Rng rng = qergo::substream(qergo::default_seed, 401);
    const auto r = qergo::lemma2_statistics(100, 10, 100'000, rng);
    const double secs = seconds_since(t0);
    bool ok = r.sufficient && secs < 60.0 && r.rows.size() == 2;
    for(const auto& g : r.rows) {
        ok = ok && g.gated && g.pass;
    }
    // The variance target rounds to the quoted 8.911e-4.
    ok = ok && std::abs(qergo::lemma2_variance(10, 100) - 8.911e-4) < 5e-8 && r.rows[0].target == 0.1;
    return {ok, "D=100 d=10, 1e5 states" + moment_line(r) + ", " + sci(secs) + " s (limit 60 s)"};
}

Outcome hypersphere()
{
    qergo::Rng rng = qergo::substream(qergo::default_seed, 501);
    const auto r = qergo::hypersphere_moments(50, 100'000, rng);
    bool ok = r.sufficient;
    for(const auto& g : r.rows) {
        ok = ok && g.gated && g.pass;
    }
    return {ok, "D=50, 1e5 samples" + moment_line(r)};
}

Outcome inequality_chains()
{
    const auto& a = chain_audit;
    return {a.cells > 0 && a.ergodicity_violations == 0 && a.bound_violations == 0,
            std::to_string(a.cells) + " cells from criterion 1; gap > L: " + std::to_string(a.ergodicity_violations) +
                " (max excess " + sci(a.worst_ergodicity) + "), L3_r > bound: " +
                std::to_string(a.bound_violations) + " (max excess " + sci(a.worst_bound) + ")"};
}

qergo::ExperimentConfig mean_bound_config(const qergo::SpectrumSpec& spec)
{
    qergo::ExperimentConfig c;
    c.spectrum = spec;
    c.dims = std::vector<std::size_t>(8, 8);
    c.state_policy = qergo::StatePolicy::fixed;
    c.trials = 200;
    c.seed = qergo::default_seed;
    c.direct_check = false;
    return c;
}

std::string mean_bound_reports[2];

Outcome mean_bound()
{
    std::vector<std::int64_t> ramp(64);
    std::iota(ramp.begin(), ramp.end(), 0);
    const std::vector<std::pair<std::string, qergo::SpectrumSpec>> cases{
        {"non-resonant", oracle::integer_spectrum({0, 1, 4, 9, 15, 22, 32, 34}, std::vector<std::size_t>(8, 8))},
        {"resonant", oracle::integer_spectrum(ramp)}};
    bool ok = true;
    std::string detail;
    for(std::size_t k = 0; k < cases.size(); ++k) {
        const auto& [name, spec] = cases[k];
        const auto r = qergo::run_experiment(mean_bound_config(spec));
        mean_bound_reports[k] = qergo::io::report_to_json(r).dump();
        double worst_mean = 0.0;
        double min_slack = 1e300;
        for(const auto& cs : r.cells) {
            ok = ok && cs.l_total.mean <= cs.mean_bound;
            worst_mean = std::max(worst_mean, cs.l_total.mean);
            min_slack = std::min(min_slack, cs.slack);
        }
        detail += (k ? "; " : "") + name + " D_F=" + std::to_string(r.sum_degeneracy) + " bound " +
                  sci(r.cells[0].mean_bound) + ", max mean L " + sci(worst_mean) + ", min slack " + sci(min_slack);
    }
    return {ok, detail};
}

Outcome implication()
{
    std::size_t trials = 0;
    std::size_t sufficient = 0;
    std::size_t violations = 0;
    const std::vector<std::pair<qergo::SpectrumSpec, std::vector<std::size_t>>> systems{
        {oracle::integer_spectrum({0, 1, 3, 7, 12}, {2, 2, 2, 2, 2}), {5, 5}},
        {oracle::integer_spectrum({0, 1, 2, 3, 4, 5}, {1, 2, 1, 2, 1, 1}), {2, 3, 3}},
        {oracle::integer_spectrum({0, 2, 5}, {4, 4, 4}), {6, 6}},
    };
    std::uint64_t seed = qergo::default_seed;
    for(const auto& [spec, dims] : systems) {
        for(double eps : {0.05, 0.1, 0.2, 0.35, 0.5, 1.0, 2.0}) {
            for(double dp : {0.1, 0.3, 1.0}) {
                qergo::ExperimentConfig c;
                c.spectrum = spec;
                c.dims = dims;
                c.state_policy = qergo::StatePolicy::haar_per_trial;
                c.trials = 100;
                c.seed = seed++;
                c.params.epsilon = eps;
                c.params.delta_prime = dp;
                c.retain_limit = 0;
                const auto n = qergo::normality_fraction(c);
                trials += n.trials;
                sufficient += n.sufficient;
                violations += n.implication_violations;
            }
        }
    }
    return {violations == 0 && sufficient > 0 && sufficient < trials,
            std::to_string(trials) + " trials, " + std::to_string(sufficient) +
                " satisfy the sufficient condition, counterexamples: " + std::to_string(violations)};
}

std::string theorem_command()
{
    return cli + " check-theorem --D 2^100 --d 1e8 --M 1e22 --DF 2 --C 1e6 --precision-bits 256 --log-base e";
}

Outcome paper_example()
{
    const auto t0 = Clock::now();
    const auto r = run_command(theorem_command());
    const double secs = seconds_since(t0);
    if(r.status != 0) {
        return {false, "check-theorem exited with status " + std::to_string(r.status)};
    }
    const auto doc = qergo::io::json::parse(r.out);
    const double log_ratio = doc["log_D_over_D"]["approx"].get<double>();
    const double ratio = doc["d_over_D"]["approx"].get<double>();
    const double cross = doc["C_crossover"]["approx"].get<double>();
    const bool ok = log_ratio >= 1e-30 && log_ratio <= 1e-28 && ratio >= 1e-23 && ratio <= 1e-21 && cross > 1e6 &&
                    cross < 1e7 && secs < 1.0;
    return {ok, "log D/D = " + sci(log_ratio) + ", d/D = " + sci(ratio) + ", C crossover = " + sci(cross) +
                    ", largest admissible C = " + sci(doc["admissible_C"]["approx"].get<double>()) + ", " +
                    sci(secs) + " s (limit 1 s)"};
}

Outcome determinism()
{
    std::vector<std::string> mismatched;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"verify-lemmas", cli + " verify-lemmas --D 100 --d 10 --samples 100000 --ensemble 100 --seed 20170704"},
        {"check-theorem", theorem_command()},
        {"compute-l", cli + " compute-l " + data + "/spectrum_0123.json --dims 2,2 --seed 20170704"},
        {"run", cli + " run " + data + "/run_smoke.json"},
    };
    for(const auto& [name, cmd] : commands) {
        const auto a = run_command(cmd);
        const auto b = run_command(cmd);
        if(a.out.empty() || a.out != b.out || a.status != b.status) {
            mismatched.push_back(name);
        }
    }
    for(std::size_t k = 0; k < 2; ++k) {
        std::vector<std::int64_t> ramp(64);
        std::iota(ramp.begin(), ramp.end(), 0);
        const auto spec = k == 0 ? oracle::integer_spectrum({0, 1, 4, 9, 15, 22, 32, 34}, std::vector<std::size_t>(8, 8))
                                 : oracle::integer_spectrum(ramp);
        if(qergo::io::report_to_json(qergo::run_experiment(mean_bound_config(spec))).dump() !=
           mean_bound_reports[k]) {
            mismatched.push_back("mean-bound run " + std::to_string(k + 1));
        }
    }
    std::string detail = "reran 4 CLI commands and both mean-bound runs";
    if(!mismatched.empty()) {
        detail += "; differing:";
        for(const auto& m : mismatched) {
            detail += " " + m;
        }
    } else {
        detail += "; all byte-identical";
    }
    return {mismatched.empty(), detail};
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"oracle equivalence for L", oracle_equivalence},
        {"non-resonant collapse", nonresonant_collapse},
        {"degenerate-spectrum reduction", degenerate_reduction},
        {"projection-weight moments", lemma2_moments},
        {"hypersphere moments", hypersphere},
        {"inequality chain audit", inequality_chains},
        {"mean-L bound", mean_bound},
        {"sufficient-condition implication", implication},
        {"100-spin numeric example", paper_example},
        {"determinism", determinism},
    };
    bool all = true;
    for(std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            o = criteria[k].second();
        } catch(const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        all = all && o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << (k + 1) << ": " << criteria[k].first << " -- "
                  << o.detail << std::endl;
    }
    std::cout << (all ? "all criteria pass" : "some criteria FAILED") << std::endl;
    return all ? 0 : 1;
}
