#pragma once

/**
 * @file montecarlo.hpp
 * @brief Ensembles of Haar-random decompositions (and optionally states):
 *        per-trial L breakdowns, averaged bounds, Markov step, and the
 *        sufficient-condition / direct-normality implication audit.
 *
 * Trial t draws everything from substream(seed, t). Trials may run on several
 * threads; results land in per-trial slots and are aggregated in trial order,
 * so a report is a pure function of its config.
 */

#include "qergo/dynamics.hpp"
#include "qergo/randomness.hpp"
#include "qergo/spectrum.hpp"
#include "qergo/stats.hpp"
#include "qergo/typicality.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace qergo {

inline constexpr std::uint64_t default_seed = 20170704;

enum class StatePolicy { fixed, haar_per_trial };

struct GateSwitches {
    bool mean_bound = true;
    bool markov = true;
    bool chains = true;
    bool implication = true;
    bool identities = true;
};

struct ExperimentConfig {
    SpectrumSpec spectrum;
    std::vector<std::size_t> dims;
    StatePolicy state_policy = StatePolicy::fixed;
    /// Fixed initial state; when absent a Haar state is drawn once from the seed.
    std::optional<Eigen::VectorXcd> fixed_state;
    std::size_t trials = 1;
    std::uint64_t seed = default_seed;
    /// epsilon, delta, delta', C; M is taken from dims.
    TheoremParams params;
    LogBase log_base = LogBase::natural;
    bool direct_check = true;
    std::size_t time_grid = default_time_grid;
    std::size_t retain_limit = 10'000;
    unsigned threads = 0; ///< 0: hardware concurrency
    GateSwitches gates;

    std::size_t dimension() const { return spectrum.dimension(); }

    TheoremParams effective_params() const
    {
        TheoremParams p = params;
        p.cells = static_cast<double>(dims.size());
        return p;
    }

    void validate() const
    {
        if(dims.empty()) {
            throw std::invalid_argument("config needs at least one cell");
        }
        for(auto d : dims) {
            if(d == 0) {
                throw std::invalid_argument("cell ranks must be >= 1");
            }
        }
        const std::size_t total = std::accumulate(dims.begin(), dims.end(), std::size_t{0});
        if(total != spectrum.dimension()) {
            throw std::invalid_argument("cell ranks sum to " + std::to_string(total) +
                                        " but the spectrum dimension is " + std::to_string(spectrum.dimension()));
        }
        if(trials == 0) {
            throw std::invalid_argument("trial count must be >= 1");
        }
        if(fixed_state && static_cast<std::size_t>(fixed_state->size()) != spectrum.dimension()) {
            throw std::invalid_argument("fixed state length does not match the spectrum dimension");
        }
        effective_params().validate();
    }
};

struct CellRecord {
    LBreakdown breakdown;
    double ergodicity_gap = 0.0;
    double l3r_bound = 0.0;
    double threshold = 0.0; ///< B
    bool sufficient = false;
    bool ergodic = false;
};

struct TrialRecord {
    std::size_t trial = 0;
    std::vector<CellRecord> cells;
    bool all_sufficient = false;
    std::optional<double> time_fraction;
    bool direct_normal = false;
};

struct CellSummary {
    std::size_t rank = 0;
    stats::Summary l_total;
    double threshold = 0.0;       ///< B = delta' (eps/M)^2 (d/D)
    double prob_exceed = 0.0;     ///< Prob[L > B]
    double prob_at_least = 0.0;   ///< Prob[L >= B]
    double mean_bound = 0.0;      ///< 10 log D / D + (D_F - 2)(d/D)^2
    double slack = 0.0;           ///< mean_bound - mean L
    bool markov_pass = false;
};

struct NormalityFraction {
    std::size_t trials = 0;
    std::size_t sufficient = 0;
    stats::Interval sufficient_ci;
    std::optional<std::size_t> direct;
    std::optional<stats::Interval> direct_ci;
    std::size_t implication_violations = 0;

    double sufficient_fraction() const
    {
        return trials ? static_cast<double>(sufficient) / static_cast<double>(trials) : 0.0;
    }
    std::optional<double> direct_fraction() const
    {
        if(!direct || trials == 0) {
            return std::nullopt;
        }
        return static_cast<double>(*direct) / static_cast<double>(trials);
    }
};

struct ExperimentReport {
    std::size_t dimension = 0;
    std::size_t level_count = 0;
    std::size_t gap_degeneracy = 0;
    std::size_t sum_degeneracy = 0;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    bool clock_rescaled = false;
    std::size_t time_grid = 0;
    std::vector<CellSummary> cells;
    std::size_t ergodicity_violations = 0;
    std::size_t l3r_bound_violations = 0;
    double max_identity_residual = 0.0;
    double max_l3r_imag = 0.0;
    NormalityFraction normality;
    std::map<std::string, bool> gates; ///< enabled gates only
    std::vector<TrialRecord> records;  ///< empty when trials exceed the retain limit

    bool all_pass() const
    {
        return std::all_of(gates.begin(), gates.end(), [](const auto& kv) { return kv.second; });
    }
};

// ---------------------------------------------------------------------------
// Markov step
// ---------------------------------------------------------------------------

struct MarkovInputs {
    double exceed_fraction = 0.0; ///< empirical Prob[X >= B]
    double mean = 0.0;
    double mean_std_error = 0.0;
    std::size_t count = 0;
};

/// Prob[X >= B] <= E[X]/B, allowing 3 combined standard errors of noise.
inline bool markov_check(const MarkovInputs& in, double threshold)
{
    if(!(threshold > 0.0)) {
        throw std::invalid_argument("Markov threshold must be > 0");
    }
    const double n = static_cast<double>(std::max<std::size_t>(in.count, 1));
    const double p = in.exceed_fraction;
    const double combined = std::sqrt(std::max(0.0, p * (1.0 - p)) / n) + in.mean_std_error / threshold;
    return p <= in.mean / threshold + 3.0 * combined;
}

inline MarkovInputs markov_inputs(std::span<const double> samples, double threshold)
{
    MarkovInputs in;
    const auto s = stats::summarize(samples);
    in.count = samples.size();
    in.mean = s.mean;
    in.mean_std_error = s.mean_std_error;
    const auto hits = std::count_if(samples.begin(), samples.end(), [&](double x) { return x >= threshold; });
    in.exceed_fraction = samples.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(samples.size());
    return in;
}

inline bool markov_check(std::span<const double> samples, double threshold)
{
    return markov_check(markov_inputs(samples, threshold), threshold);
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

/// Runs body(i) for i in [0, n) on up to `threads` workers. The first
/// exception (lowest index) is rethrown after all workers finish.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body)
{
    if(threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for(std::size_t i = next++; i < n; i = next++) {
            try {
                body(i);
            } catch(...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if(threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for(unsigned t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }
    for(auto& e : errors) {
        if(e) {
            std::rethrow_exception(e);
        }
    }
}

inline constexpr double chain_slack = 1e-12;

/// Index reserved for the stream that draws the default fixed state.
inline constexpr std::uint64_t fixed_state_stream = ~std::uint64_t{0};

inline Eigen::VectorXcd default_fixed_state(const ExperimentConfig& config)
{
    if(config.fixed_state) {
        return *config.fixed_state;
    }
    Rng rng = substream(config.seed, fixed_state_stream);
    return sample_random_state(config.dimension(), rng).amplitudes;
}

inline ExperimentReport run_experiment(const ExperimentConfig& config)
{
    config.validate();
    const std::size_t D = config.dimension();
    const auto structure = analyze(config.spectrum);
    const std::size_t DF = structure.sum_degeneracy();
    const TheoremParams params = config.effective_params();

    std::optional<ShellState> fixed;
    if(config.state_policy == StatePolicy::fixed) {
        fixed = prepare_state(default_fixed_state(config), config.spectrum);
    }

    std::size_t grid = 0;
    bool rescaled = false;
    if(config.direct_check) {
        const auto clock = integer_clock(config.spectrum);
        rescaled = clock.rescaled() || clock.shift != 0;
        grid = std::max(config.time_grid, exact_grid_size(2 * clock.bandwidth));
    }

    std::vector<TrialRecord> records(config.trials);
    parallel_for(config.trials, config.threads, [&](std::size_t t) {
        Rng rng = substream(config.seed, t);
        const ShellState state = fixed ? *fixed : prepare_state(sample_random_state(D, rng).amplitudes, config.spectrum);
        const Decomposition dec = sample_decomposition(config.dims, D, rng);
        TrialRecord rec;
        rec.trial = t;
        rec.all_sufficient = true;
        for(const auto& cell : dec.cells) {
            CellRecord c;
            c.breakdown = compute_L_exact(state, cell, structure);
            c.ergodicity_gap = ergodicity_gap(state, cell);
            c.l3r_bound = l3r_bound(c.breakdown.diag_sum, DF);
            c.threshold = sufficient_threshold(params, static_cast<double>(cell.rank()), static_cast<double>(D));
            c.sufficient = c.breakdown.l_total <= c.threshold;
            c.ergodic = ergodicity_criterion(c.ergodicity_gap, params, cell.rank(), D);
            rec.all_sufficient = rec.all_sufficient && c.sufficient;
            rec.cells.push_back(c);
        }
        if(config.direct_check) {
            const ShellState clocked = on_integer_clock(state);
            rec.time_fraction = time_fraction_normal(clocked, dec, params.epsilon, grid);
            rec.direct_normal = *rec.time_fraction >= 1.0 - params.delta_prime;
        }
        records[t] = std::move(rec);
    });

    ExperimentReport report;
    report.dimension = D;
    report.level_count = config.spectrum.level_count();
    report.gap_degeneracy = structure.gap_degeneracy();
    report.sum_degeneracy = DF;
    report.trials = config.trials;
    report.seed = config.seed;
    report.clock_rescaled = rescaled;
    report.time_grid = grid;

    bool mean_ok = true;
    bool markov_ok = true;
    for(std::size_t v = 0; v < config.dims.size(); ++v) {
        std::vector<double> ls;
        ls.reserve(records.size());
        for(const auto& r : records) {
            ls.push_back(r.cells[v].breakdown.l_total);
        }
        CellSummary cs;
        cs.rank = config.dims[v];
        cs.l_total = stats::summarize(ls);
        cs.threshold = records.front().cells[v].threshold;
        const auto above = std::count_if(ls.begin(), ls.end(), [&](double x) { return x > cs.threshold; });
        cs.prob_exceed = static_cast<double>(above) / static_cast<double>(ls.size());
        const auto in = markov_inputs(ls, cs.threshold);
        cs.prob_at_least = in.exceed_fraction;
        cs.markov_pass = markov_check(in, cs.threshold);
        cs.mean_bound = mean_L_bound(D, cs.rank, DF, config.log_base);
        cs.slack = cs.mean_bound - cs.l_total.mean;
        mean_ok = mean_ok && cs.l_total.mean <= cs.mean_bound;
        markov_ok = markov_ok && cs.markov_pass;
        report.cells.push_back(cs);
    }

    auto& nf = report.normality;
    nf.trials = records.size();
    std::size_t direct = 0;
    for(const auto& r : records) {
        for(const auto& c : r.cells) {
            if(c.ergodicity_gap > c.breakdown.l_total + chain_slack) {
                ++report.ergodicity_violations;
            }
            if(c.breakdown.l3_r > c.l3r_bound + chain_slack) {
                ++report.l3r_bound_violations;
            }
            report.max_identity_residual = std::max(
                {report.max_identity_residual, c.breakdown.split_residual(), c.breakdown.regroup_residual()});
            report.max_l3r_imag = std::max(report.max_l3r_imag, std::abs(c.breakdown.l3_r_imag));
        }
        nf.sufficient += r.all_sufficient ? 1 : 0;
        direct += r.direct_normal ? 1 : 0;
        if(r.time_fraction && r.all_sufficient && !r.direct_normal) {
            ++nf.implication_violations;
        }
    }
    nf.sufficient_ci = stats::wilson_interval(nf.sufficient, nf.trials);
    if(config.direct_check) {
        nf.direct = direct;
        nf.direct_ci = stats::wilson_interval(direct, nf.trials);
    }

    const auto& g = config.gates;
    if(g.mean_bound) {
        report.gates["mean_L_bound"] = mean_ok;
    }
    if(g.markov) {
        report.gates["markov"] = markov_ok;
    }
    if(g.chains) {
        report.gates["ergodicity_chain"] = report.ergodicity_violations == 0;
        report.gates["l3r_bound_chain"] = report.l3r_bound_violations == 0;
    }
    if(g.identities) {
        report.gates["breakdown_identities"] =
            report.max_identity_residual <= identity_tolerance && report.max_l3r_imag <= identity_tolerance;
    }
    if(g.implication && config.direct_check) {
        report.gates["sufficient_implies_normal"] = nf.implication_violations == 0;
    }
    if(records.size() <= config.retain_limit) {
        report.records = std::move(records);
    }
    return report;
}

/// Fractions of decompositions passing the sufficient condition on every cell,
/// and passing the direct time-fraction check, with 95% Wilson intervals.
inline NormalityFraction normality_fraction(ExperimentConfig config)
{
    config.retain_limit = 0;
    return run_experiment(config).normality;
}

} // namespace qergo
