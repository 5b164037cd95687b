#include "oracles.hpp"

#include "qergo/io.hpp"
#include "qergo/montecarlo.hpp"

#include <catch2/catch_amalgamated.hpp>

using Catch::Matchers::WithinAbs;

namespace {

qergo::ExperimentConfig small_config()
{
    qergo::ExperimentConfig c;
    c.spectrum = oracle::integer_spectrum({0, 1, 2, 4, 5}, {2, 1, 3, 1, 1});
    c.dims = {2, 3, 3};
    c.trials = 40;
    c.seed = 77;
    c.params.epsilon = 1.0;
    c.params.delta = 0.5;
    c.params.delta_prime = 0.5;
    c.params.C = 2.0;
    return c;
}

} // namespace

TEST_CASE("a single trial reproduces the direct breakdown", "[montecarlo]")
{
    auto c = small_config();
    c.trials = 1;
    const auto r = qergo::run_experiment(c);
    REQUIRE(r.records.size() == 1);

    const auto state = qergo::prepare_state(qergo::default_fixed_state(c), c.spectrum);
    qergo::Rng rng = qergo::substream(c.seed, 0);
    const auto dec = qergo::sample_decomposition(c.dims, c.dimension(), rng);
    const auto structure = qergo::analyze(c.spectrum);
    for(std::size_t v = 0; v < c.dims.size(); ++v) {
        const auto b = qergo::compute_L_exact(state, dec.cells[v], structure);
        CHECK(r.records[0].cells[v].breakdown.l_total == b.l_total);
        CHECK(r.cells[v].l_total.mean == b.l_total);
        CHECK(r.cells[v].l_total.min == r.cells[v].l_total.max);
    }
}

TEST_CASE("reports are invariants-consistent and pass their gates", "[montecarlo]")
{
    for(auto policy : {qergo::StatePolicy::fixed, qergo::StatePolicy::haar_per_trial}) {
        auto c = small_config();
        c.state_policy = policy;
        const auto r = qergo::run_experiment(c);
        CHECK(r.trials == 40);
        CHECK(r.records.size() == 40);
        for(const auto& cs : r.cells) {
            CHECK(cs.l_total.mean >= cs.l_total.min);
            CHECK(cs.l_total.mean <= cs.l_total.max);
            CHECK(cs.prob_exceed >= 0.0);
            CHECK(cs.prob_exceed <= 1.0);
            CHECK(cs.prob_at_least >= cs.prob_exceed);
        }
        CHECK(r.ergodicity_violations == 0);
        CHECK(r.l3r_bound_violations == 0);
        CHECK(r.normality.implication_violations == 0);
        for(const auto& [name, ok] : r.gates) {
            INFO(name);
            CHECK(ok);
        }
        CHECK(r.all_pass());
    }
}

TEST_CASE("runs are deterministic and independent of the thread count", "[montecarlo]")
{
    auto c = small_config();
    c.threads = 1;
    const auto a = qergo::io::report_to_json(qergo::run_experiment(c)).dump();
    c.threads = 4;
    const auto b = qergo::io::report_to_json(qergo::run_experiment(c)).dump();
    const auto again = qergo::io::report_to_json(qergo::run_experiment(c)).dump();
    CHECK(a == b);
    CHECK(b == again);
    c.seed = 78;
    CHECK(qergo::io::report_to_json(qergo::run_experiment(c)).dump() != a);
}

TEST_CASE("invalid configs are rejected before any trial", "[montecarlo]")
{
    auto c = small_config();
    c.dims = {2, 2};
    CHECK_THROWS_AS(qergo::run_experiment(c), std::invalid_argument);
    c = small_config();
    c.trials = 0;
    CHECK_THROWS_AS(qergo::run_experiment(c), std::invalid_argument);
    c = small_config();
    c.params.delta_prime = 2.0;
    CHECK_THROWS_AS(qergo::run_experiment(c), std::invalid_argument);
}

TEST_CASE("retention limit drops per-trial records", "[montecarlo]")
{
    auto c = small_config();
    c.retain_limit = 10;
    const auto r = qergo::run_experiment(c);
    CHECK(r.records.empty());
    CHECK(r.cells[0].l_total.count == 40);
}

TEST_CASE("Markov check", "[montecarlo]")
{
    const std::vector<double> xs{0.1, 0.4, 0.2, 0.9, 0.3, 0.05};
    SECTION("threshold above every sample")
    {
        const auto in = qergo::markov_inputs(xs, 1.0);
        CHECK(in.exceed_fraction == 0.0);
        CHECK(qergo::markov_check(xs, 1.0));
    }
    SECTION("threshold at half the mean")
    {
        const auto mean = qergo::stats::summarize(xs).mean;
        CHECK(qergo::markov_check(xs, mean / 2.0));
    }
    SECTION("synthetic violation fires")
    {
        qergo::MarkovInputs bad;
        bad.exceed_fraction = 0.9;
        bad.mean = 0.1;
        bad.mean_std_error = 0.0;
        bad.count = 10'000;
        CHECK_FALSE(qergo::markov_check(bad, 1.0));
    }
    SECTION("threshold must be positive")
    {
        CHECK_THROWS_AS(qergo::markov_check(xs, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(qergo::markov_check(xs, -1.0), std::invalid_argument);
    }
}

TEST_CASE("normality fractions at the extremes", "[montecarlo]")
{
    auto c = small_config();
    c.trials = 20;
    SECTION("huge epsilon")
    {
        c.params.epsilon = 1e6;
        const auto n = qergo::normality_fraction(c);
        CHECK(n.sufficient_fraction() == 1.0);
        REQUIRE(n.direct_fraction());
        CHECK(*n.direct_fraction() == 1.0);
        CHECK(n.sufficient_ci.hi == 1.0);
    }
    SECTION("tiny epsilon")
    {
        c.params.epsilon = 1e-12;
        const auto n = qergo::normality_fraction(c);
        CHECK(n.sufficient_fraction() == 0.0);
        CHECK(n.implication_violations == 0);
        CHECK(n.sufficient_ci.lo == 0.0);
    }
    SECTION("rescaled rational clock")
    {
        c.spectrum = qergo::SpectrumSpec::from_levels(
            {{qergo::Rational(0), 3}, {qergo::Rational(1, 2), 2}, {qergo::Rational(2), 3}});
        c.params.epsilon = 5.0;
        const auto r = qergo::run_experiment(c);
        CHECK(r.clock_rescaled);
        CHECK(r.normality.implication_violations == 0);
    }
}

TEST_CASE("Wilson interval", "[montecarlo]")
{
    const auto all = qergo::stats::wilson_interval(20, 20);
    CHECK(all.hi == 1.0);
    CHECK(all.lo > 0.8);
    const auto half = qergo::stats::wilson_interval(50, 100);
    CHECK_THAT(half.lo + half.hi, WithinAbs(1.0, 1e-12));
    CHECK_THAT(half.hi - half.lo, WithinAbs(0.1924, 5e-4));
}
