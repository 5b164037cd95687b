#pragma once

/**
 * @file io.hpp
 * @brief JSON documents: spectrum input and structure report, states, L
 *        breakdowns, moment reports, experiment config and report.
 *
 * Level indices in every document are 1-based.
 */

#include "qergo/montecarlo.hpp"
#include "qergo/precision.hpp"
#include "qergo/randomness.hpp"
#include "qergo/spectrum.hpp"
#include "qergo/typicality.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

namespace qergo::io {

using json = nlohmann::ordered_json;

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if(!in) {
        throw ParseError("cannot open '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline json parse_json(std::string_view text, std::string_view what)
{
    if(text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        throw ParseError(std::string(what) + ": empty document");
    }
    try {
        return json::parse(text);
    } catch(const json::parse_error& e) {
        throw ParseError(std::string(what) + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Spectrum
// ---------------------------------------------------------------------------

/// Spectrum from {"levels": [{"energy": "<int or p/q>", "degeneracy": n}]}.
/// JSON floating-point energies are accepted only with a snapping denominator,
/// and mark the spectrum approximate.
inline SpectrumSpec spectrum_from_json(const json& doc, std::optional<std::int64_t> snap_denominator = std::nullopt)
{
    if(!doc.is_object() || !doc.contains("levels") || !doc["levels"].is_array()) {
        throw ParseError("spectrum: expected an object with a \"levels\" array");
    }
    std::vector<Level> levels;
    bool approximate = false;
    for(const auto& entry : doc["levels"]) {
        if(!entry.is_object() || !entry.contains("energy")) {
            throw ParseError("spectrum: every level needs an \"energy\"");
        }
        Level level;
        const auto& e = entry["energy"];
        if(e.is_string()) {
            level.energy = parse_rational(e.get<std::string>());
        } else if(e.is_number_integer()) {
            level.energy = Rational(e.get<std::int64_t>());
        } else if(e.is_number_float()) {
            if(!snap_denominator) {
                throw ParseError("spectrum: floating-point energy " + e.dump() +
                                 " needs a snapping denominator (approximate mode)");
            }
            level.energy = snap_to_denominator(e.get<double>(), *snap_denominator);
            approximate = true;
        } else {
            throw ParseError("spectrum: malformed energy " + e.dump());
        }
        if(entry.contains("degeneracy")) {
            const auto& g = entry["degeneracy"];
            if(!g.is_number_integer() || g.get<std::int64_t>() <= 0) {
                throw ParseError("spectrum: non-positive or malformed degeneracy " + g.dump() + " for energy " +
                                 to_string(level.energy));
            }
            level.degeneracy = g.get<std::size_t>();
        }
        levels.push_back(std::move(level));
    }
    try {
        return SpectrumSpec::from_levels(std::move(levels), approximate);
    } catch(const std::invalid_argument& err) {
        throw ParseError(std::string("spectrum: ") + err.what());
    }
}

inline SpectrumSpec parse_spectrum(std::string_view text, std::optional<std::int64_t> snap_denominator = std::nullopt)
{
    return spectrum_from_json(parse_json(text, "spectrum"), snap_denominator);
}

inline json spectrum_to_json(const SpectrumSpec& spec)
{
    json levels = json::array();
    for(const auto& l : spec.levels()) {
        levels.push_back({{"energy", to_string(l.energy)}, {"degeneracy", l.degeneracy}});
    }
    return {{"levels", levels}};
}

inline json groups_to_json(const std::vector<PairGroup>& groups)
{
    json out = json::array();
    for(const auto& g : groups) {
        json pairs = json::array();
        for(const auto& p : g.pairs) {
            pairs.push_back({p.first + 1, p.second + 1});
        }
        out.push_back({{"value", to_string(g.value)}, {"count", g.count()}, {"pairs", pairs}});
    }
    return out;
}

inline json spectrum_report(const SpectrumSpec& spec)
{
    const auto s = analyze(spec);
    const auto cls = classify(spec, s.gaps);
    return {
        {"D", spec.dimension()},
        {"D_E", spec.level_count()},
        {"D_G", s.gap_degeneracy()},
        {"D_F", s.sum_degeneracy()},
        {"non_degenerate", cls.non_degenerate},
        {"non_resonant", cls.non_resonant},
        {"approximate", spec.approximate()},
        {"nonresonant_implies_DF_2", to_string(appendix_a_check(spec))},
        {"levels", spectrum_to_json(spec)["levels"]},
        {"gaps", groups_to_json(s.gaps.groups)},
        {"sums", groups_to_json(s.sums.groups)},
    };
}

// ---------------------------------------------------------------------------
// States
// ---------------------------------------------------------------------------

/// {"amplitudes": [[re, im], ...]} or {"amplitudes": [re, ...]}.
inline Eigen::VectorXcd state_from_json(const json& doc)
{
    if(!doc.is_object() || !doc.contains("amplitudes") || !doc["amplitudes"].is_array()) {
        throw ParseError("state: expected an object with an \"amplitudes\" array");
    }
    const auto& a = doc["amplitudes"];
    Eigen::VectorXcd v(static_cast<Eigen::Index>(a.size()));
    for(std::size_t i = 0; i < a.size(); ++i) {
        const auto& x = a[i];
        if(x.is_number()) {
            v(static_cast<Eigen::Index>(i)) = cplx(x.get<double>(), 0.0);
        } else if(x.is_array() && x.size() == 2 && x[0].is_number() && x[1].is_number()) {
            v(static_cast<Eigen::Index>(i)) = cplx(x[0].get<double>(), x[1].get<double>());
        } else {
            throw ParseError("state: malformed amplitude " + x.dump());
        }
    }
    return v;
}

inline Eigen::VectorXcd parse_state(std::string_view text)
{
    return state_from_json(parse_json(text, "state"));
}

inline json state_to_json(const Eigen::VectorXcd& v)
{
    json a = json::array();
    for(Eigen::Index i = 0; i < v.size(); ++i) {
        a.push_back({v(i).real(), v(i).imag()});
    }
    return {{"amplitudes", a}};
}

// ---------------------------------------------------------------------------
// Typicality and randomness reports
// ---------------------------------------------------------------------------

inline json to_json(const LBreakdown& b)
{
    return {
        {"d", b.rank},
        {"D", b.dimension},
        {"l_total", b.l_total},
        {"term_sq", b.term_sq},
        {"l2", b.l2},
        {"l3_nr", b.l3_nr},
        {"l3_r", b.l3_r},
        {"offdiag_sum", b.offdiag_sum},
        {"diag_dev_sq", b.diag_dev_sq},
        {"time_avg_weight", b.diag_sum},
        {"l3_r_imag", b.l3_r_imag},
        {"split_residual", b.split_residual()},
        {"regroup_residual", b.regroup_residual()},
    };
}

inline json to_json(const stats::GatedEstimate& g)
{
    return {{"name", g.name},
            {"estimate", g.estimate},
            {"stderr", g.std_error},
            {"target", g.target},
            {"gated", g.gated},
            {"pass", g.pass}};
}

inline json to_json(const MomentReport& r)
{
    json rows = json::array();
    for(const auto& g : r.rows) {
        rows.push_back(to_json(g));
    }
    json out = {{"samples", r.samples}, {"sufficient", r.sufficient}, {"quantities", rows}};
    if(!r.sufficient) {
        out["warning"] = "insufficient samples: gates skipped";
    }
    return out;
}

inline json to_json(const stats::Summary& s)
{
    return {{"count", s.count}, {"mean", s.mean},       {"stderr", s.mean_std_error},
            {"variance", s.variance}, {"min", s.min}, {"max", s.max}};
}

inline json to_json(const Lemma1Stats& s)
{
    return {{"D", s.dimension},
            {"d", s.rank},
            {"mean_max_offdiag", {{"estimate", s.max_offdiag.mean}, {"stderr", s.max_offdiag.mean_std_error},
                                  {"target", s.offdiag_target}, {"pass", s.max_offdiag.mean < s.offdiag_target}}},
            {"mean_max_diag_dev", {{"estimate", s.max_diag_dev.mean}, {"stderr", s.max_diag_dev.mean_std_error},
                                   {"target", s.diag_target}, {"pass", s.max_diag_dev.mean < s.diag_target}}}};
}

inline const char* to_string(LogBase b)
{
    return b == LogBase::natural ? "e" : "10";
}

inline LogBase parse_log_base(std::string_view s)
{
    if(s == "e" || s == "ln" || s == "natural") {
        return LogBase::natural;
    }
    if(s == "10") {
        return LogBase::ten;
    }
    throw ParseError("log base must be 'e' or '10', got '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Experiment config / report
// ---------------------------------------------------------------------------

namespace detail {

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed, std::string_view where)
{
    for(auto it = obj.begin(); it != obj.end(); ++it) {
        if(!allowed.count(it.key())) {
            throw ParseError(std::string(where) + ": unknown key \"" + it.key() + "\"");
        }
    }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback)
{
    if(!obj.contains(key)) {
        return fallback;
    }
    try {
        return obj.at(key).get<T>();
    } catch(const json::exception& e) {
        throw ParseError(std::string("config: bad value for \"") + key + "\": " + e.what());
    }
}

} // namespace detail

/// Parses a run config. "spectrum_file" / "state_file" resolve against base_dir.
inline ExperimentConfig config_from_json(const json& doc, const std::filesystem::path& base_dir = {})
{
    if(!doc.is_object()) {
        throw ParseError("config: expected an object");
    }
    detail::reject_unknown(doc,
                           {"spectrum", "spectrum_file", "dims", "state", "fixed_state", "state_file", "trials", "seed",
                            "params", "log_base", "direct_check", "time_grid", "retain_limit", "threads", "gates"},
                           "config");
    ExperimentConfig c;
    if(doc.contains("spectrum")) {
        c.spectrum = spectrum_from_json(doc["spectrum"]);
    } else if(doc.contains("spectrum_file")) {
        c.spectrum = parse_spectrum(read_file(base_dir / doc["spectrum_file"].get<std::string>()));
    } else {
        throw ParseError("config: needs \"spectrum\" or \"spectrum_file\"");
    }
    if(!doc.contains("dims") || !doc["dims"].is_array()) {
        throw ParseError("config: needs a \"dims\" array");
    }
    for(const auto& d : doc["dims"]) {
        if(!d.is_number_integer() || d.get<std::int64_t>() <= 0) {
            throw ParseError("config: cell ranks must be positive integers");
        }
        c.dims.push_back(d.get<std::size_t>());
    }
    const auto policy = detail::get_or<std::string>(doc, "state", "fixed");
    if(policy == "fixed") {
        c.state_policy = StatePolicy::fixed;
    } else if(policy == "haar_per_trial") {
        c.state_policy = StatePolicy::haar_per_trial;
    } else {
        throw ParseError("config: state must be \"fixed\" or \"haar_per_trial\"");
    }
    if(doc.contains("fixed_state")) {
        c.fixed_state = state_from_json(doc["fixed_state"]);
    } else if(doc.contains("state_file")) {
        c.fixed_state = parse_state(read_file(base_dir / doc["state_file"].get<std::string>()));
    }
    c.trials = detail::get_or<std::size_t>(doc, "trials", c.trials);
    c.seed = detail::get_or<std::uint64_t>(doc, "seed", c.seed);
    if(doc.contains("params")) {
        const auto& p = doc["params"];
        detail::reject_unknown(p, {"epsilon", "delta", "delta_prime", "C"}, "config.params");
        c.params.epsilon = detail::get_or<double>(p, "epsilon", c.params.epsilon);
        c.params.delta = detail::get_or<double>(p, "delta", c.params.delta);
        c.params.delta_prime = detail::get_or<double>(p, "delta_prime", c.params.delta_prime);
        c.params.C = detail::get_or<double>(p, "C", c.params.C);
    }
    c.log_base = parse_log_base(detail::get_or<std::string>(doc, "log_base", "e"));
    c.direct_check = detail::get_or<bool>(doc, "direct_check", c.direct_check);
    c.time_grid = detail::get_or<std::size_t>(doc, "time_grid", c.time_grid);
    c.retain_limit = detail::get_or<std::size_t>(doc, "retain_limit", c.retain_limit);
    c.threads = detail::get_or<unsigned>(doc, "threads", c.threads);
    if(doc.contains("gates")) {
        const auto& g = doc["gates"];
        detail::reject_unknown(g, {"mean_bound", "markov", "chains", "implication", "identities"}, "config.gates");
        c.gates.mean_bound = detail::get_or<bool>(g, "mean_bound", c.gates.mean_bound);
        c.gates.markov = detail::get_or<bool>(g, "markov", c.gates.markov);
        c.gates.chains = detail::get_or<bool>(g, "chains", c.gates.chains);
        c.gates.implication = detail::get_or<bool>(g, "implication", c.gates.implication);
        c.gates.identities = detail::get_or<bool>(g, "identities", c.gates.identities);
    }
    try {
        c.validate();
    } catch(const std::invalid_argument& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    return c;
}

inline ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {})
{
    return config_from_json(parse_json(text, "config"), base_dir);
}

inline json config_to_json(const ExperimentConfig& c)
{
    json out = {
        {"spectrum", spectrum_to_json(c.spectrum)},
        {"dims", c.dims},
        {"state", c.state_policy == StatePolicy::fixed ? "fixed" : "haar_per_trial"},
        {"trials", c.trials},
        {"seed", c.seed},
        {"params",
         {{"epsilon", c.params.epsilon}, {"delta", c.params.delta}, {"delta_prime", c.params.delta_prime},
          {"C", c.params.C}}},
        {"log_base", to_string(c.log_base)},
        {"direct_check", c.direct_check},
        {"time_grid", c.time_grid},
        {"retain_limit", c.retain_limit},
        {"threads", c.threads},
        {"gates",
         {{"mean_bound", c.gates.mean_bound}, {"markov", c.gates.markov}, {"chains", c.gates.chains},
          {"implication", c.gates.implication}, {"identities", c.gates.identities}}},
    };
    if(c.fixed_state) {
        out["fixed_state"] = state_to_json(*c.fixed_state);
    }
    return out;
}

inline json interval_to_json(const stats::Interval& i)
{
    return json::array({i.lo, i.hi});
}

inline json report_to_json(const ExperimentReport& r)
{
    json cells = json::array();
    for(std::size_t v = 0; v < r.cells.size(); ++v) {
        const auto& c = r.cells[v];
        cells.push_back({{"nu", v + 1},
                         {"d", c.rank},
                         {"L", to_json(c.l_total)},
                         {"threshold_B", c.threshold},
                         {"prob_L_gt_B", c.prob_exceed},
                         {"prob_L_ge_B", c.prob_at_least},
                         {"markov_pass", c.markov_pass},
                         {"mean_L_bound", c.mean_bound},
                         {"slack", c.slack}});
    }
    const auto& n = r.normality;
    json normality = {{"trials", n.trials},
                      {"sufficient_fraction", n.sufficient_fraction()},
                      {"sufficient_ci95", interval_to_json(n.sufficient_ci)},
                      {"implication_violations", n.implication_violations}};
    if(n.direct_fraction()) {
        normality["direct_fraction"] = *n.direct_fraction();
        normality["direct_ci95"] = interval_to_json(*n.direct_ci);
    }
    json out = {
        {"D", r.dimension},
        {"D_E", r.level_count},
        {"D_G", r.gap_degeneracy},
        {"D_F", r.sum_degeneracy},
        {"trials", r.trials},
        {"seed", r.seed},
        {"clock_rescaled", r.clock_rescaled},
        {"time_grid", r.time_grid},
        {"cells", cells},
        {"ergodicity_violations", r.ergodicity_violations},
        {"l3r_bound_violations", r.l3r_bound_violations},
        {"max_identity_residual", r.max_identity_residual},
        {"max_l3r_imag", r.max_l3r_imag},
        {"normality", normality},
        {"gates", r.gates},
        {"all_pass", r.all_pass()},
    };
    json trials = json::array();
    for(const auto& t : r.records) {
        json tc = json::array();
        for(const auto& c : t.cells) {
            json b = to_json(c.breakdown);
            b["ergodicity_gap"] = c.ergodicity_gap;
            b["l3r_bound"] = c.l3r_bound;
            b["sufficient"] = c.sufficient;
            b["ergodic"] = c.ergodic;
            tc.push_back(std::move(b));
        }
        json tj = {{"trial", t.trial}, {"cells", tc}, {"all_sufficient", t.all_sufficient}};
        if(t.time_fraction) {
            tj["time_fraction"] = *t.time_fraction;
            tj["direct_normal"] = t.direct_normal;
        }
        trials.push_back(std::move(tj));
    }
    out["records"] = std::move(trials);
    return out;
}

/// Columnar per-trial dump: trial nu L bound sufficient ergodic.
inline void write_trial_table(std::ostream& os, const ExperimentReport& r)
{
    os << "# trial nu L l3r_bound threshold_B sufficient ergodic\n";
    const auto old = os.precision(17);
    for(const auto& t : r.records) {
        for(std::size_t v = 0; v < t.cells.size(); ++v) {
            const auto& c = t.cells[v];
            os << t.trial << ' ' << (v + 1) << ' ' << c.breakdown.l_total << ' ' << c.l3r_bound << ' ' << c.threshold
               << ' ' << (c.sufficient ? 1 : 0) << ' ' << (c.ergodic ? 1 : 0) << '\n';
        }
    }
    os.precision(old);
}

} // namespace qergo::io
