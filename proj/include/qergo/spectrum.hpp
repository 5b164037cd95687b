#pragma once

/**
 * @file spectrum.hpp
 * @brief Exact spectra with degeneracies, and their gap / energy-sum structures.
 *
 * Level indices are 0-based in code. Reports (io.hpp) print them 1-based.
 *
 * Gap structure: ordered pairs (a, b) grouped by E_b - E_a, negative gaps kept
 * as their own groups. Sum structure: ordered pairs (a, c) grouped by E_a + E_c,
 * diagonal pairs (a, a) included.
 */

#include "qergo/rational.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qergo {

struct Level {
    Rational energy;
    std::size_t degeneracy = 1;
};

/// Distinct exact eigenvalues, sorted ascending, each with its multiplicity.
class SpectrumSpec {
public:
    SpectrumSpec() = default;

    /// Validates and canonicalizes; throws std::invalid_argument on bad levels.
    static SpectrumSpec from_levels(std::vector<Level> levels, bool approximate = false)
    {
        if(levels.empty()) {
            throw std::invalid_argument("spectrum must contain at least one level");
        }
        for(const auto& l : levels) {
            if(l.degeneracy == 0) {
                throw std::invalid_argument("non-positive degeneracy for energy " + to_string(l.energy));
            }
        }
        std::sort(levels.begin(), levels.end(),
                  [](const Level& a, const Level& b) { return a.energy < b.energy; });
        for(std::size_t i = 1; i < levels.size(); ++i) {
            if(levels[i].energy == levels[i - 1].energy) {
                throw std::invalid_argument("duplicate energy value " + to_string(levels[i].energy));
            }
        }
        SpectrumSpec spec;
        spec.levels_ = std::move(levels);
        spec.approximate_ = approximate;
        spec.offsets_.reserve(spec.levels_.size() + 1);
        std::size_t acc = 0;
        for(const auto& l : spec.levels_) {
            spec.offsets_.push_back(acc);
            acc += l.degeneracy;
        }
        spec.offsets_.push_back(acc);
        return spec;
    }

    /// Non-degenerate spectrum from integer energies.
    static SpectrumSpec from_integers(std::span<const std::int64_t> energies)
    {
        std::vector<Level> levels;
        levels.reserve(energies.size());
        for(auto e : energies) {
            levels.push_back({Rational(e), 1});
        }
        return from_levels(std::move(levels));
    }

    const std::vector<Level>& levels() const noexcept { return levels_; }
    const Level& level(std::size_t alpha) const { return levels_.at(alpha); }

    /// D_E
    std::size_t level_count() const noexcept { return levels_.size(); }
    /// D
    std::size_t dimension() const noexcept { return offsets_.empty() ? 0 : offsets_.back(); }

    /// First coordinate of shell alpha in the block basis.
    std::size_t shell_offset(std::size_t alpha) const { return offsets_.at(alpha); }
    std::size_t shell_size(std::size_t alpha) const { return levels_.at(alpha).degeneracy; }

    /// True when energies came from snapped floating-point input.
    bool approximate() const noexcept { return approximate_; }

    bool all_integer() const
    {
        return std::all_of(levels_.begin(), levels_.end(),
                           [](const Level& l) { return is_integer(l.energy); });
    }

    std::vector<double> energies_as_double() const
    {
        std::vector<double> out;
        out.reserve(levels_.size());
        for(const auto& l : levels_) {
            out.push_back(to_double(l.energy));
        }
        return out;
    }

    friend bool operator==(const SpectrumSpec& a, const SpectrumSpec& b)
    {
        if(a.levels_.size() != b.levels_.size()) {
            return false;
        }
        for(std::size_t i = 0; i < a.levels_.size(); ++i) {
            if(a.levels_[i].energy != b.levels_[i].energy ||
               a.levels_[i].degeneracy != b.levels_[i].degeneracy) {
                return false;
            }
        }
        return true;
    }

private:
    std::vector<Level> levels_;
    std::vector<std::size_t> offsets_;
    bool approximate_ = false;
};

/// Float-input mode: snaps each energy to the nearest multiple of 1/denominator.
/// The result is flagged approximate.
inline SpectrumSpec spectrum_from_floats(std::span<const double> energies,
                                         std::span<const std::size_t> degeneracies,
                                         std::int64_t denominator)
{
    if(energies.size() != degeneracies.size()) {
        throw std::invalid_argument("energies and degeneracies differ in length");
    }
    std::vector<Level> levels;
    levels.reserve(energies.size());
    for(std::size_t i = 0; i < energies.size(); ++i) {
        levels.push_back({snap_to_denominator(energies[i], denominator), degeneracies[i]});
    }
    return SpectrumSpec::from_levels(std::move(levels), true);
}

struct IndexPair {
    std::size_t first = 0;
    std::size_t second = 0;
    friend bool operator==(const IndexPair&, const IndexPair&) = default;
};

/// All ordered level pairs sharing one gap (or sum) value.
struct PairGroup {
    Rational value;
    std::vector<IndexPair> pairs;
    std::size_t count() const noexcept { return pairs.size(); }
};

struct GapStructure {
    std::vector<Rational> energies;
    std::vector<PairGroup> groups; ///< ascending by gap value
    std::size_t max_degeneracy = 0; ///< D_G, over nonzero gaps; 0 for one level

    const PairGroup* find(const Rational& gap) const
    {
        auto it = std::lower_bound(groups.begin(), groups.end(), gap,
                                   [](const PairGroup& g, const Rational& v) { return g.value < v; });
        return (it != groups.end() && it->value == gap) ? &*it : nullptr;
    }

    std::size_t vanishing_count() const
    {
        const PairGroup* g = find(Rational(0));
        return g ? g->count() : 0;
    }
};

struct SumStructure {
    std::vector<Rational> energies;
    std::vector<PairGroup> groups; ///< ascending by sum value
    std::size_t max_degeneracy = 0; ///< D_F

    const PairGroup* find(const Rational& sum) const
    {
        auto it = std::lower_bound(groups.begin(), groups.end(), sum,
                                   [](const PairGroup& g, const Rational& v) { return g.value < v; });
        return (it != groups.end() && it->value == sum) ? &*it : nullptr;
    }
};

namespace detail {

template <class Combine>
std::vector<PairGroup> group_pairs(const SpectrumSpec& spec, Combine combine)
{
    std::map<Rational, std::vector<IndexPair>> buckets;
    const std::size_t n = spec.level_count();
    for(std::size_t a = 0; a < n; ++a) {
        for(std::size_t b = 0; b < n; ++b) {
            buckets[combine(spec.level(a).energy, spec.level(b).energy)].push_back({a, b});
        }
    }
    std::vector<PairGroup> out;
    out.reserve(buckets.size());
    for(auto& [value, pairs] : buckets) {
        out.push_back({value, std::move(pairs)});
    }
    return out;
}

inline std::vector<Rational> energies_of(const SpectrumSpec& spec)
{
    std::vector<Rational> out;
    out.reserve(spec.level_count());
    for(const auto& l : spec.levels()) {
        out.push_back(l.energy);
    }
    return out;
}

} // namespace detail

inline GapStructure gap_structure(const SpectrumSpec& spec)
{
    GapStructure gs;
    gs.energies = detail::energies_of(spec);
    gs.groups = detail::group_pairs(spec, [](const Rational& ea, const Rational& eb) { return eb - ea; });
    for(const auto& g : gs.groups) {
        if(g.value != 0) {
            gs.max_degeneracy = std::max(gs.max_degeneracy, g.count());
        }
    }
    return gs;
}

inline SumStructure sum_structure(const SpectrumSpec& spec)
{
    SumStructure ss;
    ss.energies = detail::energies_of(spec);
    ss.groups = detail::group_pairs(spec, [](const Rational& ea, const Rational& ec) { return ea + ec; });
    for(const auto& g : ss.groups) {
        ss.max_degeneracy = std::max(ss.max_degeneracy, g.count());
    }
    return ss;
}

/// Gap and sum structures of one spectrum, computed together.
struct SpectralStructure {
    GapStructure gaps;
    SumStructure sums;

    std::size_t gap_degeneracy() const noexcept { return gaps.max_degeneracy; } ///< D_G
    std::size_t sum_degeneracy() const noexcept { return sums.max_degeneracy; } ///< D_F
};

inline SpectralStructure analyze(const SpectrumSpec& spec)
{
    return {gap_structure(spec), sum_structure(spec)};
}

struct Classification {
    bool non_degenerate = false;
    bool non_resonant = false;
};

inline Classification classify(const SpectrumSpec& spec, const GapStructure& gaps)
{
    // A single level has no nonzero gap, so it is vacuously non-resonant.
    return {spec.level_count() == spec.dimension(), gaps.max_degeneracy <= 1};
}

inline Classification classify(const SpectrumSpec& spec)
{
    return classify(spec, gap_structure(spec));
}

enum class Verdict { holds, violated, inapplicable };

inline const char* to_string(Verdict v)
{
    switch(v) {
    case Verdict::holds: return "holds";
    case Verdict::violated: return "violated";
    case Verdict::inapplicable: return "inapplicable";
    }
    return "?";
}

/// Non-resonance implies D_F = 2 (read as max_m f_m = 2; diagonal-only
/// sums 2E_a with no partner have f_m = 1).
inline Verdict appendix_a_check(const SpectrumSpec& spec)
{
    if(spec.level_count() < 2) {
        return Verdict::inapplicable;
    }
    const auto s = analyze(spec);
    if(s.gaps.max_degeneracy != 1) {
        return Verdict::holds;
    }
    return s.sums.max_degeneracy == 2 ? Verdict::holds : Verdict::violated;
}

/// Energies mapped to non-negative integers: n_a = (E_a - E_min) * lcd.
/// Exact long-time averages are taken on this clock, which rescales time
/// without changing any infinite-time average.
struct IntegerClock {
    BigInt scale = 1;     ///< least common denominator of the energies
    Rational shift = 0;   ///< E_min
    std::vector<std::int64_t> frequencies;
    std::int64_t bandwidth = 0; ///< E_max - E_min on the clock

    bool rescaled() const { return scale != 1; }
};

inline IntegerClock integer_clock(const SpectrumSpec& spec)
{
    IntegerClock clock;
    for(const auto& l : spec.levels()) {
        clock.scale = boost::multiprecision::lcm(clock.scale, boost::multiprecision::denominator(l.energy));
    }
    clock.shift = spec.levels().front().energy;
    clock.frequencies.reserve(spec.level_count());
    for(const auto& l : spec.levels()) {
        const Rational n = (l.energy - clock.shift) * Rational(clock.scale);
        clock.frequencies.push_back(to_int64(boost::multiprecision::numerator(n)));
    }
    clock.bandwidth = clock.frequencies.back();
    return clock;
}

/// The spectrum expressed on its integer clock (same degeneracies).
inline SpectrumSpec to_integer_spectrum(const SpectrumSpec& spec)
{
    const auto clock = integer_clock(spec);
    std::vector<Level> levels;
    levels.reserve(spec.level_count());
    for(std::size_t a = 0; a < spec.level_count(); ++a) {
        levels.push_back({Rational(clock.frequencies[a]), spec.level(a).degeneracy});
    }
    return SpectrumSpec::from_levels(std::move(levels), spec.approximate());
}

} // namespace qergo
