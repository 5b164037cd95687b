#pragma once

/**
 * @file typicality.hpp
 * @brief The long-time deviation functional L of a cell weight, evaluated
 *        exactly through the energy-sum structure, and the bounds built on it.
 *
 * With A_ab = <phi_a|P|phi_b> over the D_E unnormalized shell vectors,
 *
 *   L = mean_t (||P psi(t)||^2 - d/D)^2
 *     = (d/D)^2 + L2 + L3_nr + L3_r
 *     = sum_{a!=b} |A_ab|^2 + (sum_a A_aa - d/D)^2 + L3_r,
 *
 *   L2    = -2 (d/D) sum_a A_aa
 *   L3_nr = sum_{a!=b} |A_ab|^2 + (sum_a A_aa)^2
 *   L3_r  = sum_m sum_{(a,s) in F_m} sum_{(b,g) in F_m, (b,g) != (a,s),(s,a)} A_ab A_sg
 *
 * F_m groups ordered level pairs by their energy sum. When every F_m has at
 * most two members (non-resonant spectra) the L3_r sum is empty.
 */

#include "qergo/dynamics.hpp"
#include "qergo/randomness.hpp"
#include "qergo/spectrum.hpp"

#include <concepts>
#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace qergo {

/// A_ab = <phi_a|P|phi_b>, D_E x D_E Hermitian.
inline Eigen::MatrixXcd shell_overlap(const ShellState& state, const Projection& cell)
{
    const auto& spec = state.spec();
    if(cell.dimension() != spec.dimension()) {
        throw std::invalid_argument("projection dimension does not match the state");
    }
    const auto n = static_cast<Eigen::Index>(spec.level_count());
    Eigen::MatrixXcd b(static_cast<Eigen::Index>(cell.rank()), n);
    for(std::size_t a = 0; a < spec.level_count(); ++a) {
        const auto rows = cell.basis.middleRows(static_cast<Eigen::Index>(spec.shell_offset(a)),
                                                static_cast<Eigen::Index>(spec.shell_size(a)));
        b.col(static_cast<Eigen::Index>(a)) = rows.adjoint() * state.shell_block(a);
    }
    return b.adjoint() * b;
}

struct LBreakdown {
    double l_total = 0.0;
    double term_sq = 0.0;     ///< (d/D)^2
    double l2 = 0.0;          ///< degeneracy term
    double l3_nr = 0.0;       ///< non-resonant part
    double l3_r = 0.0;        ///< resonant part
    double offdiag_sum = 0.0; ///< sum_{a!=b} |A_ab|^2
    double diag_dev_sq = 0.0; ///< (sum_a A_aa - d/D)^2
    double diag_sum = 0.0;    ///< sum_a A_aa, the long-time cell weight
    double l3_r_imag = 0.0;   ///< imaginary residue of the resonant sum
    std::size_t rank = 0;
    std::size_t dimension = 0;

    double split_residual() const { return std::abs(l_total - (term_sq + l2 + l3_nr + l3_r)); }
    double regroup_residual() const { return std::abs(l_total - (offdiag_sum + diag_dev_sq + l3_r)); }
};

inline constexpr double identity_tolerance = 1e-10;

namespace detail {

inline void check_structure(const ShellState& state, const std::vector<Rational>& energies)
{
    const auto& spec = state.spec();
    bool ok = energies.size() == spec.level_count();
    for(std::size_t a = 0; ok && a < energies.size(); ++a) {
        ok = energies[a] == spec.level(a).energy;
    }
    if(!ok) {
        throw std::invalid_argument("spectral structure was computed from a different spectrum");
    }
}

} // namespace detail

/// Resonant sum over the energy-sum groups; returns the complex value.
inline cplx resonant_sum(const Eigen::MatrixXcd& overlap, const SumStructure& sums)
{
    cplx acc(0.0, 0.0);
    for(const auto& group : sums.groups) {
        if(group.count() <= 2) {
            continue;
        }
        for(const auto& as : group.pairs) {
            for(const auto& bg : group.pairs) {
                if((bg.first == as.first && bg.second == as.second) ||
                   (bg.first == as.second && bg.second == as.first)) {
                    continue;
                }
                acc += overlap(static_cast<Eigen::Index>(as.first), static_cast<Eigen::Index>(bg.first)) *
                       overlap(static_cast<Eigen::Index>(as.second), static_cast<Eigen::Index>(bg.second));
            }
        }
    }
    return acc;
}

inline double compute_L3r(const ShellState& state, const Projection& cell, const SumStructure& sums)
{
    detail::check_structure(state, sums.energies);
    return resonant_sum(shell_overlap(state, cell), sums).real();
}

inline LBreakdown breakdown_from_overlap(const Eigen::MatrixXcd& overlap, const SumStructure& sums, std::size_t rank,
                                         std::size_t dimension)
{
    LBreakdown out;
    out.rank = rank;
    out.dimension = dimension;
    const double ratio = static_cast<double>(rank) / static_cast<double>(dimension);
    double diag = 0.0;
    double off = 0.0;
    for(Eigen::Index b = 0; b < overlap.cols(); ++b) {
        for(Eigen::Index a = 0; a < overlap.rows(); ++a) {
            if(a == b) {
                diag += overlap(a, a).real();
            } else {
                off += std::norm(overlap(a, b));
            }
        }
    }
    const cplx res = resonant_sum(overlap, sums);
    out.diag_sum = diag;
    out.offdiag_sum = off;
    out.diag_dev_sq = (diag - ratio) * (diag - ratio);
    out.term_sq = ratio * ratio;
    out.l2 = -2.0 * ratio * diag;
    out.l3_nr = off + diag * diag;
    out.l3_r = res.real();
    out.l3_r_imag = res.imag();
    out.l_total = out.offdiag_sum + out.diag_dev_sq + out.l3_r;
    return out;
}

inline LBreakdown compute_L_exact(const ShellState& state, const Projection& cell, const SpectralStructure& structure)
{
    detail::check_structure(state, structure.gaps.energies);
    detail::check_structure(state, structure.sums.energies);
    return breakdown_from_overlap(shell_overlap(state, cell), structure.sums, cell.rank(), cell.dimension());
}

/// (D_F - 2) (sum_a <phi_a|P|phi_a>)^2, an upper bound on L3_r.
/// A single-level spectrum has D_F = 1 and no resonant term; the bound is 0 there.
inline double l3r_bound(double diag_sum, std::size_t sum_degeneracy)
{
    const double excess = sum_degeneracy > 2 ? static_cast<double>(sum_degeneracy - 2) : 0.0;
    return excess * diag_sum * diag_sum;
}

inline double l3r_bound(const ShellState& state, const Projection& cell, std::size_t sum_degeneracy)
{
    return l3r_bound(exact_time_avg_weight(state, cell), sum_degeneracy);
}

/// |long-time weight - d/D|^2, bounded above by L.
inline double ergodicity_gap(const ShellState& state, const Projection& cell)
{
    const double dev =
        exact_time_avg_weight(state, cell) - static_cast<double>(cell.rank()) / static_cast<double>(cell.dimension());
    return dev * dev;
}

// ---------------------------------------------------------------------------
// Thresholds and theorem-level conditions
// ---------------------------------------------------------------------------

template <class Real>
struct BasicTheoremParams {
    Real epsilon = 1;
    Real delta = 1;
    Real delta_prime = 1;
    Real cells = 1; ///< M
    Real C = 2;

    void validate() const
    {
        if(!(epsilon > 0)) {
            throw std::invalid_argument("epsilon must be > 0");
        }
        if(!(delta > 0 && delta <= 1)) {
            throw std::invalid_argument("delta must lie in (0, 1]");
        }
        if(!(delta_prime > 0 && delta_prime <= 1)) {
            throw std::invalid_argument("delta' must lie in (0, 1]");
        }
        if(!(cells >= 1)) {
            throw std::invalid_argument("M must be >= 1");
        }
        if(!(C > 1)) {
            throw std::invalid_argument("C must be > 1");
        }
    }
};

using TheoremParams = BasicTheoremParams<double>;

/// B = delta' (eps/M)^2 (d/D)
template <class Real>
Real sufficient_threshold(const BasicTheoremParams<Real>& p, const Real& d, const Real& D)
{
    const Real r = p.epsilon / p.cells;
    return p.delta_prime * r * r * (d / D);
}

inline bool sufficient_condition(double l_total, const TheoremParams& p, std::size_t d, std::size_t D)
{
    p.validate();
    return l_total <= sufficient_threshold(p, static_cast<double>(d), static_cast<double>(D));
}

/// gap <= (eps/M)^2 (d/D)
inline bool ergodicity_criterion(double gap, const TheoremParams& p, std::size_t d, std::size_t D)
{
    p.validate();
    const double r = p.epsilon / p.cells;
    return gap <= r * r * static_cast<double>(d) / static_cast<double>(D);
}

/// 10 log(D)/D + (D_F - 2)(d/D)^2
template <class Real>
    requires(!std::integral<Real>)
Real mean_L_bound(const Real& D, const Real& d, const Real& sum_degeneracy, LogBase base = LogBase::natural)
{
    if(!(d >= 1 && d <= D)) {
        throw std::invalid_argument("mean L bound needs 1 <= d <= D");
    }
    const Real ratio = d / D;
    return Real(10) * log_in(D, base) / D + (sum_degeneracy - 2) * ratio * ratio;
}

inline double mean_L_bound(std::size_t D, std::size_t d, std::size_t sum_degeneracy, LogBase base = LogBase::natural)
{
    return mean_L_bound<double>(static_cast<double>(D), static_cast<double>(d), static_cast<double>(sum_degeneracy),
                                base);
}

template <class Real>
struct TheoremCondition {
    bool holds = false;
    Real lhs;       ///< max{C, K} log D / D
    Real rhs_mid;   ///< d / D
    Real rhs_hi;    ///< 1 / C
    Real bracket;   ///< K = (10 M^2 / (delta delta' eps^2)) [1 + (D_F-2) d^2 / (10 D log D)]
    Real log_ratio; ///< log D / D
};

/// max{C, K} log D / D < d/D < 1/C
template <class Real>
TheoremCondition<Real> theorem_condition(const BasicTheoremParams<Real>& p, const Real& d, const Real& D,
                                         const Real& sum_degeneracy, LogBase base = LogBase::natural)
{
    p.validate();
    if(!(d >= 1 && D >= 2)) {
        throw std::invalid_argument("theorem condition needs d >= 1 and D >= 2");
    }
    const Real logD = log_in(D, base);
    TheoremCondition<Real> out;
    out.log_ratio = logD / D;
    out.rhs_mid = d / D;
    out.rhs_hi = Real(1) / p.C;
    out.bracket = Real(10) * p.cells * p.cells / (p.delta * p.delta_prime * p.epsilon * p.epsilon) *
                  (Real(1) + (sum_degeneracy - 2) * d * d / (Real(10) * D * logD));
    const Real factor = p.C > out.bracket ? p.C : out.bracket;
    out.lhs = factor * out.log_ratio;
    out.holds = out.lhs < out.rhs_mid && out.rhs_mid < out.rhs_hi;
    return out;
}

inline constexpr double default_impact_margin = 10.0;

/// D_F * margin < (10 log D / D) M^2, reading "<<" as a fixed margin factor.
template <class Real>
bool resonance_impact_small(const Real& D, const Real& cells, const Real& sum_degeneracy,
                            const Real& margin = Real(default_impact_margin), LogBase base = LogBase::natural)
{
    return sum_degeneracy * margin < Real(10) * log_in(D, base) / D * cells * cells;
}

/// C log D / D < d/D < 1/C. This ordering already implies log D / D < 1/C^2
/// and 9 d log D / D^2 < 9/C^3.
template <class Real>
bool lemma1_ordering(const Real& C, const Real& D, const Real& d, LogBase base = LogBase::natural)
{
    const Real ratio = d / D;
    return C * log_in(D, base) / D < ratio && ratio < Real(1) / C;
}

/// Supremum of admissible C: min(d / log D, D / d).
template <class Real>
Real c_crossover(const Real& D, const Real& d, LogBase base = LogBase::natural)
{
    const Real a = d / log_in(D, base);
    const Real b = D / d;
    return a < b ? a : b;
}

inline constexpr double admissible_c_resolution = 0.01;

/**
 * Largest C = (1 + resolution)^k, k >= 1, satisfying the lemma ordering, and,
 * when ensemble statistics are given, with both empirical expectations below
 * log D / D and 9 d log D / D^2. Empty when nothing qualifies.
 */
template <class Real>
std::optional<Real> find_admissible_C(const Real& D, const Real& d, LogBase base = LogBase::natural,
                                      const Lemma1Stats* stats = nullptr, double resolution = admissible_c_resolution)
{
    using std::floor;
    using std::log;
    using std::pow;
    if(!(D >= 2 && d >= 1) || !(d < D)) {
        return std::nullopt;
    }
    if(stats != nullptr && !stats->below_targets()) {
        return std::nullopt;
    }
    const Real sup = c_crossover(D, d, base);
    if(!(sup > 1)) {
        return std::nullopt;
    }
    const Real step = Real(1) + Real(resolution);
    Real k = floor(Real(log(sup)) / Real(log(step)));
    for(; k >= 1; k -= 1) {
        const Real c = pow(step, k);
        if(lemma1_ordering(c, D, d, base)) {
            return c;
        }
    }
    return std::nullopt;
}

} // namespace qergo
