#pragma once

/**
 * @file dynamics.hpp
 * @brief Energy-shell states, unitary evolution, cell weights and exact
 *        long-time averages on integer spectra.
 *
 * The energy eigenbasis is the coordinate basis, grouped by shell: shell a
 * occupies coordinates [offset(a), offset(a) + e_a). Measurement bases are
 * rotated instead of the state.
 *
 * For an integer spectrum every cell weight ||P psi(t)||^2 is a trigonometric
 * polynomial with integer frequencies of magnitude <= E_max - E_min, and its
 * square has frequencies <= 2 (E_max - E_min). Averaging such a polynomial over
 * t_j = 2 pi j / N with N = 2 F + 1 (F the largest frequency) returns the
 * infinite-time average exactly: no nonzero frequency aliases to 0 mod N.
 */

#include "qergo/randomness.hpp"
#include "qergo/spectrum.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace qergo {

inline constexpr double state_norm_tolerance = 1e-10;

/// Initial state resolved into its energy-shell components.
class ShellState {
public:
    ShellState() = default;

    ShellState(SpectrumSpec spec, Eigen::VectorXcd initial) : spec_(std::move(spec)), initial_(std::move(initial))
    {
        weights_.reserve(spec_.level_count());
        for(std::size_t a = 0; a < spec_.level_count(); ++a) {
            weights_.push_back(shell_block(a).squaredNorm());
        }
    }

    const SpectrumSpec& spec() const noexcept { return spec_; }
    const Eigen::VectorXcd& initial() const noexcept { return initial_; }

    /// |c_a|^2 for every shell.
    const std::vector<double>& weights() const noexcept { return weights_; }

    /// Coordinates s_{a,i} of the unnormalized shell vector.
    Eigen::VectorBlock<const Eigen::VectorXcd> shell_block(std::size_t alpha) const
    {
        return initial_.segment(static_cast<Eigen::Index>(spec_.shell_offset(alpha)),
                                static_cast<Eigen::Index>(spec_.shell_size(alpha)));
    }

    /// Unnormalized shell vector embedded in the full space.
    Eigen::VectorXcd shell_component(std::size_t alpha) const
    {
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(initial_.size());
        v.segment(static_cast<Eigen::Index>(spec_.shell_offset(alpha)),
                  static_cast<Eigen::Index>(spec_.shell_size(alpha))) = shell_block(alpha);
        return v;
    }

private:
    SpectrumSpec spec_;
    Eigen::VectorXcd initial_;
    std::vector<double> weights_;
};

inline ShellState prepare_state(const Eigen::VectorXcd& amplitudes, const SpectrumSpec& spec)
{
    if(static_cast<std::size_t>(amplitudes.size()) != spec.dimension()) {
        throw std::invalid_argument("state has length " + std::to_string(amplitudes.size()) +
                                    " but the spectrum dimension is " + std::to_string(spec.dimension()));
    }
    const double norm = amplitudes.norm();
    if(!(std::abs(norm - 1.0) <= state_norm_tolerance)) {
        throw std::invalid_argument("state is not normalized (norm " + std::to_string(norm) + ")");
    }
    return ShellState(spec, amplitudes);
}

/// Same amplitudes on the spectrum's integer clock.
inline ShellState on_integer_clock(const ShellState& state)
{
    return ShellState(to_integer_spectrum(state.spec()), state.initial());
}

/// psi(t) = sum_a exp(-i E_a t) phi_a, with caller-supplied energies (one per shell).
inline Eigen::VectorXcd evolve_with(const ShellState& state, const std::vector<double>& energies, double tau)
{
    Eigen::VectorXcd out(state.initial().size());
    const auto& spec = state.spec();
    for(std::size_t a = 0; a < spec.level_count(); ++a) {
        const cplx phase = std::polar(1.0, -energies[a] * tau);
        out.segment(static_cast<Eigen::Index>(spec.shell_offset(a)), static_cast<Eigen::Index>(spec.shell_size(a))) =
            phase * state.shell_block(a);
    }
    return out;
}

inline Eigen::VectorXcd evolve(const ShellState& state, double tau)
{
    return evolve_with(state, state.spec().energies_as_double(), tau);
}

/// ||P v||^2
inline double cell_weight(const Eigen::VectorXcd& v, const Projection& cell)
{
    return (cell.basis.adjoint() * v).squaredNorm();
}

inline std::vector<double> cell_weights(const Eigen::VectorXcd& v, const Decomposition& dec)
{
    std::vector<double> out;
    out.reserve(dec.cell_count());
    for(const auto& c : dec.cells) {
        out.push_back(cell_weight(v, c));
    }
    return out;
}

/// <phi_a|P|phi_a> for each shell (unnormalized shell vectors).
inline std::vector<double> shell_diagonal(const ShellState& state, const Projection& cell)
{
    const auto& spec = state.spec();
    std::vector<double> out(spec.level_count());
    for(std::size_t a = 0; a < spec.level_count(); ++a) {
        const auto rows = cell.basis.middleRows(static_cast<Eigen::Index>(spec.shell_offset(a)),
                                                static_cast<Eigen::Index>(spec.shell_size(a)));
        out[a] = (rows.adjoint() * state.shell_block(a)).squaredNorm();
    }
    return out;
}

/// Infinite-time average of the cell weight: sum over distinct levels of <phi_a|P|phi_a>.
inline double exact_time_avg_weight(const ShellState& state, const Projection& cell)
{
    double sum = 0.0;
    for(double v : shell_diagonal(state, cell)) {
        sum += v;
    }
    return sum;
}

/// E_max - E_min of an integer spectrum.
inline std::int64_t integer_bandwidth(const SpectrumSpec& spec)
{
    if(!spec.all_integer()) {
        throw std::invalid_argument("integer spectrum required");
    }
    const Rational width = spec.levels().back().energy - spec.levels().front().energy;
    return to_int64(boost::multiprecision::numerator(width));
}

/// Grid size that averages integer-frequency polynomials of degree <= max_frequency exactly.
inline std::size_t exact_grid_size(std::int64_t max_frequency)
{
    if(max_frequency < 0) {
        throw std::invalid_argument("max_frequency must be non-negative");
    }
    return static_cast<std::size_t>(2 * max_frequency + 1);
}

/// Average of observable(t) over t_j = 2 pi j / N, N = 2 max_frequency + 1.
/// Exact infinite-time average for integer spectra.
template <class Observable>
double discrete_time_average(const SpectrumSpec& spec, std::int64_t max_frequency, Observable&& observable)
{
    if(!spec.all_integer()) {
        throw std::invalid_argument("discrete time average is only exact for integer spectra");
    }
    const std::size_t n = exact_grid_size(max_frequency);
    double sum = 0.0;
    for(std::size_t j = 0; j < n; ++j) {
        sum += observable(2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n));
    }
    return sum / static_cast<double>(n);
}

/// Oracle for the long-time cell weight: discrete average of ||P psi(t)||^2.
inline double oracle_time_avg_weight(const ShellState& state, const Projection& cell)
{
    const ShellState s = state.spec().all_integer() ? state : on_integer_clock(state);
    const auto energies = s.spec().energies_as_double();
    return discrete_time_average(s.spec(), integer_bandwidth(s.spec()),
                                 [&](double t) { return cell_weight(evolve_with(s, energies, t), cell); });
}

/// Oracle for L: discrete average of (||P psi(t)||^2 - d/D)^2.
inline double oracle_deviation_average(const ShellState& state, const Projection& cell)
{
    const ShellState s = state.spec().all_integer() ? state : on_integer_clock(state);
    const auto energies = s.spec().energies_as_double();
    const double target = static_cast<double>(cell.rank()) / static_cast<double>(cell.dimension());
    return discrete_time_average(s.spec(), 2 * integer_bandwidth(s.spec()), [&](double t) {
        const double dev = cell_weight(evolve_with(s, energies, t), cell) - target;
        return dev * dev;
    });
}

inline constexpr std::size_t default_time_grid = 1000;

/// Normality tolerance (eps / sqrt(M)) sqrt(d/D) of one cell.
inline double normality_tolerance(double epsilon, std::size_t cell_count, std::size_t rank, std::size_t dimension)
{
    return epsilon / std::sqrt(static_cast<double>(cell_count)) *
           std::sqrt(static_cast<double>(rank) / static_cast<double>(dimension));
}

/**
 * Fraction of one period (integer spectrum, period 2 pi) on which every cell
 * satisfies |w_v(t) - d_v/D| <= (eps / sqrt(M)) sqrt(d_v/D).
 *
 * The grid has max(grid_points, 4 (E_max - E_min) + 1) uniform points, so the
 * grid mean of every squared deviation equals its infinite-time average.
 */
inline double time_fraction_normal(const ShellState& state, const Decomposition& dec, double epsilon,
                                   std::size_t grid_points = default_time_grid)
{
    if(!state.spec().all_integer()) {
        throw std::invalid_argument("time fraction needs an integer spectrum");
    }
    const std::int64_t bw = integer_bandwidth(state.spec());
    const std::size_t n = std::max(grid_points, exact_grid_size(2 * bw));
    const auto energies = state.spec().energies_as_double();
    const std::size_t D = dec.dimension();
    std::vector<double> tol;
    for(const auto& c : dec.cells) {
        tol.push_back(normality_tolerance(epsilon, dec.cell_count(), c.rank(), D));
    }
    std::size_t good = 0;
    for(std::size_t j = 0; j < n; ++j) {
        const double t = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
        const Eigen::VectorXcd psi = evolve_with(state, energies, t);
        bool ok = true;
        for(std::size_t v = 0; v < dec.cell_count() && ok; ++v) {
            const auto& c = dec.cells[v];
            const double dev = cell_weight(psi, c) - static_cast<double>(c.rank()) / static_cast<double>(D);
            ok = std::abs(dev) <= tol[v];
        }
        good += ok ? 1 : 0;
    }
    return static_cast<double>(good) / static_cast<double>(n);
}

/// Columnar dump: tau followed by one weight per cell, one row per grid point.
inline void write_trajectory(std::ostream& os, const ShellState& state, const Decomposition& dec, double t_end,
                             std::size_t points)
{
    os << "# tau";
    for(std::size_t v = 0; v < dec.cell_count(); ++v) {
        os << " w" << (v + 1);
    }
    os << '\n';
    const auto energies = state.spec().energies_as_double();
    const auto old = os.precision(17);
    for(std::size_t j = 0; j < points; ++j) {
        const double t = points > 1 ? t_end * static_cast<double>(j) / static_cast<double>(points - 1) : 0.0;
        const Eigen::VectorXcd psi = evolve_with(state, energies, t);
        os << t;
        for(const auto& c : dec.cells) {
            os << ' ' << cell_weight(psi, c);
        }
        os << '\n';
    }
    os.precision(old);
}

} // namespace qergo
