#pragma once

/**
 * @file randomness.hpp
 * @brief Haar-random unitaries, states and fixed-rank measurement decompositions,
 *        plus Monte Carlo estimators for the hypersphere / projection moments.
 *
 * Haar unitaries come from the QR factorization of a complex Ginibre matrix with
 * the diagonal phases of R pushed into Q, which makes the distribution exactly
 * Haar on U(D). All observables used here are invariant under a global phase, so
 * U(D) and SU(D) sampling give the same statistics.
 */

#include "qergo/stats.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qergo {

using cplx = std::complex<double>;
using Rng = std::mt19937_64;

enum class LogBase { natural, ten };

template <class Real>
Real log_in(const Real& x, LogBase base)
{
    using std::log;
    using std::log10;
    return base == LogBase::natural ? Real(log(x)) : Real(log10(x));
}

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream for one trial, fixed by (master seed, index).
inline Rng substream(std::uint64_t master_seed, std::uint64_t index)
{
    std::seed_seq seq{splitmix64(master_seed), splitmix64(master_seed ^ splitmix64(index + 1))};
    return Rng(seq);
}

/// i.i.d. standard complex Gaussians, E|z|^2 = 1.
inline Eigen::MatrixXcd complex_gaussian(std::size_t rows, std::size_t cols, Rng& rng)
{
    std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
    Eigen::MatrixXcd z(rows, cols);
    for(Eigen::Index j = 0; j < z.cols(); ++j) {
        for(Eigen::Index i = 0; i < z.rows(); ++i) {
            const double re = nd(rng);
            const double im = nd(rng);
            z(i, j) = cplx(re, im);
        }
    }
    return z;
}

inline Eigen::MatrixXcd sample_haar_unitary(std::size_t dimension, Rng& rng)
{
    if(dimension == 0) {
        throw std::invalid_argument("Haar unitary needs dimension >= 1");
    }
    const Eigen::MatrixXcd z = complex_gaussian(dimension, dimension, rng);
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
    Eigen::MatrixXcd q = qr.householderQ();
    const auto& r = qr.matrixQR();
    for(Eigen::Index k = 0; k < q.cols(); ++k) {
        const cplx rkk = r(k, k);
        const double mag = std::abs(rkk);
        q.col(k) *= (mag > 0.0 ? rkk / mag : cplx(1.0, 0.0));
    }
    return q;
}

/// Unit vector uniform on the complex sphere.
struct RandomState {
    Eigen::VectorXcd amplitudes;

    std::size_t dimension() const { return static_cast<std::size_t>(amplitudes.size()); }
};

inline RandomState sample_random_state(std::size_t dimension, Rng& rng)
{
    if(dimension == 0) {
        throw std::invalid_argument("random state needs dimension >= 1");
    }
    Eigen::VectorXcd v = complex_gaussian(dimension, 1, rng).col(0);
    v /= v.norm();
    return {std::move(v)};
}

/// Rank-d orthogonal projection stored by an orthonormal basis (D x d).
struct Projection {
    Eigen::MatrixXcd basis;
    std::vector<std::size_t> indices; ///< positions of the basis vectors in the parent frame

    std::size_t rank() const { return static_cast<std::size_t>(basis.cols()); }
    std::size_t dimension() const { return static_cast<std::size_t>(basis.rows()); }

    /// Dense projector; only for checks at small D.
    Eigen::MatrixXcd matrix() const { return basis * basis.adjoint(); }
};

/// Complete set of mutually orthogonal projections.
struct Decomposition {
    std::vector<Projection> cells;

    std::size_t cell_count() const { return cells.size(); }
    std::size_t dimension() const { return cells.empty() ? 0 : cells.front().dimension(); }
    std::vector<std::size_t> ranks() const
    {
        std::vector<std::size_t> out;
        for(const auto& c : cells) {
            out.push_back(c.rank());
        }
        return out;
    }
};

inline void check_dims(std::span<const std::size_t> dims)
{
    if(dims.empty()) {
        throw std::invalid_argument("decomposition needs at least one cell");
    }
    for(auto d : dims) {
        if(d == 0) {
            throw std::invalid_argument("cell ranks must be >= 1");
        }
    }
}

/// Splits the columns of a D x D unitary into consecutive blocks of the given ranks.
inline Decomposition decomposition_from_unitary(const Eigen::MatrixXcd& unitary, std::span<const std::size_t> dims)
{
    check_dims(dims);
    const std::size_t total = std::accumulate(dims.begin(), dims.end(), std::size_t{0});
    if(total != static_cast<std::size_t>(unitary.cols()) || unitary.rows() != unitary.cols()) {
        throw std::invalid_argument("cell ranks sum to " + std::to_string(total) + " but the dimension is " +
                                    std::to_string(unitary.cols()));
    }
    Decomposition dec;
    std::size_t offset = 0;
    for(auto d : dims) {
        Projection p;
        p.basis = unitary.middleCols(static_cast<Eigen::Index>(offset), static_cast<Eigen::Index>(d));
        p.indices.resize(d);
        std::iota(p.indices.begin(), p.indices.end(), offset);
        dec.cells.push_back(std::move(p));
        offset += d;
    }
    return dec;
}

/// Coordinate partition (no rotation).
inline Decomposition coordinate_decomposition(std::span<const std::size_t> dims)
{
    check_dims(dims);
    const std::size_t total = std::accumulate(dims.begin(), dims.end(), std::size_t{0});
    return decomposition_from_unitary(Eigen::MatrixXcd::Identity(total, total), dims);
}

/// Coordinate partition conjugated by one Haar unitary.
inline Decomposition sample_decomposition(std::span<const std::size_t> dims, std::size_t dimension, Rng& rng)
{
    check_dims(dims);
    const std::size_t total = std::accumulate(dims.begin(), dims.end(), std::size_t{0});
    if(total != dimension) {
        throw std::invalid_argument("cell ranks sum to " + std::to_string(total) + " but the dimension is " +
                                    std::to_string(dimension));
    }
    return decomposition_from_unitary(sample_haar_unitary(dimension, rng), dims);
}

inline Decomposition sample_decomposition(std::span<const std::size_t> dims, Rng& rng)
{
    check_dims(dims);
    return sample_decomposition(dims, std::accumulate(dims.begin(), dims.end(), std::size_t{0}), rng);
}

/// Largest deviation of sum_v P_v from identity and of P_u P_v (u != v) from zero.
struct DecompositionDefects {
    double completeness = 0.0;
    double orthogonality = 0.0;
    double gram = 0.0;
};

inline DecompositionDefects decomposition_defects(const Decomposition& dec)
{
    DecompositionDefects out;
    const auto n = static_cast<Eigen::Index>(dec.dimension());
    Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(n, n);
    for(std::size_t u = 0; u < dec.cells.size(); ++u) {
        const auto& bu = dec.cells[u].basis;
        sum += bu * bu.adjoint();
        const Eigen::MatrixXcd g = bu.adjoint() * bu - Eigen::MatrixXcd::Identity(bu.cols(), bu.cols());
        out.gram = std::max(out.gram, g.cwiseAbs().maxCoeff());
        for(std::size_t v = u + 1; v < dec.cells.size(); ++v) {
            const Eigen::MatrixXcd cross = bu.adjoint() * dec.cells[v].basis;
            out.orthogonality = std::max(out.orthogonality, cross.cwiseAbs().maxCoeff());
        }
    }
    out.completeness = (sum - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
    return out;
}

// ---------------------------------------------------------------------------
// Moment estimators
// ---------------------------------------------------------------------------

struct MomentReport {
    std::size_t samples = 0;
    bool sufficient = true;
    std::vector<stats::GatedEstimate> rows;

    bool pass() const
    {
        for(const auto& r : rows) {
            if(r.gated && !r.pass) {
                return false;
            }
        }
        return true;
    }
};

inline constexpr std::size_t min_moment_samples = 10'000;

inline void mark_insufficient(MomentReport& report, std::size_t needed)
{
    if(report.samples < needed) {
        report.sufficient = false;
        for(auto& r : report.rows) {
            r.gated = false;
            r.pass = false;
        }
    }
}

/**
 * Moments of a uniform point on the unit sphere of C^D, written as x_k + i y_k.
 *
 *  - mean_x_sq:        E[x_k^2]                  target 1/(2D)
 *  - var_coord_weight: V[x_k^2 + y_k^2]          target (D-1)/(D^2 (D+1))
 *  - cov_coord_weight: C[|z_k|^2, |z_l|^2], k!=l target -1/(D^2 (D+1))
 *  - var_x_sq:         V[x_k^2] (real part only) target (2D-1)/(4 D^2 (D+1))
 *
 * The variance and covariance targets are those of the per-coordinate weight
 * |z_k|^2; composing them over d coordinates gives the projection variance
 * (1/d)(d/D)^2 (D-d)/(D+1). The real-part variance is reported alongside.
 */
inline MomentReport hypersphere_moments(std::size_t dimension, std::size_t sample_count, Rng& rng)
{
    if(dimension < 2) {
        throw std::invalid_argument("hypersphere moments need D >= 2");
    }
    std::vector<double> x_sq(sample_count);
    std::vector<double> w0(sample_count);
    std::vector<double> w1(sample_count);
    for(std::size_t s = 0; s < sample_count; ++s) {
        const auto xi = sample_random_state(dimension, rng).amplitudes;
        x_sq[s] = xi(0).real() * xi(0).real();
        w0[s] = std::norm(xi(0));
        w1[s] = std::norm(xi(1));
    }
    const double D = static_cast<double>(dimension);
    MomentReport report;
    report.samples = sample_count;
    if(sample_count >= 2) {
        const auto sx = stats::summarize(x_sq);
        const auto sw = stats::summarize(w0);
        const auto cw = stats::covariance(w0, w1);
        report.rows.push_back(stats::gate("mean_x_sq", sx.mean, sx.mean_std_error, 1.0 / (2.0 * D)));
        report.rows.push_back(
            stats::gate("var_coord_weight", sw.variance, sw.variance_std_error, (D - 1.0) / (D * D * (D + 1.0))));
        report.rows.push_back(stats::gate("cov_coord_weight", cw.value, cw.std_error, -1.0 / (D * D * (D + 1.0))));
        report.rows.push_back(stats::gate("var_x_sq", sx.variance, sx.variance_std_error,
                                          (2.0 * D - 1.0) / (4.0 * D * D * (D + 1.0))));
    }
    mark_insufficient(report, min_moment_samples);
    return report;
}

inline double lemma2_mean(std::size_t d, std::size_t D)
{
    return static_cast<double>(d) / static_cast<double>(D);
}

inline double lemma2_variance(std::size_t d, std::size_t D)
{
    const double dd = static_cast<double>(d);
    const double DD = static_cast<double>(D);
    const double r = dd / DD;
    return (1.0 / dd) * r * r * (DD - dd) / (DD + 1.0);
}

/// Mean and variance of ||P xi||^2 for Haar xi and a fixed rank-d coordinate projection.
inline MomentReport lemma2_statistics(std::size_t dimension, std::size_t rank, std::size_t sample_count, Rng& rng)
{
    if(rank == 0 || rank > dimension) {
        throw std::invalid_argument("projection rank must satisfy 1 <= d <= D");
    }
    std::vector<double> w(sample_count);
    for(std::size_t s = 0; s < sample_count; ++s) {
        const auto xi = sample_random_state(dimension, rng).amplitudes;
        w[s] = xi.head(static_cast<Eigen::Index>(rank)).squaredNorm();
    }
    MomentReport report;
    report.samples = sample_count;
    if(sample_count >= 2) {
        const auto sw = stats::summarize(w);
        report.rows.push_back(stats::gate("mean_weight", sw.mean, sw.mean_std_error, lemma2_mean(rank, dimension)));
        report.rows.push_back(stats::gate("var_weight", sw.variance, sw.variance_std_error,
                                          lemma2_variance(rank, dimension)));
    }
    mark_insufficient(report, min_moment_samples);
    return report;
}

/// Ensemble estimates of the two von Neumann expectations over Haar U:
/// E[max_{i!=j} |sum_{l<d} U_li conj(U_lj)|^2] and E[max_i (sum_{l<d} |U_li|^2 - d/D)^2].
struct Lemma1Stats {
    std::size_t dimension = 0;
    std::size_t rank = 0;
    stats::Summary max_offdiag;
    stats::Summary max_diag_dev;
    double offdiag_target = 0.0; ///< log D / D
    double diag_target = 0.0;    ///< 9 d log D / D^2

    bool below_targets() const
    {
        return max_offdiag.mean < offdiag_target && max_diag_dev.mean < diag_target;
    }
};

inline constexpr std::size_t min_lemma1_ensemble = 100;

inline Lemma1Stats lemma1_statistics(std::size_t dimension, std::size_t rank, std::size_t ensemble_size, Rng& rng,
                                     LogBase base = LogBase::natural)
{
    if(rank == 0 || rank >= dimension) {
        throw std::invalid_argument("lemma 1 statistics need 1 <= d < D");
    }
    if(ensemble_size == 0) {
        throw std::invalid_argument("ensemble size must be positive");
    }
    const double ratio = static_cast<double>(rank) / static_cast<double>(dimension);
    std::vector<double> off(ensemble_size);
    std::vector<double> diag(ensemble_size);
    for(std::size_t s = 0; s < ensemble_size; ++s) {
        const Eigen::MatrixXcd u = sample_haar_unitary(dimension, rng);
        const auto top = u.topRows(static_cast<Eigen::Index>(rank));
        const Eigen::MatrixXcd g = top.adjoint() * top;
        double mo = 0.0;
        double md = 0.0;
        for(Eigen::Index j = 0; j < g.cols(); ++j) {
            for(Eigen::Index i = 0; i < g.rows(); ++i) {
                if(i == j) {
                    const double dev = g(i, i).real() - ratio;
                    md = std::max(md, dev * dev);
                } else {
                    mo = std::max(mo, std::norm(g(i, j)));
                }
            }
        }
        off[s] = mo;
        diag[s] = md;
    }
    Lemma1Stats out;
    out.dimension = dimension;
    out.rank = rank;
    out.max_offdiag = stats::summarize(off);
    out.max_diag_dev = stats::summarize(diag);
    const double D = static_cast<double>(dimension);
    const double logD = log_in(D, base);
    out.offdiag_target = logD / D;
    out.diag_target = 9.0 * static_cast<double>(rank) * logD / (D * D);
    return out;
}

} // namespace qergo
