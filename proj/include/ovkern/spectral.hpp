#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "ovkern/errors.hpp"
#include "ovkern/grid.hpp"
#include "ovkern/kernels.hpp"

namespace ovkern {

// ---------------------------------------------------------------------------
// Transcendental eigensystem of the exponential integral operator on [0, 1]
// ---------------------------------------------------------------------------

namespace detail {

// f(mu) = cot(mu) - (mu - 1/mu)/2, strictly decreasing between cotangent
// poles, so each interval ((i-1)pi, i pi) holds exactly one root.
inline double exp_root_fn(double mu) {
    return std::cos(mu) / std::sin(mu) - 0.5 * (mu - 1.0 / mu);
}

inline double exp_root_dfn(double mu) {
    const double s = std::sin(mu);
    return -1.0 / (s * s) - 0.5 - 0.5 / (mu * mu);
}

} // namespace detail

/// First `count` solutions of cot(mu) = (mu - 1/mu)/2, bracketed one per
/// interval ((i-1)pi + eps, i pi - eps). Bisection to 1e-12 plus safeguarded
/// Newton polish; each returned root satisfies |f(mu)| <= 1e-10.
inline std::vector<double> exp_kernel_roots(int count) {
    if (count < 1) throw ParameterError("root count must be >= 1, got " + std::to_string(count));
    constexpr double eps = 1e-9;
    constexpr double pi = std::numbers::pi;
    std::vector<double> roots;
    roots.reserve(static_cast<size_t>(count));
    for (int i = 1; i <= count; ++i) {
        double lo = (i - 1) * pi + eps;
        double hi = i * pi - eps;
        double flo = detail::exp_root_fn(lo);
        double fhi = detail::exp_root_fn(hi);
        if (!(flo > 0.0) || !(fhi < 0.0))
            throw RootFindError("bracket [" + std::to_string(lo) + ", " + std::to_string(hi) +
                                "] does not straddle a sign change (f = " + std::to_string(flo) +
                                ", " + std::to_string(fhi) + ")");
        while (hi - lo > 1e-12) {
            const double mid = 0.5 * (lo + hi);
            if (detail::exp_root_fn(mid) > 0.0)
                lo = mid;
            else
                hi = mid;
        }
        double mu = 0.5 * (lo + hi);
        for (int polish = 0; polish < 3; ++polish) {
            const double step = detail::exp_root_fn(mu) / detail::exp_root_dfn(mu);
            const double next = mu - step;
            if (next > lo - 1e-9 && next < hi + 1e-9) mu = next;
        }
        if (std::abs(detail::exp_root_fn(mu)) > 1e-10)
            throw RootFindError("root polish failed in [" + std::to_string((i - 1) * pi) + ", " +
                                std::to_string(i * pi) + "]: residual " +
                                std::to_string(detail::exp_root_fn(mu)));
        roots.push_back(mu);
    }
    return roots;
}

/// Eigenvalues (descending, positive) and L2-orthonormal eigenfunctions of a
/// compact self-adjoint operator on the output grid.
struct OperatorEigs {
    GridPtr grid;
    Eigen::VectorXd deltas;        // descending, > 0, retained modes only
    Eigen::MatrixXd eigenfunctions; // m x kappa, column l samples w_l
    std::vector<double> mus;        // transcendental roots (analytic path only)

    Eigen::Index count() const { return deltas.size(); }

    SampledFunction eigenfunction(Eigen::Index l) const {
        return SampledFunction(grid, eigenfunctions.col(l));
    }
};

/// Analytic eigenpairs of the e^{-|t-s|} integral operator on [0, 1]:
/// delta_i = 2/(1 + mu_i^2), w_i(t) = mu_i cos(mu_i t) + sin(mu_i t),
/// L2-normalized on the grid with w_i(0) > 0.
inline OperatorEigs exp_kernel_eigs(int count, const GridPtr& grid) {
    if (std::abs(grid->lower()) > 1e-12 || std::abs(grid->upper() - 1.0) > 1e-12)
        throw ValidationError("analytic exponential eigensystem requires a grid spanning [0, 1]");
    const std::vector<double> mus = exp_kernel_roots(count);
    OperatorEigs oe;
    oe.grid = grid;
    oe.mus = mus;
    oe.deltas.resize(count);
    oe.eigenfunctions.resize(grid->size(), count);
    for (int l = 0; l < count; ++l) {
        const double mu = mus[static_cast<size_t>(l)];
        oe.deltas(l) = 2.0 / (1.0 + mu * mu);
        SampledFunction w = SampledFunction::from_fn(
            grid, [mu](double t) { return mu * std::cos(mu * t) + std::sin(mu * t); });
        const double nrm = l2_norm(w);
        if (!(nrm > 0.0)) throw OperatorError("analytic eigenfunction has zero norm");
        Eigen::VectorXd v = w.values() / nrm;
        if (v(0) < 0.0) v = -v;
        oe.eigenfunctions.col(l) = v;
    }
    return oe;
}

/// Dense symmetric eigendecomposition of the discretized operator in the
/// weighted geometry, mapped back to function space. Modes with eigenvalue
/// <= 1e-12 * max are discarded (retained modes are strictly positive); the
/// sign fixes the largest-magnitude component positive.
inline OperatorEigs discretized_operator_eigs(const OperatorSpec& T, const GridPtr& grid,
                                              Eigen::Index count) {
    const auto m = grid->size();
    if (count < 1 || count > m)
        throw ParameterError("eigen count " + std::to_string(count) + " must be in [1, " +
                             std::to_string(m) + "]");
    Eigen::MatrixXd s = weighted_symmetric(T, grid);
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw OperatorError("operator discretization is not symmetric within 1e-8");
    s = 0.5 * (s + s.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    if (es.info() != Eigen::Success) throw OperatorError("operator eigendecomposition failed");

    const Eigen::VectorXd ev = es.eigenvalues().reverse();
    const double cutoff = 1e-12 * std::max(ev(0), 0.0);
    Eigen::Index kept = 0;
    while (kept < count && ev(kept) > cutoff) ++kept;
    if (kept == 0) throw OperatorError("operator has no positive eigenvalues to retain");

    const Eigen::VectorXd inv_sw = grid->weights().cwiseSqrt().cwiseInverse();
    OperatorEigs oe;
    oe.grid = grid;
    oe.deltas = ev.head(kept);
    oe.eigenfunctions.resize(m, kept);
    for (Eigen::Index l = 0; l < kept; ++l) {
        Eigen::VectorXd w = inv_sw.cwiseProduct(es.eigenvectors().col(m - 1 - l));
        Eigen::Index imax = 0;
        w.cwiseAbs().maxCoeff(&imax);
        if (w(imax) < 0.0) w = -w;
        oe.eigenfunctions.col(l) = w;
    }
    return oe;
}

// ---------------------------------------------------------------------------
// Gram eigendecomposition
// ---------------------------------------------------------------------------

struct GramEigs {
    Eigen::VectorXd alphas;  // descending, >= 0 (clipped)
    Eigen::MatrixXd eigvecs; // n x n, column i is v_i, orthonormal

    Eigen::Index count() const { return alphas.size(); }
};

/// Full dense symmetric eigendecomposition of a Gram matrix. Genuinely
/// negative eigenvalues (below -1e-8 * max) mean the scalar kernel is not
/// nonnegative and raise an error; roundoff negatives are clipped to zero.
inline GramEigs gram_eigs(const Eigen::MatrixXd& G) {
    if (G.rows() != G.cols())
        throw DimensionError("gram matrix must be square, got " + std::to_string(G.rows()) + "x" +
                             std::to_string(G.cols()));
    const double scale = std::max(1.0, G.cwiseAbs().maxCoeff());
    if ((G - G.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw KernelValidityError("gram matrix is not symmetric within 1e-10");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (G + G.transpose()));
    if (es.info() != Eigen::Success) throw KernelValidityError("gram eigendecomposition failed");
    GramEigs ge;
    const auto n = G.rows();
    ge.alphas = es.eigenvalues().reverse();
    ge.eigvecs.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) ge.eigvecs.col(i) = es.eigenvectors().col(n - 1 - i);
    const double max_eig = std::max(ge.alphas(0), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (ge.alphas(i) < -1e-8 * max_eig)
            throw KernelValidityError("gram matrix has negative eigenvalue " +
                                      std::to_string(ge.alphas(i)) +
                                      "; the scalar kernel is not nonnegative");
        if (ge.alphas(i) < 0.0) ge.alphas(i) = 0.0;
    }
    return ge;
}

// ---------------------------------------------------------------------------
// Kronecker eigensystem theta = alpha (x) delta, z = v (x) w
// ---------------------------------------------------------------------------

struct KroneckerMode {
    double theta;
    Eigen::Index gram_index;     // i into alphas/eigvecs
    Eigen::Index operator_index; // l into deltas/eigenfunctions
};

/// Eigensystem of the block operator kernel matrix G (x) T, assembled from
/// the factor decompositions. Eigenfunction tuples z_(i,l), with j-th
/// component v_i[j] * w_l, are materialized on demand.
struct KroneckerEigs {
    GramEigs gram;
    OperatorEigs op;
    std::vector<KroneckerMode> modes; // descending theta, ties by (i, l)

    Eigen::Index count() const { return static_cast<Eigen::Index>(modes.size()); }

    std::vector<SampledFunction> mode_tuple(const KroneckerMode& mode) const {
        std::vector<SampledFunction> z;
        const auto n = gram.count();
        z.reserve(static_cast<size_t>(n));
        for (Eigen::Index j = 0; j < n; ++j)
            z.emplace_back(op.grid, Eigen::VectorXd(gram.eigvecs(j, mode.gram_index) *
                                                    op.eigenfunctions.col(mode.operator_index)));
        return z;
    }
};

inline KroneckerEigs kronecker_eigs(GramEigs ge, OperatorEigs oe) {
    KroneckerEigs ke;
    ke.modes.reserve(static_cast<size_t>(ge.count() * oe.count()));
    for (Eigen::Index i = 0; i < ge.count(); ++i)
        for (Eigen::Index l = 0; l < oe.count(); ++l)
            ke.modes.push_back({ge.alphas(i) * oe.deltas(l), i, l});
    std::stable_sort(ke.modes.begin(), ke.modes.end(),
                     [](const KroneckerMode& a, const KroneckerMode& b) {
                         if (a.theta != b.theta) return a.theta > b.theta;
                         if (a.gram_index != b.gram_index) return a.gram_index < b.gram_index;
                         return a.operator_index < b.operator_index;
                     });
    ke.gram = std::move(ge);
    ke.op = std::move(oe);
    return ke;
}

/// Apply the truncated spectral inverse of (K + lambda I) to a tuple of
/// curves:
///   sum over modes of (theta + lambda)^{-1} <c, z> z
///   + lambda^{-1} (c - Pi c),
/// where Pi projects onto the retained mode span. The complement term keeps
/// the truncated solve consistent with (K + lambda I) acting as lambda times
/// the identity off the retained span; it vanishes when c lies in the span.
inline std::vector<SampledFunction> inverse_apply(const KroneckerEigs& ke, double lambda,
                                                  const std::vector<SampledFunction>& c) {
    if (!(lambda > 0.0))
        throw ParameterError("regularization parameter must be positive, got " +
                             std::to_string(lambda));
    const auto n = ke.gram.count();
    if (static_cast<Eigen::Index>(c.size()) != n)
        throw DimensionError("tuple length " + std::to_string(c.size()) +
                             " != eigensystem sample count " + std::to_string(n));
    const auto m = ke.op.grid->size();
    const auto kappa = ke.op.count();

    Eigen::MatrixXd cmat(m, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto& cj = c[static_cast<size_t>(j)];
        if (!same_grid(cj.grid(), ke.op.grid))
            throw DimensionError("tuple component " + std::to_string(j) + " has grid length " +
                                 std::to_string(cj.size()) + ", expected " + std::to_string(m));
        cmat.col(j) = cj.values();
    }

    // proj(j, l) = <c_j, w_l> in the weighted inner product
    const Eigen::MatrixXd proj =
        cmat.transpose() * ke.op.grid->weights().asDiagonal() * ke.op.eigenfunctions;
    // d(i, l) = <c, z_(i,l)> = sum_j v_i[j] proj(j, l)
    const Eigen::MatrixXd d = ke.gram.eigvecs.transpose() * proj;

    Eigen::MatrixXd b(n, kappa);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index l = 0; l < kappa; ++l)
            b(i, l) = d(i, l) / (ke.gram.alphas(i) * ke.op.deltas(l) + lambda);

    // retained part sum_(i,l) b(i,l) z_(i,l), plus the orthogonal complement
    const Eigen::MatrixXd retained = ke.op.eigenfunctions * (ke.gram.eigvecs * b).transpose();
    const Eigen::MatrixXd complement =
        (cmat - ke.op.eigenfunctions * proj.transpose()) / lambda;

    std::vector<SampledFunction> out;
    out.reserve(static_cast<size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j)
        out.emplace_back(ke.op.grid, Eigen::VectorXd(retained.col(j) + complement.col(j)));
    return out;
}

} // namespace ovkern
