#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "ovkern/errors.hpp"
#include "ovkern/grid.hpp"
#include "ovkern/kernels.hpp"
#include "ovkern/parallel.hpp"
#include "ovkern/spectral.hpp"

namespace ovkern {

/// A trained function-valued regressor F(x) = sum_j g(x_j, x) T u_j.
struct FRModel {
    std::vector<MultiFunction> train_inputs;
    std::vector<SampledFunction> coeffs;  // u_j
    std::vector<SampledFunction> applied; // T u_j, precomputed for prediction
    std::shared_ptr<const SeparableKernel> kernel;
    double lambda = 0.0;
    Eigen::Index kappa = 0;
    std::optional<KroneckerEigs> eigs;
};

/// Which eigendecomposition of T drives the solver. The discretized path
/// keeps the spectral solve consistent with the quadrature discretization of
/// the kernel (and with the dense oracle) to solver precision; the analytic
/// path expands in the closed-form exponential-operator eigenfunctions and
/// matches the discretized path only up to quadrature error.
enum class OperatorEigPath { discretized, analytic_exp };

namespace detail {

inline std::shared_ptr<const SeparableKernel> require_separable(const KernelPtr& kernel) {
    auto sep = std::dynamic_pointer_cast<const SeparableKernel>(kernel);
    if (!sep)
        throw UnsupportedKernelError(
            "the spectral solver requires a separable kernel g(x1,x2) T "
            "with a multiplication, integral, or discretized operator");
    return sep;
}

inline std::vector<SampledFunction> apply_op_all(const SeparableKernel& kernel,
                                                 const std::vector<SampledFunction>& fs) {
    std::vector<SampledFunction> out;
    out.reserve(fs.size());
    for (const auto& f : fs) out.push_back(f.with_values(kernel.op_action() * f.values()));
    return out;
}

} // namespace detail

/// Operator eigendecomposition used by fit for a given kernel/grid/kappa.
inline OperatorEigs fit_operator_eigs(const SeparableKernel& kernel, const GridPtr& grid,
                                      Eigen::Index kappa,
                                      OperatorEigPath path = OperatorEigPath::discretized) {
    const Eigen::Index count = std::min(kappa, grid->size());
    if (path == OperatorEigPath::analytic_exp) {
        const auto* integ = std::get_if<IntegralOp>(&kernel.op());
        if (!integ || integ->kind != "exp")
            throw UnsupportedKernelError(
                "the analytic eigenpath applies only to the exponential integral operator");
        return exp_kernel_eigs(static_cast<int>(count), grid);
    }
    return discretized_operator_eigs(kernel.op(), grid, count);
}

/// Spectral solve of (K + lambda I) u = y through the Kronecker eigensystem
/// of G (x) T, with kappa retained operator modes.
inline FRModel fit(const FunctionalDataset& data, const KernelPtr& kernel, double lambda,
                   Eigen::Index kappa, OperatorEigPath path = OperatorEigPath::discretized,
                   const OperatorEigs* precomputed_op_eigs = nullptr) {
    if (!(lambda > 0.0))
        throw ParameterError("lambda must be positive, got " + std::to_string(lambda));
    if (kappa < 1) throw ParameterError("kappa must be >= 1, got " + std::to_string(kappa));
    auto sep = detail::require_separable(kernel);
    if (!same_grid(sep->output_grid(), data.output_grid()))
        throw DimensionError("kernel output grid length " +
                             std::to_string(sep->output_grid()->size()) +
                             " != dataset output grid length " +
                             std::to_string(data.output_grid()->size()));

    GramEigs ge = gram_eigs(gram(sep->scalar(), data.inputs()));
    OperatorEigs oe = precomputed_op_eigs
                          ? *precomputed_op_eigs
                          : fit_operator_eigs(*sep, data.output_grid(), kappa, path);
    KroneckerEigs ke = kronecker_eigs(std::move(ge), std::move(oe));

    FRModel model;
    model.coeffs = inverse_apply(ke, lambda, data.outputs());
    model.applied = detail::apply_op_all(*sep, model.coeffs);
    model.train_inputs = data.inputs();
    model.kernel = sep;
    model.lambda = lambda;
    model.kappa = std::min(kappa, data.output_grid()->size());
    model.eigs = std::move(ke);
    return model;
}

/// Brute-force reference solver: assemble the full block kernel matrix and
/// solve (B + lambda I) u = y directly in the weighted geometry. Independent
/// of the spectral path; desk scale only.
inline FRModel fit_dense_oracle(const FunctionalDataset& data, const KernelPtr& kernel,
                                double lambda, Eigen::Index cap = kBlockMatrixCap) {
    if (!(lambda > 0.0))
        throw ParameterError("lambda must be positive, got " + std::to_string(lambda));
    auto sep = detail::require_separable(kernel);
    if (!same_grid(sep->output_grid(), data.output_grid()))
        throw DimensionError("kernel output grid does not match dataset output grid");

    const Eigen::MatrixXd B = block_kernel_matrix(*sep, data.inputs(), cap);
    const auto n = data.size();
    const auto m = data.output_grid()->size();
    const Eigen::VectorXd sw_one = data.output_grid()->weights().cwiseSqrt();
    Eigen::VectorXd sw(n * m), yvec(n * m);
    for (Eigen::Index i = 0; i < n; ++i) {
        sw.segment(i * m, m) = sw_one;
        yvec.segment(i * m, m) = data.outputs()[static_cast<size_t>(i)].values();
    }
    Eigen::MatrixXd S = sw.asDiagonal() * B * sw.cwiseInverse().asDiagonal();
    S = 0.5 * (S + S.transpose()).eval();
    S.diagonal().array() += lambda;
    const Eigen::VectorXd q = Eigen::LDLT<Eigen::MatrixXd>(S).solve(sw.cwiseProduct(yvec));
    const Eigen::VectorXd uvec = q.cwiseQuotient(sw);

    FRModel model;
    model.train_inputs = data.inputs();
    for (Eigen::Index i = 0; i < n; ++i)
        model.coeffs.emplace_back(data.output_grid(), Eigen::VectorXd(uvec.segment(i * m, m)));
    model.applied = detail::apply_op_all(*sep, model.coeffs);
    model.kernel = sep;
    model.lambda = lambda;
    model.kappa = m;
    return model;
}

/// F(x) = sum_j g(x_j, x) (T u_j).
inline SampledFunction predict(const FRModel& model, const MultiFunction& x) {
    std::vector<double> weights;
    weights.reserve(model.train_inputs.size());
    for (const auto& xj : model.train_inputs)
        weights.push_back(scalar_eval(model.kernel->scalar(), xj, x));
    return combine(weights, model.applied);
}

/// Residual sum of squares error: integral of the summed squared curve
/// discrepancies, by quadrature.
inline double rsse(const std::vector<SampledFunction>& preds,
                   const std::vector<SampledFunction>& truths) {
    if (preds.size() != truths.size() || preds.empty())
        throw DimensionError("rsse needs equal nonzero curve counts, got " +
                             std::to_string(preds.size()) + " and " +
                             std::to_string(truths.size()));
    double acc = 0.0;
    for (size_t i = 0; i < preds.size(); ++i) acc += l2_norm_sq(preds[i] - truths[i]);
    return acc;
}

/// One-curve-leave-out cross-validation score: refit without curve i, predict
/// it, and accumulate plain squared errors at the stored sample points (a
/// pointwise sum, not a quadrature). The operator eigendecomposition is
/// fold-independent and reused; Gram eigendecompositions are recomputed per
/// fold.
inline double cv_score(const FunctionalDataset& data, const KernelPtr& kernel, double lambda,
                       Eigen::Index kappa, const OperatorEigs* shared_op_eigs = nullptr) {
    const auto n = data.size();
    if (n < 2) throw ParameterError("cross-validation needs at least 2 curves");
    auto sep = detail::require_separable(kernel);
    OperatorEigs oe;
    if (!shared_op_eigs) {
        oe = fit_operator_eigs(*sep, data.output_grid(), kappa);
        shared_op_eigs = &oe;
    }
    std::vector<double> fold_scores(static_cast<size_t>(n), 0.0);
    parallel_for(static_cast<size_t>(n), [&](size_t i) {
        const auto idx = static_cast<Eigen::Index>(i);
        const FRModel fold = fit(data.without(idx), kernel, lambda, kappa,
                                 OperatorEigPath::discretized, shared_op_eigs);
        const SampledFunction pred = predict(fold, data.inputs()[i]);
        fold_scores[i] = (data.outputs()[i].values() - pred.values()).squaredNorm();
    });
    double total = 0.0;
    for (double s : fold_scores) total += s;
    return total;
}

struct CvTableEntry {
    double lambda;
    Eigen::Index kappa;
    double score;
};

struct HyperparamSelection {
    double lambda = 0.0;
    Eigen::Index kappa = 0;
    std::vector<CvTableEntry> table;
};

inline std::vector<double> default_lambda_grid() {
    std::vector<double> grid;
    for (int k = 0; k < 7; ++k) grid.push_back(std::pow(10.0, -4.0 + 5.0 * k / 6.0));
    return grid;
}

inline std::vector<Eigen::Index> default_kappa_grid() { return {5, 10, 20}; }

/// Exhaustive grid search minimizing the cross-validation score. Ties prefer
/// the larger lambda, then the smaller kappa.
inline HyperparamSelection select_hyperparams(const FunctionalDataset& data,
                                              const KernelPtr& kernel,
                                              const std::vector<double>& lambda_grid,
                                              const std::vector<Eigen::Index>& kappa_grid) {
    if (lambda_grid.empty() || kappa_grid.empty())
        throw ParameterError("hyperparameter grids must be nonempty");
    auto sep = detail::require_separable(kernel);
    HyperparamSelection sel;
    bool have_best = false;
    double best_score = 0.0;
    for (Eigen::Index kappa : kappa_grid) {
        const OperatorEigs oe = fit_operator_eigs(*sep, data.output_grid(), kappa);
        for (double lambda : lambda_grid) {
            const double score = cv_score(data, kernel, lambda, kappa, &oe);
            sel.table.push_back({lambda, kappa, score});
            const bool better =
                !have_best || score < best_score ||
                (score == best_score &&
                 (lambda > sel.lambda || (lambda == sel.lambda && kappa < sel.kappa)));
            if (better) {
                have_best = true;
                best_score = score;
                sel.lambda = lambda;
                sel.kappa = kappa;
            }
        }
    }
    return sel;
}

// ---------------------------------------------------------------------------
// Uniform stability and the generalization bound
// ---------------------------------------------------------------------------

/// Constants of the uniform-stability analysis for the least squares loss:
///   kappa_sq bounds ||K(x,x)||_op over the training inputs,
///   sigma = 2 sigma_y (1 + kappa / sqrt(lambda)) is the loss Lipschitz
///   constant, beta = sigma^2 kappa_sq / (2 lambda n), xi = (sigma/2)^2, and
///   the generalization gap 2 beta + (4 n beta + xi) sqrt(ln(1/delta)/(2n))
///   holds with probability 1 - delta.
/// Here lambda is the regularization weight of the averaged empirical risk
/// (1/n) sum_i ||y_i - F(x_i)||^2 + lambda ||F||^2; the solver's objective
/// uses the plain sum, so its parameter corresponds to n * lambda.
struct StabilityReport {
    double kappa_sq = 0.0;
    double sigma_y = 0.0;
    double sigma = 0.0;
    double beta = 0.0;
    double xi = 0.0;
    double gen_bound_gap = 0.0;
    double conf_delta = 0.0;
    Eigen::Index n = 0;
    double lambda = 0.0;
};

inline StabilityReport stability_bound(const FunctionalDataset& data, const KernelPtr& kernel,
                                       double lambda, double conf_delta) {
    if (!(lambda > 0.0))
        throw ParameterError("lambda must be positive, got " + std::to_string(lambda));
    if (!(conf_delta > 0.0 && conf_delta < 1.0))
        throw ParameterError("confidence level must lie in (0, 1), got " +
                             std::to_string(conf_delta));
    auto sep = detail::require_separable(kernel);
    const double op_norm = operator_norm_and_trace(sep->op(), data.output_grid()).op_norm;

    StabilityReport rep;
    rep.n = data.size();
    rep.lambda = lambda;
    rep.conf_delta = conf_delta;
    double max_gxx = 0.0;
    for (const auto& x : data.inputs())
        max_gxx = std::max(max_gxx, scalar_eval(sep->scalar(), x, x));
    rep.kappa_sq = max_gxx * op_norm;
    for (const auto& y : data.outputs()) rep.sigma_y = std::max(rep.sigma_y, l2_norm(y));
    rep.sigma = 2.0 * rep.sigma_y * (1.0 + std::sqrt(rep.kappa_sq / lambda));
    rep.beta = rep.sigma * rep.sigma * rep.kappa_sq / (2.0 * lambda * static_cast<double>(rep.n));
    rep.xi = 0.25 * rep.sigma * rep.sigma;
    rep.gen_bound_gap =
        2.0 * rep.beta + (4.0 * static_cast<double>(rep.n) * rep.beta + rep.xi) *
                             std::sqrt(std::log(1.0 / conf_delta) / (2.0 * static_cast<double>(rep.n)));
    return rep;
}

struct StabilityProbeReport {
    double max_loss_diff = 0.0;
    double beta = 0.0;
    bool pass = false;
};

/// Falsification harness for uniform stability: over every leave-one-out
/// index and probe pair, the change in squared loss must stay within beta.
/// Probe outputs must respect the training-set norm bound sigma_y. Fits use
/// full-rank kappa and the averaged-risk convention (solver lambda = n *
/// lambda), under which beta is the exact uniform-stability constant.
inline StabilityProbeReport empirical_stability_check(
    const FunctionalDataset& data, const KernelPtr& kernel, double lambda,
    const std::vector<std::pair<MultiFunction, SampledFunction>>& probes) {
    const StabilityReport bound = stability_bound(data, kernel, lambda, 0.5);
    for (size_t p = 0; p < probes.size(); ++p)
        if (l2_norm(probes[p].second) > bound.sigma_y * (1.0 + 1e-12))
            throw ParameterError("probe " + std::to_string(p) + " output norm " +
                                 std::to_string(l2_norm(probes[p].second)) +
                                 " exceeds the training bound sigma_y = " +
                                 std::to_string(bound.sigma_y));

    auto sep = detail::require_separable(kernel);
    const auto n = data.size();
    const auto m = data.output_grid()->size();
    const double solver_lambda = static_cast<double>(n) * lambda;
    const OperatorEigs oe = fit_operator_eigs(*sep, data.output_grid(), m);
    const FRModel full = fit(data, kernel, solver_lambda, m, OperatorEigPath::discretized, &oe);

    std::vector<SampledFunction> full_preds;
    full_preds.reserve(probes.size());
    for (const auto& probe : probes) full_preds.push_back(predict(full, probe.first));

    std::vector<double> per_fold_max(static_cast<size_t>(n), 0.0);
    parallel_for(static_cast<size_t>(n), [&](size_t i) {
        const FRModel loo = fit(data.without(static_cast<Eigen::Index>(i)), kernel, solver_lambda,
                                m, OperatorEigPath::discretized, &oe);
        double worst = 0.0;
        for (size_t p = 0; p < probes.size(); ++p) {
            const double full_loss = l2_norm_sq(probes[p].second - full_preds[p]);
            const double loo_loss = l2_norm_sq(probes[p].second - predict(loo, probes[p].first));
            worst = std::max(worst, std::abs(full_loss - loo_loss));
        }
        per_fold_max[i] = worst;
    });

    StabilityProbeReport rep;
    rep.beta = bound.beta;
    for (double v : per_fold_max) rep.max_loss_diff = std::max(rep.max_loss_diff, v);
    rep.pass = rep.max_loss_diff <= rep.beta * (1.0 + 1e-6);
    return rep;
}

} // namespace ovkern
