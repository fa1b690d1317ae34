#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ovkern/errors.hpp"
#include "ovkern/grid.hpp"

namespace ovkern {

// ---------------------------------------------------------------------------
// Scalar kernels on multivariate functional inputs
// ---------------------------------------------------------------------------

struct ScalarKernel {
    enum class Kind { linear, gaussian };

    Kind kind = Kind::gaussian;
    double bandwidth = 1.0; // gaussian only

    static ScalarKernel linear() { return {Kind::linear, 0.0}; }
    static ScalarKernel gaussian(double bandwidth) {
        if (!(bandwidth > 0.0))
            throw ParameterError("gaussian bandwidth must be positive, got " +
                                 std::to_string(bandwidth));
        return {Kind::gaussian, bandwidth};
    }
};

inline double scalar_eval(const ScalarKernel& g, const MultiFunction& x1,
                          const MultiFunction& x2) {
    switch (g.kind) {
    case ScalarKernel::Kind::linear:
        return multi_inner(x1, x2);
    case ScalarKernel::Kind::gaussian: {
        const double d2 = multi_norm_sq(x1 - x2);
        return std::exp(-d2 / (2.0 * g.bandwidth * g.bandwidth));
    }
    }
    throw ParameterError("unknown scalar kernel kind");
}

/// Symmetric Gram matrix G_ij = g(x_i, x_j).
inline Eigen::MatrixXd gram(const ScalarKernel& g, const std::vector<MultiFunction>& X) {
    if (X.empty()) throw DimensionError("gram needs at least one input");
    const auto n = static_cast<Eigen::Index>(X.size());
    Eigen::MatrixXd G(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = scalar_eval(g, X[static_cast<size_t>(i)], X[static_cast<size_t>(j)]);
            G(i, j) = v;
            G(j, i) = v;
        }
    return G;
}

// ---------------------------------------------------------------------------
// Operator specifications T on the output space
// ---------------------------------------------------------------------------

/// (T f)(t) = h(t) f(t) with h strictly positive on its grid.
struct MultiplicationOp {
    SampledFunction h;

    explicit MultiplicationOp(SampledFunction h_) : h(std::move(h_)) {
        for (Eigen::Index k = 0; k < h.size(); ++k)
            if (!(h.values()(k) > 0.0))
                throw ValidationError("multiplication operator requires h > 0, violated at grid index " +
                                      std::to_string(k));
    }
};

/// (T f)(t) = integral of kernel_fn(s, t) f(s) ds over the output interval.
struct IntegralOp {
    std::function<double(double, double)> kernel_fn;
    std::string kind; // "exp" for e^{-|t-s|}, "custom" otherwise

    static IntegralOp exponential() {
        return IntegralOp{[](double s, double t) { return std::exp(-std::abs(t - s)); }, "exp"};
    }

    static IntegralOp custom(std::function<double(double, double)> fn) {
        IntegralOp op{std::move(fn), "custom"};
        // symmetry spot-check on deterministic pseudo-random pairs in [0,1]^2
        unsigned long long s = 0x1234abcdULL;
        for (int trial = 0; trial < 16; ++trial) {
            s = s * 6364136223846793005ULL + 1442695040888963407ULL;
            const double a = static_cast<double>(s >> 11) * 0x1.0p-53;
            s = s * 6364136223846793005ULL + 1442695040888963407ULL;
            const double b = static_cast<double>(s >> 11) * 0x1.0p-53;
            if (std::abs(op.kernel_fn(a, b) - op.kernel_fn(b, a)) > 1e-12)
                throw ValidationError("integral operator kernel must be symmetric; k(" +
                                      std::to_string(a) + "," + std::to_string(b) + ") differs");
        }
        return op;
    }
};

/// A symmetric m x m array A acting through the quadrature weights:
/// (T f) = A (weights .* f). Stands in for a generic compact self-adjoint T.
struct DiscretizedOp {
    Eigen::MatrixXd matrix;

    explicit DiscretizedOp(Eigen::MatrixXd m) : matrix(std::move(m)) {
        if (matrix.rows() != matrix.cols())
            throw DimensionError("discretized operator array must be square, got " +
                                 std::to_string(matrix.rows()) + "x" + std::to_string(matrix.cols()));
        const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
        if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
            throw ValidationError("discretized operator array is not symmetric within 1e-10");
    }
};

using OperatorSpec = std::variant<MultiplicationOp, IntegralOp, DiscretizedOp>;

/// Identity operator, supported through the multiplication/discretized path.
inline OperatorSpec identity_op(const GridPtr& grid) {
    return MultiplicationOp(SampledFunction::constant(grid, 1.0));
}

namespace detail {

inline void require_op_grid(const OperatorSpec& T, const GridPtr& grid) {
    if (const auto* mult = std::get_if<MultiplicationOp>(&T)) {
        if (!same_grid(mult->h.grid(), grid))
            throw DimensionError("multiplication operator h lives on a grid of length " +
                                 std::to_string(mult->h.size()) + ", expected " +
                                 std::to_string(grid->size()));
    } else if (const auto* disc = std::get_if<DiscretizedOp>(&T)) {
        if (disc->matrix.rows() != grid->size())
            throw DimensionError("discretized operator size " + std::to_string(disc->matrix.rows()) +
                                 " != grid length " + std::to_string(grid->size()));
    }
}

} // namespace detail

/// Apply T to a curve on the output grid.
inline SampledFunction apply_operator(const OperatorSpec& T, const SampledFunction& f) {
    detail::require_op_grid(T, f.grid());
    if (const auto* mult = std::get_if<MultiplicationOp>(&T))
        return f.with_values(mult->h.values().cwiseProduct(f.values()));
    const Eigen::VectorXd& w = f.grid()->weights();
    if (const auto* integ = std::get_if<IntegralOp>(&T)) {
        const Eigen::VectorXd& t = f.grid()->points();
        Eigen::VectorXd out(f.size());
        for (Eigen::Index i = 0; i < f.size(); ++i) {
            double acc = 0.0;
            for (Eigen::Index k = 0; k < f.size(); ++k)
                acc += w(k) * integ->kernel_fn(t(k), t(i)) * f.values()(k);
            out(i) = acc;
        }
        return f.with_values(std::move(out));
    }
    const auto& disc = std::get<DiscretizedOp>(T);
    return f.with_values(disc.matrix * w.cwiseProduct(f.values()));
}

/// The symmetric array A with action (T f) = A (weights .* f).
inline Eigen::MatrixXd kernel_array(const OperatorSpec& T, const GridPtr& grid) {
    detail::require_op_grid(T, grid);
    const auto m = grid->size();
    if (const auto* mult = std::get_if<MultiplicationOp>(&T)) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
        a.diagonal() = mult->h.values().cwiseQuotient(grid->weights());
        return a;
    }
    if (const auto* integ = std::get_if<IntegralOp>(&T)) {
        Eigen::MatrixXd a(m, m);
        const Eigen::VectorXd& t = grid->points();
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j <= i; ++j) {
                const double v = integ->kernel_fn(t(j), t(i));
                a(i, j) = v;
                a(j, i) = v;
            }
        return a;
    }
    return std::get<DiscretizedOp>(T).matrix;
}

/// Matrix of the action on sample values: (T f)_values = M f_values.
inline Eigen::MatrixXd action_matrix(const OperatorSpec& T, const GridPtr& grid) {
    detail::require_op_grid(T, grid);
    if (const auto* mult = std::get_if<MultiplicationOp>(&T)) {
        Eigen::MatrixXd mtx = Eigen::MatrixXd::Zero(grid->size(), grid->size());
        mtx.diagonal() = mult->h.values();
        return mtx;
    }
    return kernel_array(T, grid) * grid->weights().asDiagonal();
}

/// Similarity transform W^{1/2} M W^{-1/2} of the action, symmetric for
/// self-adjoint T in the weighted L2 geometry.
inline Eigen::MatrixXd weighted_symmetric(const OperatorSpec& T, const GridPtr& grid) {
    detail::require_op_grid(T, grid);
    if (const auto* mult = std::get_if<MultiplicationOp>(&T)) {
        Eigen::MatrixXd mtx = Eigen::MatrixXd::Zero(grid->size(), grid->size());
        mtx.diagonal() = mult->h.values();
        return mtx;
    }
    const Eigen::VectorXd sw = grid->weights().cwiseSqrt();
    return sw.asDiagonal() * kernel_array(T, grid) * sw.asDiagonal();
}

struct OperatorSpectrumReport {
    double op_norm = 0.0;
    double trace_estimate = 0.0;
    // set for multiplication operators, whose continuum trace diverges even
    // though the operator norm stays bounded
    bool trace_caveat = false;
};

inline OperatorSpectrumReport operator_norm_and_trace(const OperatorSpec& T, const GridPtr& grid) {
    Eigen::MatrixXd s = weighted_symmetric(T, grid);
    s = 0.5 * (s + s.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    OperatorSpectrumReport rep;
    rep.op_norm = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
    rep.trace_estimate = ev.sum();
    rep.trace_caveat = std::holds_alternative<MultiplicationOp>(T);
    return rep;
}

// ---------------------------------------------------------------------------
// Operator-valued kernels
// ---------------------------------------------------------------------------

/// An operator-valued kernel K(x1, x2) acting on output curves.
/// `block_action` returns the m x m matrix of K(x1, x2) acting on sample
/// values (quadrature weights already folded in).
class OperatorValuedKernel {
public:
    virtual ~OperatorValuedKernel() = default;

    virtual SampledFunction apply(const MultiFunction& x1, const MultiFunction& x2,
                                  const SampledFunction& y) const = 0;
    virtual Eigen::MatrixXd block_action(const MultiFunction& x1,
                                         const MultiFunction& x2) const = 0;
    virtual const GridPtr& output_grid() const = 0;

    /// For kernels of the form K(x1,x2) = scalar(x1,x2) * M with a fixed
    /// operator M, the action matrix M; nullopt otherwise. Used by the
    /// product combinator's commutation test, where the scalar factors
    /// cancel out of the relative commutator norm.
    virtual std::optional<Eigen::MatrixXd> operator_profile() const { return std::nullopt; }
};

using KernelPtr = std::shared_ptr<const OperatorValuedKernel>;

/// K(x1, x2) = g(x1, x2) T: a scalar kernel times a fixed operator. The only
/// family accepted by the spectral solver.
class SeparableKernel : public OperatorValuedKernel {
public:
    SeparableKernel(ScalarKernel g, OperatorSpec T, GridPtr out_grid)
        : g_(g), T_(std::move(T)), out_grid_(std::move(out_grid)) {
        detail::require_op_grid(T_, out_grid_);
        action_ = action_matrix(T_, out_grid_);
    }

    const ScalarKernel& scalar() const { return g_; }
    const OperatorSpec& op() const { return T_; }
    const Eigen::MatrixXd& op_action() const { return action_; }

    SampledFunction apply(const MultiFunction& x1, const MultiFunction& x2,
                          const SampledFunction& y) const override {
        const double s = scalar_eval(g_, x1, x2);
        return apply_operator(T_, y) * s;
    }

    Eigen::MatrixXd block_action(const MultiFunction& x1, const MultiFunction& x2) const override {
        return scalar_eval(g_, x1, x2) * action_;
    }

    const GridPtr& output_grid() const override { return out_grid_; }

    std::optional<Eigen::MatrixXd> operator_profile() const override { return action_; }

private:
    ScalarKernel g_;
    OperatorSpec T_;
    GridPtr out_grid_;
    Eigen::MatrixXd action_;
};

/// K(x1, x2) = C_{psi(x1)} C_{psi(x2)}^* built from composition operators on
/// a scalar RKHS over the output interval. Supported for evaluation and
/// positivity probing only; the spectral solver rejects it (its operator part
/// is input-dependent and not separable).
class CompositionKernel : public OperatorValuedKernel {
public:
    using WarpFn = std::function<SampledFunction(const MultiFunction&)>;
    using ScalarFn = std::function<double(double, double)>;

    static ScalarFn default_rkhs_kernel() {
        return [](double s, double t) { return std::exp(-std::abs(t - s)); };
    }

    CompositionKernel(WarpFn psi, GridPtr out_grid, ScalarFn k = default_rkhs_kernel())
        : psi_(std::move(psi)), k_(std::move(k)), out_grid_(std::move(out_grid)) {
        const auto m = out_grid_->size();
        const Eigen::VectorXd& t = out_grid_->points();
        kmat_.resize(m, m);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j <= i; ++j) {
                const double v = k_(t(j), t(i));
                kmat_(i, j) = v;
                kmat_(j, i) = v;
            }
        solver_.compute(kmat_);
        rcond_ = solver_.rcond();
    }

    SampledFunction apply(const MultiFunction& x1, const MultiFunction& x2,
                          const SampledFunction& y) const override {
        require_output_grid(y);
        const Eigen::VectorXd c = expand(y);
        const SampledFunction w1 = warp(x1);
        const SampledFunction w2 = warp(x2);
        const auto m = out_grid_->size();
        Eigen::VectorXd out(m);
        for (Eigen::Index a = 0; a < m; ++a) {
            double acc = 0.0;
            for (Eigen::Index l = 0; l < m; ++l) acc += c(l) * k_(w2.values()(l), w1.values()(a));
            out(a) = acc;
        }
        return SampledFunction(out_grid_, std::move(out));
    }

    Eigen::MatrixXd block_action(const MultiFunction& x1, const MultiFunction& x2) const override {
        check_conditioning();
        const SampledFunction w1 = warp(x1);
        const SampledFunction w2 = warp(x2);
        const auto m = out_grid_->size();
        Eigen::MatrixXd kpsi(m, m);
        for (Eigen::Index a = 0; a < m; ++a)
            for (Eigen::Index l = 0; l < m; ++l) kpsi(a, l) = k_(w2.values()(l), w1.values()(a));
        return solver_.solve(kpsi.transpose()).transpose();
    }

    const GridPtr& output_grid() const override { return out_grid_; }

    double rcond() const { return rcond_; }
    const Eigen::MatrixXd& rkhs_gram() const { return kmat_; }
    const ScalarFn& rkhs_kernel() const { return k_; }
    SampledFunction warp(const MultiFunction& x) const {
        SampledFunction w = psi_(x);
        if (!same_grid(w.grid(), out_grid_))
            throw DimensionError("warp must be sampled on the output grid");
        const double lo = out_grid_->lower(), hi = out_grid_->upper();
        for (Eigen::Index i = 0; i < w.size(); ++i)
            if (w.values()(i) < lo - 1e-12 || w.values()(i) > hi + 1e-12)
                throw ValidationError("warp value " + std::to_string(w.values()(i)) +
                                      " leaves the output interval");
        return w;
    }

    /// Coefficients of y in the expansion over k(t_l, .).
    Eigen::VectorXd expand(const SampledFunction& y) const {
        check_conditioning();
        return solver_.solve(y.values());
    }

private:
    void check_conditioning() const {
        if (!(rcond_ > 1e-12))
            throw ConditioningError("composition kernel expansion system is ill-conditioned "
                                    "(reciprocal condition estimate " +
                                    std::to_string(rcond_) + ")");
    }

    void require_output_grid(const SampledFunction& y) const {
        if (!same_grid(y.grid(), out_grid_))
            throw DimensionError("curve length " + std::to_string(y.size()) +
                                 " != output grid length " + std::to_string(out_grid_->size()));
    }

    WarpFn psi_;
    ScalarFn k_;
    GridPtr out_grid_;
    Eigen::MatrixXd kmat_;
    Eigen::LDLT<Eigen::MatrixXd> solver_;
    double rcond_ = 0.0;
};

/// Positivity-preserving combinations: sums, commuting products, and
/// T H T^* conjugations of operator-valued kernels.
class CombinedKernel : public OperatorValuedKernel {
public:
    enum class Node { sum, product, conjugate };

    static CombinedKernel sum(KernelPtr a, KernelPtr b) {
        require_shared_grid(*a, *b);
        CombinedKernel k(Node::sum, std::move(a), std::move(b));
        return k;
    }

    /// Requires the operand operators to commute; verified numerically on the
    /// discretized operators (relative commutator within 1e-8).
    static CombinedKernel product(KernelPtr a, KernelPtr b) {
        require_shared_grid(*a, *b);
        const auto pa = a->operator_profile();
        const auto pb = b->operator_profile();
        if (!pa || !pb)
            throw CombinatorError("product combinator requires operands with fixed operator parts "
                                  "so commutation can be verified");
        const Eigen::MatrixXd hg = (*pa) * (*pb);
        const Eigen::MatrixXd gh = (*pb) * (*pa);
        const double comm = (hg - gh).norm();
        if (comm > 1e-8 * (hg.norm() + 1e-30))
            throw CombinatorError("product combinator rejected: operand operators do not commute "
                                  "(relative commutator " +
                                  std::to_string(comm / (hg.norm() + 1e-30)) + ")");
        CombinedKernel k(Node::product, std::move(a), std::move(b));
        k.commuting_verified_ = true;
        return k;
    }

    static CombinedKernel conjugate(OperatorSpec T, KernelPtr h) {
        const GridPtr& grid = h->output_grid();
        detail::require_op_grid(T, grid);
        CombinedKernel k(Node::conjugate, std::move(h), nullptr);
        k.conj_action_ = action_matrix(T, grid);
        // weighted transpose W^{-1} M^T W realizes the adjoint in L2
        k.conj_adjoint_ = grid->weights().cwiseInverse().asDiagonal() *
                          k.conj_action_.transpose() * grid->weights().asDiagonal();
        return k;
    }

    Node node() const { return node_; }
    bool commuting_verified() const { return commuting_verified_; }

    SampledFunction apply(const MultiFunction& x1, const MultiFunction& x2,
                          const SampledFunction& y) const override {
        switch (node_) {
        case Node::sum:
            return left_->apply(x1, x2, y) + right_->apply(x1, x2, y);
        case Node::product:
            return left_->apply(x1, x2, right_->apply(x1, x2, y));
        case Node::conjugate: {
            const SampledFunction ty = y.with_values(conj_adjoint_ * y.values());
            const SampledFunction hy = left_->apply(x1, x2, ty);
            return hy.with_values(conj_action_ * hy.values());
        }
        }
        throw ParameterError("unknown combinator node");
    }

    Eigen::MatrixXd block_action(const MultiFunction& x1, const MultiFunction& x2) const override {
        switch (node_) {
        case Node::sum:
            return left_->block_action(x1, x2) + right_->block_action(x1, x2);
        case Node::product:
            return left_->block_action(x1, x2) * right_->block_action(x1, x2);
        case Node::conjugate:
            return conj_action_ * left_->block_action(x1, x2) * conj_adjoint_;
        }
        throw ParameterError("unknown combinator node");
    }

    const GridPtr& output_grid() const override { return left_->output_grid(); }

    std::optional<Eigen::MatrixXd> operator_profile() const override {
        switch (node_) {
        case Node::sum:
            return std::nullopt; // sums are not scalar-times-fixed-operator
        case Node::product: {
            const auto pa = left_->operator_profile();
            const auto pb = right_->operator_profile();
            if (pa && pb) return (*pa) * (*pb);
            return std::nullopt;
        }
        case Node::conjugate: {
            const auto p = left_->operator_profile();
            if (p) return conj_action_ * (*p) * conj_adjoint_;
            return std::nullopt;
        }
        }
        return std::nullopt;
    }

private:
    CombinedKernel(Node node, KernelPtr left, KernelPtr right)
        : node_(node), left_(std::move(left)), right_(std::move(right)) {}

    static void require_shared_grid(const OperatorValuedKernel& a, const OperatorValuedKernel& b) {
        if (!same_grid(a.output_grid(), b.output_grid()))
            throw DimensionError("combined kernels must act on the same output grid");
    }

    Node node_;
    KernelPtr left_;
    KernelPtr right_; // null for conjugate
    Eigen::MatrixXd conj_action_;
    Eigen::MatrixXd conj_adjoint_;
    bool commuting_verified_ = false;
};

inline CombinedKernel kernel_sum(KernelPtr a, KernelPtr b) {
    return CombinedKernel::sum(std::move(a), std::move(b));
}
inline CombinedKernel kernel_product(KernelPtr a, KernelPtr b) {
    return CombinedKernel::product(std::move(a), std::move(b));
}
inline CombinedKernel kernel_conjugate(OperatorSpec T, KernelPtr h) {
    return CombinedKernel::conjugate(std::move(T), std::move(h));
}

inline SampledFunction kernel_apply(const OperatorValuedKernel& K, const MultiFunction& x1,
                                    const MultiFunction& x2, const SampledFunction& y) {
    return K.apply(x1, x2, y);
}

// ---------------------------------------------------------------------------
// Block operator kernel matrix and positivity certification
// ---------------------------------------------------------------------------

constexpr Eigen::Index kBlockMatrixCap = 4000;

/// Assemble the (n m) x (n m) block matrix with block (i, j) the action of
/// K(x_i, x_j) on sample values. Desk-scale oracle path; capped at `cap`
/// total rows.
inline Eigen::MatrixXd block_kernel_matrix(const OperatorValuedKernel& K,
                                           const std::vector<MultiFunction>& X,
                                           Eigen::Index cap = kBlockMatrixCap) {
    if (X.empty()) throw DimensionError("block kernel matrix needs at least one input");
    const auto n = static_cast<Eigen::Index>(X.size());
    const auto m = K.output_grid()->size();
    if (n * m > cap)
        throw SizeError("block kernel matrix size " + std::to_string(n * m) + " exceeds cap " +
                        std::to_string(cap) + "; use the spectral path instead");
    Eigen::MatrixXd B(n * m, n * m);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            B.block(i * m, j * m, m, m) =
                K.block_action(X[static_cast<size_t>(i)], X[static_cast<size_t>(j)]);
    return B;
}

struct PositivityReport {
    double min_eig = 0.0;
    double max_eig = 0.0;
    bool pass = false;
};

/// Certify kernel nonnegativity on an input set: eigenvalues of the block
/// matrix in the quadrature-weighted geometry. The similarity transform
/// W^{1/2} B W^{-1/2} of the action blocks equals W^{1/2} A W^{1/2} on the
/// weight-stripped arrays and is symmetric for Hermitian kernels.
inline PositivityReport positivity_check(const OperatorValuedKernel& K,
                                         const std::vector<MultiFunction>& X,
                                         Eigen::Index cap = kBlockMatrixCap) {
    Eigen::MatrixXd B = block_kernel_matrix(K, X, cap);
    const auto n = static_cast<Eigen::Index>(X.size());
    const auto m = K.output_grid()->size();
    Eigen::VectorXd sw(n * m);
    for (Eigen::Index i = 0; i < n; ++i)
        sw.segment(i * m, m) = K.output_grid()->weights().cwiseSqrt();
    Eigen::MatrixXd S = sw.asDiagonal() * B * sw.cwiseInverse().asDiagonal();
    S = 0.5 * (S + S.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
    PositivityReport rep;
    rep.min_eig = es.eigenvalues()(0);
    rep.max_eig = es.eigenvalues()(es.eigenvalues().size() - 1);
    rep.pass = rep.min_eig >= -1e-8 * std::max(1.0, rep.max_eig);
    return rep;
}

} // namespace ovkern
