#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "ovkern/errors.hpp"

namespace ovkern {

/// A 1-D quadrature grid on a compact interval: strictly increasing points
/// plus composite-trapezoid weights. Grids are immutable; functions hold a
/// shared reference and cross-grid operations require an explicit resample.
class Grid {
public:
    Grid(Eigen::VectorXd points, Eigen::VectorXd weights)
        : points_(std::move(points)), weights_(std::move(weights)) {
        validate();
    }

    /// Build from points alone; weights follow the composite trapezoid rule,
    /// which is exact for piecewise-linear integrands on this grid.
    static std::shared_ptr<const Grid> from_points(Eigen::VectorXd points) {
        const auto m = points.size();
        if (m < 2)
            throw ValidationError("grid needs at least 2 points, got " + std::to_string(m));
        Eigen::VectorXd w(m);
        w(0) = 0.5 * (points(1) - points(0));
        for (Eigen::Index k = 1; k + 1 < m; ++k)
            w(k) = 0.5 * (points(k + 1) - points(k - 1));
        w(m - 1) = 0.5 * (points(m - 1) - points(m - 2));
        return std::make_shared<const Grid>(std::move(points), std::move(w));
    }

    /// Uniform m-point grid on [a, b] (end weights h/2, interior h).
    static std::shared_ptr<const Grid> uniform(Eigen::Index m, double a = 0.0, double b = 1.0) {
        if (m < 2)
            throw ValidationError("grid needs at least 2 points, got " + std::to_string(m));
        if (!(a < b))
            throw ValidationError("grid interval must satisfy a < b");
        return from_points(Eigen::VectorXd::LinSpaced(m, a, b));
    }

    /// Canonical output grid: 101 uniform points on [0, 1].
    static std::shared_ptr<const Grid> canonical() { return uniform(101, 0.0, 1.0); }

    Eigen::Index size() const { return points_.size(); }
    double lower() const { return points_(0); }
    double upper() const { return points_(points_.size() - 1); }
    const Eigen::VectorXd& points() const { return points_; }
    const Eigen::VectorXd& weights() const { return weights_; }

    bool operator==(const Grid& other) const {
        return points_.size() == other.points_.size() && points_ == other.points_;
    }

private:
    void validate() const {
        const auto m = points_.size();
        if (m < 2)
            throw ValidationError("grid needs at least 2 points, got " + std::to_string(m));
        if (weights_.size() != m)
            throw DimensionError("grid weights length " + std::to_string(weights_.size()) +
                                 " != points length " + std::to_string(m));
        for (Eigen::Index k = 0; k < m; ++k) {
            if (!std::isfinite(points_(k)))
                throw ValidationError("grid point " + std::to_string(k) + " is not finite");
            if (k > 0 && !(points_(k) > points_(k - 1)))
                throw ValidationError("grid points must be strictly increasing at index " +
                                      std::to_string(k));
            if (!(weights_(k) >= 0.0))
                throw ValidationError("grid weight " + std::to_string(k) + " is negative");
        }
        const double span = points_(m - 1) - points_(0);
        const double wsum = weights_.sum();
        if (std::abs(wsum - span) > 1e-12 * std::max(1.0, std::abs(span)))
            throw ValidationError("grid weights sum " + std::to_string(wsum) +
                                  " != interval length " + std::to_string(span));
    }

    Eigen::VectorXd points_;
    Eigen::VectorXd weights_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Two grids are interchangeable when they are the same object or have
/// exactly equal points.
inline bool same_grid(const GridPtr& a, const GridPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    return *a == *b;
}

/// A real function sampled on a grid; the computational stand-in for an
/// element of L2 over the grid's interval.
class SampledFunction {
public:
    SampledFunction(GridPtr grid, Eigen::VectorXd values)
        : grid_(std::move(grid)), values_(std::move(values)) {
        if (!grid_)
            throw ValidationError("sampled function requires a grid");
        if (values_.size() != grid_->size())
            throw DimensionError("values length " + std::to_string(values_.size()) +
                                 " != grid length " + std::to_string(grid_->size()));
        if (!values_.allFinite())
            throw ValidationError("sampled function has non-finite values");
    }

    /// Sample a callable t -> f(t) on the grid.
    template <typename F>
    static SampledFunction from_fn(const GridPtr& grid, F&& f) {
        Eigen::VectorXd v(grid->size());
        for (Eigen::Index k = 0; k < grid->size(); ++k) v(k) = f(grid->points()(k));
        return SampledFunction(grid, std::move(v));
    }

    static SampledFunction constant(const GridPtr& grid, double c) {
        return SampledFunction(grid, Eigen::VectorXd::Constant(grid->size(), c));
    }

    static SampledFunction zero(const GridPtr& grid) { return constant(grid, 0.0); }

    const GridPtr& grid() const { return grid_; }
    const Eigen::VectorXd& values() const { return values_; }
    Eigen::Index size() const { return values_.size(); }

    SampledFunction with_values(Eigen::VectorXd v) const {
        return SampledFunction(grid_, std::move(v));
    }

    SampledFunction operator+(const SampledFunction& o) const {
        require_same_grid(o);
        return with_values(values_ + o.values_);
    }
    SampledFunction operator-(const SampledFunction& o) const {
        require_same_grid(o);
        return with_values(values_ - o.values_);
    }
    SampledFunction operator*(double c) const { return with_values(values_ * c); }

    void require_same_grid(const SampledFunction& o) const {
        if (!same_grid(grid_, o.grid_))
            throw DimensionError("grid mismatch: lengths " + std::to_string(size()) + " and " +
                                 std::to_string(o.size()) + " (resample explicitly)");
    }

private:
    GridPtr grid_;
    Eigen::VectorXd values_;
};

inline SampledFunction operator*(double c, const SampledFunction& f) { return f * c; }

/// Quadrature L2 inner product on a shared grid.
inline double l2_inner(const SampledFunction& f, const SampledFunction& g) {
    f.require_same_grid(g);
    return (f.grid()->weights().array() * f.values().array() * g.values().array()).sum();
}

inline double l2_norm_sq(const SampledFunction& f) { return l2_inner(f, f); }
inline double l2_norm(const SampledFunction& f) { return std::sqrt(std::max(0.0, l2_norm_sq(f))); }

/// One multivariate functional datum: an ordered tuple of p component curves,
/// each on its own grid.
class MultiFunction {
public:
    explicit MultiFunction(std::vector<SampledFunction> components)
        : components_(std::move(components)) {
        if (components_.empty())
            throw ValidationError("multi-function needs at least one component");
    }

    Eigen::Index arity() const { return static_cast<Eigen::Index>(components_.size()); }
    const SampledFunction& component(Eigen::Index c) const { return components_.at(static_cast<size_t>(c)); }
    const std::vector<SampledFunction>& components() const { return components_; }

    MultiFunction operator-(const MultiFunction& o) const {
        require_compatible(o);
        std::vector<SampledFunction> out;
        out.reserve(components_.size());
        for (size_t c = 0; c < components_.size(); ++c)
            out.push_back(components_[c] - o.components_[c]);
        return MultiFunction(std::move(out));
    }

    void require_compatible(const MultiFunction& o) const {
        if (arity() != o.arity())
            throw DimensionError("component count mismatch: " + std::to_string(arity()) +
                                 " vs " + std::to_string(o.arity()));
        for (Eigen::Index c = 0; c < arity(); ++c)
            component(c).require_same_grid(o.component(c));
    }

private:
    std::vector<SampledFunction> components_;
};

/// Sum of componentwise L2 inner products, the inner product of the input
/// product space.
inline double multi_inner(const MultiFunction& x1, const MultiFunction& x2) {
    x1.require_compatible(x2);
    double s = 0.0;
    for (Eigen::Index c = 0; c < x1.arity(); ++c)
        s += l2_inner(x1.component(c), x2.component(c));
    return s;
}

inline double multi_norm_sq(const MultiFunction& x) { return multi_inner(x, x); }

/// Pointwise linear combination sum_i coeffs[i] * funcs[i].
inline SampledFunction combine(const std::vector<double>& coeffs,
                               const std::vector<SampledFunction>& funcs) {
    if (coeffs.empty() || coeffs.size() != funcs.size())
        throw DimensionError("combine needs equal nonempty lengths, got " +
                             std::to_string(coeffs.size()) + " coefficients and " +
                             std::to_string(funcs.size()) + " functions");
    for (size_t i = 1; i < funcs.size(); ++i) funcs[0].require_same_grid(funcs[i]);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(funcs[0].size());
    for (size_t i = 0; i < funcs.size(); ++i) acc += coeffs[i] * funcs[i].values();
    return funcs[0].with_values(std::move(acc));
}

/// Piecewise-linear interpolation of f at the target grid's points.
/// Every target point must lie inside f's span (no extrapolation).
inline SampledFunction resample(const SampledFunction& f, const GridPtr& target) {
    if (same_grid(f.grid(), target)) return SampledFunction(target, f.values());
    const Eigen::VectorXd& sp = f.grid()->points();
    const Eigen::VectorXd& sv = f.values();
    const double lo = sp(0), hi = sp(sp.size() - 1);
    const double slack = 1e-12 * std::max(1.0, hi - lo);
    Eigen::VectorXd out(target->size());
    Eigen::Index seg = 0;
    for (Eigen::Index k = 0; k < target->size(); ++k) {
        const double t = target->points()(k);
        if (t < lo - slack || t > hi + slack)
            throw RangeError("resample target point " + std::to_string(t) +
                             " outside source span [" + std::to_string(lo) + ", " +
                             std::to_string(hi) + "]");
        const double tc = std::min(std::max(t, lo), hi);
        while (seg + 2 < sp.size() && sp(seg + 1) < tc) ++seg;
        const double h = sp(seg + 1) - sp(seg);
        const double a = (tc - sp(seg)) / h;
        out(k) = (1.0 - a) * sv(seg) + a * sv(seg + 1);
    }
    return SampledFunction(target, std::move(out));
}

/// A supervised functional sample set: n input tuples sharing one grid tuple
/// and n output curves sharing one grid.
class FunctionalDataset {
public:
    FunctionalDataset(std::vector<MultiFunction> inputs, std::vector<SampledFunction> outputs)
        : inputs_(std::move(inputs)), outputs_(std::move(outputs)) {
        if (inputs_.empty() || inputs_.size() != outputs_.size())
            throw DimensionError("dataset needs equal nonzero sample counts, got " +
                                 std::to_string(inputs_.size()) + " inputs and " +
                                 std::to_string(outputs_.size()) + " outputs");
        for (size_t i = 1; i < inputs_.size(); ++i) inputs_[0].require_compatible(inputs_[i]);
        for (size_t i = 1; i < outputs_.size(); ++i) outputs_[0].require_same_grid(outputs_[i]);
    }

    Eigen::Index size() const { return static_cast<Eigen::Index>(inputs_.size()); }
    const std::vector<MultiFunction>& inputs() const { return inputs_; }
    const std::vector<SampledFunction>& outputs() const { return outputs_; }
    const GridPtr& output_grid() const { return outputs_.front().grid(); }

    /// Copy with sample `drop` removed (leave-one-curve-out folds).
    FunctionalDataset without(Eigen::Index drop) const {
        std::vector<MultiFunction> xs;
        std::vector<SampledFunction> ys;
        for (Eigen::Index i = 0; i < size(); ++i) {
            if (i == drop) continue;
            xs.push_back(inputs_[static_cast<size_t>(i)]);
            ys.push_back(outputs_[static_cast<size_t>(i)]);
        }
        return FunctionalDataset(std::move(xs), std::move(ys));
    }

private:
    std::vector<MultiFunction> inputs_;
    std::vector<SampledFunction> outputs_;
};

} // namespace ovkern
