#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "ovkern/learn.hpp"
#include "ovkern/rng.hpp"
#include "test_helpers.hpp"

using namespace ovkern;
using ovtest::random_function;
using ovtest::random_multi;

namespace {

KernelPtr intexp_kernel(const GridPtr& grid, double bandwidth = 1.0) {
    return std::make_shared<SeparableKernel>(ScalarKernel::gaussian(bandwidth),
                                             IntegralOp::exponential(), grid);
}

FunctionalDataset random_task(SplitMix64& rng, Eigen::Index n, Eigen::Index p, Eigen::Index m,
                              double out_scale = 1.0) {
    const auto gin = Grid::uniform(m);
    const auto gout = Grid::uniform(m);
    std::vector<MultiFunction> xs;
    std::vector<SampledFunction> ys;
    for (Eigen::Index i = 0; i < n; ++i) {
        xs.push_back(random_multi(rng, gin, p));
        ys.push_back(random_function(rng, gout, out_scale));
    }
    return FunctionalDataset(std::move(xs), std::move(ys));
}

double coeff_diff(const FRModel& a, const FRModel& b) {
    double num = 0.0, den = 0.0;
    for (size_t j = 0; j < a.coeffs.size(); ++j) {
        num += l2_norm_sq(a.coeffs[j] - b.coeffs[j]);
        den += l2_norm_sq(b.coeffs[j]);
    }
    return std::sqrt(num / std::max(den, 1e-300));
}

double tuple_norm_sq(const std::vector<SampledFunction>& fs) {
    double acc = 0.0;
    for (const auto& f : fs) acc += l2_norm_sq(f);
    return acc;
}

} // namespace

TEST_CASE("fit basics", "[learn]") {
    SplitMix64 rng(51);
    const auto gin = Grid::uniform(21);
    const auto gout = Grid::uniform(21);
    const auto kernel = intexp_kernel(gout);

    // zero outputs give zero coefficients and zero predictions
    std::vector<MultiFunction> xs;
    std::vector<SampledFunction> zeros;
    for (int i = 0; i < 4; ++i) {
        xs.push_back(random_multi(rng, gin, 2));
        zeros.push_back(SampledFunction::zero(gout));
    }
    const FunctionalDataset zero_task(xs, zeros);
    const FRModel zero_model = fit(zero_task, kernel, 0.1, 21);
    for (const auto& u : zero_model.coeffs) CHECK(l2_norm(u) == 0.0);
    CHECK(l2_norm(predict(zero_model, xs[0])) == 0.0);

    // coefficient norm bound sum ||u||^2 <= sum ||y||^2 / lambda^2
    const FunctionalDataset task = random_task(rng, 5, 2, 21);
    const double lambda = 0.2;
    const FRModel model = fit(task, kernel, lambda, 21);
    CHECK(tuple_norm_sq(model.coeffs) <=
          tuple_norm_sq(task.outputs()) / (lambda * lambda) * (1.0 + 1e-12));

    CHECK_THROWS_AS(fit(task, kernel, 0.0, 21), ParameterError);
    CHECK_THROWS_AS(fit(task, kernel, 0.1, 0), ParameterError);

    const auto comp = std::make_shared<CompositionKernel>(
        [gout](const MultiFunction&) {
            return SampledFunction::from_fn(gout, [](double t) { return t; });
        },
        gout);
    CHECK_THROWS_AS(fit(task, comp, 0.1, 21), UnsupportedKernelError);
}

TEST_CASE("kappa clamps to the grid size", "[learn]") {
    SplitMix64 rng(68);
    const FunctionalDataset task = random_task(rng, 4, 1, 13);
    const auto kernel = intexp_kernel(task.output_grid());
    const FRModel full = fit(task, kernel, 0.1, 13);
    const FRModel over = fit(task, kernel, 0.1, 130);
    CHECK(over.kappa == 13);
    CHECK(coeff_diff(over, full) == 0.0);
}

TEST_CASE("analytic eigenpath is available for the exponential operator", "[learn]") {
    SplitMix64 rng(69);
    const FunctionalDataset task = random_task(rng, 5, 1, 201);
    const auto kernel = intexp_kernel(task.output_grid());
    const FRModel analytic = fit(task, kernel, 0.1, 8, OperatorEigPath::analytic_exp);
    const FRModel discrete = fit(task, kernel, 0.1, 8);
    // the two eigenpaths agree up to quadrature error of the grid
    const auto x = random_multi(rng, task.inputs()[0].component(0).grid(), 1);
    CHECK(l2_norm(predict(analytic, x) - predict(discrete, x)) <
          1e-3 * std::max(1.0, l2_norm(predict(discrete, x))));

    // only the exponential integral operator has a closed-form eigensystem
    const auto grid = task.output_grid();
    const auto mult = std::make_shared<SeparableKernel>(
        ScalarKernel::gaussian(1.0), MultiplicationOp(SampledFunction::constant(grid, 1.0)),
        grid);
    CHECK_THROWS_AS(fit(task, mult, 0.1, 8, OperatorEigPath::analytic_exp),
                    UnsupportedKernelError);
}

TEST_CASE("spectral fit matches the dense oracle at full rank", "[learn]") {
    SplitMix64 rng(52);
    for (double lambda : {0.01, 0.1, 1.0}) {
        const FunctionalDataset task = random_task(rng, 8, 2, 25);
        const auto kernel = intexp_kernel(task.output_grid());
        const FRModel spectral = fit(task, kernel, lambda, 25);
        const FRModel dense = fit_dense_oracle(task, kernel, lambda);
        CHECK(coeff_diff(spectral, dense) < 1e-8);

        for (int t = 0; t < 3; ++t) {
            const auto x = random_multi(rng, task.inputs()[0].component(0).grid(), 2);
            const auto ps = predict(spectral, x);
            const auto pd = predict(dense, x);
            CHECK(l2_norm(ps - pd) <= 1e-8 * std::max(1.0, l2_norm(pd)));
        }
    }
}

TEST_CASE("oracle equivalence holds for other separable operators", "[learn]") {
    SplitMix64 rng(53);
    const FunctionalDataset task = random_task(rng, 6, 1, 17);
    const auto grid = task.output_grid();
    const auto h = SampledFunction::from_fn(grid, [](double t) { return 1.0 + t; });
    const auto kernel = std::make_shared<SeparableKernel>(ScalarKernel::gaussian(0.8),
                                                          MultiplicationOp(h), grid);
    const FRModel spectral = fit(task, kernel, 0.05, 17);
    const FRModel dense = fit_dense_oracle(task, kernel, 0.05);
    CHECK(coeff_diff(spectral, dense) < 1e-8);
}

TEST_CASE("dense oracle solves the regularized system directly", "[learn]") {
    SplitMix64 rng(54);
    const FunctionalDataset task = random_task(rng, 5, 2, 15);
    const auto kernel = intexp_kernel(task.output_grid());
    const double lambda = 0.1;
    const FRModel model = fit_dense_oracle(task, kernel, lambda);

    // residual of (B + lambda I) u = y in the weighted norm
    const auto sep = std::dynamic_pointer_cast<const SeparableKernel>(kernel);
    const Eigen::MatrixXd B = block_kernel_matrix(*sep, task.inputs());
    const auto m = task.output_grid()->size();
    Eigen::VectorXd u(5 * m), y(5 * m), w(5 * m);
    for (int i = 0; i < 5; ++i) {
        u.segment(i * m, m) = model.coeffs[static_cast<size_t>(i)].values();
        y.segment(i * m, m) = task.outputs()[static_cast<size_t>(i)].values();
        w.segment(i * m, m) = task.output_grid()->weights();
    }
    const Eigen::VectorXd r = B * u + lambda * u - y;
    CHECK(std::sqrt(w.cwiseProduct(r).dot(r)) <= 1e-10 * std::sqrt(w.cwiseProduct(y).dot(y)));

    // doubling lambda shrinks the coefficients
    const FRModel stiffer = fit_dense_oracle(task, kernel, 2.0 * lambda);
    CHECK(tuple_norm_sq(stiffer.coeffs) < tuple_norm_sq(model.coeffs));
}

TEST_CASE("prediction", "[learn]") {
    SplitMix64 rng(55);
    const FunctionalDataset task = random_task(rng, 5, 1, 19);
    const auto grid = task.output_grid();
    const auto kernel = intexp_kernel(grid);
    const double lambda = 0.3;
    const FRModel model = fit(task, kernel, lambda, 19);

    // the regularized system reproduces training outputs: F(x_i) + lambda u_i = y_i
    for (Eigen::Index i = 0; i < task.size(); ++i) {
        const auto fi = predict(model, task.inputs()[static_cast<size_t>(i)]);
        const auto residual =
            fi + model.coeffs[static_cast<size_t>(i)] * lambda - task.outputs()[static_cast<size_t>(i)];
        CHECK(l2_norm(residual) <= 1e-8 * std::max(1.0, l2_norm(task.outputs()[static_cast<size_t>(i)])));
    }

    // a linear scalar kernel with the zero input predicts the zero function
    const auto lin_kernel = std::make_shared<SeparableKernel>(ScalarKernel::linear(),
                                                              IntegralOp::exponential(), grid);
    const FRModel lin_model = fit(task, lin_kernel, lambda, 19);
    const MultiFunction zero_x({SampledFunction::zero(task.inputs()[0].component(0).grid())});
    CHECK(l2_norm(predict(lin_model, zero_x)) == 0.0);

    // grid mismatch is loud
    const MultiFunction off_grid({SampledFunction::zero(Grid::uniform(23))});
    CHECK_THROWS_AS(predict(model, off_grid), DimensionError);
}

TEST_CASE("permuting training samples leaves predictions unchanged", "[learn]") {
    SplitMix64 rng(56);
    const FunctionalDataset task = random_task(rng, 6, 2, 15);
    std::vector<size_t> perm{3, 0, 5, 1, 4, 2};
    std::vector<MultiFunction> xs;
    std::vector<SampledFunction> ys;
    for (size_t i : perm) {
        xs.push_back(task.inputs()[i]);
        ys.push_back(task.outputs()[i]);
    }
    const FunctionalDataset shuffled(xs, ys);
    const auto kernel = intexp_kernel(task.output_grid());
    const FRModel a = fit(task, kernel, 0.1, 15);
    const FRModel b = fit(shuffled, kernel, 0.1, 15);
    const auto x = random_multi(rng, task.inputs()[0].component(0).grid(), 2);
    CHECK(l2_norm(predict(a, x) - predict(b, x)) < 1e-12);
}

TEST_CASE("prediction decays as regularization grows", "[learn]") {
    SplitMix64 rng(57);
    const FunctionalDataset task = random_task(rng, 5, 1, 15);
    const auto kernel = intexp_kernel(task.output_grid());
    const auto x = random_multi(rng, task.inputs()[0].component(0).grid(), 1);
    double prev = std::numeric_limits<double>::infinity();
    for (double lambda : {1.0, 10.0, 100.0, 1e4, 1e6}) {
        const double norm = l2_norm(predict(fit(task, kernel, lambda, 15), x));
        CHECK(norm < prev);
        prev = norm;
    }
    CHECK(prev < 1e-5);
}

TEST_CASE("training error of the retained-span component is monotone in kappa", "[learn]") {
    SplitMix64 rng(58);
    const FunctionalDataset task = random_task(rng, 5, 1, 21);
    const auto grid = task.output_grid();
    const auto kernel = intexp_kernel(grid);
    const double lambda = 0.05;
    double prev = std::numeric_limits<double>::infinity();
    for (Eigen::Index kappa : {1, 2, 4, 8, 16, 21}) {
        const FRModel model = fit(task, kernel, lambda, kappa);
        const auto& oe = model.eigs->op;
        double err = 0.0;
        for (Eigen::Index i = 0; i < task.size(); ++i) {
            const auto fi = predict(model, task.inputs()[static_cast<size_t>(i)]);
            // keep only the prediction component inside the retained span
            Eigen::VectorXd proj = Eigen::VectorXd::Zero(grid->size());
            for (Eigen::Index l = 0; l < oe.count(); ++l) {
                const Eigen::VectorXd w = oe.eigenfunctions.col(l);
                proj += grid->weights().cwiseProduct(w).dot(fi.values()) * w;
            }
            err += l2_norm_sq(task.outputs()[static_cast<size_t>(i)] - fi.with_values(proj));
        }
        CHECK(err <= prev * (1.0 + 1e-12));
        prev = err;
    }
}

TEST_CASE("residual sum of squares error", "[learn]") {
    SplitMix64 rng(59);
    const auto grid = Grid::uniform(33);
    std::vector<SampledFunction> truths, preds;
    for (int i = 0; i < 4; ++i) truths.push_back(random_function(rng, grid));
    CHECK(rsse(truths, truths) == 0.0);

    // constant offset of 1 on [0, 1] integrates to exactly 1
    const std::vector<SampledFunction> shifted{truths[0] + SampledFunction::constant(grid, 1.0)};
    CHECK(rsse(shifted, {truths[0]}) == Catch::Approx(1.0).margin(1e-12));

    for (int i = 0; i < 4; ++i) preds.push_back(random_function(rng, grid));
    double byhand = 0.0;
    for (int i = 0; i < 4; ++i) byhand += l2_norm_sq(preds[static_cast<size_t>(i)] - truths[static_cast<size_t>(i)]);
    CHECK(rsse(preds, truths) == Catch::Approx(byhand).margin(1e-13));

    CHECK_THROWS_AS(rsse(preds, {truths[0]}), DimensionError);
}

TEST_CASE("cross-validation equals the naive per-fold loop exactly", "[learn]") {
    SplitMix64 rng(60);
    const FunctionalDataset task = random_task(rng, 6, 2, 15);
    const auto kernel = intexp_kernel(task.output_grid());
    const double lambda = 0.1;
    const Eigen::Index kappa = 10;

    const double score = cv_score(task, kernel, lambda, kappa);
    CHECK(score >= 0.0);

    double naive = 0.0;
    for (Eigen::Index i = 0; i < task.size(); ++i) {
        const FRModel fold = fit(task.without(i), kernel, lambda, kappa);
        const auto pred = predict(fold, task.inputs()[static_cast<size_t>(i)]);
        naive += (task.outputs()[static_cast<size_t>(i)].values() - pred.values()).squaredNorm();
    }
    CHECK(score == naive);

    CHECK_THROWS_AS(cv_score(FunctionalDataset({task.inputs()[0]}, {task.outputs()[0]}), kernel,
                             lambda, kappa),
                    ParameterError);
}

TEST_CASE("leave-one-out of duplicated data interpolates in the small-lambda limit", "[learn]") {
    SplitMix64 rng(61);
    const auto gin = Grid::uniform(13);
    const auto gout = Grid::uniform(13);
    std::vector<MultiFunction> xs;
    std::vector<SampledFunction> ys;
    for (int i = 0; i < 3; ++i) {
        const auto x = random_multi(rng, gin, 1);
        const auto y = random_function(rng, gout);
        xs.push_back(x);
        xs.push_back(x);
        ys.push_back(y);
        ys.push_back(y);
    }
    const FunctionalDataset dup(xs, ys);
    const auto kernel = intexp_kernel(gout);
    const double score = cv_score(dup, kernel, 1e-10, 13);
    CHECK(score < 1e-8);
}

TEST_CASE("hyperparameter selection", "[learn]") {
    SplitMix64 rng(62);
    const FunctionalDataset task = random_task(rng, 8, 1, 15);
    const auto kernel = intexp_kernel(task.output_grid());

    const auto single = select_hyperparams(task, kernel, {0.5}, {7});
    CHECK(single.lambda == 0.5);
    CHECK(single.kappa == 7);
    CHECK(single.table.size() == 1);

    const std::vector<double> lgrid{1e-3, 1e-1, 1.0};
    const std::vector<Eigen::Index> kgrid{3, 9};
    const auto sel = select_hyperparams(task, kernel, lgrid, kgrid);
    CHECK(sel.table.size() == 6);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& row : sel.table) {
        CHECK(std::isfinite(row.score));
        best = std::min(best, row.score);
    }
    // the reported winner attains the best table score
    for (const auto& row : sel.table)
        if (row.lambda == sel.lambda && row.kappa == sel.kappa) CHECK(row.score == best);

    CHECK_THROWS_AS(select_hyperparams(task, kernel, {}, kgrid), ParameterError);
}

TEST_CASE("selection ties prefer the cheaper model", "[learn]") {
    SplitMix64 rng(70);
    const auto grid = Grid::uniform(15);
    // rank-2 operator: any kappa >= 2 retains the same two modes, so scores
    // tie bitwise across the kappa grid
    Eigen::VectorXd a(15), b(15);
    for (Eigen::Index k = 0; k < 15; ++k) {
        a(k) = std::sin(0.3 * static_cast<double>(k));
        b(k) = std::cos(0.2 * static_cast<double>(k));
    }
    const Eigen::MatrixXd rank2 = a * a.transpose() + b * b.transpose();
    const auto kernel = std::make_shared<SeparableKernel>(ScalarKernel::gaussian(1.0),
                                                          DiscretizedOp(rank2), grid);
    std::vector<MultiFunction> xs;
    std::vector<SampledFunction> ys;
    for (int i = 0; i < 5; ++i) {
        xs.push_back(random_multi(rng, grid, 1));
        ys.push_back(random_function(rng, grid));
    }
    const FunctionalDataset task(xs, ys);
    const auto sel = select_hyperparams(task, kernel, {0.1}, {10, 5});
    CHECK(sel.kappa == 5);
    CHECK(sel.table[0].score == sel.table[1].score);
}

TEST_CASE("selected hyperparameters stay near the best held-out cell", "[learn]") {
    SplitMix64 rng(63);
    const FunctionalDataset train = random_task(rng, 10, 1, 15, 0.5);
    const FunctionalDataset held = random_task(rng, 5, 1, 15, 0.5);
    // build a smooth dependent task: y = T x (a clean linear-in-x target)
    const OperatorSpec op = IntegralOp::exponential();
    const auto remap = [&](const FunctionalDataset& raw) {
        std::vector<SampledFunction> ys;
        for (const auto& x : raw.inputs()) ys.push_back(apply_operator(op, x.component(0)));
        return FunctionalDataset(raw.inputs(), ys);
    };
    const FunctionalDataset train_t = remap(train);
    const FunctionalDataset held_t = remap(held);
    const auto kernel = intexp_kernel(train_t.output_grid());

    const std::vector<double> lgrid{1e-4, 1e-2, 1.0};
    const std::vector<Eigen::Index> kgrid{4, 15};
    const auto sel = select_hyperparams(train_t, kernel, lgrid, kgrid);

    const auto held_rsse = [&](double lambda, Eigen::Index kappa) {
        const FRModel model = fit(train_t, kernel, lambda, kappa);
        std::vector<SampledFunction> preds;
        for (const auto& x : held_t.inputs()) preds.push_back(predict(model, x));
        return rsse(preds, held_t.outputs());
    };
    double best_cell = std::numeric_limits<double>::infinity();
    for (double l : lgrid)
        for (Eigen::Index k : kgrid) best_cell = std::min(best_cell, held_rsse(l, k));
    CHECK(held_rsse(sel.lambda, sel.kappa) <= 1.10 * best_cell + 1e-12);
}

TEST_CASE("stability bound formulas", "[learn]") {
    SplitMix64 rng(64);
    const FunctionalDataset task = random_task(rng, 6, 1, 15);
    const auto grid = task.output_grid();
    const double c = 1.7;
    const auto kernel = std::make_shared<SeparableKernel>(
        ScalarKernel::gaussian(1.0), MultiplicationOp(SampledFunction::constant(grid, c)), grid);

    // kappa_sq bounds ||K(x,x)||_op = g(x,x) sup|h| = c for a gaussian g
    const auto rep = stability_bound(task, kernel, 0.2, 0.05);
    CHECK(rep.kappa_sq == Catch::Approx(c).margin(1e-10));
    double max_norm = 0.0;
    for (const auto& y : task.outputs()) max_norm = std::max(max_norm, l2_norm(y));
    CHECK(rep.sigma_y == Catch::Approx(max_norm).margin(1e-13));
    CHECK(rep.sigma ==
          Catch::Approx(2.0 * max_norm * (1.0 + std::sqrt(c / 0.2))).margin(1e-10));
    CHECK(rep.beta ==
          Catch::Approx(rep.sigma * rep.sigma * rep.kappa_sq / (2.0 * 0.2 * 6.0)).margin(1e-10));
    CHECK(rep.gen_bound_gap >= 2.0 * rep.beta);

    // doubling n by duplication halves beta exactly
    std::vector<MultiFunction> xs2(task.inputs());
    std::vector<SampledFunction> ys2(task.outputs());
    for (Eigen::Index i = 0; i < task.size(); ++i) {
        xs2.push_back(task.inputs()[static_cast<size_t>(i)]);
        ys2.push_back(task.outputs()[static_cast<size_t>(i)]);
    }
    const auto rep2 = stability_bound(FunctionalDataset(xs2, ys2), kernel, 0.2, 0.05);
    CHECK(rep2.beta == Catch::Approx(0.5 * rep.beta).margin(1e-12 * rep.beta));

    // beta decreases when lambda increases
    const auto stiff = stability_bound(task, kernel, 0.4, 0.05);
    CHECK(stiff.beta < rep.beta);

    CHECK_THROWS_AS(stability_bound(task, kernel, 0.2, 1.5), ParameterError);
}

TEST_CASE("empirical stability check", "[learn]") {
    SplitMix64 rng(65);
    const FunctionalDataset task = random_task(rng, 6, 1, 13);
    const auto kernel = intexp_kernel(task.output_grid());
    const double lambda = 0.3;

    std::vector<std::pair<MultiFunction, SampledFunction>> probes;
    double sigma_y = 0.0;
    for (const auto& y : task.outputs()) sigma_y = std::max(sigma_y, l2_norm(y));
    for (int p = 0; p < 8; ++p) {
        const auto x = random_multi(rng, task.inputs()[0].component(0).grid(), 1);
        auto y = random_function(rng, task.output_grid());
        y = y * (0.9 * sigma_y / std::max(l2_norm(y), 1e-12));
        probes.emplace_back(x, y);
    }
    const auto rep = empirical_stability_check(task, kernel, lambda, probes);
    CHECK(rep.pass);
    CHECK(rep.max_loss_diff <= rep.beta * (1.0 + 1e-6));
    CHECK(rep.max_loss_diff > 0.0);

    // an oversized probe violates the norm hypothesis
    std::vector<std::pair<MultiFunction, SampledFunction>> bad{
        {probes[0].first, probes[0].second * (3.0 * sigma_y / l2_norm(probes[0].second))}};
    CHECK_THROWS_AS(empirical_stability_check(task, kernel, lambda, bad), ParameterError);
}

TEST_CASE("stability check fits under the averaged-risk convention", "[learn]") {
    SplitMix64 rng(66);
    const FunctionalDataset task = random_task(rng, 5, 1, 13);
    const auto kernel = intexp_kernel(task.output_grid());
    const double lambda = 0.5;
    const auto n = task.size();
    const auto m = task.output_grid()->size();

    // with the probe output equal to the full-fit prediction, the loss gap at
    // fold i is exactly ||F_Z(x) - F_{Z minus i}(x)||^2
    const FRModel full = fit(task, kernel, static_cast<double>(n) * lambda, m);
    const auto x = random_multi(rng, task.inputs()[0].component(0).grid(), 1);
    SampledFunction y = predict(full, x);
    double sigma_y = 0.0;
    for (const auto& out : task.outputs()) sigma_y = std::max(sigma_y, l2_norm(out));
    REQUIRE(l2_norm(y) <= sigma_y); // keep the probe admissible

    double expected = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const FRModel loo = fit(task.without(i), kernel, static_cast<double>(n) * lambda, m);
        expected = std::max(expected, l2_norm_sq(y - predict(loo, x)));
    }
    const auto rep = empirical_stability_check(task, kernel, lambda, {{x, y}});
    CHECK(rep.max_loss_diff == Catch::Approx(expected).margin(1e-12 * std::max(1.0, expected)));
}

TEST_CASE("removing one copy of fully duplicated data changes nothing in the limit", "[learn]") {
    SplitMix64 rng(67);
    const auto gin = Grid::uniform(11);
    const auto gout = Grid::uniform(11);
    const auto x = random_multi(rng, gin, 1);
    const auto y = random_function(rng, gout) * 0.5;
    const std::vector<MultiFunction> xs(6, x);
    const std::vector<SampledFunction> ys(6, y);
    const FunctionalDataset dup(xs, ys);
    const auto kernel = intexp_kernel(gout);

    std::vector<std::pair<MultiFunction, SampledFunction>> probes{{x, y * 0.5}};
    const auto rep = empirical_stability_check(dup, kernel, 1e-9, probes);
    // every leave-one-out minimizer converges to the shared interpolant
    CHECK(rep.max_loss_diff < 1e-7);
}
