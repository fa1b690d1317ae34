#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>

#include "ovkern/classify.hpp"
#include "ovkern/datagen.hpp"
#include "ovkern/rng.hpp"
#include "test_helpers.hpp"

using namespace ovkern;
using ovtest::random_multi;

namespace {

KernelPtr gauss_kernel(const GridPtr& grid, double bandwidth = 1.0) {
    return std::make_shared<SeparableKernel>(ScalarKernel::gaussian(bandwidth),
                                             IntegralOp::exponential(), grid);
}

} // namespace

TEST_CASE("label templates", "[classify]") {
    const auto g = Grid::uniform(41);
    const auto plus = make_label(1, 1.0, g);
    CHECK(l2_norm(plus) == Catch::Approx(1.0).margin(1e-12));
    const auto minus = make_label(-1, 1.0, g);
    CHECK((minus.values() + plus.values()).cwiseAbs().maxCoeff() == 0.0);

    const double c = 2.25;
    CHECK(l2_inner(make_label(1, c, g), make_label(-1, c, g)) ==
          Catch::Approx(-c * c).margin(1e-10));

    CHECK_THROWS_AS(make_label(1, 0.0, g), ParameterError);
    CHECK_THROWS_AS(make_label(2, 1.0, g), ParameterError);
    CHECK_THROWS_AS(make_label(1, 1.0, Grid::uniform(11, 0.0, 2.0)), ValidationError);
}

TEST_CASE("binary training is sign symmetric", "[classify]") {
    SplitMix64 rng(71);
    const auto g = Grid::uniform(21);
    std::vector<MultiFunction> xs;
    std::vector<int> labels;
    for (int i = 0; i < 6; ++i) {
        xs.push_back(random_multi(rng, g, 1));
        labels.push_back(i % 2 + 1);
    }
    const LabeledFunctionalDataset data(xs, labels);
    const auto clf = frlsc_fit(data, gauss_kernel(g), 0.1, 21);
    REQUIRE(clf.models.size() == 2);
    for (size_t j = 0; j < 6; ++j)
        CHECK((clf.models[0].coeffs[j].values() + clf.models[1].coeffs[j].values())
                  .cwiseAbs()
                  .maxCoeff() < 1e-14);

    // for two classes the decision agrees with the sign of score1 - score2
    for (int t = 0; t < 5; ++t) {
        const auto x = random_multi(rng, g, 1);
        const auto pred = frlsc_predict(clf, x);
        const double diff = pred.scores[0] - pred.scores[1];
        CHECK(pred.class_id == (diff >= 0.0 ? 1 : 2));
    }
}

TEST_CASE("an identically repeated class interpolates its label", "[classify]") {
    SplitMix64 rng(72);
    const auto g = Grid::uniform(17);
    const auto shared = random_multi(rng, g, 1);
    // class 1 inputs are all identical; in the interpolation limit its model
    // reproduces +h at those points
    std::vector<MultiFunction> xs{shared, shared, random_multi(rng, g, 1),
                                  random_multi(rng, g, 1), random_multi(rng, g, 1)};
    std::vector<int> labels{1, 1, 2, 2, 2};
    const LabeledFunctionalDataset data(xs, labels);
    const auto clf = frlsc_fit(data, gauss_kernel(g), 1e-9, 17);
    const auto at_class1 = predict(clf.models[0], shared);
    CHECK(l2_norm(at_class1 - clf.label_template) < 1e-4);
}

TEST_CASE("missing classes are rejected", "[classify]") {
    SplitMix64 rng(73);
    const auto g = Grid::uniform(15);
    std::vector<MultiFunction> xs{random_multi(rng, g, 1), random_multi(rng, g, 1)};
    const LabeledFunctionalDataset gappy(xs, {1, 3}); // class 2 absent
    CHECK_THROWS_AS(frlsc_fit(gappy, gauss_kernel(g), 0.1, 15), ValidationError);
}

TEST_CASE("separable synthetic task trains to full accuracy", "[classify]") {
    SynthSpec spec;
    spec.task = SynthSpec::Task::classification;
    spec.seed = 404;
    spec.n = 18;
    spec.p = 2;
    spec.m_in = 31;
    spec.m_out = 31;
    spec.num_classes = 3;
    spec.noise_sd = 0.25;
    spec.class_sep = 1.0;
    auto [data, truth] = gen_classification_task(spec);
    CHECK(truth.margin >= 2.0 * spec.noise_sd);

    const auto g = Grid::uniform(spec.m_out);
    const auto clf = frlsc_fit(data, gauss_kernel(g), 0.01, 10);
    const auto cm = confusion_matrix(clf, data);
    CHECK(recognition_rate(cm) == 100.0);

    // a training curve deep inside its class keeps its label
    const auto pred = frlsc_predict(clf, data.inputs[0]);
    CHECK(pred.class_id == data.labels[0]);

    // negating every model's coefficients flips every score
    FunctionalClassifier flipped = clf;
    for (auto& model : flipped.models) {
        for (auto& u : model.coeffs) u = u * -1.0;
        for (auto& a : model.applied) a = a * -1.0;
    }
    const auto neg_pred = frlsc_predict(flipped, data.inputs[0]);
    for (size_t c = 0; c < pred.scores.size(); ++c)
        CHECK(neg_pred.scores[c] == Catch::Approx(-pred.scores[c]).margin(1e-12));
}

TEST_CASE("argmax is invariant to a common positive label rescale", "[classify]") {
    SynthSpec spec;
    spec.task = SynthSpec::Task::classification;
    spec.seed = 405;
    spec.n = 12;
    spec.p = 1;
    spec.m_in = 21;
    spec.m_out = 21;
    spec.num_classes = 3;
    spec.noise_sd = 0.2;
    auto [data, truth] = gen_classification_task(spec);
    const auto g = Grid::uniform(spec.m_out);
    const auto kernel = gauss_kernel(g);
    const auto clf1 = frlsc_fit(data, kernel, 0.05, 10);
    const auto clf5 = frlsc_fit(data, kernel, 0.05, 10, make_label(1, 5.0, g));

    SplitMix64 rng(74);
    for (int t = 0; t < 6; ++t) {
        const auto x = random_multi(rng, data.inputs[0].component(0).grid(), 1);
        const auto p1 = frlsc_predict(clf1, x);
        const auto p5 = frlsc_predict(clf5, x);
        CHECK(p1.class_id == p5.class_id);
        // scores scale by the squared label scale
        for (size_t c = 0; c < p1.scores.size(); ++c)
            CHECK(p5.scores[c] == Catch::Approx(25.0 * p1.scores[c])
                                      .margin(1e-9 * (1.0 + std::abs(p1.scores[c]))));
    }
}

TEST_CASE("tie-breaking picks the lowest class id", "[classify]") {
    SplitMix64 rng(75);
    const auto g = Grid::uniform(15);
    std::vector<MultiFunction> xs;
    std::vector<int> labels;
    for (int i = 0; i < 4; ++i) {
        xs.push_back(random_multi(rng, g, 1));
        labels.push_back(i % 2 + 1);
    }
    const LabeledFunctionalDataset data(xs, labels);
    auto clf = frlsc_fit(data, gauss_kernel(g), 0.1, 15);
    // force all scores to zero: every coefficient zeroed
    for (auto& model : clf.models) {
        for (auto& u : model.coeffs) u = u * 0.0;
        for (auto& a : model.applied) a = a * 0.0;
    }
    CHECK(frlsc_predict(clf, xs[0]).class_id == 1);
}

TEST_CASE("confusion matrix bookkeeping", "[classify]") {
    SynthSpec spec;
    spec.task = SynthSpec::Task::classification;
    spec.seed = 406;
    spec.n = 15;
    spec.p = 1;
    spec.m_in = 21;
    spec.m_out = 21;
    spec.num_classes = 3;
    spec.noise_sd = 0.15;
    auto [train, truth] = gen_classification_task(spec);
    spec.seed = 407;
    auto [test, truth2] = gen_classification_task(spec);

    const auto g = Grid::uniform(spec.m_out);
    const auto clf = frlsc_fit(train, gauss_kernel(g), 0.05, 10);
    const auto cm = confusion_matrix(clf, test);

    CHECK(cm.sum() == test.size());
    CHECK((cm.array() >= 0).all());
    // row sums equal per-class test counts
    for (int c = 1; c <= 3; ++c) {
        long count = 0;
        for (int label : test.labels) count += (label == c);
        CHECK(cm.row(c - 1).sum() == count);
    }
    const double rate = recognition_rate(cm);
    CHECK(rate >= 0.0);
    CHECK(rate <= 100.0);

    // a constant classifier recognizes exactly one class per balanced block
    FunctionalClassifier constant = clf;
    for (size_t mdl = 0; mdl < constant.models.size(); ++mdl)
        for (auto& a : constant.models[mdl].applied)
            a = mdl == 0 ? SampledFunction::constant(g, 1.0) : SampledFunction::zero(g);
    const auto cm_const = confusion_matrix(constant, test);
    for (int c = 1; c <= 3; ++c) CHECK(cm_const(c - 1, 0) == cm.row(c - 1).sum());
    CHECK(recognition_rate(cm_const) ==
          Catch::Approx(100.0 / 3.0).margin(1e-9)); // balanced 3-class test
}
