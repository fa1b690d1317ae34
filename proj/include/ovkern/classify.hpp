#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ovkern/errors.hpp"
#include "ovkern/grid.hpp"
#include "ovkern/learn.hpp"
#include "ovkern/parallel.hpp"

namespace ovkern {

/// Functional inputs with integer class ids in {1..N}.
struct LabeledFunctionalDataset {
    std::vector<MultiFunction> inputs;
    std::vector<int> labels;

    LabeledFunctionalDataset(std::vector<MultiFunction> inputs_, std::vector<int> labels_)
        : inputs(std::move(inputs_)), labels(std::move(labels_)) {
        if (inputs.empty() || inputs.size() != labels.size())
            throw DimensionError("labeled dataset needs equal nonzero counts, got " +
                                 std::to_string(inputs.size()) + " inputs and " +
                                 std::to_string(labels.size()) + " labels");
        for (size_t i = 1; i < inputs.size(); ++i) inputs[0].require_compatible(inputs[i]);
        for (int label : labels)
            if (label < 1) throw ValidationError("class ids start at 1, got " + std::to_string(label));
    }

    Eigen::Index size() const { return static_cast<Eigen::Index>(inputs.size()); }
    int num_classes() const { return *std::max_element(labels.begin(), labels.end()); }

    /// Every id in {1..N} must appear at least once.
    void require_all_classes_present() const {
        const int n_classes = num_classes();
        std::set<int> seen(labels.begin(), labels.end());
        for (int c = 1; c <= n_classes; ++c)
            if (!seen.count(c))
                throw ValidationError("class " + std::to_string(c) + " has no training samples");
    }
};

/// Function-valued class label: the constant sign * scale on [0, 1] (the
/// step-at-the-left-endpoint realization of a scaled Heaviside template).
inline SampledFunction make_label(int sign, double scale, const GridPtr& grid) {
    if (sign != 1 && sign != -1)
        throw ParameterError("label sign must be +1 or -1, got " + std::to_string(sign));
    if (!(scale > 0.0))
        throw ParameterError("label scale must be positive, got " + std::to_string(scale));
    if (std::abs(grid->lower()) > 1e-12 || std::abs(grid->upper() - 1.0) > 1e-12)
        throw ValidationError("label templates live on [0, 1]");
    return SampledFunction::constant(grid, sign * scale);
}

/// One-vs-all ensemble of function-valued regressors sharing a label template.
struct FunctionalClassifier {
    std::vector<FRModel> models; // index c-1 separates class c from the rest
    SampledFunction label_template;
    std::vector<int> classes;
};

/// Train N binary one-vs-all regressors with outputs +h for in-class inputs
/// and -h otherwise. All models share the kernel, lambda, kappa, and the
/// eigensystem of the shared training inputs.
inline FunctionalClassifier frlsc_fit(const LabeledFunctionalDataset& data,
                                      const KernelPtr& kernel, double lambda, Eigen::Index kappa,
                                      std::optional<SampledFunction> label_template = std::nullopt) {
    data.require_all_classes_present();
    const int n_classes = data.num_classes();
    if (n_classes < 2)
        throw ValidationError("classification needs at least 2 classes, got " +
                              std::to_string(n_classes));
    auto sep = std::dynamic_pointer_cast<const SeparableKernel>(kernel);
    if (!sep)
        throw UnsupportedKernelError("functional least squares classification requires a "
                                     "separable kernel");
    const GridPtr& grid = sep->output_grid();
    const SampledFunction h = label_template ? *label_template : make_label(1, 1.0, grid);
    if (!same_grid(h.grid(), grid))
        throw DimensionError("label template grid does not match the kernel output grid");

    FunctionalClassifier clf{std::vector<FRModel>(static_cast<size_t>(n_classes)), h, {}};
    for (int c = 1; c <= n_classes; ++c) clf.classes.push_back(c);
    const OperatorEigs oe = fit_operator_eigs(*sep, grid, kappa);
    parallel_for(static_cast<size_t>(n_classes), [&](size_t ci) {
        const int cls = static_cast<int>(ci) + 1;
        std::vector<SampledFunction> outputs;
        outputs.reserve(data.inputs.size());
        for (int label : data.labels) outputs.push_back(label == cls ? h : h * -1.0);
        const FunctionalDataset binary(data.inputs, std::move(outputs));
        clf.models[ci] = fit(binary, kernel, lambda, kappa, OperatorEigPath::discretized, &oe);
    });
    return clf;
}

struct ClassPrediction {
    int class_id = 0;
    std::vector<double> scores; // <F_c(x), h> per class
};

/// Score each class regressor by projecting its prediction onto the label
/// template; the winner is the argmax, ties to the lowest class id.
inline ClassPrediction frlsc_predict(const FunctionalClassifier& clf, const MultiFunction& x) {
    ClassPrediction out;
    out.scores.reserve(clf.models.size());
    for (const auto& model : clf.models)
        out.scores.push_back(l2_inner(predict(model, x), clf.label_template));
    size_t best = 0;
    for (size_t c = 1; c < out.scores.size(); ++c)
        if (out.scores[c] > out.scores[best]) best = c;
    out.class_id = clf.classes[best];
    return out;
}

/// Counts of (true class, predicted class) over a test set.
inline Eigen::MatrixXi confusion_matrix(const FunctionalClassifier& clf,
                                        const LabeledFunctionalDataset& test) {
    if (test.inputs.empty()) throw DimensionError("confusion matrix needs a nonempty test set");
    const int n_classes = static_cast<int>(clf.classes.size());
    std::vector<int> predicted(test.inputs.size(), 0);
    parallel_for(test.inputs.size(), [&](size_t i) {
        predicted[i] = frlsc_predict(clf, test.inputs[i]).class_id;
    });
    Eigen::MatrixXi cm = Eigen::MatrixXi::Zero(n_classes, n_classes);
    for (size_t i = 0; i < test.inputs.size(); ++i) {
        const int truth = test.labels[i];
        if (truth < 1 || truth > n_classes)
            throw ValidationError("test label " + std::to_string(truth) +
                                  " outside trained classes 1.." + std::to_string(n_classes));
        cm(truth - 1, predicted[i] - 1) += 1;
    }
    return cm;
}

/// Percentage of well recognized samples: 100 * trace / total.
inline double recognition_rate(const Eigen::MatrixXi& cm) {
    const long total = cm.sum();
    if (total <= 0) throw DimensionError("recognition rate needs a nonempty confusion matrix");
    return 100.0 * static_cast<double>(cm.trace()) / static_cast<double>(total);
}

} // namespace ovkern
