// ovkern command line: synthetic data generation, operator-valued kernel
// regression and classification, model selection, eigensystem dumps, and
// positivity / stability reports. All tabular output is CSV with a header
// row; reports are key=value lines. Files are written atomically.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ovkern/classify.hpp"
#include "ovkern/datagen.hpp"
#include "ovkern/grid.hpp"
#include "ovkern/io_util.hpp"
#include "ovkern/kernels.hpp"
#include "ovkern/learn.hpp"
#include "ovkern/model_io.hpp"
#include "ovkern/spectral.hpp"

namespace {

using namespace ovkern;

constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;
constexpr int kExitNumerical = 4;

struct KernelFlags {
    std::string scalar = "gaussian";
    double bandwidth = 1.0;
    std::string op = "intexp";
    std::string h_file;
    std::string op_matrix_file;
};

void add_kernel_flags(CLI::App* cmd, KernelFlags& flags) {
    cmd->add_option("--scalar", flags.scalar, "Scalar kernel on inputs: linear or gaussian")
        ->check(CLI::IsMember({"linear", "gaussian"}))
        ->capture_default_str();
    cmd->add_option("--bandwidth", flags.bandwidth, "Gaussian scalar kernel bandwidth")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--operator", flags.op,
                    "Output-space operator: mult, intexp, disc, or identity")
        ->check(CLI::IsMember({"mult", "intexp", "disc", "identity"}))
        ->capture_default_str();
    cmd->add_option("--h-file", flags.h_file,
                    "CSV (t,value) with the multiplication function h; required for --operator mult");
    cmd->add_option("--op-matrix-file", flags.op_matrix_file,
                    "CSV with the symmetric operator array; required for --operator disc");
}

std::vector<std::vector<double>> read_csv_numbers(const std::string& path, bool allow_header) {
    std::istringstream in(read_file(path));
    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ls(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ls, cell, ',')) {
            try {
                size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (used == 0) numeric = false;
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (first && allow_header) {
                first = false;
                continue;
            }
            throw ParseError("non-numeric row in " + path + ": " + line);
        }
        first = false;
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("no numeric rows in " + path);
    return rows;
}

OperatorSpec make_operator(const KernelFlags& flags, const GridPtr& grid) {
    if (flags.op == "intexp") return IntegralOp::exponential();
    if (flags.op == "identity") return identity_op(grid);
    if (flags.op == "mult") {
        if (flags.h_file.empty())
            throw ParameterError("--operator mult requires --h-file");
        const auto rows = read_csv_numbers(flags.h_file, true);
        Eigen::VectorXd t(static_cast<Eigen::Index>(rows.size()));
        Eigen::VectorXd v(static_cast<Eigen::Index>(rows.size()));
        for (size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != 2)
                throw ParseError(flags.h_file + " must have two columns t,value");
            t(static_cast<Eigen::Index>(r)) = rows[r][0];
            v(static_cast<Eigen::Index>(r)) = rows[r][1];
        }
        const SampledFunction h(Grid::from_points(std::move(t)), std::move(v));
        return MultiplicationOp(resample(h, grid));
    }
    if (flags.op_matrix_file.empty())
        throw ParameterError("--operator disc requires --op-matrix-file");
    const auto rows = read_csv_numbers(flags.op_matrix_file, false);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.size()));
    for (size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows.size())
            throw ParseError(flags.op_matrix_file + " must be a square numeric matrix");
        for (size_t c = 0; c < rows[r].size(); ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    return DiscretizedOp(std::move(m));
}

std::shared_ptr<const SeparableKernel> make_kernel(const KernelFlags& flags,
                                                   const GridPtr& grid) {
    const ScalarKernel g = flags.scalar == "linear" ? ScalarKernel::linear()
                                                    : ScalarKernel::gaussian(flags.bandwidth);
    return std::make_shared<SeparableKernel>(g, make_operator(flags, grid), grid);
}

std::string csv_row(const std::vector<std::string>& cells) {
    std::string line;
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += cells[i];
    }
    line += '\n';
    return line;
}

void write_curve_csv(const std::string& path, const SampledFunction& f) {
    std::string out = "t,value\n";
    for (Eigen::Index k = 0; k < f.size(); ++k)
        out += csv_row({format_double(f.grid()->points()(k)), format_double(f.values()(k))});
    write_file_atomic(path, out);
}

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (cell.empty()) continue;
        out.push_back(std::stod(cell));
    }
    if (out.empty()) throw ParameterError("empty numeric list: " + csv);
    return out;
}

std::vector<Eigen::Index> parse_index_list(const std::string& csv) {
    std::vector<Eigen::Index> out;
    for (double v : parse_double_list(csv)) {
        if (v < 1 || v != std::floor(v))
            throw ParameterError("expected positive integers, got " + csv);
        out.push_back(static_cast<Eigen::Index>(v));
    }
    return out;
}

// --------------------------------------------------------------------------
// subcommand bodies
// --------------------------------------------------------------------------

struct GenArgs {
    SynthSpec spec;
    std::string task = "regression";
    std::string out;
};

int run_gen(const GenArgs& args) {
    SynthSpec spec = args.spec;
    if (args.task == "regression") {
        spec.task = SynthSpec::Task::regression;
        auto [data, truth] = gen_regression_task(spec);
        save_dataset(args.out, DatasetFile::from_regression(data));
    } else {
        spec.task = SynthSpec::Task::classification;
        auto [data, truth] = gen_classification_task(spec);
        save_dataset(args.out,
                     DatasetFile::from_classification(data, Grid::uniform(spec.m_out)));
        std::cout << "margin=" << format_double(truth.margin) << "\n";
    }
    std::cout << "wrote=" << args.out << "\n";
    return 0;
}

struct FitArgs {
    std::string data;
    KernelFlags kernel;
    double lambda = 0.1;
    Eigen::Index kappa = 20;
    std::string model_out;
};

int run_fit(const FitArgs& args) {
    const FunctionalDataset data = load_dataset(args.data).to_regression();
    const auto kernel = make_kernel(args.kernel, data.output_grid());
    const FRModel model = fit(data, kernel, args.lambda, args.kappa);
    save_model(args.model_out, model);
    std::cout << "wrote=" << args.model_out << "\n";
    return 0;
}

struct PredictArgs {
    std::string model;
    std::string data;
    std::string out_dir;
};

int run_predict(const PredictArgs& args) {
    const FRModel model = load_model(args.model);
    const DatasetFile file = load_dataset(args.data);
    std::filesystem::create_directories(args.out_dir);
    for (size_t i = 0; i < file.inputs.size(); ++i) {
        const SampledFunction pred = predict(model, file.inputs[i]);
        char name[32];
        std::snprintf(name, sizeof(name), "curve_%04zu.csv", i);
        write_curve_csv((std::filesystem::path(args.out_dir) / name).string(), pred);
    }
    std::cout << "curves=" << file.inputs.size() << "\n";
    std::cout << "wrote=" << args.out_dir << "\n";
    return 0;
}

struct EvaluateArgs {
    std::string model;
    std::string data;
    std::string per_curve;
};

int run_evaluate(const EvaluateArgs& args) {
    const FRModel model = load_model(args.model);
    const FunctionalDataset data = load_dataset(args.data).to_regression();
    std::vector<SampledFunction> preds;
    preds.reserve(static_cast<size_t>(data.size()));
    for (const auto& x : data.inputs()) preds.push_back(predict(model, x));
    std::string csv = "index,rsse\n";
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        const double err = l2_norm_sq(preds[static_cast<size_t>(i)] -
                                      data.outputs()[static_cast<size_t>(i)]);
        csv += csv_row({std::to_string(i), format_double(err)});
    }
    if (!args.per_curve.empty()) write_file_atomic(args.per_curve, csv);
    std::cout << "rsse=" << format_double(rsse(preds, data.outputs())) << "\n";
    return 0;
}

struct CvArgs {
    std::string data;
    KernelFlags kernel;
    std::string lambdas;
    std::string kappas;
    std::string table_out;
};

int run_cv(const CvArgs& args) {
    const FunctionalDataset data = load_dataset(args.data).to_regression();
    const auto kernel = make_kernel(args.kernel, data.output_grid());
    const std::vector<double> lgrid =
        args.lambdas.empty() ? default_lambda_grid() : parse_double_list(args.lambdas);
    const std::vector<Eigen::Index> kgrid =
        args.kappas.empty() ? default_kappa_grid() : parse_index_list(args.kappas);
    const HyperparamSelection sel = select_hyperparams(data, kernel, lgrid, kgrid);
    if (!args.table_out.empty()) {
        std::string csv = "lambda,kappa,score\n";
        for (const auto& row : sel.table)
            csv += csv_row({format_double(row.lambda), std::to_string(row.kappa),
                            format_double(row.score)});
        write_file_atomic(args.table_out, csv);
    }
    std::cout << "lambda=" << format_double(sel.lambda) << "\n";
    std::cout << "kappa=" << sel.kappa << "\n";
    return 0;
}

struct ClassifyArgs {
    std::string train;
    std::string test;
    KernelFlags kernel;
    double lambda = 0.1;
    Eigen::Index kappa = 20;
    double label_scale = 1.0;
    std::string confusion_out;
};

int run_classify(const ClassifyArgs& args) {
    const DatasetFile train_file = load_dataset(args.train);
    const LabeledFunctionalDataset train = train_file.to_classification();
    const LabeledFunctionalDataset test = load_dataset(args.test).to_classification();
    const GridPtr grid = train_file.output_grid;
    const auto kernel = make_kernel(args.kernel, grid);
    const auto clf = frlsc_fit(train, kernel, args.lambda, args.kappa,
                               make_label(1, args.label_scale, grid));
    const Eigen::MatrixXi cm = confusion_matrix(clf, test);
    if (!args.confusion_out.empty()) {
        std::string csv = "class";
        for (int c = 1; c <= cm.cols(); ++c) csv += ",pred_" + std::to_string(c);
        csv += "\n";
        for (int r = 0; r < cm.rows(); ++r) {
            csv += std::to_string(r + 1);
            for (int c = 0; c < cm.cols(); ++c) csv += "," + std::to_string(cm(r, c));
            csv += "\n";
        }
        write_file_atomic(args.confusion_out, csv);
    }
    std::cout << "rate=" << format_double(recognition_rate(cm)) << "\n";
    return 0;
}

struct EigsArgs {
    KernelFlags kernel;
    int count = 10;
    Eigen::Index grid_points = 101;
    std::string out;
};

int run_eigs(const EigsArgs& args) {
    const GridPtr grid = Grid::uniform(args.grid_points);
    const OperatorSpec op = make_operator(args.kernel, grid);
    const auto* integ = std::get_if<IntegralOp>(&op);
    const bool analytic = integ && integ->kind == "exp";
    const OperatorEigs oe = analytic
                                ? exp_kernel_eigs(args.count, grid)
                                : discretized_operator_eigs(op, grid, args.count);
    std::string csv = "mode,mu,delta,t,value\n";
    for (Eigen::Index l = 0; l < oe.count(); ++l) {
        const std::string mu =
            analytic ? format_double(oe.mus[static_cast<size_t>(l)]) : "nan";
        for (Eigen::Index k = 0; k < grid->size(); ++k)
            csv += csv_row({std::to_string(l + 1), mu, format_double(oe.deltas(l)),
                            format_double(grid->points()(k)),
                            format_double(oe.eigenfunctions(k, l))});
    }
    write_file_atomic(args.out, csv);
    std::cout << "modes=" << oe.count() << "\n";
    std::cout << "wrote=" << args.out << "\n";
    return 0;
}

struct PositivityArgs {
    std::string data;
    KernelFlags kernel;
};

int run_positivity(const PositivityArgs& args) {
    const DatasetFile file = load_dataset(args.data);
    const auto kernel = make_kernel(args.kernel, file.output_grid);
    const PositivityReport rep = positivity_check(*kernel, file.inputs);
    std::cout << "min_eig=" << format_double(rep.min_eig) << "\n";
    std::cout << "max_eig=" << format_double(rep.max_eig) << "\n";
    std::cout << "pass=" << (rep.pass ? "true" : "false") << "\n";
    return 0;
}

struct StabilityArgs {
    std::string data;
    KernelFlags kernel;
    double lambda = 0.1;
    double confidence = 0.05;
};

int run_stability(const StabilityArgs& args) {
    const FunctionalDataset data = load_dataset(args.data).to_regression();
    const auto kernel = make_kernel(args.kernel, data.output_grid());
    const StabilityReport rep = stability_bound(data, kernel, args.lambda, args.confidence);
    std::cout << "n=" << rep.n << "\n";
    std::cout << "lambda=" << format_double(rep.lambda) << "\n";
    std::cout << "kappa_sq=" << format_double(rep.kappa_sq) << "\n";
    std::cout << "sigma_y=" << format_double(rep.sigma_y) << "\n";
    std::cout << "sigma=" << format_double(rep.sigma) << "\n";
    std::cout << "beta=" << format_double(rep.beta) << "\n";
    std::cout << "xi=" << format_double(rep.xi) << "\n";
    std::cout << "confidence=" << format_double(rep.conf_delta) << "\n";
    std::cout << "gen_bound_gap=" << format_double(rep.gen_bound_gap) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Function-valued regression and classification with "
                 "operator-valued kernels"};
    app.name("ovkern");
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Print help for every subcommand");

    GenArgs gen_args;
    auto* gen = app.add_subcommand("gen", "Generate a seeded synthetic dataset file");
    gen->add_option("--task", gen_args.task, "Task kind: regression or classification")
        ->check(CLI::IsMember({"regression", "classification"}))
        ->capture_default_str();
    gen->add_option("--seed", gen_args.spec.seed, "Generator seed")->capture_default_str();
    gen->add_option("--sample-stream", gen_args.spec.sample_stream,
                    "Draw stream; same seed with another stream yields fresh samples of "
                    "the same task (e.g. a held-out split)")
        ->capture_default_str();
    gen->add_option("--n", gen_args.spec.n, "Sample count")->capture_default_str();
    gen->add_option("--p", gen_args.spec.p, "Input curves per sample")->capture_default_str();
    gen->add_option("--m-in", gen_args.spec.m_in, "Input grid size")->capture_default_str();
    gen->add_option("--m-out", gen_args.spec.m_out, "Output grid size")->capture_default_str();
    gen->add_option("--modes", gen_args.spec.basis_modes, "Smooth basis mode count")
        ->capture_default_str();
    gen->add_option("--decay", gen_args.spec.coeff_decay, "Coefficient decay exponent")
        ->capture_default_str();
    gen->add_option("--noise-sd", gen_args.spec.noise_sd,
                    "Output noise sd (regression) or perturbation size (classification)")
        ->capture_default_str();
    gen->add_option("--classes", gen_args.spec.num_classes, "Class count (classification)")
        ->capture_default_str();
    gen->add_option("--class-sep", gen_args.spec.class_sep,
                    "Class mean separation scale (classification)")
        ->capture_default_str();
    gen->add_option("--out", gen_args.out, "Dataset file to write")->required();

    FitArgs fit_args;
    auto* fit_cmd = app.add_subcommand("fit", "Train a function-valued regression model");
    fit_cmd->add_option("--data", fit_args.data, "Training dataset file")->required();
    add_kernel_flags(fit_cmd, fit_args.kernel);
    fit_cmd->add_option("--lambda", fit_args.lambda, "Regularization weight")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    fit_cmd->add_option("--kappa", fit_args.kappa, "Retained operator eigenfunctions")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    fit_cmd->add_option("--model-out", fit_args.model_out, "Model file to write")->required();

    PredictArgs predict_args;
    auto* predict_cmd =
        app.add_subcommand("predict", "Predict output curves for the inputs of a dataset");
    predict_cmd->add_option("--model", predict_args.model, "Model file")->required();
    predict_cmd->add_option("--data", predict_args.data, "Dataset file with inputs")->required();
    predict_cmd
        ->add_option("--out-dir", predict_args.out_dir,
                     "Directory for per-curve CSV files (t,value)")
        ->required();

    EvaluateArgs evaluate_args;
    auto* evaluate_cmd =
        app.add_subcommand("evaluate", "Report RSSE of a model against labeled curves");
    evaluate_cmd->add_option("--model", evaluate_args.model, "Model file")->required();
    evaluate_cmd->add_option("--data", evaluate_args.data, "Dataset file with outputs")
        ->required();
    evaluate_cmd->add_option("--per-curve", evaluate_args.per_curve,
                             "Optional CSV of per-curve squared errors");

    CvArgs cv_args;
    auto* cv_cmd = app.add_subcommand(
        "cv", "Select lambda and kappa by one-curve-leave-out cross-validation");
    cv_cmd->add_option("--data", cv_args.data, "Training dataset file")->required();
    add_kernel_flags(cv_cmd, cv_args.kernel);
    cv_cmd->add_option("--lambdas", cv_args.lambdas,
                       "Comma-separated lambda grid (default: 7 log-spaced in 1e-4..10)");
    cv_cmd->add_option("--kappas", cv_args.kappas,
                       "Comma-separated kappa grid (default: 5,10,20)");
    cv_cmd->add_option("--table-out", cv_args.table_out, "CSV of all grid scores");

    ClassifyArgs classify_args;
    auto* classify_cmd = app.add_subcommand(
        "classify", "Train a one-vs-all functional classifier and score a test set");
    classify_cmd->add_option("--train", classify_args.train, "Labeled training dataset file")
        ->required();
    classify_cmd->add_option("--test", classify_args.test, "Labeled test dataset file")
        ->required();
    add_kernel_flags(classify_cmd, classify_args.kernel);
    classify_cmd->add_option("--lambda", classify_args.lambda, "Regularization weight")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    classify_cmd->add_option("--kappa", classify_args.kappa, "Retained operator eigenfunctions")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    classify_cmd->add_option("--label-scale", classify_args.label_scale,
                             "Scale of the constant label template")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    classify_cmd->add_option("--confusion-out", classify_args.confusion_out,
                             "CSV for the confusion matrix");

    EigsArgs eigs_args;
    auto* eigs_cmd =
        app.add_subcommand("eigs", "Dump operator eigenvalues and eigenfunctions as CSV");
    add_kernel_flags(eigs_cmd, eigs_args.kernel);
    eigs_cmd->add_option("--count", eigs_args.count, "Number of modes")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    eigs_cmd->add_option("--grid-points", eigs_args.grid_points, "Output grid size on [0,1]")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    eigs_cmd->add_option("--out", eigs_args.out, "CSV file (mode,mu,delta,t,value)")->required();

    PositivityArgs positivity_args;
    auto* positivity_cmd = app.add_subcommand(
        "positivity", "Certify kernel nonnegativity on a dataset's inputs");
    positivity_cmd->add_option("--data", positivity_args.data, "Dataset file")->required();
    add_kernel_flags(positivity_cmd, positivity_args.kernel);

    StabilityArgs stability_args;
    auto* stability_cmd = app.add_subcommand(
        "stability", "Report uniform-stability constants and the generalization bound");
    stability_cmd->add_option("--data", stability_args.data, "Dataset file with outputs")
        ->required();
    add_kernel_flags(stability_cmd, stability_args.kernel);
    stability_cmd->add_option("--lambda", stability_args.lambda, "Regularization weight")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    stability_cmd
        ->add_option("--confidence", stability_args.confidence, "Confidence level delta in (0,1)")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        const auto parsed = app.get_subcommands();
        std::cout << (parsed.empty() ? app.help() : parsed.back()->help());
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error code=usage msg=\"" << e.what() << "\"\n";
        const auto parsed = app.get_subcommands();
        std::cerr << (parsed.empty() ? app.help() : parsed.back()->help());
        return kExitUsage;
    }

    try {
        if (gen->parsed()) return run_gen(gen_args);
        if (fit_cmd->parsed()) return run_fit(fit_args);
        if (predict_cmd->parsed()) return run_predict(predict_args);
        if (evaluate_cmd->parsed()) return run_evaluate(evaluate_args);
        if (cv_cmd->parsed()) return run_cv(cv_args);
        if (classify_cmd->parsed()) return run_classify(classify_args);
        if (eigs_cmd->parsed()) return run_eigs(eigs_args);
        if (positivity_cmd->parsed()) return run_positivity(positivity_args);
        if (stability_cmd->parsed()) return run_stability(stability_args);
    } catch (const Error& e) {
        std::cerr << "error code=" << e.code() << " msg=\"" << e.what() << "\"\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error code=internal msg=\"" << e.what() << "\"\n";
        return kExitNumerical;
    }
    return 0;
}
