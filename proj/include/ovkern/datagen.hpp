#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ovkern/classify.hpp"
#include "ovkern/errors.hpp"
#include "ovkern/grid.hpp"
#include "ovkern/io_util.hpp"
#include "ovkern/kernels.hpp"
#include "ovkern/rng.hpp"

namespace ovkern {

inline constexpr const char* kDatasetFormatTag = "ovkern-data/1";

// ---------------------------------------------------------------------------
// Synthetic generators (deterministic per seed)
// ---------------------------------------------------------------------------

struct SynthSpec {
    enum class Task { regression, classification };

    std::uint64_t seed = 1;
    std::uint64_t sample_stream = 0; // same seed + different stream = fresh samples
                                     // from the same task (shared link / class means)
    Eigen::Index n = 40;       // sample count
    Eigen::Index p = 2;        // input curves per sample
    Eigen::Index m_in = 51;    // input grid size
    Eigen::Index m_out = 51;   // output grid size
    int basis_modes = 3;
    double coeff_decay = 1.5;
    double noise_sd = 0.0;     // regression noise / classification perturbation size
    Task task = Task::regression;
    int num_classes = 3;       // classification only
    double class_sep = 1.0;    // classification only: orthogonal mean offset scale

    // seed of the per-sample draws; stream 0 reduces to the base seed
    std::uint64_t draw_seed() const { return seed + 0x9E3779B97F4A7C15ULL * sample_stream; }

    void validate() const {
        if (n < 2) throw ParameterError("need n >= 2 samples, got " + std::to_string(n));
        if (p < 1) throw ParameterError("need p >= 1 input curves, got " + std::to_string(p));
        if (m_in < 2 || m_out < 2) throw ParameterError("grids need at least 2 points");
        if (basis_modes < 1) throw ParameterError("need at least 1 basis mode");
        if (!(coeff_decay > 0.0)) throw ParameterError("coefficient decay must be positive");
        if (noise_sd < 0.0) throw ParameterError("noise sd must be nonnegative");
        if (task == Task::classification && num_classes < 2)
            throw ParameterError("classification needs at least 2 classes");
    }
};

/// `count` random smooth curves: sum over k of (a_k sin(k pi t) + b_k cos(k pi t))
/// with a_k, b_k standard-normal draws scaled by k^{-decay}. The draw order is
/// fixed (per curve, k ascending, a before b), so output is a pure function of
/// the seed.
inline std::vector<SampledFunction> gen_smooth(std::uint64_t seed, Eigen::Index count,
                                               const GridPtr& grid, int modes, double decay) {
    if (modes < 1) throw ParameterError("need at least 1 basis mode");
    SplitMix64 rng(seed);
    std::vector<SampledFunction> out;
    out.reserve(static_cast<size_t>(count));
    const Eigen::VectorXd& t = grid->points();
    for (Eigen::Index i = 0; i < count; ++i) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(grid->size());
        for (int k = 1; k <= modes; ++k) {
            const double scale = std::pow(static_cast<double>(k), -decay);
            const double a = rng.next_gaussian() * scale;
            const double b = rng.next_gaussian() * scale;
            const double omega = k * std::numbers::pi;
            v += (a * (omega * t.array()).sin() + b * (omega * t.array()).cos()).matrix();
        }
        out.emplace_back(grid, std::move(v));
    }
    return out;
}

namespace detail {

// one smoothing pass with the [1/4, 1/2, 1/4] stencil (trapezoid-shaped)
inline Eigen::VectorXd smooth_once(const Eigen::VectorXd& f) {
    const auto m = f.size();
    Eigen::VectorXd g(m);
    g(0) = 0.75 * f(0) + 0.25 * f(1);
    for (Eigen::Index k = 1; k + 1 < m; ++k) g(k) = 0.25 * f(k - 1) + 0.5 * f(k) + 0.25 * f(k + 1);
    g(m - 1) = 0.25 * f(m - 2) + 0.75 * f(m - 1);
    return g;
}

// seed offsets so the input, noise, and perturbation streams stay independent
inline constexpr std::uint64_t kInputStream = 0x2545F4914F6CDD1DULL;
inline constexpr std::uint64_t kNoiseStream = 0xD1B54A32D192ED03ULL;
inline constexpr std::uint64_t kPerturbStream = 0x8BB84B93962EACC9ULL;

// regression inputs sit at a shared smooth base plus perturbations of this
// size, keeping the samples clustered where the link stays smooth (the norm
// factor in the link is singular at the origin)
inline constexpr double kRegressionInputSpread = 0.15;

} // namespace detail

struct RegressionTruth {
    std::vector<SampledFunction> clean_outputs;
    std::vector<double> noise_energy; // integral of the injected noise squared, per sample
};

/// Regression task with known ground truth: inputs are a shared smooth base
/// tuple (part of the task identity, stream-independent) plus seeded smooth
/// perturbations; outputs are the exponential integral operator applied to a
/// fixed smooth nonlinear link of the inputs (pointwise tanh of the first
/// component, scaled by the L2 norm of the second), plus smoothed seeded
/// white noise.
inline std::pair<FunctionalDataset, RegressionTruth> gen_regression_task(const SynthSpec& spec) {
    spec.validate();
    if (spec.task != SynthSpec::Task::regression)
        throw ParameterError("spec task is not regression");
    const GridPtr in_grid = Grid::uniform(spec.m_in, 0.0, 1.0);
    const GridPtr out_grid = Grid::uniform(spec.m_out, 0.0, 1.0);
    const OperatorSpec op = IntegralOp::exponential();

    const std::vector<SampledFunction> base =
        gen_smooth(spec.seed, spec.p, in_grid, spec.basis_modes, spec.coeff_decay);
    const std::vector<SampledFunction> curves =
        gen_smooth(spec.draw_seed() ^ detail::kInputStream, spec.n * spec.p, in_grid,
                   spec.basis_modes, spec.coeff_decay);
    SplitMix64 noise_rng(spec.draw_seed() ^ detail::kNoiseStream);

    std::vector<MultiFunction> inputs;
    std::vector<SampledFunction> outputs;
    RegressionTruth truth;
    for (Eigen::Index i = 0; i < spec.n; ++i) {
        std::vector<SampledFunction> comps;
        for (Eigen::Index c = 0; c < spec.p; ++c)
            comps.push_back(base[static_cast<size_t>(c)] +
                            curves[static_cast<size_t>(i * spec.p + c)] *
                                detail::kRegressionInputSpread);
        MultiFunction x(std::move(comps));

        const double scale = spec.p >= 2 ? l2_norm(x.component(1)) : 1.0;
        SampledFunction first = resample(x.component(0), out_grid);
        const SampledFunction link =
            first.with_values((first.values().array().tanh() * scale).matrix());
        SampledFunction clean = apply_operator(op, link);

        Eigen::VectorXd noise = Eigen::VectorXd::Zero(spec.m_out);
        double energy = 0.0;
        if (spec.noise_sd > 0.0) {
            for (Eigen::Index k = 0; k < spec.m_out; ++k)
                noise(k) = noise_rng.next_gaussian() * spec.noise_sd;
            noise = detail::smooth_once(noise);
            energy = (out_grid->weights().array() * noise.array().square()).sum();
        }
        outputs.emplace_back(out_grid, Eigen::VectorXd(clean.values() + noise));
        truth.clean_outputs.push_back(std::move(clean));
        truth.noise_energy.push_back(energy);
        inputs.push_back(std::move(x));
    }
    return {FunctionalDataset(std::move(inputs), std::move(outputs)), std::move(truth)};
}

struct ClassificationTruth {
    double margin = 0.0; // min pairwise distance between class mean tuples
    std::vector<MultiFunction> class_means;
};

/// Classification task: class c means are a shared smooth base plus the
/// orthogonal offset class_sep * sqrt(2) sin(c pi t) per component, so class
/// means stay uniformly separated; samples add a unit-norm smooth
/// perturbation scaled by noise_sd. Labels cycle round-robin through classes.
inline std::pair<LabeledFunctionalDataset, ClassificationTruth>
gen_classification_task(const SynthSpec& spec) {
    spec.validate();
    if (spec.task != SynthSpec::Task::classification)
        throw ParameterError("spec task is not classification");
    if (spec.n < spec.num_classes)
        throw ParameterError("need at least one sample per class");
    const GridPtr in_grid = Grid::uniform(spec.m_in, 0.0, 1.0);

    const std::vector<SampledFunction> base =
        gen_smooth(spec.seed, spec.p, in_grid, spec.basis_modes, spec.coeff_decay);
    ClassificationTruth truth;
    for (int c = 1; c <= spec.num_classes; ++c) {
        std::vector<SampledFunction> comps;
        for (Eigen::Index j = 0; j < spec.p; ++j) {
            const SampledFunction offset = SampledFunction::from_fn(in_grid, [c](double t) {
                return std::numbers::sqrt2 * std::sin(c * std::numbers::pi * t);
            });
            comps.push_back(base[static_cast<size_t>(j)] + offset * spec.class_sep);
        }
        truth.class_means.emplace_back(std::move(comps));
    }
    truth.margin = std::numeric_limits<double>::infinity();
    for (size_t a = 0; a < truth.class_means.size(); ++a)
        for (size_t b = a + 1; b < truth.class_means.size(); ++b)
            truth.margin = std::min(
                truth.margin,
                std::sqrt(multi_norm_sq(truth.class_means[a] - truth.class_means[b])));

    SplitMix64 perturb_seed_rng(spec.draw_seed() ^ detail::kPerturbStream);
    const std::uint64_t perturb_seed = perturb_seed_rng.next_u64();
    const std::vector<SampledFunction> raw_perturbs =
        gen_smooth(perturb_seed, spec.n * spec.p, in_grid, spec.basis_modes, spec.coeff_decay);

    std::vector<MultiFunction> inputs;
    std::vector<int> labels;
    for (Eigen::Index i = 0; i < spec.n; ++i) {
        const int cls = static_cast<int>(i % spec.num_classes) + 1;
        std::vector<SampledFunction> pert;
        double norm_sq = 0.0;
        for (Eigen::Index j = 0; j < spec.p; ++j) {
            pert.push_back(raw_perturbs[static_cast<size_t>(i * spec.p + j)]);
            norm_sq += l2_norm_sq(pert.back());
        }
        const double scale = norm_sq > 0.0 ? spec.noise_sd / std::sqrt(norm_sq) : 0.0;
        std::vector<SampledFunction> comps;
        for (Eigen::Index j = 0; j < spec.p; ++j)
            comps.push_back(truth.class_means[static_cast<size_t>(cls - 1)].component(j) +
                            pert[static_cast<size_t>(j)] * scale);
        inputs.emplace_back(std::move(comps));
        labels.push_back(cls);
    }
    return {LabeledFunctionalDataset(std::move(inputs), std::move(labels)), std::move(truth)};
}

// ---------------------------------------------------------------------------
// Dataset file (JSON, format tag "ovkern-data/1")
// ---------------------------------------------------------------------------

/// In-memory image of a dataset file: shared grids plus per-sample inputs and
/// either output curves (regression) or class ids (classification).
struct DatasetFile {
    std::vector<GridPtr> input_grids;
    GridPtr output_grid;
    std::vector<MultiFunction> inputs;
    std::optional<std::vector<SampledFunction>> outputs;
    std::optional<std::vector<int>> labels;

    bool is_classification() const { return labels.has_value(); }

    static DatasetFile from_regression(const FunctionalDataset& data) {
        DatasetFile file;
        for (const auto& comp : data.inputs().front().components())
            file.input_grids.push_back(comp.grid());
        file.output_grid = data.output_grid();
        file.inputs = data.inputs();
        file.outputs = data.outputs();
        return file;
    }

    static DatasetFile from_classification(const LabeledFunctionalDataset& data,
                                           GridPtr output_grid) {
        DatasetFile file;
        for (const auto& comp : data.inputs.front().components())
            file.input_grids.push_back(comp.grid());
        file.output_grid = std::move(output_grid);
        file.inputs = data.inputs;
        file.labels = data.labels;
        return file;
    }

    FunctionalDataset to_regression() const {
        if (!outputs) throw ValidationError("dataset file holds class labels, not output curves");
        return FunctionalDataset(inputs, *outputs);
    }

    LabeledFunctionalDataset to_classification() const {
        if (!labels) throw ValidationError("dataset file holds output curves, not class labels");
        return LabeledFunctionalDataset(inputs, *labels);
    }
};

namespace detail {

inline std::vector<double> json_reals(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array()) throw ParseError(where + " must be an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number()) throw ParseError(where + " contains a non-numeric entry");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ParseError(where + " contains a non-finite value");
        out.push_back(d);
    }
    return out;
}

inline Eigen::VectorXd json_vector(const nlohmann::json& j, const std::string& where) {
    const std::vector<double> vals = json_reals(j, where);
    return Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

inline nlohmann::json vector_json(const Eigen::VectorXd& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

} // namespace detail

inline nlohmann::json dataset_to_json(const DatasetFile& file) {
    nlohmann::json doc;
    doc["format"] = kDatasetFormatTag;
    nlohmann::json grids = nlohmann::json::array();
    for (const auto& g : file.input_grids) grids.push_back(detail::vector_json(g->points()));
    doc["input_grids"] = std::move(grids);
    doc["output_grid"] = detail::vector_json(file.output_grid->points());
    nlohmann::json samples = nlohmann::json::array();
    for (size_t i = 0; i < file.inputs.size(); ++i) {
        nlohmann::json sample;
        nlohmann::json comps = nlohmann::json::array();
        for (const auto& comp : file.inputs[i].components())
            comps.push_back(detail::vector_json(comp.values()));
        sample["x"] = std::move(comps);
        if (file.outputs) sample["y"] = detail::vector_json((*file.outputs)[i].values());
        if (file.labels) sample["label"] = (*file.labels)[i];
        samples.push_back(std::move(sample));
    }
    doc["samples"] = std::move(samples);
    return doc;
}

inline void save_dataset(const std::string& path, const DatasetFile& file) {
    if (file.inputs.empty()) throw ValidationError("refusing to save an empty dataset");
    if (!file.outputs && !file.labels)
        throw ValidationError("dataset needs output curves or class labels");
    write_file_atomic(path, dataset_to_json(file).dump(1) + "\n");
}

inline DatasetFile parse_dataset(const nlohmann::json& doc) {
    if (!doc.contains("format") || !doc["format"].is_string())
        throw ParseError("dataset file is missing the \"format\" tag");
    if (doc["format"].get<std::string>() != kDatasetFormatTag)
        throw ParseError("dataset format tag \"" + doc["format"].get<std::string>() +
                         "\" is not \"" + std::string(kDatasetFormatTag) + "\"");
    if (!doc.contains("input_grids") || !doc["input_grids"].is_array() ||
        doc["input_grids"].empty())
        throw ParseError("dataset field \"input_grids\" must be a nonempty array");
    if (!doc.contains("output_grid"))
        throw ParseError("dataset field \"output_grid\" is missing");
    if (!doc.contains("samples") || !doc["samples"].is_array() || doc["samples"].empty())
        throw ParseError("dataset field \"samples\" must be a nonempty array");

    DatasetFile file;
    for (size_t g = 0; g < doc["input_grids"].size(); ++g)
        file.input_grids.push_back(Grid::from_points(
            detail::json_vector(doc["input_grids"][g], "input_grids[" + std::to_string(g) + "]")));
    file.output_grid = Grid::from_points(detail::json_vector(doc["output_grid"], "output_grid"));

    const size_t p = file.input_grids.size();
    bool first = true;
    for (size_t i = 0; i < doc["samples"].size(); ++i) {
        const auto& sample = doc["samples"][i];
        const std::string where = "samples[" + std::to_string(i) + "]";
        if (!sample.contains("x") || !sample["x"].is_array() || sample["x"].size() != p)
            throw ParseError(where + ".x must hold " + std::to_string(p) + " component arrays");
        std::vector<SampledFunction> comps;
        for (size_t c = 0; c < p; ++c)
            comps.emplace_back(file.input_grids[c],
                               detail::json_vector(sample["x"][c],
                                                   where + ".x[" + std::to_string(c) + "]"));
        file.inputs.emplace_back(std::move(comps));

        const bool has_y = sample.contains("y");
        const bool has_label = sample.contains("label");
        if (has_y == has_label)
            throw ParseError(where + " must carry exactly one of \"y\" or \"label\"");
        if (first) {
            if (has_y)
                file.outputs.emplace();
            else
                file.labels.emplace();
            first = false;
        }
        if (has_y) {
            if (!file.outputs) throw ParseError(where + " mixes labels and output curves");
            file.outputs->emplace_back(file.output_grid,
                                       detail::json_vector(sample["y"], where + ".y"));
        } else {
            if (!file.labels) throw ParseError(where + " mixes labels and output curves");
            if (!sample["label"].is_number_integer())
                throw ParseError(where + ".label must be an integer");
            file.labels->push_back(sample["label"].get<int>());
        }
    }
    return file;
}

inline DatasetFile load_dataset(const std::string& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("malformed dataset file " + path + ": " + e.what());
    }
    try {
        return parse_dataset(doc);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw ParseError("invalid dataset file " + path + ": " + e.what());
    }
}

} // namespace ovkern
