#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "ovkern/datagen.hpp"
#include "ovkern/errors.hpp"
#include "ovkern/io_util.hpp"
#include "ovkern/kernels.hpp"
#include "ovkern/learn.hpp"

namespace ovkern {

inline constexpr const char* kModelFormatTag = "ovkern-model/1";

// tagged operator records: {"op":"multiplication","h":[...]},
// {"op":"integral","kind":"exp"}, {"op":"discretized","matrix":[[...]]}
inline nlohmann::json operator_to_json(const OperatorSpec& T) {
    nlohmann::json j;
    if (const auto* mult = std::get_if<MultiplicationOp>(&T)) {
        j["op"] = "multiplication";
        j["h"] = detail::vector_json(mult->h.values());
        return j;
    }
    if (const auto* integ = std::get_if<IntegralOp>(&T)) {
        if (integ->kind != "exp")
            throw ValidationError("only the exponential integral operator is serializable");
        j["op"] = "integral";
        j["kind"] = "exp";
        return j;
    }
    const auto& disc = std::get<DiscretizedOp>(T);
    j["op"] = "discretized";
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < disc.matrix.rows(); ++r)
        rows.push_back(detail::vector_json(disc.matrix.row(r).transpose()));
    j["matrix"] = std::move(rows);
    return j;
}

inline OperatorSpec operator_from_json(const nlohmann::json& j, const GridPtr& out_grid) {
    if (!j.contains("op") || !j["op"].is_string())
        throw ParseError("operator record is missing the \"op\" tag");
    const std::string op = j["op"].get<std::string>();
    if (op == "multiplication") {
        if (!j.contains("h")) throw ParseError("multiplication operator record needs \"h\"");
        return MultiplicationOp(
            SampledFunction(out_grid, detail::json_vector(j["h"], "operator.h")));
    }
    if (op == "integral") {
        if (!j.contains("kind") || j["kind"].get<std::string>() != "exp")
            throw ParseError("integral operator records support only kind \"exp\"");
        return IntegralOp::exponential();
    }
    if (op == "discretized") {
        if (!j.contains("matrix") || !j["matrix"].is_array() || j["matrix"].empty())
            throw ParseError("discretized operator record needs a \"matrix\" array");
        const auto rows = static_cast<Eigen::Index>(j["matrix"].size());
        Eigen::MatrixXd m(rows, rows);
        for (Eigen::Index r = 0; r < rows; ++r) {
            const Eigen::VectorXd row =
                detail::json_vector(j["matrix"][static_cast<size_t>(r)],
                                    "operator.matrix[" + std::to_string(r) + "]");
            if (row.size() != rows)
                throw ParseError("discretized operator matrix must be square");
            m.row(r) = row.transpose();
        }
        return DiscretizedOp(std::move(m));
    }
    throw ParseError("unknown operator tag \"" + op + "\"");
}

inline nlohmann::json scalar_kernel_to_json(const ScalarKernel& g) {
    nlohmann::json j;
    if (g.kind == ScalarKernel::Kind::linear) {
        j["kind"] = "linear";
    } else {
        j["kind"] = "gaussian";
        j["bandwidth"] = g.bandwidth;
    }
    return j;
}

inline ScalarKernel scalar_kernel_from_json(const nlohmann::json& j) {
    if (!j.contains("kind") || !j["kind"].is_string())
        throw ParseError("scalar kernel record is missing \"kind\"");
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "linear") return ScalarKernel::linear();
    if (kind == "gaussian") {
        if (!j.contains("bandwidth") || !j["bandwidth"].is_number())
            throw ParseError("gaussian scalar kernel record needs a numeric \"bandwidth\"");
        return ScalarKernel::gaussian(j["bandwidth"].get<double>());
    }
    throw ParseError("unknown scalar kernel kind \"" + kind + "\"");
}

inline void save_model(const std::string& path, const FRModel& model) {
    nlohmann::json doc;
    doc["format"] = kModelFormatTag;
    doc["kernel"]["scalar"] = scalar_kernel_to_json(model.kernel->scalar());
    doc["kernel"]["op"] = operator_to_json(model.kernel->op());
    nlohmann::json grids = nlohmann::json::array();
    for (const auto& comp : model.train_inputs.front().components())
        grids.push_back(detail::vector_json(comp.grid()->points()));
    doc["input_grids"] = std::move(grids);
    doc["output_grid"] = detail::vector_json(model.kernel->output_grid()->points());
    doc["lambda"] = model.lambda;
    doc["kappa"] = model.kappa;
    nlohmann::json train = nlohmann::json::array();
    for (const auto& x : model.train_inputs) {
        nlohmann::json comps = nlohmann::json::array();
        for (const auto& comp : x.components()) comps.push_back(detail::vector_json(comp.values()));
        train.push_back(std::move(comps));
    }
    doc["train_inputs"] = std::move(train);
    nlohmann::json coeffs = nlohmann::json::array();
    for (const auto& u : model.coeffs) coeffs.push_back(detail::vector_json(u.values()));
    doc["coeffs"] = std::move(coeffs);
    write_file_atomic(path, doc.dump(1) + "\n");
}

inline FRModel load_model(const std::string& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("malformed model file " + path + ": " + e.what());
    }
    try {
        if (!doc.contains("format") || doc["format"].get<std::string>() != kModelFormatTag)
            throw ParseError("model file is missing format tag \"" +
                             std::string(kModelFormatTag) + "\"");
        for (const char* field : {"kernel", "input_grids", "output_grid", "lambda", "kappa",
                                  "train_inputs", "coeffs"})
            if (!doc.contains(field))
                throw ParseError("model file is missing field \"" + std::string(field) + "\"");

        std::vector<GridPtr> in_grids;
        for (size_t g = 0; g < doc["input_grids"].size(); ++g)
            in_grids.push_back(Grid::from_points(detail::json_vector(
                doc["input_grids"][g], "input_grids[" + std::to_string(g) + "]")));
        const GridPtr out_grid =
            Grid::from_points(detail::json_vector(doc["output_grid"], "output_grid"));

        FRModel model;
        model.kernel = std::make_shared<SeparableKernel>(
            scalar_kernel_from_json(doc["kernel"]["scalar"]),
            operator_from_json(doc["kernel"]["op"], out_grid), out_grid);
        model.lambda = doc["lambda"].get<double>();
        model.kappa = doc["kappa"].get<Eigen::Index>();
        if (!(model.lambda > 0.0)) throw ParseError("model lambda must be positive");
        if (model.kappa < 1) throw ParseError("model kappa must be >= 1");

        for (size_t i = 0; i < doc["train_inputs"].size(); ++i) {
            const auto& sample = doc["train_inputs"][i];
            if (!sample.is_array() || sample.size() != in_grids.size())
                throw ParseError("train_inputs[" + std::to_string(i) + "] must hold " +
                                 std::to_string(in_grids.size()) + " components");
            std::vector<SampledFunction> comps;
            for (size_t c = 0; c < in_grids.size(); ++c)
                comps.emplace_back(in_grids[c],
                                   detail::json_vector(sample[c], "train_inputs[" +
                                                                      std::to_string(i) + "][" +
                                                                      std::to_string(c) + "]"));
            model.train_inputs.emplace_back(std::move(comps));
        }
        for (size_t i = 0; i < doc["coeffs"].size(); ++i)
            model.coeffs.emplace_back(
                out_grid, detail::json_vector(doc["coeffs"][i], "coeffs[" + std::to_string(i) + "]"));
        if (model.coeffs.size() != model.train_inputs.size() || model.coeffs.empty())
            throw ParseError("model coefficient count " + std::to_string(model.coeffs.size()) +
                             " != training input count " +
                             std::to_string(model.train_inputs.size()));
        model.applied = detail::apply_op_all(*model.kernel, model.coeffs);
        return model;
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw ParseError("invalid model file " + path + ": " + e.what());
    }
}

} // namespace ovkern
