#pragma once

// JSON forms of the result types. Non-finite numbers and empty optionals are
// written as null. Documents written by the CLI and service carry
// "schema_version" at the top level.

#include <json.hpp>

#include "egovario/bootstrap.hpp"
#include "egovario/dataset.hpp"
#include "egovario/distances.hpp"
#include "egovario/expfit.hpp"
#include "egovario/regress.hpp"
#include "egovario/variogram.hpp"

namespace egovario {

using json = nlohmann::json;

inline constexpr const char* kSchemaVersion = "1.0";

void to_json(json& j, const Point& p);
void from_json(const json& j, Point& p);
void to_json(json& j, const MissingnessReport& r);
void to_json(json& j, const DistanceSummary& s);
void to_json(json& j, const VariogramBin& b);
void from_json(const json& j, VariogramBin& b);
void to_json(json& j, const EmpiricalVariogram& ev);
void from_json(const json& j, EmpiricalVariogram& ev);
void to_json(json& j, const ExpParams& p);
void from_json(const json& j, ExpParams& p);
void to_json(json& j, const ExpModelFit& f);
void from_json(const json& j, ExpModelFit& f);
void to_json(json& j, const ModelRow& r);
void from_json(const json& j, ModelRow& r);
void to_json(json& j, const ModelTable& t);
void from_json(const json& j, ModelTable& t);
void to_json(json& j, const OlsFit& f);
void to_json(json& j, const UncertaintyTable& t);
void from_json(const json& j, UncertaintyTable& t);

/// Adds a fitted-curve array to each row, for clients that draw the plots themselves.
[[nodiscard]] json model_table_with_curves(const ModelTable& table, std::size_t samples = 100);

/// {"schema_version": ..., "kind": kind, "data": payload}
[[nodiscard]] json versioned(const std::string& kind, json payload);

}  // namespace egovario
