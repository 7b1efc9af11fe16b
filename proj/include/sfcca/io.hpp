#pragma once

// File formats.
//
// Curves CSV: header `subject,t,c11,c12,...,cmm` with the upper triangle in
// row-major order; one row per (subject, time), rows of a subject contiguous
// and in increasing time. Covariates CSV: `subject,x1,...,xp`. Models and
// simulation truths are pretty-printed JSON with explicit array shapes.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfcca/pipeline.hpp"
#include "sfcca/simulation.hpp"

namespace sfcca::io {

using nlohmann::json;

inline constexpr int kModelMajorVersion = 1;
inline constexpr int kModelMinorVersion = 0;

struct CurveTable {
  std::vector<std::string> ids;
  std::vector<SPDCurve> curves;
};

struct CovariateTable {
  std::vector<std::string> ids;
  Matrix x;
};

struct Dataset {
  std::vector<std::string> ids;
  std::vector<SPDCurve> curves;
  /// Rows ordered like `ids`.
  Matrix x;
};

CurveTable parse_curves(const std::string& text);
CovariateTable parse_covariates(const std::string& text);
CurveTable load_curves(const std::filesystem::path& path);
CovariateTable load_covariates(const std::filesystem::path& path);
/// Joins both files by subject ID, in curve-file order.
Dataset load_dataset(const std::filesystem::path& curves, const std::filesystem::path& covariates);

std::string curves_csv(const std::vector<std::string>& ids, std::span<const SPDCurve> curves);
std::string covariates_csv(const std::vector<std::string>& ids, const Matrix& x);

/// Decimal text that round-trips the double exactly.
std::string format_double(double v);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

json matrix_to_json(const Matrix& a);
Matrix matrix_from_json(const json& j);

struct ModelMetadata {
  std::uint64_t seed = 0;
  /// Settings that produced the model; hashed into config_hash.
  json config = json::object();
};

/// 64-bit FNV-1a of the compact dump, as 16 hex digits.
std::string config_hash(const json& config);

json model_to_json(const FunctionalCCAModel& model, const ModelMetadata& meta);
json model_to_json(const EuclideanCCAModel& model, const ModelMetadata& meta);

/// Either kind of model as read back from an artifact.
struct ModelArtifact {
  std::string kind;
  ModelMetadata meta;
  FunctionalCCAModel functional;
  EuclideanCCAModel euclidean;

  const CCAModel& cca() const { return kind == "functional_cca" ? functional.cca : euclidean.cca; }
};

/// Refuses unknown major versions and malformed documents (ValidationError).
ModelArtifact model_from_json(const json& j);
json artifact_to_json(const ModelArtifact& artifact);

std::string dump(const json& j);

json truth_to_json(const sim::SimTruth& truth);
sim::SimTruth truth_from_json(const json& j);

}  // namespace sfcca::io
