#pragma once

#include "cocolasso/common.hpp"
#include "cocolasso/crossval.hpp"
#include "cocolasso/lasso.hpp"
#include "cocolasso/psd_projection.hpp"
#include "cocolasso/simbench.hpp"
#include "cocolasso/surrogate.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace cocolasso::io {

inline constexpr int kSchemaVersion = 1;

/// Comma-separated numeric table with a header row. Empty cells and
/// NaN/NA tokens are missing (observed == false, value 0).
struct Table {
  std::vector<std::string> header;
  Matrix values;
  Mask observed;

  Index column(const std::string& name) const;  // throws InvalidInput if absent
};

Table parse_table(std::istream& in, const std::string& source = "<input>");
Table read_table(const std::string& path);

/// Splits a table into covariates and the named response column. The
/// response must be fully observed; covariate names are returned in order.
CorruptedDataset dataset_from_table(const Table& table, const std::string& response,
                                    std::vector<std::string>* names = nullptr);

/// Headerless numeric CSV, every cell present.
Matrix parse_matrix(std::istream& in, const std::string& source = "<input>");
Matrix read_matrix(const std::string& path);

/// A single row or a single column.
Vector read_vector(const std::string& path);

/// 17 significant digits, so that parse_matrix(write_matrix(m)) == m bitwise.
void write_matrix(std::ostream& out, const Matrix& m);
void write_matrix(const std::string& path, const Matrix& m);

std::string format_double(double v);

nlohmann::json to_json(const Matrix& m);
nlohmann::json to_json(const Vector& v);
nlohmann::json to_json(const PsdResult& r, bool with_matrix);
nlohmann::json to_json(const SolutionPath& path);
nlohmann::json to_json(const CvReport& report);
nlohmann::json to_json(const ErrorModel& model);
nlohmann::json to_json(const AdmmConfig& cfg);
nlohmann::json to_json(const SimConfig& cfg);  // excludes the thread count
nlohmann::json to_json(const ExperimentReport& report);  // excludes runtime

/// Applies the keys present in `j` on top of `cfg`. Unknown keys are an error.
void apply_json(const nlohmann::json& j, SimConfig& cfg);

/// One line per replication.
void write_records_csv(std::ostream& out, const ExperimentReport& report);

}  // namespace cocolasso::io
