#include "cocolasso/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cocolasso::io {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool is_missing_token(const std::string& cell) {
  return cell.empty() || cell == "NaN" || cell == "nan" || cell == "NA";
}

bool parse_number(const std::string& cell, double& out) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (begin != end && *begin == '+') ++begin;
  const auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc() && res.ptr == end && std::isfinite(out);
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  return in;
}

bool blank(const std::string& line) { return trim(line).empty(); }

}  // namespace

Index Table::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return static_cast<Index>(j);
  throw InvalidInput("column '" + name + "' not found in header");
}

Table parse_table(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  Table t;
  while (std::getline(in, line)) {
    ++line_no;
    if (!blank(line)) break;
  }
  if (blank(line)) throw InvalidInput(source + ": missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  for (auto& name : split(line)) {
    if (name.size() >= 2 && name.front() == '"' && name.back() == '"')
      name = name.substr(1, name.size() - 2);
    t.header.push_back(name);
  }
  const std::size_t cols = t.header.size();

  std::vector<std::vector<double>> rows;
  std::vector<std::vector<bool>> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto cells = split(line);
    if (cells.size() != cols)
      throw InvalidInput(source + ": line " + std::to_string(line_no) + " has " +
                         std::to_string(cells.size()) + " fields, header has " +
                         std::to_string(cols));
    std::vector<double> vals(cols, 0.0);
    std::vector<bool> obs(cols, true);
    for (std::size_t j = 0; j < cols; ++j) {
      if (is_missing_token(cells[j])) {
        obs[j] = false;
      } else if (!parse_number(cells[j], vals[j])) {
        throw InvalidInput(source + ": line " + std::to_string(line_no) + ", column '" +
                           t.header[j] + "' (" + std::to_string(j + 1) +
                           "): cannot parse '" + cells[j] + "' as a number");
      }
    }
    rows.push_back(std::move(vals));
    seen.push_back(std::move(obs));
  }
  if (rows.empty()) throw InvalidInput(source + ": no data rows");

  const auto n = static_cast<Index>(rows.size());
  t.values.resize(n, static_cast<Index>(cols));
  t.observed.resize(n, static_cast<Index>(cols));
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < static_cast<Index>(cols); ++j) {
      t.values(i, j) = rows[i][j];
      t.observed(i, j) = seen[i][j];
    }
  return t;
}

Table read_table(const std::string& path) {
  auto in = open_input(path);
  return parse_table(in, path);
}

CorruptedDataset dataset_from_table(const Table& table, const std::string& response,
                                    std::vector<std::string>* names) {
  const Index r = table.column(response);
  if (!table.observed.col(r).all()) {
    for (Index i = 0; i < table.observed.rows(); ++i)
      if (!table.observed(i, r))
        throw InvalidInput("response '" + response + "' is missing in data row " +
                           std::to_string(i + 1));
  }
  const Index p = table.values.cols() - 1;
  if (p < 1) throw InvalidInput("no covariate columns besides the response");
  Matrix z(table.values.rows(), p);
  Mask mask(table.values.rows(), p);
  Index k = 0;
  if (names) names->clear();
  for (Index j = 0; j < table.values.cols(); ++j) {
    if (j == r) continue;
    z.col(k) = table.values.col(j);
    mask.col(k) = table.observed.col(j);
    if (names) names->push_back(table.header[j]);
    ++k;
  }
  return CorruptedDataset(std::move(z), table.values.col(r), mask);
}

Matrix parse_matrix(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto cells = split(line);
    if (!rows.empty() && cells.size() != rows.front().size())
      throw InvalidInput(source + ": line " + std::to_string(line_no) + " has " +
                         std::to_string(cells.size()) + " fields, expected " +
                         std::to_string(rows.front().size()));
    std::vector<double> vals(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j)
      if (!parse_number(cells[j], vals[j]))
        throw InvalidInput(source + ": line " + std::to_string(line_no) + ", column " +
                           std::to_string(j + 1) + ": cannot parse '" + cells[j] +
                           "' as a number");
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw InvalidInput(source + ": empty matrix");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  return m;
}

Matrix read_matrix(const std::string& path) {
  auto in = open_input(path);
  return parse_matrix(in, path);
}

Vector read_vector(const std::string& path) {
  const Matrix m = read_matrix(path);
  if (m.rows() == 1) return m.row(0).transpose();
  if (m.cols() == 1) return m.col(0);
  throw InvalidInput(path + ": expected a single row or column, got " +
                     std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_matrix(std::ostream& out, const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

void write_matrix(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  write_matrix(out, m);
}

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

json to_json(const PsdResult& r, bool with_matrix) {
  json j = {{"iterations", r.iterations},
            {"primal_residual", r.primal_residual},
            {"dual_residual", r.dual_residual},
            {"max_norm_distance", r.max_norm_distance},
            {"mu", r.mu},
            {"converged", r.converged}};
  if (with_matrix) j["sigma_tilde"] = to_json(r.sigma_tilde);
  return j;
}

json to_json(const SolutionPath& path) {
  json betas = json::array();
  for (const auto& b : path.betas) betas.push_back(to_json(b));
  return {{"lambdas", path.lambdas},
          {"betas", std::move(betas)},
          {"kkt_residuals", path.kkt_residuals},
          {"iterations", path.iterations},
          {"converged", std::vector<bool>(path.converged.begin(), path.converged.end())},
          {"unbounded", std::vector<bool>(path.unbounded.begin(), path.unbounded.end())}};
}

json to_json(const CvReport& report) {
  json folds = json::array();
  for (const auto& f : report.folds)
    folds.push_back({{"fold", f.fold},
                     {"n_train", f.n_train},
                     {"n_validation", f.n_validation},
                     {"train_psd", to_json(f.train_psd, false)},
                     {"validation_psd", to_json(f.validation_psd, false)},
                     {"path_converged", f.path_converged}});
  json j = {{"lambdas", report.lambdas},
            {"corrected_loss", report.corrected_loss},
            {"selected_index", report.selected_index},
            {"lambda_selected", report.lambda_selected},
            {"folds", std::move(folds)}};
  if (report.naive_loss) j["naive_loss"] = *report.naive_loss;
  return j;
}

json to_json(const ErrorModel& model) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, AdditiveError>)
          return {{"type", "additive"}, {"sigma_a", to_json(m.sigma_a)}};
        else if constexpr (std::is_same_v<T, MultiplicativeError>)
          return {{"type", "multiplicative"}, {"mu", to_json(m.mu)}, {"sigma_m", to_json(m.sigma_m)}};
        else
          return {{"type", "missing"}, {"rates", to_json(m.rates)}};
      },
      model);
}

json to_json(const AdmmConfig& cfg) {
  return {{"mu", cfg.mu},
          {"eps_floor", cfg.eps_floor},
          {"tol_primal", cfg.tol_primal},
          {"tol_dual", cfg.tol_dual},
          {"max_iter", cfg.max_iter},
          {"restart", cfg.restart}};
}

json to_json(const SimConfig& cfg) {
  json design = std::visit(
      [](const auto& d) -> json {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Autoregressive>) return {{"type", "ar"}, {"phi", d.phi}};
        else return {{"type", "cs"}, {"c", d.c}};
      },
      cfg.design);
  json corruption = std::visit(
      [](const auto& c) -> json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, AdditiveGaussian>) return {{"type", "additive"}, {"tau", c.tau}};
        else if constexpr (std::is_same_v<T, MultiplicativeLognormal>)
          return {{"type", "multiplicative"}, {"tau", c.tau}};
        else return {{"type", "missing"}, {"r", c.r}};
      },
      cfg.corruption);
  return {{"n", cfg.n},
          {"p", cfg.p},
          {"beta_star", to_json(cfg.beta_star)},
          {"sigma", cfg.sigma_noise},
          {"design", std::move(design)},
          {"corruption", std::move(corruption)},
          {"replications", cfg.replications},
          {"seed", cfg.seed},
          {"bootstrap_samples", cfg.bootstrap_samples},
          {"folds", cfg.folds},
          {"grid_size", cfg.grid_size},
          {"lambda_min_ratio", cfg.lambda_min_ratio},
          {"admm", to_json(cfg.admm)},
          {"estimate_missing_rates", cfg.estimate_missing_rates}};
}

json to_json(const ExperimentReport& report) {
  json records = json::array();
  for (const auto& r : report.records) {
    json rec = {{"rep", r.rep}, {"failed", r.failed}};
    if (r.failed) {
      rec["error"] = r.error;
    } else {
      rec.update({{"pe", r.m.pe},
                  {"mse", r.m.mse},
                  {"c", r.m.correct},
                  {"ic", r.m.incorrect},
                  {"lambda_selected", r.lambda_selected},
                  {"sign_recovered", r.sign_recovered},
                  {"sign_recovered_path", r.sign_recovered_path},
                  {"gram_error_surrogate", r.gram_error_surrogate},
                  {"gram_error_projected", r.gram_error_projected},
                  {"factor_two_holds", r.factor_two_holds},
                  {"psd_iterations", r.psd_iterations},
                  {"psd_converged", r.psd_converged}});
    }
    records.push_back(std::move(rec));
  }
  return {{"schema_version", kSchemaVersion},
          {"command", "simulate"},
          {"config", to_json(report.config)},
          {"summary",
           {{"replications", report.config.replications},
            {"failures", report.failures},
            {"median_pe", report.median.pe},
            {"se_pe", report.se_pe},
            {"median_mse", report.median.mse},
            {"se_mse", report.se_mse},
            {"median_c", report.median_c},
            {"se_c", report.se_c},
            {"median_ic", report.median_ic},
            {"se_ic", report.se_ic},
            {"sign_recovery_rate", report.sign_recovery_rate},
            {"sign_recovery_rate_path", report.sign_recovery_rate_path},
            {"snr", report.snr},
            {"factor_two_all", report.factor_two_all}}},
          {"records", std::move(records)}};
}

namespace {

void apply_admm(const json& j, AdmmConfig& cfg) {
  for (const auto& [key, v] : j.items()) {
    if (key == "mu") cfg.mu = v.get<double>();
    else if (key == "eps_floor") cfg.eps_floor = v.get<double>();
    else if (key == "tol") cfg.tol_primal = cfg.tol_dual = v.get<double>();
    else if (key == "tol_primal") cfg.tol_primal = v.get<double>();
    else if (key == "tol_dual") cfg.tol_dual = v.get<double>();
    else if (key == "max_iter") cfg.max_iter = v.get<int>();
    else if (key == "restart") cfg.restart = v.get<bool>();
    else throw InvalidInput("unknown admm key '" + key + "'");
  }
}

}  // namespace

void apply_json(const json& j, SimConfig& cfg) {
  if (!j.is_object()) throw InvalidInput("simulation config must be a JSON object");
  try {
    bool beta_given = false;
    for (const auto& [key, v] : j.items()) {
      if (key == "n") cfg.n = v.get<Index>();
      else if (key == "p") cfg.p = v.get<Index>();
      else if (key == "beta_star") {
        const auto b = v.get<std::vector<double>>();
        cfg.beta_star = Eigen::Map<const Vector>(b.data(), static_cast<Index>(b.size()));
        beta_given = true;
      } else if (key == "sigma") cfg.sigma_noise = v.get<double>();
      else if (key == "design") {
        const auto type = v.at("type").get<std::string>();
        if (type == "ar") cfg.design = Autoregressive{v.value("phi", 0.5)};
        else if (type == "cs") cfg.design = CompoundSymmetry{v.value("c", 0.5)};
        else throw InvalidInput("unknown design '" + type + "'");
      } else if (key == "corruption") {
        const auto type = v.at("type").get<std::string>();
        if (type == "additive") cfg.corruption = AdditiveGaussian{v.value("tau", 0.75)};
        else if (type == "multiplicative") cfg.corruption = MultiplicativeLognormal{v.value("tau", 0.25)};
        else if (type == "missing") cfg.corruption = MissingBernoulli{v.value("r", 0.1)};
        else throw InvalidInput("unknown corruption '" + type + "'");
      } else if (key == "replications") cfg.replications = v.get<int>();
      else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
      else if (key == "bootstrap_samples") cfg.bootstrap_samples = v.get<int>();
      else if (key == "folds") cfg.folds = v.get<int>();
      else if (key == "grid_size") cfg.grid_size = v.get<int>();
      else if (key == "lambda_min_ratio") cfg.lambda_min_ratio = v.get<double>();
      else if (key == "admm") apply_admm(v, cfg.admm);
      else if (key == "estimate_missing_rates") cfg.estimate_missing_rates = v.get<bool>();
      else throw InvalidInput("unknown simulation config key '" + key + "'");
    }
    if (!beta_given && j.contains("p")) cfg.beta_star = default_beta_star(cfg.p);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("simulation config: ") + e.what());
  }
}

void write_records_csv(std::ostream& out, const ExperimentReport& report) {
  out << "rep,failed,pe,mse,c,ic,lambda_selected,sign_recovered,sign_recovered_path,"
         "gram_error_surrogate,gram_error_projected,factor_two_holds,psd_iterations,"
         "psd_converged\n";
  for (const auto& r : report.records) {
    out << r.rep << ',' << (r.failed ? 1 : 0) << ',';
    if (r.failed) {
      out << ",,,,,,,,,,,\n";
      continue;
    }
    out << format_double(r.m.pe) << ',' << format_double(r.m.mse) << ',' << r.m.correct << ','
        << r.m.incorrect << ',' << format_double(r.lambda_selected) << ','
        << (r.sign_recovered ? 1 : 0) << ',' << (r.sign_recovered_path ? 1 : 0) << ','
        << format_double(r.gram_error_surrogate) << ',' << format_double(r.gram_error_projected)
        << ',' << (r.factor_two_holds ? 1 : 0) << ',' << r.psd_iterations << ','
        << (r.psd_converged ? 1 : 0) << '\n';
  }
}

}  // namespace cocolasso::io
