// Command-line front end: fit, cv, simulate, project.
//
// Exit codes: 0 success, 2 invalid input (a JSON error record is written to
// stderr), 3 numerical non-convergence (results are still written).

#include "cocolasso/crossval.hpp"
#include "cocolasso/io.hpp"
#include "cocolasso/lasso.hpp"
#include "cocolasso/parallel.hpp"
#include "cocolasso/psd_projection.hpp"
#include "cocolasso/simbench.hpp"
#include "cocolasso/surrogate.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

namespace cl = cocolasso;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 2;
constexpr int kNotConverged = 3;
constexpr std::uint64_t kDefaultSeed = 20240601;

struct Output {
  std::string path = "-";
  std::string format = "json";

  void add(CLI::App& app) {
    app.add_option("-o,--output", path, "Output file, '-' for stdout")->capture_default_str();
    app.add_option("--format", format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
  }

  void write(const std::string& text) const {
    if (path.empty() || path == "-") {
      std::cout << text;
      std::cout.flush();
      return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw cl::InvalidInput("cannot write '" + path + "'");
    out << text;
  }

  bool to_stdout() const { return path.empty() || path == "-"; }
};

struct AdmmFlags {
  cl::AdmmConfig cfg;
  std::optional<double> tol;

  void add(CLI::App& app) {
    app.add_option("--admm-mu", cfg.mu, "ADMM penalty")->capture_default_str();
    app.add_option("--admm-tol", tol, "Primal and dual ADMM tolerance");
    app.add_option("--admm-max-iter", cfg.max_iter, "ADMM iteration cap")->capture_default_str();
    app.add_option("--eps-floor", cfg.eps_floor, "Eigenvalue floor of the projection")
        ->capture_default_str();
    app.add_flag("!--no-restart", cfg.restart, "Do not retry with other penalties");
  }

  cl::AdmmConfig resolve() const {
    cl::AdmmConfig out = cfg;
    if (tol) out.tol_primal = out.tol_dual = *tol;
    cl::validate(out);
    return out;
  }
};

struct ModelFlags {
  std::optional<std::string> additive_sigma;
  std::optional<double> additive_tau2;
  std::optional<std::string> mult_mu;
  std::optional<std::string> mult_sigma;
  std::optional<std::string> missing;

  void add(CLI::App& app) {
    app.add_option("--additive-sigma", additive_sigma, "CSV file holding Sigma_A");
    app.add_option("--additive-tau2", additive_tau2, "Sigma_A = tau2 * I");
    app.add_option("--mult-mu", mult_mu, "CSV file (or scalar) holding mu_M");
    app.add_option("--mult-sigma", mult_sigma, "CSV file holding Sigma_M");
    app.add_option("--missing", missing, "Missing rate: scalar, CSV file, or 'auto'");
  }

  cl::ErrorModel build(const cl::CorruptedDataset& data) const {
    const int additive = (additive_sigma ? 1 : 0) + (additive_tau2 ? 1 : 0);
    const int mult = (mult_mu || mult_sigma) ? 1 : 0;
    const int miss = missing ? 1 : 0;
    if (additive > 1) throw cl::InvalidInput("give either --additive-sigma or --additive-tau2");
    if (additive + mult + miss != 1)
      throw cl::InvalidInput("exactly one error model is required (additive, multiplicative or missing)");
    const cl::Index p = data.p();
    cl::ErrorModel model;
    if (additive_sigma) {
      model = cl::AdditiveError{cl::io::read_matrix(*additive_sigma)};
    } else if (additive_tau2) {
      model = cl::AdditiveError{cl::Matrix::Identity(p, p) * *additive_tau2};
    } else if (mult) {
      if (!mult_mu || !mult_sigma)
        throw cl::InvalidInput("the multiplicative model needs both --mult-mu and --mult-sigma");
      model = cl::MultiplicativeError{vector_or_scalar(*mult_mu, p), cl::io::read_matrix(*mult_sigma)};
    } else if (*missing == "auto") {
      model = cl::MissingError{cl::estimate_missing_rates(data)};
    } else {
      model = cl::MissingError{vector_or_scalar(*missing, p)};
    }
    cl::validate(model, p);
    return model;
  }

  static cl::Vector vector_or_scalar(const std::string& arg, cl::Index p) {
    double v = 0.0;
    const auto res = std::from_chars(arg.data(), arg.data() + arg.size(), v);
    if (res.ec == std::errc() && res.ptr == arg.data() + arg.size()) return cl::Vector::Constant(p, v);
    return cl::io::read_vector(arg);
  }
};

struct DataFlags {
  std::string path;
  std::string response;

  void add(CLI::App& app) {
    app.add_option("--data", path, "CSV with a header row; empty cells are missing")->required();
    app.add_option("--response", response, "Name of the response column")->required();
  }

  cl::CorruptedDataset load(std::vector<std::string>& names) const {
    const auto table = cl::io::read_table(path);
    return cl::center(cl::io::dataset_from_table(table, response, &names));
  }
};

struct SolverFlags {
  cl::SolveOptions opts;

  void add(CLI::App& app) {
    app.add_option("--tol", opts.tol, "Coordinate descent tolerance")->capture_default_str();
    app.add_option("--max-sweeps", opts.max_iter, "Coordinate descent sweep cap")
        ->capture_default_str();
  }
};

struct GridFlags {
  int grid_size = 100;
  double min_ratio = 1e-3;

  void add(CLI::App& app) {
    app.add_option("--grid-size", grid_size, "Number of lambda values")->capture_default_str();
    app.add_option("--lambda-min-ratio", min_ratio, "Smallest lambda as a fraction of the largest")
        ->capture_default_str();
  }
};

int default_threads() { return cl::default_thread_count(); }

json psd_summary(const cl::PsdResult& r) { return cl::io::to_json(r, false); }

std::string path_csv(const cl::SolutionPath& path, const std::vector<std::string>& names) {
  std::ostringstream os;
  os << "lambda";
  for (const auto& n : names) os << ',' << n;
  os << '\n';
  for (std::size_t l = 0; l < path.lambdas.size(); ++l) {
    os << cl::io::format_double(path.lambdas[l]);
    for (cl::Index j = 0; j < path.betas[l].size(); ++j)
      os << ',' << cl::io::format_double(path.betas[l](j));
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------- fit

struct FitCommand {
  DataFlags data;
  ModelFlags model;
  AdmmFlags admm;
  SolverFlags solver;
  GridFlags grid;
  std::optional<double> lambda;
  Output out;

  void add(CLI::App& app) {
    data.add(app);
    model.add(app);
    admm.add(app);
    solver.add(app);
    grid.add(app);
    app.add_option("--lambda", lambda, "Fit a single lambda instead of a path");
    out.add(app);
  }

  int run() const {
    std::vector<std::string> names;
    const auto dataset = data.load(names);
    const auto error_model = model.build(dataset);
    const auto sur = cl::build_surrogate(dataset, error_model);
    const auto psd = cl::nearest_psd(sur.sigma_hat, admm.resolve());

    cl::SolveOptions opts = solver.opts;
    opts.check_psd = false;
    cl::SolutionPath path;
    if (lambda) {
      if (!(*lambda >= 0.0)) throw cl::InvalidInput("--lambda must be non-negative");
      path = cl::solution_path(psd.sigma_tilde, sur.rho_tilde, std::vector<double>{*lambda}, opts);
    } else {
      path = cl::solution_path(psd.sigma_tilde, sur.rho_tilde, grid.grid_size, grid.min_ratio, opts);
    }

    if (out.format == "csv") {
      out.write(path_csv(path, names));
    } else {
      json j = {{"schema_version", cl::io::kSchemaVersion},
                {"command", "fit"},
                {"n", dataset.n()},
                {"p", dataset.p()},
                {"columns", names},
                {"error_model", cl::io::to_json(error_model)},
                {"psd", psd_summary(psd)},
                {"max_norm_distance", psd.max_norm_distance},
                {"path", cl::io::to_json(path)}};
      out.write(j.dump(2) + "\n");
    }
    return psd.converged && path.all_converged() ? kOk : kNotConverged;
  }
};

// ---------------------------------------------------------------- cv

struct CvCommand {
  DataFlags data;
  ModelFlags model;
  AdmmFlags admm;
  SolverFlags solver;
  GridFlags grid;
  int folds = 5;
  std::uint64_t seed = kDefaultSeed;
  bool emit_naive = false;
  int threads = default_threads();
  Output out;

  void add(CLI::App& app) {
    data.add(app);
    model.add(app);
    admm.add(app);
    solver.add(app);
    grid.add(app);
    app.add_option("-k,--folds", folds, "Number of folds")->capture_default_str();
    app.add_option("--seed", seed, "Fold assignment seed")->capture_default_str();
    app.add_flag("--emit-naive", emit_naive, "Also report the naive held-out loss");
    app.add_option("--threads", threads, "Folds processed concurrently")->capture_default_str();
    out.add(app);
  }

  int run() const {
    std::vector<std::string> names;
    const auto dataset = data.load(names);
    const auto error_model = model.build(dataset);
    const auto plan = cl::make_folds(dataset.n(), folds, seed);

    cl::CvOptions opts;
    opts.grid_size = grid.grid_size;
    opts.lambda_min_ratio = grid.min_ratio;
    opts.admm = admm.resolve();
    opts.solver = solver.opts;
    opts.threads = threads;
    const auto report = cl::cross_validate(dataset, error_model, plan, opts, emit_naive);

    // Final fit on the full data, warm-started down to the selected lambda.
    const auto sur = cl::build_surrogate(dataset, error_model);
    const auto psd = cl::nearest_psd(sur.sigma_hat, opts.admm);
    cl::SolveOptions fit_opts = solver.opts;
    fit_opts.check_psd = false;
    const std::vector<double> head(report.lambdas.begin(),
                                   report.lambdas.begin() + report.selected_index + 1);
    const auto path = cl::solution_path(psd.sigma_tilde, sur.rho_tilde, head, fit_opts);

    if (out.format == "csv") {
      std::ostringstream os;
      os << "lambda,corrected_loss" << (report.naive_loss ? ",naive_loss" : "") << '\n';
      for (std::size_t l = 0; l < report.lambdas.size(); ++l) {
        os << cl::io::format_double(report.lambdas[l]) << ','
           << cl::io::format_double(report.corrected_loss[l]);
        if (report.naive_loss) os << ',' << cl::io::format_double((*report.naive_loss)[l]);
        os << '\n';
      }
      out.write(os.str());
    } else {
      json j = {{"schema_version", cl::io::kSchemaVersion},
                {"command", "cv"},
                {"n", dataset.n()},
                {"p", dataset.p()},
                {"columns", names},
                {"folds", folds},
                {"seed", seed},
                {"error_model", cl::io::to_json(error_model)},
                {"cv", cl::io::to_json(report)},
                {"fit",
                 {{"lambda", report.lambda_selected},
                  {"beta", cl::io::to_json(path.betas.back())},
                  {"kkt_residual", path.kkt_residuals.back()},
                  {"converged", path.all_converged()},
                  {"psd", psd_summary(psd)}}}};
      out.write(j.dump(2) + "\n");
    }
    const bool ok = report.all_converged() && psd.converged && path.all_converged();
    return ok ? kOk : kNotConverged;
  }
};

// ---------------------------------------------------------------- simulate

struct SimulateCommand {
  std::optional<std::string> config_path;
  std::optional<cl::Index> n, p;
  std::optional<double> sigma;
  std::optional<std::string> design;
  std::optional<double> phi, c;
  std::optional<std::string> corruption;
  std::optional<double> tau, r;
  std::optional<int> replications, bootstrap, folds, grid_size;
  std::optional<double> min_ratio;
  std::optional<std::uint64_t> seed;
  bool estimate_rates = false;
  std::optional<double> admm_mu, admm_tol;
  std::optional<int> admm_max_iter;
  int threads = default_threads();
  bool quiet = false;
  Output out;

  void add(CLI::App& app) {
    app.add_option("--config", config_path, "JSON simulation config; flags override it");
    app.add_option("--n", n, "Sample size (100)");
    app.add_option("--p", p, "Dimension (250)");
    app.add_option("--sigma", sigma, "Noise standard deviation (3)");
    app.add_option("--design", design, "ar or cs (ar)")->check(CLI::IsMember({"ar", "cs"}));
    app.add_option("--phi", phi, "Autoregressive coefficient (0.5)");
    app.add_option("--c", c, "Compound symmetry correlation (0.5)");
    app.add_option("--corruption", corruption, "additive, multiplicative or missing (additive)")
        ->check(CLI::IsMember({"additive", "multiplicative", "missing"}));
    app.add_option("--tau", tau, "Error scale for additive / multiplicative corruption");
    app.add_option("--r", r, "Missing probability");
    app.add_option("--replications", replications, "Replications (100)");
    app.add_option("--bootstrap", bootstrap, "Bootstrap resamples for standard errors (1000)");
    app.add_option("-k,--folds", folds, "Cross-validation folds (5)");
    app.add_option("--grid-size", grid_size, "Number of lambda values (100)");
    app.add_option("--lambda-min-ratio", min_ratio, "Smallest lambda ratio (1e-3)");
    app.add_option("--seed", seed, "Master seed (20240601)");
    app.add_flag("--estimate-missing-rates", estimate_rates,
                 "Use observed missing fractions instead of the true rate");
    app.add_option("--admm-mu", admm_mu, "ADMM penalty");
    app.add_option("--admm-tol", admm_tol, "ADMM tolerance");
    app.add_option("--admm-max-iter", admm_max_iter, "ADMM iteration cap");
    app.add_option("--threads", threads, "Replications processed concurrently")
        ->capture_default_str();
    app.add_flag("-q,--quiet", quiet, "Do not print the summary block");
    out.add(app);
  }

  cl::SimConfig config() const {
    cl::SimConfig cfg;
    if (config_path) {
      std::ifstream in(*config_path);
      if (!in) throw cl::InvalidInput("cannot open '" + *config_path + "'");
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw cl::InvalidInput(*config_path + ": " + e.what());
      }
      cl::io::apply_json(j, cfg);
    }
    if (n) cfg.n = *n;
    if (p) {
      cfg.p = *p;
      if (cfg.beta_star.size() != cfg.p) cfg.beta_star = cl::default_beta_star(cfg.p);
    }
    if (sigma) cfg.sigma_noise = *sigma;
    if (design) {
      if (*design == "ar") cfg.design = cl::Autoregressive{phi.value_or(0.5)};
      else cfg.design = cl::CompoundSymmetry{c.value_or(0.5)};
    } else if (phi) {
      cfg.design = cl::Autoregressive{*phi};
    } else if (c) {
      cfg.design = cl::CompoundSymmetry{*c};
    }
    if (corruption) {
      if (*corruption == "additive") cfg.corruption = cl::AdditiveGaussian{tau.value_or(0.75)};
      else if (*corruption == "multiplicative") cfg.corruption = cl::MultiplicativeLognormal{tau.value_or(0.25)};
      else cfg.corruption = cl::MissingBernoulli{r.value_or(0.1)};
    } else if (tau || r) {
      std::visit(
          [&](auto& cur) {
            using T = std::decay_t<decltype(cur)>;
            if constexpr (std::is_same_v<T, cl::MissingBernoulli>) {
              if (tau) throw cl::InvalidInput("--tau does not apply to missing-data corruption");
              cur.r = *r;
            } else {
              if (r) throw cl::InvalidInput("--r applies only to missing-data corruption");
              cur.tau = *tau;
            }
          },
          cfg.corruption);
    }
    if (replications) cfg.replications = *replications;
    if (bootstrap) cfg.bootstrap_samples = *bootstrap;
    if (folds) cfg.folds = *folds;
    if (grid_size) cfg.grid_size = *grid_size;
    if (min_ratio) cfg.lambda_min_ratio = *min_ratio;
    if (seed) cfg.seed = *seed;
    if (estimate_rates) cfg.estimate_missing_rates = true;
    if (admm_mu) cfg.admm.mu = *admm_mu;
    if (admm_tol) cfg.admm.tol_primal = cfg.admm.tol_dual = *admm_tol;
    if (admm_max_iter) cfg.admm.max_iter = *admm_max_iter;
    cfg.threads = threads;
    cl::validate(cfg);
    return cfg;
  }

  static std::string summary(const cl::ExperimentReport& rep) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    os << "design " << cl::describe(rep.config.design) << ", " << cl::describe(rep.config.corruption)
       << ", n=" << rep.config.n << ", p=" << rep.config.p << ", replications="
       << rep.config.replications << " (failed " << rep.failures << ")\n";
    os << "           PE      MSE      C     IC\n";
    os << "median " << std::setw(7) << rep.median.pe << "  " << std::setw(7) << rep.median.mse
       << "  " << std::setw(5) << rep.median_c << "  " << std::setw(5) << rep.median_ic << '\n';
    os << "(se)   " << std::setw(7) << rep.se_pe << "  " << std::setw(7) << rep.se_mse << "  "
       << std::setw(5) << rep.se_c << "  " << std::setw(5) << rep.se_ic << '\n';
    os << "signed support recovered: " << rep.sign_recovery_rate << " at selected lambda, "
       << rep.sign_recovery_rate_path << " somewhere on the path\n";
    os << "snr " << rep.snr << ", factor-2 bound held on every replication: "
       << (rep.factor_two_all ? "yes" : "no") << '\n';
    return os.str();
  }

  int run() const {
    const auto cfg = config();
    const auto report = cl::run_experiment(cfg);
    if (out.format == "csv") {
      std::ostringstream os;
      cl::io::write_records_csv(os, report);
      out.write(os.str());
    } else {
      out.write(cl::io::to_json(report).dump(2) + "\n");
    }
    if (!quiet) (out.to_stdout() ? std::cerr : std::cout) << summary(report);
    return report.acceptable() ? kOk : kNotConverged;
  }
};

// ---------------------------------------------------------------- project

struct ProjectCommand {
  std::string input;
  AdmmFlags admm;
  Output out;

  void add(CLI::App& app) {
    app.add_option("--input", input, "Headerless CSV holding a symmetric matrix")->required();
    admm.add(app);
    out.add(app);
  }

  int run() const {
    const cl::Matrix k = cl::io::read_matrix(input);
    if (k.rows() != k.cols())
      throw cl::InvalidInput("matrix must be square, got " + std::to_string(k.rows()) + "x" +
                             std::to_string(k.cols()));
    const double asym = (k - k.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-8)
      throw cl::InvalidInput("matrix is not symmetric (max |K - K'| = " +
                             cl::io::format_double(asym) + ")");
    const auto psd = cl::nearest_psd(cl::symmetrize(k), admm.resolve());
    if (out.format == "csv") {
      std::ostringstream os;
      cl::io::write_matrix(os, psd.sigma_tilde);
      out.write(os.str());
    } else {
      json j = cl::io::to_json(psd, true);
      j["schema_version"] = cl::io::kSchemaVersion;
      j["command"] = "project";
      j["p"] = k.rows();
      j["min_eigenvalue"] = cl::min_eigenvalue(psd.sigma_tilde);
      out.write(j.dump(2) + "\n");
    }
    return psd.converged ? kOk : kNotConverged;
  }
};

int report_error(int code, const std::string& kind, const std::string& message) {
  json err = {{"error", {{"code", code}, {"kind", kind}, {"message", message}}}};
  std::cerr << err.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lasso regression for corrupted designs"};
  app.require_subcommand(1);

  FitCommand fit;
  CvCommand cv;
  SimulateCommand simulate;
  ProjectCommand project;
  fit.add(*app.add_subcommand("fit", "Fit on the full data, single lambda or path"));
  cv.add(*app.add_subcommand("cv", "Select lambda by corrected K-fold cross-validation"));
  simulate.add(*app.add_subcommand("simulate", "Run the simulation bench"));
  project.add(*app.add_subcommand("project", "Nearest PSD matrix in max norm"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error(kInvalid, "usage", e.what());
  }

  try {
    if (app.got_subcommand("fit")) return fit.run();
    if (app.got_subcommand("cv")) return cv.run();
    if (app.got_subcommand("simulate")) return simulate.run();
    return project.run();
  } catch (const cl::InvalidInput& e) {
    return report_error(kInvalid, "invalid_input", e.what());
  } catch (const cl::NumericalError& e) {
    return report_error(kNotConverged, "numerical", e.what());
  }
}
