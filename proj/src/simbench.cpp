#include "cocolasso/simbench.hpp"

#include "cocolasso/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

namespace cocolasso {

namespace {

// Substream identifiers; each replication draws from its own generator.
constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kFoldStream = 2;
constexpr std::uint64_t kBootstrapStream = 3;

constexpr double kSelectedThreshold = 1e-10;

int sign_of(double v) {
  if (v > kSelectedThreshold) return 1;
  if (v < -kSelectedThreshold) return -1;
  return 0;
}

Matrix standard_normal(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix out(rows, cols);
  // Row-major fill order so that the draws do not depend on storage order.
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) out(i, j) = normal(rng);
  return out;
}

}  // namespace

Vector default_beta_star(Index p) {
  Vector beta = Vector::Zero(p);
  const double head[] = {3.0, 1.5, 0.0, 0.0, 2.0};
  for (Index j = 0; j < std::min<Index>(p, 5); ++j) beta(j) = head[j];
  return beta;
}

AdmmConfig SimConfig::bench_admm() {
  AdmmConfig cfg;
  cfg.tol_primal = 3e-4;
  cfg.tol_dual = 3e-4;
  cfg.max_iter = 2000;
  cfg.restart = false;
  return cfg;
}

void validate(const SimConfig& cfg) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw InvalidInput(msg);
  };
  require(cfg.p >= 1, "p must be positive");
  require(cfg.n >= 2 * cfg.folds, "n must allow at least 2 rows per fold");
  require(cfg.beta_star.size() == cfg.p, "beta_star must have length p");
  require(cfg.beta_star.allFinite(), "beta_star must be finite");
  require(cfg.sigma_noise > 0.0 && std::isfinite(cfg.sigma_noise), "sigma must be positive");
  require(cfg.replications >= 1, "replications must be at least 1");
  require(cfg.bootstrap_samples >= 0, "bootstrap samples must be non-negative");
  require(cfg.folds >= 2, "folds must be at least 2");
  require(cfg.grid_size >= 1, "grid size must be at least 1");
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Autoregressive>)
          require(std::abs(d.phi) < 1.0, "autoregressive phi must satisfy |phi| < 1");
        else
          require(d.c >= 0.0 && d.c < 1.0, "compound symmetry c must lie in [0, 1)");
      },
      cfg.design);
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, MissingBernoulli>)
          require(c.r >= 0.0 && c.r < 1.0, "missing rate must lie in [0, 1)");
        else
          require(c.tau >= 0.0 && std::isfinite(c.tau), "tau must be non-negative");
      },
      cfg.corruption);
  validate(cfg.admm);
}

Matrix design_covariance(const Design& design, Index p) {
  Matrix sigma(p, p);
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        for (Index i = 0; i < p; ++i)
          for (Index j = 0; j < p; ++j) {
            if constexpr (std::is_same_v<T, Autoregressive>)
              sigma(i, j) = std::pow(d.phi, static_cast<double>(std::abs(i - j)));
            else
              sigma(i, j) = i == j ? 1.0 : d.c;
          }
      },
      design);
  return sigma;
}

SimInstance generate_instance(const SimConfig& cfg, int rep_index) {
  validate(cfg);
  const Index n = cfg.n;
  const Index p = cfg.p;
  std::mt19937_64 rng(substream_seed(cfg.seed, kDataStream, static_cast<std::uint64_t>(rep_index)));

  Eigen::LLT<Matrix> llt(design_covariance(cfg.design, p));
  if (llt.info() != Eigen::Success)
    throw InvalidInput("design covariance is not positive definite");

  SimInstance inst;
  inst.x = standard_normal(n, p, rng) * Matrix(llt.matrixU());
  inst.y = inst.x * cfg.beta_star + cfg.sigma_noise * standard_normal(n, 1, rng).col(0);

  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, AdditiveGaussian>) {
          Matrix z = inst.x + c.tau * standard_normal(n, p, rng);
          inst.data = CorruptedDataset(std::move(z), inst.y);
          inst.model = AdditiveError{Matrix::Identity(p, p) * (c.tau * c.tau)};
        } else if constexpr (std::is_same_v<T, MultiplicativeLognormal>) {
          const Matrix factors = (c.tau * standard_normal(n, p, rng)).array().exp().matrix();
          inst.data = CorruptedDataset(inst.x.cwiseProduct(factors), inst.y);
          // log m ~ N(0, tau^2): E m = e^{tau^2/2}, E m^2 = e^{2 tau^2}, entries independent.
          const double t2 = c.tau * c.tau;
          Matrix sigma_m = Matrix::Zero(p, p);
          sigma_m.diagonal().setConstant(std::exp(2.0 * t2) - std::exp(t2));
          inst.model = MultiplicativeError{Vector::Constant(p, std::exp(0.5 * t2)), sigma_m};
        } else {
          std::uniform_real_distribution<double> unif(0.0, 1.0);
          Mask mask(n, p);
          for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < p; ++j) mask(i, j) = unif(rng) >= c.r;
          inst.data = CorruptedDataset(inst.x, inst.y, mask);
          inst.model = MissingError{cfg.estimate_missing_rates ? estimate_missing_rates(inst.data)
                                                               : uniform_rates(p, c.r)};
        }
      },
      cfg.corruption);
  return inst;
}

Metrics metrics(const Vector& beta_hat, const Vector& beta_star, const Matrix& sigma_x) {
  if (beta_hat.size() != beta_star.size() || sigma_x.rows() != beta_star.size() ||
      sigma_x.cols() != beta_star.size())
    throw InvalidInput("metric inputs have mismatched dimensions");
  const Vector diff = beta_star - beta_hat;
  Metrics m;
  m.pe = diff.dot(sigma_x * diff);
  m.mse = diff.squaredNorm();
  for (Index j = 0; j < beta_hat.size(); ++j) {
    if (std::abs(beta_hat(j)) <= kSelectedThreshold) continue;
    if (beta_star(j) != 0.0) ++m.correct;
    else ++m.incorrect;
  }
  return m;
}

bool signed_support_recovered(const Vector& beta_hat, const Vector& beta_star) {
  for (Index j = 0; j < beta_hat.size(); ++j)
    if (sign_of(beta_hat(j)) != sign_of(beta_star(j))) return false;
  return true;
}

ReplicationRecord run_replication(const SimConfig& cfg, int rep_index) {
  ReplicationRecord rec;
  rec.rep = rep_index;
  try {
    const SimInstance inst = generate_instance(cfg, rep_index);
    const SurrogatePair full = build_surrogate(inst.data, inst.model);
    const PsdResult projected = nearest_psd(full.sigma_hat, cfg.admm);

    CvOptions cv_opts;
    cv_opts.grid_size = cfg.grid_size;
    cv_opts.lambda_min_ratio = cfg.lambda_min_ratio;
    cv_opts.admm = cfg.admm;
    cv_opts.solver = cfg.solver;
    cv_opts.threads = 1;
    const FoldPlan folds = make_folds(
        cfg.n, cfg.folds, substream_seed(cfg.seed, kFoldStream, static_cast<std::uint64_t>(rep_index)));
    const auto grid = lambda_grid(full.rho_tilde.lpNorm<Eigen::Infinity>(), cfg.grid_size,
                                  cfg.lambda_min_ratio);
    const CvReport cv = cross_validate(inst.data, inst.model, folds, grid, cv_opts, false);

    SolveOptions solver = cfg.solver;
    solver.check_psd = false;
    const SolutionPath path = solution_path(projected.sigma_tilde, full.rho_tilde, grid, solver);
    if (path.unbounded[cv.selected_index])
      throw NumericalError("objective unbounded at the selected lambda on the full data");
    const Vector& beta_hat = path.betas[cv.selected_index];

    rec.lambda_selected = cv.lambda_selected;
    rec.m = metrics(beta_hat, cfg.beta_star, design_covariance(cfg.design, cfg.p));
    rec.sign_recovered = signed_support_recovered(beta_hat, cfg.beta_star);
    for (std::size_t l = 0; l < path.betas.size() && !rec.sign_recovered_path; ++l)
      rec.sign_recovered_path =
          !path.unbounded[l] && signed_support_recovered(path.betas[l], cfg.beta_star);

    const Matrix gram = inst.x.transpose() * inst.x / static_cast<double>(cfg.n);
    rec.gram_error_surrogate = max_norm(full.sigma_hat - gram);
    rec.gram_error_projected = max_norm(projected.sigma_tilde - gram);
    rec.factor_two_holds = rec.gram_error_projected <= 2.0 * rec.gram_error_surrogate + 1e-6;
    rec.psd_iterations = projected.iterations;
    rec.psd_converged = projected.converged && cv.all_converged() && path.all_converged();
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.error = e.what();
  }
  return rec;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::nan("");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

double bootstrap_median_se(const std::vector<double>& values, int samples, std::uint64_t seed) {
  if (values.size() < 2 || samples < 2) return 0.0;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
  std::vector<double> resample(values.size());
  std::vector<double> medians(static_cast<std::size_t>(samples));
  for (auto& m : medians) {
    for (auto& v : resample) v = values[pick(rng)];
    m = median(resample);
  }
  double mean = 0.0;
  for (double m : medians) mean += m;
  mean /= static_cast<double>(samples);
  double ss = 0.0;
  for (double m : medians) ss += (m - mean) * (m - mean);
  return std::sqrt(ss / static_cast<double>(samples - 1));
}

ExperimentReport run_experiment(const SimConfig& cfg) {
  validate(cfg);
  const auto start = std::chrono::steady_clock::now();

  ExperimentReport report;
  report.config = cfg;
  report.records.resize(static_cast<std::size_t>(cfg.replications));
  parallel_for(report.records.size(), cfg.threads, [&](std::size_t r) {
    report.records[r] = run_replication(cfg, static_cast<int>(r));
  });

  std::vector<double> pe, mse, c, ic;
  int recovered = 0;
  int recovered_path = 0;
  for (const auto& rec : report.records) {
    if (rec.failed) {
      ++report.failures;
      continue;
    }
    pe.push_back(rec.m.pe);
    mse.push_back(rec.m.mse);
    c.push_back(rec.m.correct);
    ic.push_back(rec.m.incorrect);
    recovered += rec.sign_recovered ? 1 : 0;
    recovered_path += rec.sign_recovered_path ? 1 : 0;
    report.factor_two_all = report.factor_two_all && rec.factor_two_holds;
  }
  const double ok = static_cast<double>(pe.size());
  report.median.pe = median(pe);
  report.median.mse = median(mse);
  report.median_c = median(c);
  report.median_ic = median(ic);
  report.median.correct = static_cast<int>(std::lround(report.median_c));
  report.median.incorrect = static_cast<int>(std::lround(report.median_ic));
  const int b = cfg.bootstrap_samples;
  report.se_pe = bootstrap_median_se(pe, b, substream_seed(cfg.seed, kBootstrapStream, 0));
  report.se_mse = bootstrap_median_se(mse, b, substream_seed(cfg.seed, kBootstrapStream, 1));
  report.se_c = bootstrap_median_se(c, b, substream_seed(cfg.seed, kBootstrapStream, 2));
  report.se_ic = bootstrap_median_se(ic, b, substream_seed(cfg.seed, kBootstrapStream, 3));
  report.sign_recovery_rate = ok > 0 ? recovered / ok : 0.0;
  report.sign_recovery_rate_path = ok > 0 ? recovered_path / ok : 0.0;
  const Matrix sigma_x = design_covariance(cfg.design, cfg.p);
  report.snr = cfg.beta_star.dot(sigma_x * cfg.beta_star) / (cfg.sigma_noise * cfg.sigma_noise);
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

ConditionDiagnostics condition_diagnostics(const Matrix& sigma,
                                           const std::vector<Index>& support) {
  const Index p = sigma.rows();
  if (sigma.cols() != p) throw InvalidInput("covariance must be square");
  if (support.empty()) throw InvalidInput("support must be non-empty");
  std::vector<bool> in_support(static_cast<std::size_t>(p), false);
  for (Index j : support) {
    if (j < 0 || j >= p) throw InvalidInput("support index out of range");
    if (in_support[j]) throw InvalidInput("support indices must be distinct");
    in_support[j] = true;
  }
  std::vector<Index> rest;
  for (Index j = 0; j < p; ++j)
    if (!in_support[j]) rest.push_back(j);

  const Index s = static_cast<Index>(support.size());
  Matrix ss(s, s);
  for (Index a = 0; a < s; ++a)
    for (Index b = 0; b < s; ++b) ss(a, b) = sigma(support[a], support[b]);
  Eigen::SelfAdjointEigenSolver<Matrix> es(ss, Eigen::EigenvaluesOnly);
  const double top = std::max(std::abs(es.eigenvalues().maxCoeff()), 1.0);
  if (es.info() != Eigen::Success || std::abs(es.eigenvalues().minCoeff()) <= 1e-12 * top)
    throw NumericalError("Sigma_{S,S} is singular");

  ConditionDiagnostics out;
  out.c_min = es.eigenvalues().minCoeff();
  if (rest.empty()) {
    out.gamma = 1.0;
    return out;
  }
  Matrix cross(s, static_cast<Index>(rest.size()));  // Sigma_{S,S^c}
  for (Index a = 0; a < s; ++a)
    for (Index b = 0; b < static_cast<Index>(rest.size()); ++b) cross(a, b) = sigma(support[a], rest[b]);
  // Sigma_{S^c,S} Sigma_{S,S}^{-1} = (Sigma_{S,S}^{-1} Sigma_{S,S^c})'
  const Matrix w = ss.partialPivLu().solve(cross).transpose();
  out.gamma = 1.0 - w.cwiseAbs().rowwise().sum().maxCoeff();
  return out;
}

std::vector<Index> support_of(const Vector& beta) {
  std::vector<Index> s;
  for (Index j = 0; j < beta.size(); ++j)
    if (beta(j) != 0.0) s.push_back(j);
  return s;
}

std::string describe(const Design& design) {
  std::ostringstream os;
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Autoregressive>) os << "AR(phi=" << d.phi << ")";
        else os << "CS(c=" << d.c << ")";
      },
      design);
  return os.str();
}

std::string describe(const Corruption& corruption) {
  std::ostringstream os;
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, AdditiveGaussian>) os << "additive(tau=" << c.tau << ")";
        else if constexpr (std::is_same_v<T, MultiplicativeLognormal>)
          os << "multiplicative(tau=" << c.tau << ")";
        else os << "missing(r=" << c.r << ")";
      },
      corruption);
  return os.str();
}

}  // namespace cocolasso
