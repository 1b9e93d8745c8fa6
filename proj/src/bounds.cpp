#include "asba/bounds.hpp"

#include <algorithm>
#include <cmath>

namespace asba {

namespace {

constexpr double kZ99 = 2.5758293035489004;  // two-sided 99% normal quantile

// Gaussian elimination with partial pivoting; A is dim x dim row-major.
std::vector<double> solve_linear(std::vector<double> a, std::vector<double> b, int dim) {
  for (int col = 0; col < dim; ++col) {
    int pivot = col;
    for (int r = col + 1; r < dim; ++r) {
      if (std::abs(a[r * dim + col]) > std::abs(a[pivot * dim + col])) pivot = r;
    }
    if (std::abs(a[pivot * dim + col]) < 1e-12) {
      fail(ErrorCode::SingularCovariance, "pivot ~0 at column " + std::to_string(col));
    }
    if (pivot != col) {
      for (int j = 0; j < dim; ++j) std::swap(a[col * dim + j], a[pivot * dim + j]);
      std::swap(b[col], b[pivot]);
    }
    for (int r = col + 1; r < dim; ++r) {
      const double f = a[r * dim + col] / a[col * dim + col];
      if (f == 0.0) continue;
      for (int j = col; j < dim; ++j) a[r * dim + j] -= f * a[col * dim + j];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(dim);
  for (int r = dim - 1; r >= 0; --r) {
    double s = b[r];
    for (int j = r + 1; j < dim; ++j) s -= a[r * dim + j] * x[j];
    x[r] = s / a[r * dim + r];
  }
  return x;
}

// lower Cholesky factor; SingularCovariance when not positive definite
std::vector<double> cholesky(const std::vector<double>& a, int dim) {
  std::vector<double> l(static_cast<size_t>(dim) * dim, 0.0);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a[i * dim + j];
      for (int k = 0; k < j; ++k) s -= l[i * dim + k] * l[j * dim + k];
      if (i == j) {
        if (s <= 0.0) fail(ErrorCode::SingularCovariance, "matrix not positive definite");
        l[i * dim + i] = std::sqrt(s);
      } else {
        l[i * dim + j] = s / l[j * dim + j];
      }
    }
  }
  return l;
}

double log_density(const std::vector<double>& x, const std::vector<double>& mean,
                   const std::vector<double>& chol, int dim) {
  // forward-substitute z = L^{-1} (x - mean)
  std::vector<double> z(dim);
  double log_det = 0;
  for (int i = 0; i < dim; ++i) {
    double s = x[i] - mean[i];
    for (int k = 0; k < i; ++k) s -= chol[i * dim + k] * z[k];
    z[i] = s / chol[i * dim + i];
    log_det += std::log(chol[i * dim + i]);
  }
  double quad = 0;
  for (double v : z) quad += v * v;
  return -0.5 * quad - log_det - 0.5 * dim * std::log(2.0 * 3.14159265358979323846);
}

}  // namespace

GaussianTask GaussianTask::one_dim(double mu1, double var1, double mu2, double var2, double p1) {
  GaussianTask t;
  t.dim = 1;
  t.mean1 = {mu1};
  t.mean2 = {mu2};
  t.cov1 = {var1};
  t.cov2 = {var2};
  t.prior1 = p1;
  t.prior2 = 1.0 - p1;
  t.validate();
  // posterior gradient gap at the equal-posterior point: with r(x) =
  // P2 N2 / (P1 N1), p(c1|x) = 1/(1+r) and r(x*) = 1, so
  // |p'(c1) - p'(c2)| = |r'(x*)| / 2 = |(x*-mu1)/var1 - (x*-mu2)/var2| / 2.
  const double x_star = t.boundary_1d();
  t.gradient_gap = std::abs((x_star - mu1) / var1 - (x_star - mu2) / var2) / 2.0;
  return t;
}

void GaussianTask::validate() const {
  if (dim < 1) fail(ErrorCode::ShapeMismatch, "dimension must be >= 1");
  if (static_cast<int>(mean1.size()) != dim || static_cast<int>(mean2.size()) != dim ||
      cov1.size() != static_cast<size_t>(dim) * dim || cov2.size() != static_cast<size_t>(dim) * dim) {
    fail(ErrorCode::ShapeMismatch, "task parameter shapes disagree with dim");
  }
  if (prior1 < 0 || prior2 < 0 || std::abs(prior1 + prior2 - 1.0) > 1e-12) {
    fail(ErrorCode::ShapeMismatch, "priors must be nonnegative and sum to 1");
  }
}

std::vector<double> GaussianTask::average_cov() const {
  std::vector<double> s(cov1.size());
  for (size_t i = 0; i < s.size(); ++i) s[i] = prior1 * cov1[i] + prior2 * cov2[i];
  return s;
}

double GaussianTask::mean_separation() const {
  std::vector<double> diff(dim);
  for (int i = 0; i < dim; ++i) diff[i] = mean1[i] - mean2[i];
  const std::vector<double> x = solve_linear(average_cov(), diff, dim);
  double delta = 0;
  for (int i = 0; i < dim; ++i) delta += diff[i] * x[i];
  return delta;
}

double GaussianTask::boundary_1d() const {
  if (dim != 1) fail(ErrorCode::ShapeMismatch, "closed-form boundary needs dim == 1");
  const double mu1 = mean1[0], mu2 = mean2[0];
  const double v1 = cov1[0], v2 = cov2[0];
  if (v1 <= 0 || v2 <= 0) fail(ErrorCode::SingularCovariance, "nonpositive variance");
  if (prior1 <= 0 || prior2 <= 0) {
    fail(ErrorCode::DegenerateBoundary, "a zero-prior class has no boundary");
  }
  // log P1 N1(x) = log P2 N2(x)  <=>  a x^2 + b x + c = 0
  const double a = 0.5 * (1.0 / v2 - 1.0 / v1);
  const double b = mu1 / v1 - mu2 / v2;
  const double c = 0.5 * (mu2 * mu2 / v2 - mu1 * mu1 / v1) +
                   std::log(prior1 / prior2) + 0.5 * std::log(v2 / v1);
  if (std::abs(a) < 1e-14) {
    if (std::abs(b) < 1e-14) fail(ErrorCode::DegenerateBoundary, "posteriors never cross");
    return -c / b;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0) fail(ErrorCode::DegenerateBoundary, "posteriors never cross");
  const double r1 = (-b + std::sqrt(disc)) / (2.0 * a);
  const double r2 = (-b - std::sqrt(disc)) / (2.0 * a);
  const double lo = std::min(mu1, mu2), hi = std::max(mu1, mu2);
  const bool in1 = r1 >= lo && r1 <= hi;
  const bool in2 = r2 >= lo && r2 <= hi;
  if (in1 && !in2) return r1;
  if (in2 && !in1) return r2;
  const double mid = 0.5 * (mu1 + mu2);
  return std::abs(r1 - mid) <= std::abs(r2 - mid) ? r1 : r2;
}

double bayes_bound(const GaussianTask& t) {
  t.validate();
  const double p = t.prior1 * t.prior2;
  if (p == 0.0) return 0.0;
  return 2.0 * p / (1.0 + p * t.mean_separation());
}

BranchNoise BranchNoise::uniform(double tau1, double tau2) {
  return {Kind::Uniform, tau1, tau2, 0.0, 0.0};
}

BranchNoise BranchNoise::gaussian(double var1, double var2) {
  return {Kind::Gaussian, var1, var2, 0.0, 0.0};
}

double BranchNoise::variance_c1() const {
  switch (kind) {
    case Kind::None: return 0.0;
    case Kind::Uniform: return param_c1 * param_c1 / 3.0;
    case Kind::Gaussian: return param_c1;
  }
  return 0.0;
}

double BranchNoise::variance_c2() const {
  switch (kind) {
    case Kind::None: return 0.0;
    case Kind::Uniform: return param_c2 * param_c2 / 3.0;
    case Kind::Gaussian: return param_c2;
  }
  return 0.0;
}

double expected_error_single(double bayes_rate, const BranchNoise& noise, const GaussianTask& t) {
  if (t.gradient_gap <= 0) fail(ErrorCode::DegenerateBoundary, "gradient gap must be positive");
  return bayes_rate + (noise.variance_c1() + noise.variance_c2()) / (2.0 * t.gradient_gap);
}

double expected_error_ensemble(double bayes_rate, const BranchNoise& f, const BranchNoise& g,
                               const GaussianTask& t) {
  if (t.gradient_gap <= 0) fail(ErrorCode::DegenerateBoundary, "gradient gap must be positive");
  const double total =
      f.variance_c1() + f.variance_c2() + g.variance_c1() + g.variance_c2();
  return bayes_rate + total / (8.0 * t.gradient_gap);
}

bool ensemble_improves(double tau1, double tau2) {
  if (tau1 <= 0 || tau2 <= 0) fail(ErrorCode::NonPositiveTau, "tau values must be positive");
  return tau2 < std::sqrt(3.0) * tau1;
}

namespace {

double ci99(double p_hat, long long n) {
  return kZ99 * std::sqrt(std::max(p_hat * (1.0 - p_hat), 1e-12) / static_cast<double>(n));
}

struct TaskSampler {
  const GaussianTask& t;
  std::vector<double> chol1, chol2;

  explicit TaskSampler(const GaussianTask& task)
      : t(task), chol1(cholesky(task.cov1, task.dim)), chol2(cholesky(task.cov2, task.dim)) {}

  // draws (label, point); label 0 = class 1, 1 = class 2
  std::pair<int, std::vector<double>> draw(Rng& rng) const {
    const int label = rng.uniform() < t.prior1 ? 0 : 1;
    const auto& mean = label == 0 ? t.mean1 : t.mean2;
    const auto& chol = label == 0 ? chol1 : chol2;
    std::vector<double> z(t.dim);
    for (double& v : z) v = rng.normal();
    std::vector<double> x(t.dim);
    for (int i = 0; i < t.dim; ++i) {
      double s = mean[i];
      for (int k = 0; k <= i; ++k) s += chol[i * t.dim + k] * z[k];
      x[i] = s;
    }
    return {label, x};
  }

  // p(c1 | x)
  double posterior1(const std::vector<double>& x) const {
    if (t.prior1 == 0.0) return 0.0;
    if (t.prior2 == 0.0) return 1.0;
    const double l1 = std::log(t.prior1) + log_density(x, t.mean1, chol1, t.dim);
    const double l2 = std::log(t.prior2) + log_density(x, t.mean2, chol2, t.dim);
    const double m = std::max(l1, l2);
    const double e1 = std::exp(l1 - m), e2 = std::exp(l2 - m);
    return e1 / (e1 + e2);
  }
};

double noise_draw(BranchNoise::Kind kind, double param, Rng& rng) {
  switch (kind) {
    case BranchNoise::Kind::None: return 0.0;
    case BranchNoise::Kind::Uniform: return rng.uniform(-param, param);
    case BranchNoise::Kind::Gaussian: return rng.normal() * std::sqrt(param);
  }
  return 0.0;
}

}  // namespace

MonteCarloResult monte_carlo_bayes(const GaussianTask& t, long long n, Rng& rng) {
  t.validate();
  if (n < 1000) fail(ErrorCode::EmptyInput, "need at least 1000 samples");
  TaskSampler sampler(t);
  long long errors = 0;
  for (long long i = 0; i < n; ++i) {
    auto [label, x] = sampler.draw(rng);
    const int decided = sampler.posterior1(x) >= 0.5 ? 0 : 1;
    if (decided != label) errors++;
  }
  MonteCarloResult out;
  out.samples = n;
  out.error_rate = static_cast<double>(errors) / static_cast<double>(n);
  out.ci_half_width = ci99(out.error_rate, n);
  return out;
}

NoisyClassifierResult monte_carlo_noisy_classifiers(const GaussianTask& t, const BranchNoise& f,
                                                    const BranchNoise& g, long long n, Rng& rng) {
  t.validate();
  if (n < 1000) fail(ErrorCode::EmptyInput, "need at least 1000 samples");
  TaskSampler sampler(t);
  long long err_f = 0, err_g = 0, err_e = 0;
  for (long long i = 0; i < n; ++i) {
    auto [label, x] = sampler.draw(rng);
    const double p1 = sampler.posterior1(x);
    const double p2 = 1.0 - p1;
    const double f1 = p1 + f.beta_c1 + noise_draw(f.kind, f.param_c1, rng);
    const double f2 = p2 + f.beta_c2 + noise_draw(f.kind, f.param_c2, rng);
    const double g1 = p1 + g.beta_c1 + noise_draw(g.kind, g.param_c1, rng);
    const double g2 = p2 + g.beta_c2 + noise_draw(g.kind, g.param_c2, rng);
    if ((f1 >= f2 ? 0 : 1) != label) err_f++;
    if ((g1 >= g2 ? 0 : 1) != label) err_g++;
    if (((f1 + g1) >= (f2 + g2) ? 0 : 1) != label) err_e++;
  }
  auto pack = [&](long long errors) {
    MonteCarloResult r;
    r.samples = n;
    r.error_rate = static_cast<double>(errors) / static_cast<double>(n);
    r.ci_half_width = ci99(r.error_rate, n);
    return r;
  };
  return {pack(err_f), pack(err_g), pack(err_e)};
}

}  // namespace asba
