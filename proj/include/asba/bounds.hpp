#pragma once

#include <vector>

#include "asba/errors.hpp"
#include "asba/rng.hpp"

namespace asba {

// Binary Gaussian classification task. Covariances are row-major dim x dim.
// For dim == 1 the decision boundary and posterior-gradient gap have closed
// forms; higher dimensions must supply gradient_gap explicitly.
struct GaussianTask {
  int dim = 1;
  std::vector<double> mean1, mean2;
  std::vector<double> cov1, cov2;
  double prior1 = 0.5, prior2 = 0.5;
  double gradient_gap = 0.0;  // |grad p(c1|x) - grad p(c2|x)| at the boundary

  static GaussianTask one_dim(double mu1, double var1, double mu2, double var2, double p1);

  void validate() const;
  std::vector<double> average_cov() const;  // prior-weighted
  // (mu1-mu2)^T Sigma^{-1} (mu1-mu2) via a linear solve
  double mean_separation() const;
  double boundary_1d() const;  // equal-posterior point x*
};

// Bayes-error upper bound 2 P1 P2 / (1 + P1 P2 Delta).
double bayes_bound(const GaussianTask& t);

// Additive posterior-noise model for one branch: output = p(c|x) + beta_c +
// eta_c, with eta_c either uniform(-tau, tau) or Gaussian(0, sigma^2).
struct BranchNoise {
  enum class Kind { None, Uniform, Gaussian };
  Kind kind = Kind::None;
  double param_c1 = 0.0;  // tau or sigma^2 for class 1
  double param_c2 = 0.0;
  double beta_c1 = 0.0;
  double beta_c2 = 0.0;

  static BranchNoise uniform(double tau1, double tau2);
  static BranchNoise gaussian(double var1, double var2);
  double variance_c1() const;
  double variance_c2() const;
};

// bound on the expected error of a single branch:
// bayes_rate + (var_c1 + var_c2) / (2 * gradient_gap)
double expected_error_single(double bayes_rate, const BranchNoise& noise, const GaussianTask& t);

// bound for the averaged two-branch output:
// bayes_rate + (var_c1_f + var_c2_f + var_c1_g + var_c2_g) / (8 * gradient_gap)
double expected_error_ensemble(double bayes_rate, const BranchNoise& f, const BranchNoise& g,
                               const GaussianTask& t);

// improvement condition for bounded noise: tau2 < sqrt(3) * tau1 (strict)
bool ensemble_improves(double tau1, double tau2);

struct MonteCarloResult {
  double error_rate = 0;
  double ci_half_width = 0;  // 99% binomial normal approximation
  long long samples = 0;
};

// Samples labeled points and classifies by the exact posterior.
MonteCarloResult monte_carlo_bayes(const GaussianTask& t, long long n, Rng& rng);

struct NoisyClassifierResult {
  MonteCarloResult single_f;
  MonteCarloResult single_g;
  MonteCarloResult ensemble;
};

// Classifies by argmax of noisy posteriors and of their average.
NoisyClassifierResult monte_carlo_noisy_classifiers(const GaussianTask& t, const BranchNoise& f,
                                                    const BranchNoise& g, long long n, Rng& rng);

}  // namespace asba
