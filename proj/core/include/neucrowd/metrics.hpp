#ifndef NEUCROWD_METRICS_HPP_
#define NEUCROWD_METRICS_HPP_

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace neucrowd {

// L2-regularized logistic regression over column-wise examples (D x N).
struct LogRegModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  double c = 1.0;  // inverse regularization strength
  int iterations = 0;
  bool converged = false;

  Eigen::VectorXd decision(const Eigen::MatrixXd& x) const;
  std::vector<int> predict(const Eigen::MatrixXd& x) const;
};

struct LogRegOptions {
  int max_iter = 5000;
  double grad_tol = 1e-6;
};

// Mean negative log-likelihood plus ||w||^2 / (2 C N); the bias is not
// penalized. Same minimizer as 0.5||w||^2 + C * sum(logloss).
double logreg_objective(const Eigen::VectorXd& weights, double bias, const Eigen::MatrixXd& x,
                        std::span<const int> labels, double c);

// Full-batch gradient descent with Armijo backtracking from zero, stopping
// when the gradient norm drops below grad_tol. `objective_trace`, if given,
// receives the objective after every iteration (starting with the initial
// point).
LogRegModel fit_logreg(const Eigen::MatrixXd& x, std::span<const int> labels, double c,
                       const LogRegOptions& options = {},
                       std::vector<double>* objective_trace = nullptr);

// Fits one model per C and keeps the best validation accuracy; ties go to
// the smaller C.
LogRegModel train_logreg(const Eigen::MatrixXd& train_x, std::span<const int> train_labels,
                         const Eigen::MatrixXd& val_x, std::span<const int> val_labels,
                         std::span<const double> c_grid, const LogRegOptions& options = {});

// `points` values spaced evenly in log10 between lo and hi inclusive.
std::vector<double> log_spaced_grid(double lo, double hi, int points);

// Mann-Whitney U / (n_pos * n_neg), ties counted as one half.
double auc(std::span<const double> scores, std::span<const int> labels);

double accuracy(std::span<const int> predictions, std::span<const int> labels);

}  // namespace neucrowd

#endif  // NEUCROWD_METRICS_HPP_
