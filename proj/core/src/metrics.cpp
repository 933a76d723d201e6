#include "neucrowd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>

#include "neucrowd/errors.hpp"

namespace neucrowd {

namespace {

// log(1 + exp(s)) without overflow.
double softplus(double s) { return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s)); }

double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

void check_binary(std::span<const int> labels, Eigen::Index expected) {
  if (static_cast<Eigen::Index>(labels.size()) != expected) {
    throw ShapeError("label count does not match the number of examples");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw DataError("labels must be 0 or 1");
  }
}

}  // namespace

Eigen::VectorXd LogRegModel::decision(const Eigen::MatrixXd& x) const {
  if (x.rows() != weights.size()) throw ShapeError("logreg: feature dimension mismatch");
  Eigen::VectorXd s = x.transpose() * weights;
  s.array() += bias;
  return s;
}

std::vector<int> LogRegModel::predict(const Eigen::MatrixXd& x) const {
  const Eigen::VectorXd s = decision(x);
  std::vector<int> out(static_cast<std::size_t>(s.size()));
  for (Eigen::Index i = 0; i < s.size(); ++i) out[static_cast<std::size_t>(i)] = s[i] > 0.0 ? 1 : 0;
  return out;
}

double logreg_objective(const Eigen::VectorXd& weights, double bias, const Eigen::MatrixXd& x,
                        std::span<const int> labels, double c) {
  const auto n = static_cast<double>(x.cols());
  Eigen::VectorXd s = x.transpose() * weights;
  double nll = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double si = s[i] + bias;
    nll += softplus(si) - labels[static_cast<std::size_t>(i)] * si;
  }
  return nll / n + weights.squaredNorm() / (2.0 * c * n);
}

LogRegModel fit_logreg(const Eigen::MatrixXd& x, std::span<const int> labels, double c,
                       const LogRegOptions& options, std::vector<double>* objective_trace) {
  if (x.cols() == 0) throw UsageError("fit_logreg: no examples");
  check_binary(labels, x.cols());
  if (!(c > 0.0)) throw ConfigError("logistic regression C must be positive");
  if (!x.allFinite()) throw DataError("fit_logreg: non-finite features");
  const bool has_pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
  const bool has_neg = std::find(labels.begin(), labels.end(), 0) != labels.end();
  if (!has_pos || !has_neg) {
    throw DegenerateFitError("training labels contain a single class");
  }

  const auto n = static_cast<double>(x.cols());
  Eigen::VectorXd y(x.cols());
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = labels[static_cast<std::size_t>(i)];

  LogRegModel model;
  model.c = c;
  model.weights = Eigen::VectorXd::Zero(x.rows());
  model.bias = 0.0;

  auto objective = [&](const Eigen::VectorXd& w, double b) {
    return logreg_objective(w, b, x, labels, c);
  };
  double f = objective(model.weights, model.bias);
  if (objective_trace) objective_trace->push_back(f);
  double step = 1.0;
  Eigen::VectorXd residual(x.cols());
  for (int it = 0; it < options.max_iter; ++it) {
    Eigen::VectorXd s = x.transpose() * model.weights;
    for (Eigen::Index i = 0; i < s.size(); ++i) residual[i] = sigmoid(s[i] + model.bias) - y[i];
    const Eigen::VectorXd grad_w = (x * residual) / n + model.weights / (c * n);
    const double grad_b = residual.sum() / n;
    const double grad_sq = grad_w.squaredNorm() + grad_b * grad_b;
    model.iterations = it;
    if (std::sqrt(grad_sq) < options.grad_tol) {
      model.converged = true;
      break;
    }
    // Armijo backtracking; the step grows again after each accepted move.
    while (true) {
      const Eigen::VectorXd w_new = model.weights - step * grad_w;
      const double b_new = model.bias - step * grad_b;
      const double f_new = objective(w_new, b_new);
      // Near the optimum the required decrease drops below the objective's
      // rounding error; allow that slack so backtracking does not collapse.
      const double slack = 4.0 * std::numeric_limits<double>::epsilon() * std::abs(f);
      if (f_new <= f - 0.5 * step * grad_sq + slack) {
        model.weights = w_new;
        model.bias = b_new;
        f = f_new;
        step *= 2.0;
        break;
      }
      step *= 0.5;
      if (step < 1e-20) break;
    }
    if (objective_trace) objective_trace->push_back(f);
    if (step < 1e-20) break;
    model.iterations = it + 1;
  }
  return model;
}

LogRegModel train_logreg(const Eigen::MatrixXd& train_x, std::span<const int> train_labels,
                         const Eigen::MatrixXd& val_x, std::span<const int> val_labels,
                         std::span<const double> c_grid, const LogRegOptions& options) {
  if (c_grid.empty()) throw ConfigError("C grid is empty");
  check_binary(val_labels, val_x.cols());
  std::vector<double> grid(c_grid.begin(), c_grid.end());
  std::sort(grid.begin(), grid.end());
  LogRegModel best;
  double best_acc = -1.0;
  for (double c : grid) {
    LogRegModel m = fit_logreg(train_x, train_labels, c, options);
    const double acc = accuracy(m.predict(val_x), val_labels);
    if (acc > best_acc) {
      best_acc = acc;
      best = std::move(m);
    }
  }
  return best;
}

std::vector<double> log_spaced_grid(double lo, double hi, int points) {
  if (points < 1 || !(lo > 0.0) || !(hi >= lo)) throw ConfigError("invalid C grid bounds");
  if (points == 1) return {lo};
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(points));
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int i = 0; i < points; ++i) {
    grid.push_back(std::pow(10.0, a + (b - a) * i / (points - 1)));
  }
  return grid;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ShapeError("auc: scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::int64_t n_pos = 0;
  std::int64_t n_neg = 0;
  // Twice the U statistic, kept integral so the result is exact.
  std::int64_t twice_u = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::int64_t group_pos = 0;
    std::int64_t group_neg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      const int y = labels[order[j]];
      if (y != 0 && y != 1) throw DataError("labels must be 0 or 1");
      (y == 1 ? group_pos : group_neg) += 1;
      ++j;
    }
    twice_u += 2 * group_pos * n_neg + group_pos * group_neg;
    n_pos += group_pos;
    n_neg += group_neg;
    i = j;
  }
  if (n_pos == 0 || n_neg == 0) throw UndefinedMetricError("AUC needs both classes present");
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw ShapeError("accuracy: length mismatch");
  if (predictions.empty()) throw UsageError("accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace neucrowd
