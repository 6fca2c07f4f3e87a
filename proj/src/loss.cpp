#include "tokenweight/loss.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <string>

#include "tokenweight/error.hpp"

namespace tokenweight {

namespace {

double log_sum_exp(std::span<const double> row) {
  double m = *std::max_element(row.begin(), row.end());
  double acc = 0.0;
  for (double z : row) acc += std::exp(z - m);
  return m + std::log(acc);
}

double validate(const Matrix& logits, std::span<const TokenId> targets,
                std::span<const double> lambdas) {
  if (logits.rows == 0) throw ValidationError("logit matrix has no rows (T = 0)");
  if (logits.cols < 2) throw ValidationError("logit matrix needs at least 2 columns (V >= 2)");
  if (logits.data.size() != logits.rows * logits.cols) {
    throw ValidationError("logit buffer size does not match its shape");
  }
  if (targets.size() != logits.rows || lambdas.size() != logits.rows) {
    throw ValidationError("shape mismatch: logits have T=" + std::to_string(logits.rows) +
                          " rows, targets " + std::to_string(targets.size()) + ", weights " +
                          std::to_string(lambdas.size()));
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= logits.cols) {
      throw ValidationError("target " + std::to_string(i) + " = " + std::to_string(targets[i]) +
                            " is outside [0, " + std::to_string(logits.cols) + ")");
    }
  }
  for (std::size_t k = 0; k < logits.data.size(); ++k) {
    if (!std::isfinite(logits.data[k])) {
      throw ValidationError("non-finite logit at row " + std::to_string(k / logits.cols) +
                            ", column " + std::to_string(k % logits.cols));
    }
  }
  double total = 0.0;
  for (double l : lambdas) {
    if (!std::isfinite(l) || l < 0.0) throw ValidationError("token weights must be finite and >= 0");
    total += l;
  }
  if (!(total > 0.0)) throw ValidationError("token weights must have a positive sum");
  return total;
}

}  // namespace

double token_nll(std::span<const double> logits_row, TokenId target) {
  return log_sum_exp(logits_row) - logits_row[static_cast<std::size_t>(target)];
}

LossResult weighted_cross_entropy(const Matrix& logits, std::span<const TokenId> targets,
                                  std::span<const double> lambdas, bool with_gradient) {
  const double total = validate(logits, targets, lambdas);
  LossResult out;
  out.per_token.resize(logits.rows);
  if (with_gradient) out.gradient.emplace(logits.rows, logits.cols);
  std::vector<double> scratch(with_gradient ? 0 : logits.cols);

  for (std::size_t i = 0; i < logits.rows; ++i) {
    auto row = logits.row(i);
    // exp(z - max) is computed once and reused for the gradient.
    std::span<double> e = with_gradient ? out.gradient->row(i) : std::span<double>(scratch);
    const double m = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      e[j] = std::exp(row[j] - m);
      sum += e[j];
    }
    const auto target = static_cast<std::size_t>(targets[i]);
    const double scale = lambdas[i] / total;
    out.per_token[i] = scale * (m + std::log(sum) - row[target]);
    out.value += out.per_token[i];

    if (with_gradient) {
      const double f = scale / sum;
      for (auto& g : e) g *= f;
      e[target] -= scale;
    }
  }
  return out;
}

LossResult weighted_cross_entropy(const Matrix& logits, std::span<const TokenId> targets,
                                  const WeightVector& weights, bool with_gradient) {
  return weighted_cross_entropy(logits, targets, weights.lambdas, with_gradient);
}

Matrix loss_gradient(const Matrix& logits, std::span<const TokenId> targets,
                     std::span<const double> lambdas) {
  return std::move(*weighted_cross_entropy(logits, targets, lambdas, true).gradient);
}

Matrix loss_gradient(const Matrix& logits, std::span<const TokenId> targets,
                     const WeightVector& weights) {
  return loss_gradient(logits, targets, std::span<const double>(weights.lambdas));
}

double mean_cross_entropy(const Matrix& logits, std::span<const TokenId> targets) {
  std::vector<double> ones(logits.rows, 1.0);
  validate(logits, targets, ones);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.rows; ++i) sum += token_nll(logits.row(i), targets[i]);
  return sum / static_cast<double>(logits.rows);
}

LossProblem read_loss_problem(std::istream& in) {
  std::size_t t = 0, v = 0;
  if (!(in >> t >> v)) throw ValidationError("loss file: missing 'T V' header");
  if (t == 0 || v == 0) throw ValidationError("loss file: T and V must be positive");
  LossProblem p{Matrix(t, v), std::vector<TokenId>(t), std::vector<double>(t)};
  for (std::size_t k = 0; k < t * v; ++k) {
    if (!(in >> p.logits.data[k])) {
      throw ValidationError("loss file: logit row " + std::to_string(k / v + 1) + " is short or malformed");
    }
  }
  for (auto& target : p.targets) {
    if (!(in >> target)) throw ValidationError("loss file: target row is short or malformed");
  }
  for (auto& w : p.weights) {
    if (!(in >> w)) throw ValidationError("loss file: weight row is short or malformed");
  }
  std::string extra;
  if (in >> extra) throw ValidationError("loss file: unexpected trailing value '" + extra + "'");
  return p;
}

}  // namespace tokenweight
