#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "tokenweight/spanmap.hpp"
#include "tokenweight/tokenizer.hpp"

namespace tokenweight {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

struct LossResult {
  double value = 0.0;             // nats
  std::vector<double> per_token;  // (lambda_i / Lambda) * -log p(x_i | x_<i)
  std::optional<Matrix> gradient; // d value / d logits, T x V
};

/// Stabilized -log softmax(row)[target].
double token_nll(std::span<const double> logits_row, TokenId target);

/// Normalized keyword-weighted cross-entropy
///
///     L = -(1 / Lambda) * sum_i lambda_i * log p(x_i | x_<i),  Lambda = sum_i lambda_i
///
/// where row i of `logits` scores the prediction of targets[i]. Weights must
/// be finite and non-negative with a positive sum. Throws ValidationError on
/// shape mismatch, non-finite logits, or targets outside [0, V).
LossResult weighted_cross_entropy(const Matrix& logits, std::span<const TokenId> targets,
                                  std::span<const double> lambdas, bool with_gradient = false);

LossResult weighted_cross_entropy(const Matrix& logits, std::span<const TokenId> targets,
                                  const WeightVector& weights, bool with_gradient = false);

/// Row i = (lambda_i / Lambda) * (softmax(logits_i) - onehot(targets_i)).
Matrix loss_gradient(const Matrix& logits, std::span<const TokenId> targets,
                     std::span<const double> lambdas);

Matrix loss_gradient(const Matrix& logits, std::span<const TokenId> targets,
                     const WeightVector& weights);

/// Plain mean cross-entropy, (1/T) sum_i -log p(x_i | x_<i).
double mean_cross_entropy(const Matrix& logits, std::span<const TokenId> targets);

/// Loss input file: a `T V` header, T rows of V logits, one row of T target
/// ids, one row of T weights. Throws ValidationError on malformed input.
struct LossProblem {
  Matrix logits;
  std::vector<TokenId> targets;
  std::vector<double> weights;
};
LossProblem read_loss_problem(std::istream& in);

}  // namespace tokenweight
