#pragma once

#include "capsim/matrix.hpp"
#include "capsim/rng.hpp"

namespace capsim {

/// Two-hidden-layer perceptron, both hidden layers the same width.
/// tanh hidden activations, linear output (targets are unbounded mixtures of
/// rule outputs and Gaussian perturbations, so the output must be unbounded).
struct MlpParams {
  Matrix w1;  // dim x h
  Matrix b1;  // 1 x h
  Matrix w2;  // h x h
  Matrix b2;  // 1 x h
  Matrix w3;  // h x dim
  Matrix b3;  // 1 x dim
  std::size_t hidden_width = 0;
};

struct MlpGradients {
  Matrix w1, b1, w2, b2, w3, b3;
};

/// Everything backprop needs from one forward pass.
struct ForwardCache {
  Matrix input;    // n x dim
  Matrix hidden1;  // n x h, tanh activations
  Matrix hidden2;  // n x h
  Matrix output;   // n x dim
};

/// Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
/// Draw order is w1, w2, w3, row-major within each.
MlpParams init_mlp(std::size_t hidden_width, std::size_t dim, RngStream& stream);

/// yhat = tanh(tanh(x*w1 + b1)*w2 + b2)*w3 + b3, biases row-broadcast.
ForwardCache forward(const MlpParams& p, const Matrix& x);

/// Mean over all n*d elements of (yhat - y)^2.
double mse_loss(const Matrix& yhat, const Matrix& y);

/// Analytic gradients of mse_loss with respect to every parameter. The cache
/// must come from forward() on the same params.
MlpGradients backward(const MlpParams& p, const ForwardCache& cache, const Matrix& y);

/// Every parameter decremented by lr * gradient. Takes params by value so a
/// moved-in argument updates in place.
MlpParams sgd_step(MlpParams p, const MlpGradients& g, double lr);

/// Max relative error of backward() against central finite differences
/// (L(t+eps) - L(t-eps)) / (2 eps) over every parameter, with denominator
/// max(|analytic|, |numeric|, 1e-12).
double gradient_check(const MlpParams& p, const Matrix& x, const Matrix& y, double eps);

}  // namespace capsim
