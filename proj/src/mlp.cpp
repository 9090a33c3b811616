#include "capsim/mlp.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace capsim {

namespace {

Matrix uniform_fan_in(RngStream& stream, std::size_t rows, std::size_t cols,
                      std::size_t fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix out(rows, cols);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = (2.0 * stream.next_uniform01() - 1.0) * bound;
  return out;
}

Matrix tanh_map(const Matrix& a) {
  return elementwise(a, [](double v) { return std::tanh(v); });
}

// Derivative of tanh from the stored activation: 1 - a^2.
Matrix tanh_deriv_from_act(const Matrix& act) {
  return elementwise(act, [](double a) { return 1.0 - a * a; });
}

}  // namespace

MlpParams init_mlp(std::size_t hidden_width, std::size_t dim, RngStream& stream) {
  if (hidden_width < 1) throw std::invalid_argument("init_mlp: hidden_width must be >= 1");
  MlpParams p;
  p.hidden_width = hidden_width;
  p.w1 = uniform_fan_in(stream, dim, hidden_width, dim);
  p.b1 = Matrix(1, hidden_width);
  p.w2 = uniform_fan_in(stream, hidden_width, hidden_width, hidden_width);
  p.b2 = Matrix(1, hidden_width);
  p.w3 = uniform_fan_in(stream, hidden_width, dim, hidden_width);
  p.b3 = Matrix(1, dim);
  return p;
}

ForwardCache forward(const MlpParams& p, const Matrix& x) {
  if (x.cols() != p.w1.rows())
    throw std::invalid_argument("forward: input has " + std::to_string(x.cols()) +
                                " columns, expected " + std::to_string(p.w1.rows()));
  ForwardCache cache;
  cache.input = x;
  cache.hidden1 = tanh_map(add_row_broadcast(matmul(x, p.w1), p.b1));
  cache.hidden2 = tanh_map(add_row_broadcast(matmul(cache.hidden1, p.w2), p.b2));
  cache.output = add_row_broadcast(matmul(cache.hidden2, p.w3), p.b3);
  return cache;
}

double mse_loss(const Matrix& yhat, const Matrix& y) {
  if (yhat.rows() != y.rows() || yhat.cols() != y.cols())
    throw std::invalid_argument("mse_loss: shape mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < yhat.size(); ++i) {
    const double r = yhat.data()[i] - y.data()[i];
    sum += r * r;
  }
  return sum / static_cast<double>(yhat.size());
}

MlpGradients backward(const MlpParams& p, const ForwardCache& cache, const Matrix& y) {
  // Loss is normalized by n*d, so dL/dyhat = 2 (yhat - y) / (n*d).
  const double inv = 2.0 / static_cast<double>(cache.output.size());
  const Matrix d_out = scale(sub(cache.output, y), inv);

  MlpGradients g;
  g.w3 = matmul_tn(cache.hidden2, d_out);
  g.b3 = col_sums(d_out);

  const Matrix d_h2 =
      hadamard(matmul_nt(d_out, p.w3), tanh_deriv_from_act(cache.hidden2));
  g.w2 = matmul_tn(cache.hidden1, d_h2);
  g.b2 = col_sums(d_h2);

  const Matrix d_h1 =
      hadamard(matmul_nt(d_h2, p.w2), tanh_deriv_from_act(cache.hidden1));
  g.w1 = matmul_tn(cache.input, d_h1);
  g.b1 = col_sums(d_h1);
  return g;
}

MlpParams sgd_step(MlpParams p, const MlpGradients& g, double lr) {
  // lr == 0 is allowed so a no-learning run is expressible; it leaves the
  // parameters untouched.
  if (lr < 0.0) throw std::invalid_argument("sgd_step: lr must be >= 0");
  auto apply = [lr](Matrix& param, const Matrix& grad) {
    for (std::size_t i = 0; i < param.size(); ++i) param.data()[i] -= lr * grad.data()[i];
  };
  apply(p.w1, g.w1);
  apply(p.b1, g.b1);
  apply(p.w2, g.w2);
  apply(p.b2, g.b2);
  apply(p.w3, g.w3);
  apply(p.b3, g.b3);
  return p;
}

double gradient_check(const MlpParams& p, const Matrix& x, const Matrix& y, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3))
    throw std::invalid_argument("gradient_check: eps must be in [1e-7, 1e-3]");

  const MlpGradients analytic = backward(p, forward(p, x), y);

  MlpParams probe = p;
  std::vector<std::pair<Matrix MlpParams::*, Matrix MlpGradients::*>> fields = {
      {&MlpParams::w1, &MlpGradients::w1}, {&MlpParams::b1, &MlpGradients::b1},
      {&MlpParams::w2, &MlpGradients::w2}, {&MlpParams::b2, &MlpGradients::b2},
      {&MlpParams::w3, &MlpGradients::w3}, {&MlpParams::b3, &MlpGradients::b3},
  };

  double worst = 0.0;
  for (auto [param_field, grad_field] : fields) {
    Matrix& param = probe.*param_field;
    const Matrix& grad = analytic.*grad_field;
    for (std::size_t i = 0; i < param.size(); ++i) {
      const double saved = param.data()[i];
      param.data()[i] = saved + eps;
      const double loss_plus = mse_loss(forward(probe, x).output, y);
      param.data()[i] = saved - eps;
      const double loss_minus = mse_loss(forward(probe, x).output, y);
      param.data()[i] = saved;

      const double numeric = (loss_plus - loss_minus) / (2.0 * eps);
      const double a = grad.data()[i];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-12});
      worst = std::max(worst, std::fabs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace capsim
