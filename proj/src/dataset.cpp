#include "capsim/dataset.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace capsim {

RuleF make_rule(std::size_t dim, RngStream& stream, RuleNonlinearity nonlinearity) {
  if (dim < 1) throw std::invalid_argument("make_rule: dim must be >= 1");
  Matrix w = scale(gaussian(stream, dim, dim), 1.0 / std::sqrt(static_cast<double>(dim)));
  return RuleF{std::move(w), nonlinearity};
}

Matrix apply_rule(const RuleF& rule, const Matrix& x) {
  Matrix out = matmul(x, rule.weight);
  if (rule.nonlinearity == RuleNonlinearity::kTanh)
    out = elementwise(out, [](double v) { return std::tanh(v); });
  return out;
}

TaskStreams task_streams(std::uint64_t master, int replication) {
  return TaskStreams{
      derive_stream(master, "data_train", replication),
      derive_stream(master, "data_test", replication),
      derive_stream(master, "rule", replication),
      derive_stream(master, "eps_b", replication),
      derive_stream(master, "eps_c", replication),
  };
}

TaskData generate_task(double noise, std::size_t n_samples, std::size_t dim,
                       TaskStreams streams, RuleNonlinearity nonlinearity) {
  if (!(noise >= 0.0 && noise <= 1.0))
    throw std::invalid_argument("generate_task: noise must be in [0, 1]");

  TaskData task;
  task.noise = noise;
  task.a_train = gaussian(streams.data_train, n_samples, dim);
  task.a_test = gaussian(streams.data_test, n_samples, dim);
  task.rule = make_rule(dim, streams.rule, nonlinearity);
  task.eps_b = gaussian(streams.eps_b, n_samples, dim);
  task.eps_c = gaussian(streams.eps_c, n_samples, dim);

  const Matrix f_train = apply_rule(task.rule, task.a_train);
  const Matrix f_test = apply_rule(task.rule, task.a_test);
  task.b = add(scale(f_train, 1.0 - noise), scale(task.eps_b, noise));
  task.c = add(scale(f_test, 1.0 - noise), scale(task.eps_c, noise));
  task.d = scale(f_test, 1.0 - noise);
  return task;
}

}  // namespace capsim
