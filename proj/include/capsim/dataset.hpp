#pragma once

#include <cstdint>
#include <string>

#include "capsim/matrix.hpp"
#include "capsim/rng.hpp"

namespace capsim {

enum class RuleNonlinearity { kLinear, kTanh };

/// The shared transformation mapping samples to the structured component of
/// their targets. Weight entries are N(0,1)/sqrt(dim), which keeps rule
/// outputs on the same scale as the unit-variance perturbations so the noise
/// mixing weight is meaningful.
struct RuleF {
  Matrix weight;  // dim x dim
  RuleNonlinearity nonlinearity = RuleNonlinearity::kLinear;
};

RuleF make_rule(std::size_t dim, RngStream& stream,
                RuleNonlinearity nonlinearity = RuleNonlinearity::kLinear);

/// x(n x dim) through the rule: linear mode x*W, tanh mode tanh(x*W).
Matrix apply_rule(const RuleF& rule, const Matrix& x);

/// One generated task instance: sample inputs, the rule, the perturbations,
/// and the mixed target sets.
///
///   b = (1-noise) * f(a_train) + noise * eps_b
///   c = (1-noise) * f(a_test)  + noise * eps_c
///   d = (1-noise) * f(a_test)
///
/// noise = 0 is a pure rule task (b == f(a_train), c == d); noise = 1 is pure
/// arbitrary association (b == eps_b, d == 0).
struct TaskData {
  Matrix a_train;  // n x dim
  Matrix a_test;   // n x dim
  Matrix b;        // block-1 targets
  Matrix c;        // block-2 targets
  Matrix d;        // noiseless rule targets for a_test
  Matrix eps_b;
  Matrix eps_c;
  double noise = 0.0;
  RuleF rule;
};

/// Stream labels used for task generation. a_train / a_test / rule are shared
/// per replication across every sweep cell so all models see the same task;
/// eps streams are likewise fixed per replication.
struct TaskStreams {
  RngStream data_train;
  RngStream data_test;
  RngStream rule;
  RngStream eps_b;
  RngStream eps_c;
};

/// Streams for replication `replication` under `master`.
TaskStreams task_streams(std::uint64_t master, int replication);

/// Builds one task. Throws std::invalid_argument if noise is outside [0, 1].
TaskData generate_task(double noise, std::size_t n_samples, std::size_t dim,
                       TaskStreams streams,
                       RuleNonlinearity nonlinearity = RuleNonlinearity::kLinear);

}  // namespace capsim
