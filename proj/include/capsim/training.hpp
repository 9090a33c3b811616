#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "capsim/dataset.hpp"
#include "capsim/mlp.hpp"

namespace capsim {

struct TrainConfig {
  double lr = 0.01;
  long convergence_window = 5000;  // epochs
  double convergence_tol = 1e-5;
  long max_epochs = 500000;
  long probe_every = 100;
  // Capacity-probe runs only need to know whether perfect recall of the
  // block targets is ever reached; this cuts them short at that point.
  bool stop_at_perfect_recall = false;
};

struct ProbeRecord {
  long epoch;
  double train_loss;
  double episode_acc_ab;  // recall of a_train -> b
  double rule_acc_ab;     // a_train outputs vs noiseless rule targets
  double episode_acc_ac;  // generalization a_test -> c
  double rule_acc_d;      // a_test outputs vs d
};

struct TrainTrace {
  int block = 0;
  std::vector<ProbeRecord> records;
  std::optional<long> converged_at;
  bool hit_max_epochs = false;
  bool diverged = false;
  long final_epoch = 0;
};

/// Fraction of rows whose prediction is nearest (Euclidean) to its own
/// target among all target rows. Ties go to the smallest target index, so a
/// tie not involving a smaller index still counts as correct.
double episode_accuracy(const Matrix& yhat, const Matrix& targets);

/// episode_accuracy of forward(p, x) against the noiseless rule outputs f(x).
double rule_accuracy(const MlpParams& p, const Matrix& x, const RuleF& rule);

/// Blockwise convergence: true iff the history holds at least `window`
/// entries and the loss decrease across the last `window` of them is below
/// `tol`. The training loop consults this only at epochs that are multiples
/// of the window.
bool converged(const std::vector<double>& loss_history, long window, double tol);

struct BlockResult {
  MlpParams params;
  TrainTrace trace;
};

/// Full-batch gradient descent of x -> y until convergence or max_epochs.
/// Records all four metrics every probe_every epochs (plus epoch 0 and the
/// final epoch); probes are read-only. Non-finite loss aborts the block with
/// the diverged flag set.
BlockResult train_block(MlpParams p, const Matrix& x, const Matrix& y,
                        const TaskData& task, const TrainConfig& cfg, int block);

struct FinalMetrics {
  double episode_acc_ab = 0.0;
  double rule_acc_ab = 0.0;
  double episode_acc_ac = 0.0;
  double rule_acc_d = 0.0;
};

struct ReplicationResult {
  TrainTrace block1;
  TrainTrace block2;
  FinalMetrics final_block1;
  FinalMetrics final_block2;
  bool diverged = false;
};

/// init -> Block 1 (a_train -> b) -> Block 2 (a_train -> c) on the same
/// parameters. Deterministic given the task and init stream.
ReplicationResult run_two_block(const TaskData& task, std::size_t hidden_width,
                                const TrainConfig& cfg, RngStream init_stream);

}  // namespace capsim
