#include "capsim/training.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"

using namespace capsim;

namespace {

// Independent nearest-target classifier used as the oracle for
// episode_accuracy.
double oracle_accuracy(const Matrix& yhat, const Matrix& targets) {
  int correct = 0;
  for (std::size_t i = 0; i < yhat.rows(); ++i) {
    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t j = 0; j < targets.rows(); ++j) {
      double d = 0.0;
      for (std::size_t k = 0; k < yhat.cols(); ++k) {
        const double diff = yhat(i, k) - targets(j, k);
        d += diff * diff;
      }
      if (j == 0 || d < best_d) {
        best_d = d;
        best = j;
      }
    }
    if (best == i) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(yhat.rows());
}

TaskData make_task(double noise, int rep = 0) {
  TaskStreams streams = task_streams(42, rep);
  return generate_task(noise, 10, 5, streams, RuleNonlinearity::kLinear);
}

TrainConfig quick_config() {
  TrainConfig cfg;
  cfg.convergence_window = 200;
  cfg.max_epochs = 1000;
  cfg.probe_every = 50;
  return cfg;
}

bool params_equal(const MlpParams& a, const MlpParams& b) {
  return a.w1 == b.w1 && a.b1 == b.b1 && a.w2 == b.w2 && a.b2 == b.b2 &&
         a.w3 == b.w3 && a.b3 == b.b3;
}

bool traces_equal(const TrainTrace& a, const TrainTrace& b) {
  if (a.records.size() != b.records.size()) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const ProbeRecord& ra = a.records[i];
    const ProbeRecord& rb = b.records[i];
    if (ra.epoch != rb.epoch || ra.train_loss != rb.train_loss ||
        ra.episode_acc_ab != rb.episode_acc_ab ||
        ra.rule_acc_ab != rb.rule_acc_ab ||
        ra.episode_acc_ac != rb.episode_acc_ac ||
        ra.rule_acc_d != rb.rule_acc_d) {
      return false;
    }
  }
  return a.converged_at == b.converged_at && a.diverged == b.diverged &&
         a.final_epoch == b.final_epoch;
}

}  // namespace

TEST_CASE("episode_accuracy basics") {
  RngStream s = derive_stream(42, "acc");
  const Matrix targets = gaussian(s, 6, 4);
  CHECK(episode_accuracy(targets, targets) == 1.0);

  Matrix shifted(6, 4);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 4; ++j) shifted(i, j) = targets((i + 1) % 6, j);
  }
  CHECK(episode_accuracy(shifted, targets) == 0.0);

  const Matrix t3 = Matrix::from_rows({{0, 0}, {1, 0}, {0, 1}});
  const Matrix y3 = Matrix::from_rows({{0.1, 0}, {0.9, 0.2}, {0.4, 0.4}});
  CHECK(episode_accuracy(y3, t3) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("episode_accuracy ties go to the smallest index") {
  const Matrix targets = Matrix::from_rows({{0, 0}, {2, 0}});
  const Matrix yhat = Matrix::from_rows({{1, 0}, {1, 0}});
  // both rows are exactly equidistant; row 0 wins its tie, row 1 loses
  CHECK(episode_accuracy(yhat, targets) == 0.5);
}

TEST_CASE("episode_accuracy matches the brute-force oracle") {
  for (int trial = 0; trial < 50; ++trial) {
    CAPTURE(trial);
    RngStream s = derive_stream(400, "acc_oracle", trial);
    const Matrix yhat = gaussian(s, 10, 5);
    const Matrix targets = gaussian(s, 10, 5);
    CHECK(episode_accuracy(yhat, targets) == oracle_accuracy(yhat, targets));
  }
}

TEST_CASE("rule_accuracy of a network that computes the rule is 1") {
  const TaskData task = make_task(0.25);
  // near-identity tanh layers: w1 = d*I, w2 = d*I, w3 = W/(d*d) gives
  // yhat = x*W up to O(d^2) relative error, far below target spacing
  const double d = 1e-5;
  MlpParams p;
  p.hidden_width = 5;
  p.w1 = Matrix(5, 5);
  p.w2 = Matrix(5, 5);
  for (std::size_t i = 0; i < 5; ++i) {
    p.w1(i, i) = d;
    p.w2(i, i) = d;
  }
  p.w3 = scale(task.rule.weight, 1.0 / (d * d));
  p.b1 = Matrix(1, 5);
  p.b2 = Matrix(1, 5);
  p.b3 = Matrix(1, 5);
  CHECK(rule_accuracy(p, task.a_test, task.rule) == 1.0);
  CHECK(rule_accuracy(p, task.a_train, task.rule) == 1.0);
}

TEST_CASE("rule_accuracy against D at noise=0 equals episode accuracy") {
  const TaskData task = make_task(0.0);
  RngStream s = derive_stream(42, "init", 0);
  const MlpParams p = init_mlp(8, 5, s);
  const Matrix yhat = forward(p, task.a_test).output;
  CHECK(rule_accuracy(p, task.a_test, task.rule) ==
        episode_accuracy(yhat, task.d));
}

TEST_CASE("zero-output network accuracy matches the oracle") {
  MlpParams p;
  p.hidden_width = 3;
  p.w1 = Matrix(5, 3);
  p.b1 = Matrix(1, 3);
  p.w2 = Matrix(3, 3);
  p.b2 = Matrix(1, 3);
  p.w3 = Matrix(3, 5);
  p.b3 = Matrix(1, 5);
  RngStream s = derive_stream(42, "zero_net");
  const Matrix x = gaussian(s, 10, 5);
  const Matrix targets = gaussian(s, 10, 5);
  const Matrix yhat = forward(p, x).output;
  CHECK(max_abs(yhat) == 0.0);
  CHECK(episode_accuracy(yhat, targets) == oracle_accuracy(yhat, targets));
}

TEST_CASE("converged criterion") {
  std::vector<double> flat(5000, 1.0);
  CHECK(converged(flat, 5000, 1e-5));

  std::vector<double> falling;
  for (int i = 0; i < 6000; ++i) falling.push_back(1.0 - 1e-3 * i / 5000.0);
  CHECK_FALSE(converged(falling, 5000, 1e-5));

  std::vector<double> shorter(4999, 1.0);
  CHECK_FALSE(converged(shorter, 5000, 1e-5));
}

TEST_CASE("train_block with lr=0 converges after exactly one window") {
  const TaskData task = make_task(0.25);
  TrainConfig cfg = quick_config();
  cfg.lr = 0.0;
  RngStream s = derive_stream(42, "init", 0);
  const MlpParams p0 = init_mlp(5, 5, s);
  const BlockResult res = train_block(p0, task.a_train, task.b, task, cfg, 1);
  REQUIRE(res.trace.converged_at.has_value());
  CHECK(*res.trace.converged_at == cfg.convergence_window);
  CHECK(res.trace.final_epoch == cfg.convergence_window);
  CHECK_FALSE(res.trace.hit_max_epochs);
  CHECK(params_equal(res.params, p0));
}

TEST_CASE("trace structure: epochs, bounds, flags") {
  const TaskData task = make_task(0.5);
  const TrainConfig cfg = quick_config();
  RngStream s = derive_stream(42, "init", 1);
  const MlpParams p0 = init_mlp(5, 5, s);
  const BlockResult res = train_block(p0, task.a_train, task.b, task, cfg, 1);
  const TrainTrace& tr = res.trace;
  REQUIRE(!tr.records.empty());
  CHECK(tr.records.front().epoch == 0);
  for (std::size_t i = 0; i + 1 < tr.records.size(); ++i) {
    CHECK(tr.records[i].epoch < tr.records[i + 1].epoch);
  }
  for (std::size_t i = 0; i < tr.records.size(); ++i) {
    const ProbeRecord& r = tr.records[i];
    const bool is_final = i + 1 == tr.records.size();
    if (!is_final) CHECK(r.epoch % cfg.probe_every == 0);
    CHECK(r.train_loss >= 0.0);
    for (double acc : {r.episode_acc_ab, r.rule_acc_ab, r.episode_acc_ac,
                       r.rule_acc_d}) {
      CHECK(acc >= 0.0);
      CHECK(acc <= 1.0);
    }
  }
  CHECK(tr.records.back().epoch == tr.final_epoch);
  // this config cannot satisfy the window criterion mid-run or it stops at cap
  CHECK((tr.converged_at.has_value() || tr.hit_max_epochs));
}

TEST_CASE("probes are read-only: probe frequency does not change training") {
  const TaskData task = make_task(0.25);
  RngStream s = derive_stream(42, "init", 2);
  const MlpParams p0 = init_mlp(5, 5, s);

  TrainConfig dense = quick_config();
  dense.probe_every = 1;
  TrainConfig sparse = quick_config();
  sparse.probe_every = 250;

  const BlockResult a = train_block(p0, task.a_train, task.b, task, dense, 1);
  const BlockResult b = train_block(p0, task.a_train, task.b, task, sparse, 1);
  CHECK(params_equal(a.params, b.params));
  CHECK(a.trace.final_epoch == b.trace.final_epoch);
  CHECK(a.trace.records.back().train_loss == b.trace.records.back().train_loss);
}

TEST_CASE("noise=0: episode_acc_AC equals rule_acc_D at every probe") {
  const TaskData task = make_task(0.0);
  const TrainConfig cfg = quick_config();
  RngStream s = derive_stream(42, "init", 3);
  const MlpParams p0 = init_mlp(5, 5, s);
  const BlockResult res = train_block(p0, task.a_train, task.b, task, cfg, 1);
  for (const ProbeRecord& r : res.trace.records) {
    CHECK(r.episode_acc_ac == r.rule_acc_d);
  }
}

TEST_CASE("training reduces the loss on the block targets") {
  const TaskData task = make_task(0.25);
  const TrainConfig cfg = quick_config();
  RngStream s = derive_stream(42, "init", 4);
  const MlpParams p0 = init_mlp(10, 5, s);
  const BlockResult res = train_block(p0, task.a_train, task.b, task, cfg, 1);
  CHECK(res.trace.records.back().train_loss <
        res.trace.records.front().train_loss);
}

TEST_CASE("divergence is detected and flagged") {
  const TaskData task = make_task(0.25);
  TrainConfig cfg = quick_config();
  cfg.lr = 1e9;
  RngStream s = derive_stream(42, "init", 5);
  const MlpParams p0 = init_mlp(5, 5, s);
  const BlockResult res = train_block(p0, task.a_train, task.b, task, cfg, 1);
  CHECK(res.trace.diverged);

  const ReplicationResult rep = run_two_block(task, 5, cfg, derive_stream(42, "init", 5));
  CHECK(rep.diverged);
}

TEST_CASE("run_two_block is deterministic and follows the protocol") {
  const TaskData task = make_task(0.25);
  const TrainConfig cfg = quick_config();
  const ReplicationResult r1 =
      run_two_block(task, 5, cfg, derive_stream(42, "init", 6));
  const ReplicationResult r2 =
      run_two_block(task, 5, cfg, derive_stream(42, "init", 6));
  CHECK(traces_equal(r1.block1, r2.block1));
  CHECK(traces_equal(r1.block2, r2.block2));
  CHECK(r1.final_block2.episode_acc_ab == r2.final_block2.episode_acc_ab);

  CHECK(r1.block1.block == 1);
  CHECK(r1.block2.block == 2);
  // final snapshots equal the last probe records
  CHECK(r1.final_block1.episode_acc_ab == r1.block1.records.back().episode_acc_ab);
  CHECK(r1.final_block2.rule_acc_d == r1.block2.records.back().rule_acc_d);
}

TEST_CASE("stop_at_perfect_recall cuts a block short") {
  const TaskData task = make_task(1.0);
  TrainConfig cfg;
  cfg.convergence_window = 5000;
  cfg.max_epochs = 20000;
  cfg.probe_every = 100;
  cfg.stop_at_perfect_recall = true;
  RngStream s = derive_stream(42, "init", 7);
  const MlpParams p0 = init_mlp(100, 5, s);
  const BlockResult res = train_block(p0, task.a_train, task.b, task, cfg, 1);
  if (res.trace.records.back().episode_acc_ab == 1.0) {
    CHECK(res.trace.final_epoch < cfg.max_epochs);
  }
}
