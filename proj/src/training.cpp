#include "capsim/training.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace capsim {

double episode_accuracy(const Matrix& yhat, const Matrix& targets) {
  if (yhat.rows() != targets.rows() || yhat.cols() != targets.cols())
    throw std::invalid_argument("episode_accuracy: shape mismatch");
  const std::size_t n = yhat.rows(), d = yhat.cols();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* pred = yhat.row_ptr(i);
    std::size_t best = 0;
    double best_dist = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double* tgt = targets.row_ptr(j);
      double dist = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = pred[k] - tgt[k];
        dist += diff * diff;
      }
      if (j == 0 || dist < best_dist) {  // strict < keeps ties at smallest index
        best = j;
        best_dist = dist;
      }
    }
    if (best == i) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

double rule_accuracy(const MlpParams& p, const Matrix& x, const RuleF& rule) {
  return episode_accuracy(forward(p, x).output, apply_rule(rule, x));
}

bool converged(const std::vector<double>& loss_history, long window, double tol) {
  const long n = static_cast<long>(loss_history.size());
  if (window < 1 || n < window) return false;
  const double decrease = loss_history[n - window] - loss_history[n - 1];
  return decrease < tol;
}

namespace {

ProbeRecord probe(long epoch, double train_loss, const MlpParams& p, const TaskData& task) {
  ProbeRecord rec;
  rec.epoch = epoch;
  rec.train_loss = train_loss;
  rec.episode_acc_ab = episode_accuracy(forward(p, task.a_train).output, task.b);
  rec.rule_acc_ab = rule_accuracy(p, task.a_train, task.rule);
  const Matrix yhat_test = forward(p, task.a_test).output;
  rec.episode_acc_ac = episode_accuracy(yhat_test, task.c);
  rec.rule_acc_d = episode_accuracy(yhat_test, task.d);
  return rec;
}

FinalMetrics to_final(const ProbeRecord& rec) {
  return FinalMetrics{rec.episode_acc_ab, rec.rule_acc_ab, rec.episode_acc_ac,
                      rec.rule_acc_d};
}

}  // namespace

BlockResult train_block(MlpParams p, const Matrix& x, const Matrix& y,
                        const TaskData& task, const TrainConfig& cfg, int block) {
  TrainTrace trace;
  trace.block = block;

  std::vector<double> loss_history;
  loss_history.reserve(static_cast<std::size_t>(std::min(cfg.max_epochs, 1000000L)) + 1);

  // Baseline probe at epoch 0, before any update.
  {
    const double loss0 = mse_loss(forward(p, x).output, y);
    trace.records.push_back(probe(0, loss0, p, task));
  }

  long epoch = 0;
  for (epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    ForwardCache cache = forward(p, x);
    const double loss = mse_loss(cache.output, y);
    if (!std::isfinite(loss)) {
      trace.diverged = true;
      trace.final_epoch = epoch;
      return BlockResult{std::move(p), std::move(trace)};
    }
    loss_history.push_back(loss);

    const MlpGradients grads = backward(p, cache, y);
    p = sgd_step(std::move(p), grads, cfg.lr);

    const bool at_probe = epoch % cfg.probe_every == 0;
    if (at_probe) trace.records.push_back(probe(epoch, loss, p, task));

    if (cfg.stop_at_perfect_recall && at_probe &&
        trace.records.back().episode_acc_ab == 1.0) {
      trace.final_epoch = epoch;
      return BlockResult{std::move(p), std::move(trace)};
    }

    if (epoch % cfg.convergence_window == 0 &&
        converged(loss_history, cfg.convergence_window, cfg.convergence_tol)) {
      trace.converged_at = epoch;
      break;
    }
  }

  if (!trace.converged_at) {
    trace.hit_max_epochs = true;
    epoch = cfg.max_epochs;
  }
  trace.final_epoch = epoch;
  if (trace.records.back().epoch != epoch)
    trace.records.push_back(probe(epoch, loss_history.back(), p, task));
  return BlockResult{std::move(p), std::move(trace)};
}

ReplicationResult run_two_block(const TaskData& task, std::size_t hidden_width,
                                const TrainConfig& cfg, RngStream init_stream) {
  MlpParams p = init_mlp(hidden_width, task.a_train.cols(), init_stream);

  ReplicationResult result;
  BlockResult b1 = train_block(std::move(p), task.a_train, task.b, task, cfg, 1);
  result.block1 = std::move(b1.trace);
  result.final_block1 = to_final(result.block1.records.back());
  if (result.block1.diverged) {
    result.diverged = true;
    return result;
  }

  BlockResult b2 = train_block(std::move(b1.params), task.a_train, task.c, task, cfg, 2);
  result.block2 = std::move(b2.trace);
  result.final_block2 = to_final(result.block2.records.back());
  result.diverged = result.block2.diverged;
  return result;
}

}  // namespace capsim
