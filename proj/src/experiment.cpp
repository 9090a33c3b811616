#include "capsim/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <utility>

namespace capsim {

std::size_t capacity_to_width(double multiplier, int base_width) {
  if (multiplier <= 0.0)
    throw std::invalid_argument("capacity_to_width: multiplier must be > 0");
  const long w = std::lround(multiplier * base_width);
  return static_cast<std::size_t>(std::max(1L, w));
}

const char* metric_name(int metric) {
  static const char* kNames[kMetricCount] = {
      "block1_episode_acc_AB", "block1_rule_acc_AB",
      "block1_episode_acc_AC", "block1_rule_acc_D",
      "block2_episode_acc_AB", "block2_rule_acc_AB",
      "block2_episode_acc_AC", "block2_rule_acc_D",
  };
  if (metric < 0 || metric >= kMetricCount)
    throw std::invalid_argument("metric_name: index out of range");
  return kNames[metric];
}

Aggregate aggregate(const std::vector<double>& values) {
  if (values.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return Aggregate{nan, nan};
  }
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  if (values.size() < 2)
    return Aggregate{mean, std::numeric_limits<double>::quiet_NaN()};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return Aggregate{mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

namespace {

std::array<double, kMetricCount> collect_metrics(const ReplicationResult& r) {
  return {r.final_block1.episode_acc_ab, r.final_block1.rule_acc_ab,
          r.final_block1.episode_acc_ac, r.final_block1.rule_acc_d,
          r.final_block2.episode_acc_ab, r.final_block2.rule_acc_ab,
          r.final_block2.episode_acc_ac, r.final_block2.rule_acc_d};
}

MeanTrace fold_traces(const std::vector<const TrainTrace*>& traces, long probe_every) {
  MeanTrace mean;
  if (traces.empty()) return mean;
  long max_epoch = 0;
  for (const TrainTrace* t : traces)
    max_epoch = std::max(max_epoch, t->records.back().epoch);

  std::vector<long> grid;
  for (long e = 0; e <= max_epoch; e += probe_every) grid.push_back(e);
  if (grid.back() != max_epoch) grid.push_back(max_epoch);

  const double inv_n = 1.0 / static_cast<double>(traces.size());
  mean.epochs = grid;
  mean.train_loss.assign(grid.size(), 0.0);
  mean.episode_acc_ab.assign(grid.size(), 0.0);
  mean.rule_acc_ab.assign(grid.size(), 0.0);
  mean.episode_acc_ac.assign(grid.size(), 0.0);
  mean.rule_acc_d.assign(grid.size(), 0.0);

  for (const TrainTrace* t : traces) {
    // Walk the grid and the records together; both are epoch-sorted.
    std::size_t r = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      while (r + 1 < t->records.size() && t->records[r + 1].epoch <= grid[g]) ++r;
      const ProbeRecord& rec = t->records[r];
      mean.train_loss[g] += rec.train_loss * inv_n;
      mean.episode_acc_ab[g] += rec.episode_acc_ab * inv_n;
      mean.rule_acc_ab[g] += rec.rule_acc_ab * inv_n;
      mean.episode_acc_ac[g] += rec.episode_acc_ac * inv_n;
      mean.rule_acc_d[g] += rec.rule_acc_d * inv_n;
    }
  }
  return mean;
}

ReplicationResult run_one_replication(const SweepConfig& cfg, double noise,
                                      std::size_t width, int replication) {
  TaskData task = generate_task(noise, cfg.n_samples, cfg.dim,
                                task_streams(cfg.master_seed, replication),
                                cfg.rule_nonlinearity);
  RngStream init = derive_stream(cfg.master_seed, "init", replication);
  return run_two_block(task, width, cfg.train, std::move(init));
}

// Runs `count` independent jobs on up to `threads` workers. Job index order
// in the output is fixed, so parallelism cannot change results.
template <class Fn>
void parallel_for(int count, int threads, Fn&& job) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        job(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

CellResult run_cell(const SweepConfig& cfg, double noise, double multiplier,
                    std::size_t width, int threads) {
  CellResult cell;
  cell.noise = noise;
  cell.multiplier = multiplier;
  cell.width = width;
  cell.reps.resize(cfg.replications);

  std::vector<ReplicationResult> results(cfg.replications);
  parallel_for(cfg.replications, threads, [&](int r) {
    results[r] = run_one_replication(cfg, noise, width, r);
  });

  std::vector<const TrainTrace*> traces1, traces2;
  for (int r = 0; r < cfg.replications; ++r) {
    const ReplicationResult& res = results[r];
    RepFinal& fin = cell.reps[r];
    fin.replication = r;
    fin.diverged = res.diverged;
    fin.block1_capped = res.block1.hit_max_epochs;
    fin.block2_capped = res.block2.hit_max_epochs;
    if (res.diverged) {
      ++cell.n_divergent;
      continue;
    }
    fin.metrics = collect_metrics(res);
    for (int m = 0; m < kMetricCount; ++m) cell.finals[m].push_back(fin.metrics[m]);
    traces1.push_back(&res.block1);
    traces2.push_back(&res.block2);
    ++cell.n_effective;
  }
  cell.block1_mean = fold_traces(traces1, cfg.train.probe_every);
  cell.block2_mean = fold_traces(traces2, cfg.train.probe_every);
  return cell;
}

}  // namespace

double gradient_check_suite(std::uint64_t master_seed) {
  constexpr std::size_t kWidths[] = {2, 4, 8};
  constexpr std::size_t n = 10;
  constexpr std::size_t dim = 5;
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    RngStream stream = derive_stream(master_seed, "gradcheck", i);
    const Matrix x = gaussian(stream, n, dim);
    const Matrix y = gaussian(stream, n, dim);
    const MlpParams p = init_mlp(kWidths[i % 3], dim, stream);
    worst = std::max(worst, gradient_check(p, x, y, 1e-5));
  }
  return worst;
}

CapacityProbe estimate_sufficient_width(const SweepConfig& cfg) {
  constexpr int kSeeds = 5;
  constexpr int kNeeded = 4;
  constexpr int kWidthCeiling = 4096;

  TrainConfig probe_cfg = cfg.train;
  probe_cfg.stop_at_perfect_recall = true;

  std::map<int, bool> cache;
  auto memorizes = [&](int width) {
    auto it = cache.find(width);
    if (it != cache.end()) return it->second;
    int successes = 0;
    for (int seed = 0; seed < kSeeds && successes < kNeeded; ++seed) {
      TaskData task = generate_task(1.0, cfg.n_samples, cfg.dim,
                                    task_streams(cfg.master_seed, seed),
                                    cfg.rule_nonlinearity);
      MlpParams p;
      {
        RngStream init = derive_stream(cfg.master_seed, "init", seed);
        p = init_mlp(static_cast<std::size_t>(width), cfg.dim, init);
      }
      BlockResult block =
          train_block(std::move(p), task.a_train, task.b, task, probe_cfg, 1);
      for (const ProbeRecord& rec : block.trace.records) {
        if (rec.episode_acc_ab == 1.0) {
          ++successes;
          break;
        }
      }
    }
    const bool ok = successes >= kNeeded;
    cache[width] = ok;
    return ok;
  };

  int upper = 1;
  while (upper <= kWidthCeiling && !memorizes(upper)) upper *= 2;
  if (upper > kWidthCeiling) return CapacityProbe{10, true};

  int lo = upper == 1 ? 1 : upper / 2 + 1;
  int hi = upper;
  while (lo < hi) {
    const int mid = lo + (hi - lo) / 2;
    if (memorizes(mid))
      hi = mid;
    else
      lo = mid + 1;
  }
  return CapacityProbe{lo, false};
}

SweepResult run_sweep(const SweepConfig& cfg, int threads, const ProgressFn& progress) {
  if (cfg.replications < 1)
    throw std::invalid_argument("run_sweep: replications must be >= 1");
  for (double n : cfg.noise_levels)
    if (!(n >= 0.0 && n <= 1.0))
      throw std::invalid_argument("run_sweep: noise levels must be in [0, 1]");

  SweepResult result;
  result.config = cfg;
  result.base_width_used = cfg.base_width;
  if (cfg.probe_base_width) {
    const CapacityProbe probe = estimate_sufficient_width(cfg);
    result.base_width_used = probe.width;
    result.capacity_probe_failed = probe.failed;
  }

  const std::size_t total = cfg.noise_levels.size() * cfg.capacity_multipliers.size();
  std::size_t done = 0;
  for (double noise : cfg.noise_levels) {
    for (double mult : cfg.capacity_multipliers) {
      const std::size_t width = capacity_to_width(mult, result.base_width_used);
      result.cells.push_back(run_cell(cfg, noise, mult, width, threads));
      ++done;
      if (progress) progress(done, total, result.cells.back());
    }
  }

  // All pairwise capacity comparisons per (noise, metric). Cells with fewer
  // than two effective replications yield a NaN row so the row count stays
  // k(k-1)/2 regardless of divergences.
  const std::size_t n_mult = cfg.capacity_multipliers.size();
  for (std::size_t ni = 0; ni < cfg.noise_levels.size(); ++ni) {
    for (int m = 0; m < kMetricCount; ++m) {
      for (std::size_t i = 0; i < n_mult; ++i) {
        for (std::size_t j = i + 1; j < n_mult; ++j) {
          const CellResult& ca = result.cells[ni * n_mult + i];
          const CellResult& cb = result.cells[ni * n_mult + j];
          PairwiseRow row;
          row.noise = cfg.noise_levels[ni];
          row.metric = m;
          row.mult_a = ca.multiplier;
          row.mult_b = cb.multiplier;
          if (ca.finals[m].size() >= 2 && cb.finals[m].size() >= 2) {
            row.test = welch_t_test(ca.finals[m], cb.finals[m]);
          } else {
            row.test.t = std::numeric_limits<double>::quiet_NaN();
            row.test.df = std::numeric_limits<double>::quiet_NaN();
            row.test.p = std::numeric_limits<double>::quiet_NaN();
            row.test.degenerate = true;
          }
          result.pairwise.push_back(row);
        }
      }
    }
  }
  return result;
}

}  // namespace capsim
