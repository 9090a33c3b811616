#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "capsim/dataset.hpp"
#include "capsim/stats.hpp"
#include "capsim/training.hpp"

namespace capsim {

struct SweepConfig {
  std::vector<double> noise_levels{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> capacity_multipliers{0.5, 1.0, 10.0, 100.0};
  int replications = 100;
  int base_width = 10;          // one hidden unit per training pattern
  bool probe_base_width = false;  // measure base width empirically instead
  std::uint64_t master_seed = 42;
  RuleNonlinearity rule_nonlinearity = RuleNonlinearity::kLinear;
  std::size_t n_samples = 10;
  std::size_t dim = 5;
  TrainConfig train;
};

/// Hidden width for a capacity multiplier: round(multiplier * base), at
/// least 1. Applies to both hidden layers.
std::size_t capacity_to_width(double multiplier, int base_width);

/// Eight tracked outcomes: the four metrics at the end of each block.
constexpr int kMetricCount = 8;
const char* metric_name(int metric);  // e.g. "block1_episode_acc_AB"

struct RepFinal {
  int replication = 0;
  bool diverged = false;
  bool block1_capped = false;  // hit max_epochs without converging
  bool block2_capped = false;
  std::array<double, kMetricCount> metrics{};
};

/// Per-probe means over the effective replications of a cell, on the common
/// probe grid. Replications that converge early hold their final value
/// (a converged model's metrics no longer change).
struct MeanTrace {
  std::vector<long> epochs;
  std::vector<double> train_loss;
  std::vector<double> episode_acc_ab;
  std::vector<double> rule_acc_ab;
  std::vector<double> episode_acc_ac;
  std::vector<double> rule_acc_d;
};

struct CellResult {
  double noise = 0.0;
  double multiplier = 0.0;
  std::size_t width = 0;
  std::vector<RepFinal> reps;
  std::array<std::vector<double>, kMetricCount> finals;  // non-divergent only
  int n_effective = 0;
  int n_divergent = 0;
  MeanTrace block1_mean;
  MeanTrace block2_mean;
};

struct Aggregate {
  double mean = 0.0;
  double se = 0.0;  // NaN marks "absent" when n < 2
};

/// Mean and standard error (sample std with n-1 denominator over sqrt(n)).
/// Empty input yields NaN for both.
Aggregate aggregate(const std::vector<double>& values);

struct PairwiseRow {
  double noise = 0.0;
  int metric = 0;
  double mult_a = 0.0;
  double mult_b = 0.0;
  TTestResult test;
};

struct SweepResult {
  SweepConfig config;
  int base_width_used = 0;
  bool capacity_probe_failed = false;
  std::vector<CellResult> cells;  // noise-major, multiplier-minor, config order
  std::vector<PairwiseRow> pairwise;
};

struct CapacityProbe {
  int width = 0;
  bool failed = false;  // nothing up to 4096 memorized; width is the fallback
};

/// Smallest hidden width that fully memorizes a pure-episode (noise = 1)
/// task: block-1 recall accuracy reaches 1.0 before max_epochs in at least
/// 4 of 5 seeds. Doubling search for an upper bound, then binary search.
CapacityProbe estimate_sufficient_width(const SweepConfig& cfg);

/// Max relative error between analytic and central finite-difference
/// gradients over 20 random instances, hidden widths cycling through
/// {2, 4, 8}, n = 10 samples of dimension 5, eps = 1e-5.
double gradient_check_suite(std::uint64_t master_seed);

using ProgressFn = std::function<void(std::size_t cells_done, std::size_t cells_total,
                                      const CellResult& just_finished)>;

/// Runs the full noise x capacity grid with `replications` runs per cell and
/// aggregates. Results are identical for any thread count: every replication
/// derives its randomness from (master_seed, label, replication) alone, and
/// folding happens in fixed cell order.
SweepResult run_sweep(const SweepConfig& cfg, int threads = 1,
                      const ProgressFn& progress = nullptr);

}  // namespace capsim
