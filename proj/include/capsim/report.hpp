#pragma once

#include <string>
#include <vector>

#include "capsim/experiment.hpp"
#include "capsim/mlp.hpp"

namespace capsim {

/// 17 significant digits, enough for exact double round-trips.
std::string format_csv_double(double v);

struct TemporalRow {
  std::string run_id;
  double noise = 0.0;
  double capacity_multiplier = 0.0;
  int block = 0;
  long epoch = 0;
  double train_loss = 0.0;
  double episode_acc_ab = 0.0;
  double rule_acc_ab = 0.0;
  double episode_acc_ac = 0.0;
  double rule_acc_d = 0.0;
};

std::vector<TemporalRow> temporal_rows(const std::string& run_id, double noise,
                                       double multiplier, const TrainTrace& trace);
std::vector<TemporalRow> temporal_rows(const std::string& run_id, double noise,
                                       double multiplier, int block,
                                       const MeanTrace& trace);

/// Header plus one line per row, LF endings, '.' decimal point.
void emit_temporal_csv(const std::vector<TemporalRow>& rows, const std::string& path);

/// Aggregated means and standard errors, one row per (cell, metric). An
/// absent standard error (fewer than two effective replications) is an empty
/// field.
void emit_final_csv(const SweepResult& sweep, const std::string& path);

/// Companion pairwise Welch tests: noise,metric,mult_a,mult_b,t,df,p.
void emit_pairwise_csv(const SweepResult& sweep, const std::string& path);

/// Raw per-replication finals plus divergence / max-epoch flags, so every
/// aggregate in the final CSV can be recomputed from disk.
void emit_raw_finals_csv(const SweepResult& sweep, const std::string& path);

void emit_matrix_csv(const Matrix& m, const std::string& path);
void emit_params_csv(const MlpParams& p, const std::string& path);

struct FinalCsvRow {
  double noise = 0.0;
  double capacity_multiplier = 0.0;
  std::string metric;
  double mean = 0.0;
  double se = 0.0;  // NaN when the field was empty
  int n_effective = 0;
  int n_divergent = 0;
};

std::vector<FinalCsvRow> read_final_csv(const std::string& path);
std::vector<TemporalRow> read_temporal_csv(const std::string& path);

struct CurveSeries {
  std::string label;
  std::vector<long> epochs;
  std::vector<double> values;
};

/// Carry-forward resampling of every series onto the union epoch grid, so
/// cells whose replications converged at different epochs share one x axis.
std::vector<CurveSeries> align_series(std::vector<CurveSeries> series);

/// Accuracy-over-epochs line chart, one curve per series. All series must
/// share the same epoch grid; accuracy values outside [0, 1] are rejected
/// rather than clipped. Output is a static, byte-deterministic SVG.
void plot_temporal(const std::vector<CurveSeries>& series, const std::string& title,
                   const std::string& path);

/// Grouped bar chart of final means by noise level, one bar per capacity
/// multiplier, whiskers at mean +/- standard error. A dashed marker runs
/// through the sufficient-capacity (1x) bar of each group, separating the
/// constrained from the excess side.
void plot_final(const SweepResult& sweep, int metric, const std::string& path);

struct FinalChartCell {
  double mean = 0.0;  // NaN leaves the bar out entirely
  double se = 0.0;    // NaN or 0 suppresses the whisker
};

/// Same chart from already-aggregated values, noise-major cell order. Used
/// when regenerating figures from an existing final CSV.
void plot_final_chart(const std::vector<double>& noises,
                      const std::vector<double>& mults,
                      const std::vector<FinalChartCell>& cells,
                      const std::string& metric, const std::string& path);

}  // namespace capsim
