#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "capsim/config.hpp"
#include "capsim/experiment.hpp"
#include "capsim/report.hpp"

namespace fs = std::filesystem;
using namespace capsim;

namespace {

constexpr double kGradcheckThreshold = 1e-4;

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir = "out";
  std::string seed;  // kept as text; parsed with the config machinery
  int threads = 0;   // 0 = all hardware threads
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_threads) {
  cmd->add_option("--config", o.config_path, "key=value config file");
  cmd->add_option("--set", o.sets, "config override key=value (repeatable)");
  cmd->add_option("--out", o.out_dir, "output directory")
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "master seed (overrides config)");
  if (with_threads) {
    cmd->add_option("--threads", o.threads, "worker threads, 0 = all cores")
        ->capture_default_str();
  }
  cmd->add_flag("--quiet", o.quiet, "suppress progress output");
}

SweepConfig resolve_config(const CommonOpts& o) {
  SweepConfig cfg;
  if (!o.config_path.empty()) cfg = load_config(o.config_path);
  for (const std::string& s : o.sets) apply_override(cfg, s);
  if (!o.seed.empty()) apply_setting(cfg, "master_seed", o.seed, 0);
  validate_config(cfg);
  return cfg;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::string g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string join_args(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path);
}

const char* kTraceMetrics[] = {"episode_acc_AB", "rule_acc_AB",
                               "episode_acc_AC", "rule_acc_D"};

double trace_metric(const TemporalRow& r, int metric) {
  switch (metric) {
    case 0: return r.episode_acc_ab;
    case 1: return r.rule_acc_ab;
    case 2: return r.episode_acc_ac;
    default: return r.rule_acc_d;
  }
}

const std::vector<double>& trace_metric(const MeanTrace& t, int metric) {
  switch (metric) {
    case 0: return t.episode_acc_ab;
    case 1: return t.rule_acc_ab;
    case 2: return t.episode_acc_ac;
    default: return t.rule_acc_d;
  }
}

/// Fig.-style temporal slice: the noise level closest to 0.25 (ties toward
/// the smaller level), one figure per block and accuracy metric.
std::size_t temporal_slice_index(const std::vector<double>& noises) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < noises.size(); ++i) {
    if (std::fabs(noises[i] - 0.25) < std::fabs(noises[best] - 0.25)) best = i;
  }
  return best;
}

void write_temporal_figures(const std::vector<double>& mults, double slice_noise,
                            int block, int metric,
                            std::vector<CurveSeries> series,
                            const std::string& dir,
                            std::vector<std::string>& outputs) {
  for (const CurveSeries& s : series) {
    if (s.epochs.empty()) return;  // a cell with no effective replications
  }
  (void)mults;
  const std::string name = "temporal_block" + std::to_string(block) + "_" +
                           kTraceMetrics[metric] + ".svg";
  const std::string title = std::string(kTraceMetrics[metric]) + ", block " +
                            std::to_string(block) + ", noise " + g(slice_noise);
  plot_temporal(align_series(std::move(series)), title, dir + "/" + name);
  outputs.push_back(name);
}

int cmd_run(const CommonOpts& opts, double noise, double multiplier,
            int replication, bool dump_task, bool dump_weights,
            const std::string& command) {
  const SweepConfig cfg = resolve_config(opts);
  const std::size_t width = capacity_to_width(multiplier, cfg.base_width);

  TaskStreams streams = task_streams(cfg.master_seed, replication);
  const TaskData task =
      generate_task(noise, cfg.n_samples, cfg.dim, streams, cfg.rule_nonlinearity);
  RngStream init = derive_stream(cfg.master_seed, "init", replication);
  MlpParams params = init_mlp(width, cfg.dim, init);
  const MlpParams initial = params;

  if (!opts.quiet) {
    std::cerr << "run: noise=" << g(noise) << " multiplier=" << g(multiplier)
              << " width=" << width << " replication=" << replication << "\n";
  }

  BlockResult b1 = train_block(std::move(params), task.a_train, task.b, task,
                               cfg.train, 1);
  BlockResult b2;
  bool have_b2 = false;
  if (!b1.trace.diverged) {
    b2 = train_block(std::move(b1.params), task.a_train, task.c, task,
                     cfg.train, 2);
    have_b2 = true;
  }

  const std::string run_id = "noise" + g(noise) + "_mult" + g(multiplier) +
                             "_rep" + std::to_string(replication);
  std::vector<TemporalRow> rows = temporal_rows(run_id, noise, multiplier, b1.trace);
  if (have_b2) {
    std::vector<TemporalRow> rows2 =
        temporal_rows(run_id, noise, multiplier, b2.trace);
    rows.insert(rows.end(), rows2.begin(), rows2.end());
  }

  fs::create_directories(opts.out_dir);
  std::vector<std::string> outputs;
  emit_temporal_csv(rows, opts.out_dir + "/temporal.csv");
  outputs.push_back("temporal.csv");
  if (dump_task) {
    const std::pair<const char*, const Matrix*> mats[] = {
        {"task_a_train.csv", &task.a_train}, {"task_a_test.csv", &task.a_test},
        {"task_b.csv", &task.b},             {"task_c.csv", &task.c},
        {"task_d.csv", &task.d},             {"task_eps_b.csv", &task.eps_b},
        {"task_eps_c.csv", &task.eps_c},     {"task_rule.csv", &task.rule.weight}};
    for (const auto& [name, m] : mats) {
      emit_matrix_csv(*m, opts.out_dir + "/" + name);
      outputs.push_back(name);
    }
  }
  if (dump_weights) {
    emit_params_csv(initial, opts.out_dir + "/weights_init.csv");
    outputs.push_back("weights_init.csv");
    const MlpParams& final_params = have_b2 ? b2.params : b1.params;
    emit_params_csv(final_params, opts.out_dir + "/weights_final.csv");
    outputs.push_back("weights_final.csv");
  }
  write_text(opts.out_dir + "/manifest.json",
             manifest_json(cfg, command, 1, outputs));

  const ProbeRecord& f1 = b1.trace.records.back();
  std::cout << "block 1: epochs=" << b1.trace.final_epoch
            << (b1.trace.converged_at ? "" : " (hit max_epochs)")
            << " episode_acc_AB=" << g(f1.episode_acc_ab)
            << " episode_acc_AC=" << g(f1.episode_acc_ac) << "\n";
  if (have_b2) {
    const ProbeRecord& f2 = b2.trace.records.back();
    std::cout << "block 2: epochs=" << b2.trace.final_epoch
              << (b2.trace.converged_at ? "" : " (hit max_epochs)")
              << " episode_acc_AB=" << g(f2.episode_acc_ab)
              << " episode_acc_AC=" << g(f2.episode_acc_ac)
              << " rule_acc_D=" << g(f2.rule_acc_d) << "\n";
  }
  if (b1.trace.diverged || (have_b2 && b2.trace.diverged)) {
    std::cout << "warning: training diverged (non-finite loss)\n";
  }
  std::cout << "wrote " << opts.out_dir << "/temporal.csv\n";
  return 0;
}

int cmd_sweep(const CommonOpts& opts, bool probe_base_width,
              const std::string& command) {
  SweepConfig cfg = resolve_config(opts);
  cfg.probe_base_width = probe_base_width;
  const int threads = resolve_threads(opts.threads);
  fs::create_directories(opts.out_dir);

  ProgressFn progress;
  if (!opts.quiet) {
    progress = [](std::size_t done, std::size_t total, const CellResult& cell) {
      std::cerr << "cell " << done << "/" << total << ": noise=" << g(cell.noise)
                << " mult=" << g(cell.multiplier) << " width=" << cell.width
                << " effective=" << cell.n_effective << "\n";
    };
  }
  const SweepResult sweep = run_sweep(cfg, threads, progress);

  std::vector<std::string> outputs;
  emit_final_csv(sweep, opts.out_dir + "/final.csv");
  outputs.push_back("final.csv");
  emit_pairwise_csv(sweep, opts.out_dir + "/pairwise.csv");
  outputs.push_back("pairwise.csv");
  emit_raw_finals_csv(sweep, opts.out_dir + "/raw_finals.csv");
  outputs.push_back("raw_finals.csv");

  const std::size_t n_mults = cfg.capacity_multipliers.size();
  for (std::size_t ni = 0; ni < cfg.noise_levels.size(); ++ni) {
    std::vector<TemporalRow> rows;
    for (std::size_t mi = 0; mi < n_mults; ++mi) {
      const CellResult& cell = sweep.cells[ni * n_mults + mi];
      for (int block = 1; block <= 2; ++block) {
        const MeanTrace& trace = block == 1 ? cell.block1_mean : cell.block2_mean;
        std::vector<TemporalRow> cell_rows =
            temporal_rows("mean", cell.noise, cell.multiplier, block, trace);
        rows.insert(rows.end(), cell_rows.begin(), cell_rows.end());
      }
    }
    const std::string name = "temporal_noise" + g(cfg.noise_levels[ni]) + ".csv";
    emit_temporal_csv(rows, opts.out_dir + "/" + name);
    outputs.push_back(name);
  }

  for (int m = 0; m < kMetricCount; ++m) {
    const std::string name = "final_" + std::string(metric_name(m)) + ".svg";
    plot_final(sweep, m, opts.out_dir + "/" + name);
    outputs.push_back(name);
  }

  const std::size_t slice = temporal_slice_index(cfg.noise_levels);
  for (int block = 1; block <= 2; ++block) {
    for (int metric = 0; metric < 4; ++metric) {
      std::vector<CurveSeries> series;
      for (std::size_t mi = 0; mi < n_mults; ++mi) {
        const CellResult& cell = sweep.cells[slice * n_mults + mi];
        const MeanTrace& trace = block == 1 ? cell.block1_mean : cell.block2_mean;
        series.push_back(CurveSeries{g(cell.multiplier) + std::string("x"),
                                     trace.epochs, trace_metric(trace, metric)});
      }
      write_temporal_figures(cfg.capacity_multipliers,
                             cfg.noise_levels[slice], block, metric,
                             std::move(series), opts.out_dir, outputs);
    }
  }

  write_text(opts.out_dir + "/manifest.json",
             manifest_json(cfg, command, threads, outputs));

  int divergent = 0;
  for (const CellResult& cell : sweep.cells) divergent += cell.n_divergent;
  std::cout << "sweep done: " << sweep.cells.size() << " cells, "
            << cfg.replications << " replications each, base width "
            << sweep.base_width_used << ", " << divergent
            << " divergent runs\n";
  if (sweep.capacity_probe_failed) {
    std::cout << "warning: capacity probe failed; fell back to width "
              << sweep.base_width_used << "\n";
  }
  std::cout << "wrote " << outputs.size() + 1 << " files to " << opts.out_dir
            << "\n";
  return 0;
}

int cmd_probe(const CommonOpts& opts) {
  const SweepConfig cfg = resolve_config(opts);
  if (!opts.quiet) std::cerr << "probing sufficient width at noise 1.0\n";
  const CapacityProbe probe = estimate_sufficient_width(cfg);
  if (probe.failed) {
    std::cout << "capacity probe failed: no width up to 4096 memorized; "
                 "fallback width "
              << probe.width << "\n";
  } else {
    std::cout << "sufficient width: " << probe.width << "\n";
  }
  return 0;
}

int cmd_plot(const CommonOpts& opts) {
  const std::string dir = opts.out_dir;
  const std::vector<FinalCsvRow> rows = read_final_csv(dir + "/final.csv");
  if (rows.empty()) throw std::runtime_error(dir + "/final.csv: no data rows");

  std::vector<double> noises;
  std::vector<double> mults;
  std::vector<std::string> metrics;
  for (const FinalCsvRow& r : rows) {
    if (std::find(noises.begin(), noises.end(), r.noise) == noises.end())
      noises.push_back(r.noise);
    if (std::find(mults.begin(), mults.end(), r.capacity_multiplier) == mults.end())
      mults.push_back(r.capacity_multiplier);
    if (std::find(metrics.begin(), metrics.end(), r.metric) == metrics.end())
      metrics.push_back(r.metric);
  }

  for (const std::string& metric : metrics) {
    std::vector<FinalChartCell> cells(noises.size() * mults.size());
    for (FinalChartCell& c : cells) {
      c.mean = std::numeric_limits<double>::quiet_NaN();
      c.se = std::numeric_limits<double>::quiet_NaN();
    }
    for (const FinalCsvRow& r : rows) {
      if (r.metric != metric) continue;
      const std::size_t ni =
          std::find(noises.begin(), noises.end(), r.noise) - noises.begin();
      const std::size_t mi =
          std::find(mults.begin(), mults.end(), r.capacity_multiplier) -
          mults.begin();
      cells[ni * mults.size() + mi] = {r.mean, r.se};
    }
    plot_final_chart(noises, mults, cells, metric,
                     dir + "/final_" + metric + ".svg");
  }

  const std::size_t slice = temporal_slice_index(noises);
  const std::string temporal_path =
      dir + "/temporal_noise" + g(noises[slice]) + ".csv";
  const std::vector<TemporalRow> trows = read_temporal_csv(temporal_path);
  std::vector<std::string> ignored;
  for (int block = 1; block <= 2; ++block) {
    for (int metric = 0; metric < 4; ++metric) {
      std::vector<CurveSeries> series;
      for (double mult : mults) {
        CurveSeries s;
        s.label = g(mult) + std::string("x");
        for (const TemporalRow& r : trows) {
          if (r.block != block || r.capacity_multiplier != mult) continue;
          s.epochs.push_back(r.epoch);
          s.values.push_back(trace_metric(r, metric));
        }
        series.push_back(std::move(s));
      }
      write_temporal_figures(mults, noises[slice], block, metric,
                             std::move(series), dir, ignored);
    }
  }
  std::cout << "regenerated figures in " << dir << "\n";
  return 0;
}

int cmd_gradcheck(const CommonOpts& opts) {
  const SweepConfig cfg = resolve_config(opts);
  const double err = gradient_check_suite(cfg.master_seed);
  std::cout << "max relative gradient error: " << format_csv_double(err) << "\n";
  if (!(err < kGradcheckThreshold)) {
    std::cerr << "error: gradient check failed (threshold "
              << kGradcheckThreshold << ")\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-block associative learning simulator"};
  app.require_subcommand(1);

  CommonOpts run_opts, sweep_opts, probe_opts, plot_opts, grad_opts;
  double run_noise = 0.25;
  double run_mult = 1.0;
  int run_rep = 0;
  bool run_dump_task = false;
  bool run_dump_weights = false;

  CLI::App* run = app.add_subcommand(
      "run", "One replication: two training blocks with a full temporal trace");
  add_common(run, run_opts, false);
  run->add_option("--noise", run_noise, "noise level in [0, 1]")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  run->add_option("--multiplier", run_mult, "capacity multiplier (> 0)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run->add_option("--replication", run_rep, "replication index (>= 0)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  run->add_flag("--dump-task", run_dump_task, "also write the task matrices");
  run->add_flag("--dump-weights", run_dump_weights,
                "also write initial and final weights");

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Full noise x capacity grid with aggregation, tests and figures");
  add_common(sweep, sweep_opts, true);
  bool sweep_probe_width = false;
  sweep->add_flag("--probe-base-width", sweep_probe_width,
                  "measure the sufficient width empirically before sweeping");

  CLI::App* probe = app.add_subcommand(
      "probe-capacity", "Estimate the smallest width that memorizes at noise 1");
  add_common(probe, probe_opts, false);

  CLI::App* plot = app.add_subcommand(
      "plot", "Regenerate SVG figures from CSV files in the output directory");
  add_common(plot, plot_opts, false);

  CLI::App* grad = app.add_subcommand(
      "gradcheck", "Finite-difference check of the backpropagation gradients");
  add_common(grad, grad_opts, false);

  CLI11_PARSE(app, argc, argv);

  const std::string command = join_args(argc, argv);
  try {
    if (run->parsed()) {
      return cmd_run(run_opts, run_noise, run_mult, run_rep, run_dump_task,
                     run_dump_weights, command);
    }
    if (sweep->parsed()) {
      return cmd_sweep(sweep_opts, sweep_probe_width, command);
    }
    if (probe->parsed()) return cmd_probe(probe_opts);
    if (plot->parsed()) return cmd_plot(plot_opts);
    if (grad->parsed()) return cmd_gradcheck(grad_opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
