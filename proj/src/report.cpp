#include "capsim/report.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>

namespace capsim {
namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

/// Coordinate helper for SVG output; two decimals is below pixel resolution.
std::string px(double v) { return fmt("%.2f", v); }

const char* kPalette[] = {"#4878cf", "#e8803a", "#4daf62",
                          "#c44e52", "#8172b2", "#937860"};
constexpr int kPaletteSize = 6;

struct Frame {
  double width = 860.0;
  double height = 520.0;
  double left = 72.0;
  double top = 48.0;
  double plot_w = 560.0;
  double plot_h = 400.0;

  double x0() const { return left; }
  double x1() const { return left + plot_w; }
  double y0() const { return top + plot_h; }  // value 0 (bottom)
  double y1() const { return top; }           // value 1 (top)
  double y_of(double v) const { return y0() - v * plot_h; }
};

void svg_header(std::ostream& out, const Frame& f, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width
      << "\" height=\"" << f.height << "\" viewBox=\"0 0 " << f.width << " "
      << f.height << "\">\n";
  out << "<rect width=\"" << f.width << "\" height=\"" << f.height
      << "\" fill=\"#ffffff\"/>\n";
  out << "<text x=\"" << px(f.left + f.plot_w / 2) << "\" y=\"28\" "
      << "text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
      << title << "</text>\n";
}

void svg_y_axis(std::ostream& out, const Frame& f, const std::string& label) {
  for (int i = 0; i <= 4; ++i) {
    const double v = 0.25 * i;
    const double y = f.y_of(v);
    out << "<line x1=\"" << px(f.x0()) << "\" y1=\"" << px(y) << "\" x2=\""
        << px(f.x1()) << "\" y2=\"" << px(y)
        << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << px(f.x0() - 8) << "\" y=\"" << px(y + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
        << fmt("%g", v) << "</text>\n";
  }
  out << "<text x=\"20\" y=\"" << px(f.top + f.plot_h / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
      << "transform=\"rotate(-90 20 " << px(f.top + f.plot_h / 2) << ")\">"
      << label << "</text>\n";
}

void svg_plot_border(std::ostream& out, const Frame& f) {
  out << "<rect x=\"" << px(f.x0()) << "\" y=\"" << px(f.y1()) << "\" width=\""
      << px(f.plot_w) << "\" height=\"" << px(f.plot_h)
      << "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
}

void svg_legend(std::ostream& out, const Frame& f,
                const std::vector<std::string>& labels) {
  const double lx = f.x1() + 16.0;
  double ly = f.top + 10.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const char* color = kPalette[i % kPaletteSize];
    out << "<line x1=\"" << px(lx) << "\" y1=\"" << px(ly) << "\" x2=\""
        << px(lx + 24) << "\" y2=\"" << px(ly) << "\" stroke=\"" << color
        << "\" stroke-width=\"3\"/>\n";
    out << "<text x=\"" << px(lx + 30) << "\" y=\"" << px(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << labels[i]
        << "</text>\n";
    ly += 20.0;
  }
}

void check_unit_range(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument(std::string(what) + " outside [0, 1]: " +
                                format_csv_double(v));
  }
}

void append_row(std::vector<TemporalRow>& rows, const std::string& run_id,
                double noise, double multiplier, int block,
                const ProbeRecord& rec) {
  TemporalRow row;
  row.run_id = run_id;
  row.noise = noise;
  row.capacity_multiplier = multiplier;
  row.block = block;
  row.epoch = rec.epoch;
  row.train_loss = rec.train_loss;
  row.episode_acc_ab = rec.episode_acc_ab;
  row.rule_acc_ab = rec.rule_acc_ab;
  row.episode_acc_ac = rec.episode_acc_ac;
  row.rule_acc_d = rec.rule_acc_d;
  rows.push_back(std::move(row));
}

}  // namespace

std::string format_csv_double(double v) { return fmt("%.17g", v); }

std::vector<TemporalRow> temporal_rows(const std::string& run_id, double noise,
                                       double multiplier, const TrainTrace& trace) {
  std::vector<TemporalRow> rows;
  rows.reserve(trace.records.size());
  for (const ProbeRecord& rec : trace.records) {
    append_row(rows, run_id, noise, multiplier, trace.block, rec);
  }
  return rows;
}

std::vector<TemporalRow> temporal_rows(const std::string& run_id, double noise,
                                       double multiplier, int block,
                                       const MeanTrace& trace) {
  std::vector<TemporalRow> rows;
  rows.reserve(trace.epochs.size());
  for (std::size_t i = 0; i < trace.epochs.size(); ++i) {
    ProbeRecord rec;
    rec.epoch = trace.epochs[i];
    rec.train_loss = trace.train_loss[i];
    rec.episode_acc_ab = trace.episode_acc_ab[i];
    rec.rule_acc_ab = trace.rule_acc_ab[i];
    rec.episode_acc_ac = trace.episode_acc_ac[i];
    rec.rule_acc_d = trace.rule_acc_d[i];
    append_row(rows, run_id, noise, multiplier, block, rec);
  }
  return rows;
}

void emit_temporal_csv(const std::vector<TemporalRow>& rows, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "run_id,noise,capacity_multiplier,block,epoch,train_loss,"
         "episode_acc_AB,rule_acc_AB,episode_acc_AC,rule_acc_D\n";
  for (const TemporalRow& r : rows) {
    out << r.run_id << ',' << format_csv_double(r.noise) << ','
        << format_csv_double(r.capacity_multiplier) << ',' << r.block << ','
        << r.epoch << ',' << format_csv_double(r.train_loss) << ','
        << format_csv_double(r.episode_acc_ab) << ','
        << format_csv_double(r.rule_acc_ab) << ','
        << format_csv_double(r.episode_acc_ac) << ','
        << format_csv_double(r.rule_acc_d) << '\n';
  }
  finish(out, path);
}

void emit_final_csv(const SweepResult& sweep, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "noise,capacity_multiplier,metric,mean,standard_error,n_effective,"
         "n_divergent\n";
  for (const CellResult& cell : sweep.cells) {
    for (int m = 0; m < kMetricCount; ++m) {
      const Aggregate agg = aggregate(cell.finals[m]);
      out << format_csv_double(cell.noise) << ','
          << format_csv_double(cell.multiplier) << ',' << metric_name(m) << ','
          << format_csv_double(agg.mean) << ',';
      if (!std::isnan(agg.se)) out << format_csv_double(agg.se);
      out << ',' << cell.n_effective << ',' << cell.n_divergent << '\n';
    }
  }
  finish(out, path);
}

void emit_pairwise_csv(const SweepResult& sweep, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "noise,metric,mult_a,mult_b,t,df,p\n";
  for (const PairwiseRow& row : sweep.pairwise) {
    out << format_csv_double(row.noise) << ',' << metric_name(row.metric) << ','
        << format_csv_double(row.mult_a) << ',' << format_csv_double(row.mult_b)
        << ',' << format_csv_double(row.test.t) << ','
        << format_csv_double(row.test.df) << ',' << format_csv_double(row.test.p)
        << '\n';
  }
  finish(out, path);
}

void emit_raw_finals_csv(const SweepResult& sweep, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "noise,capacity_multiplier,replication,diverged,block1_capped,"
         "block2_capped";
  for (int m = 0; m < kMetricCount; ++m) out << ',' << metric_name(m);
  out << '\n';
  for (const CellResult& cell : sweep.cells) {
    for (const RepFinal& rep : cell.reps) {
      out << format_csv_double(cell.noise) << ','
          << format_csv_double(cell.multiplier) << ',' << rep.replication << ','
          << (rep.diverged ? 1 : 0) << ',' << (rep.block1_capped ? 1 : 0) << ','
          << (rep.block2_capped ? 1 : 0);
      for (int m = 0; m < kMetricCount; ++m) {
        out << ',' << format_csv_double(rep.metrics[m]);
      }
      out << '\n';
    }
  }
  finish(out, path);
}

void emit_matrix_csv(const Matrix& m, const std::string& path) {
  std::ofstream out = open_out(path);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_csv_double(m(i, j));
    }
    out << '\n';
  }
  finish(out, path);
}

void emit_params_csv(const MlpParams& p, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "tensor,row,col,value\n";
  const std::pair<const char*, const Matrix*> tensors[] = {
      {"w1", &p.w1}, {"b1", &p.b1}, {"w2", &p.w2},
      {"b2", &p.b2}, {"w3", &p.w3}, {"b3", &p.b3}};
  for (const auto& [name, mat] : tensors) {
    for (std::size_t i = 0; i < mat->rows(); ++i) {
      for (std::size_t j = 0; j < mat->cols(); ++j) {
        out << name << ',' << i << ',' << j << ','
            << format_csv_double((*mat)(i, j)) << '\n';
      }
    }
  }
  finish(out, path);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_field(const std::string& field, const std::string& path, int line) {
  if (field.empty()) return std::numeric_limits<double>::quiet_NaN();
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size()) {
    throw std::runtime_error(path + " line " + std::to_string(line) +
                             ": bad numeric field '" + field + "'");
  }
  return v;
}

std::ifstream open_csv(const std::string& path, const std::string& header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string first;
  if (!std::getline(in, first)) {
    throw std::runtime_error(path + ": empty file");
  }
  if (!first.empty() && first.back() == '\r') first.pop_back();
  if (first != header) {
    throw std::runtime_error(path + ": unexpected header '" + first + "'");
  }
  return in;
}

}  // namespace

std::vector<FinalCsvRow> read_final_csv(const std::string& path) {
  std::ifstream in = open_csv(
      path,
      "noise,capacity_multiplier,metric,mean,standard_error,n_effective,"
      "n_divergent");
  std::vector<FinalCsvRow> rows;
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> f = split_line(line);
    if (f.size() != 7) {
      throw std::runtime_error(path + " line " + std::to_string(lineno) +
                               ": expected 7 fields, got " +
                               std::to_string(f.size()));
    }
    FinalCsvRow row;
    row.noise = parse_field(f[0], path, lineno);
    row.capacity_multiplier = parse_field(f[1], path, lineno);
    row.metric = f[2];
    row.mean = parse_field(f[3], path, lineno);
    row.se = parse_field(f[4], path, lineno);
    row.n_effective = static_cast<int>(parse_field(f[5], path, lineno));
    row.n_divergent = static_cast<int>(parse_field(f[6], path, lineno));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<TemporalRow> read_temporal_csv(const std::string& path) {
  std::ifstream in = open_csv(
      path,
      "run_id,noise,capacity_multiplier,block,epoch,train_loss,"
      "episode_acc_AB,rule_acc_AB,episode_acc_AC,rule_acc_D");
  std::vector<TemporalRow> rows;
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> f = split_line(line);
    if (f.size() != 10) {
      throw std::runtime_error(path + " line " + std::to_string(lineno) +
                               ": expected 10 fields, got " +
                               std::to_string(f.size()));
    }
    TemporalRow row;
    row.run_id = f[0];
    row.noise = parse_field(f[1], path, lineno);
    row.capacity_multiplier = parse_field(f[2], path, lineno);
    row.block = static_cast<int>(parse_field(f[3], path, lineno));
    row.epoch = static_cast<long>(parse_field(f[4], path, lineno));
    row.train_loss = parse_field(f[5], path, lineno);
    row.episode_acc_ab = parse_field(f[6], path, lineno);
    row.rule_acc_ab = parse_field(f[7], path, lineno);
    row.episode_acc_ac = parse_field(f[8], path, lineno);
    row.rule_acc_d = parse_field(f[9], path, lineno);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<CurveSeries> align_series(std::vector<CurveSeries> series) {
  std::set<long> grid_set;
  for (const CurveSeries& s : series) {
    if (s.values.size() != s.epochs.size()) {
      throw std::invalid_argument("align_series: values/epochs size mismatch");
    }
    grid_set.insert(s.epochs.begin(), s.epochs.end());
  }
  const std::vector<long> grid(grid_set.begin(), grid_set.end());
  for (CurveSeries& s : series) {
    if (s.epochs.empty()) {
      throw std::invalid_argument("align_series: empty series '" + s.label + "'");
    }
    std::vector<double> values;
    values.reserve(grid.size());
    std::size_t i = 0;
    for (long epoch : grid) {
      while (i + 1 < s.epochs.size() && s.epochs[i + 1] <= epoch) ++i;
      values.push_back(s.values[i]);
    }
    s.epochs = grid;
    s.values = std::move(values);
  }
  return series;
}

void plot_temporal(const std::vector<CurveSeries>& series, const std::string& title,
                   const std::string& path) {
  if (series.empty()) throw std::invalid_argument("plot_temporal: no series");
  const std::vector<long>& grid = series.front().epochs;
  if (grid.empty()) throw std::invalid_argument("plot_temporal: empty series");
  for (const CurveSeries& s : series) {
    if (s.epochs != grid) {
      throw std::invalid_argument("plot_temporal: series epoch grids differ");
    }
    if (s.values.size() != s.epochs.size()) {
      throw std::invalid_argument("plot_temporal: values/epochs size mismatch");
    }
    for (double v : s.values) check_unit_range(v, "accuracy value");
  }

  const Frame f;
  const long max_epoch = grid.back() > 0 ? grid.back() : 1;
  const auto x_of = [&](long epoch) {
    return f.x0() + f.plot_w * (static_cast<double>(epoch) /
                                static_cast<double>(max_epoch));
  };

  std::ofstream out = open_out(path);
  svg_header(out, f, title);
  svg_y_axis(out, f, "accuracy");
  for (int i = 0; i <= 4; ++i) {
    const long e = max_epoch / 4 * i;
    const double x = x_of(e);
    out << "<line x1=\"" << px(x) << "\" y1=\"" << px(f.y0()) << "\" x2=\""
        << px(x) << "\" y2=\"" << px(f.y0() + 5)
        << "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << px(x) << "\" y=\"" << px(f.y0() + 20)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"12\">" << e << "</text>\n";
  }
  out << "<text x=\"" << px(f.x0() + f.plot_w / 2) << "\" y=\""
      << px(f.y0() + 40)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"13\">epoch</text>\n";

  std::vector<std::string> labels;
  for (std::size_t si = 0; si < series.size(); ++si) {
    const CurveSeries& s = series[si];
    labels.push_back(s.label);
    out << "<polyline fill=\"none\" stroke=\"" << kPalette[si % kPaletteSize]
        << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < s.epochs.size(); ++i) {
      if (i) out << ' ';
      out << px(x_of(s.epochs[i])) << ',' << px(f.y_of(s.values[i]));
    }
    out << "\"/>\n";
  }
  svg_plot_border(out, f);
  svg_legend(out, f, labels);
  out << "</svg>\n";
  finish(out, path);
}

void plot_final_chart(const std::vector<double>& noises,
                      const std::vector<double>& mults,
                      const std::vector<FinalChartCell>& cells,
                      const std::string& metric, const std::string& path) {
  if (noises.empty() || mults.empty()) {
    throw std::invalid_argument("plot_final: empty chart");
  }
  if (cells.size() != noises.size() * mults.size()) {
    throw std::invalid_argument("plot_final: cell count mismatch");
  }

  const Frame f;
  const std::size_t groups = noises.size();
  const std::size_t bars = mults.size();
  const double slot = f.plot_w / static_cast<double>(groups);
  const double bar_w = slot * 0.8 / static_cast<double>(bars);
  const double group_pad = slot * 0.1;

  std::ofstream out = open_out(path);
  svg_header(out, f, metric + " by noise and capacity");
  svg_y_axis(out, f, metric);

  std::size_t marker_index = bars;  // dashed marker goes on the 1x bar
  for (std::size_t j = 0; j < bars; ++j) {
    if (mults[j] == 1.0) marker_index = j;
  }

  for (std::size_t g = 0; g < groups; ++g) {
    const double gx = f.x0() + slot * static_cast<double>(g);
    out << "<text x=\"" << px(gx + slot / 2) << "\" y=\"" << px(f.y0() + 20)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"12\">" << fmt("%g", noises[g]) << "</text>\n";
    for (std::size_t j = 0; j < bars; ++j) {
      const FinalChartCell& cell = cells[g * bars + j];
      const double bx = gx + group_pad + bar_w * static_cast<double>(j);
      if (j == marker_index) {
        const double cx = bx + bar_w / 2;
        out << "<line x1=\"" << px(cx) << "\" y1=\"" << px(f.y1()) << "\" x2=\""
            << px(cx) << "\" y2=\"" << px(f.y0())
            << "\" stroke=\"#555555\" stroke-width=\"1\" "
            << "stroke-dasharray=\"5,4\"/>\n";
      }
      if (std::isnan(cell.mean)) continue;  // cell without effective reps
      check_unit_range(cell.mean, metric.c_str());
      const double by = f.y_of(cell.mean);
      out << "<rect x=\"" << px(bx) << "\" y=\"" << px(by) << "\" width=\""
          << px(bar_w) << "\" height=\"" << px(f.y0() - by) << "\" fill=\""
          << kPalette[j % kPaletteSize] << "\"/>\n";
      if (!std::isnan(cell.se) && cell.se > 0.0) {
        const double cx = bx + bar_w / 2;
        const double y_lo = f.y_of(cell.mean - cell.se);
        const double y_hi = f.y_of(cell.mean + cell.se);
        out << "<line x1=\"" << px(cx) << "\" y1=\"" << px(y_lo) << "\" x2=\""
            << px(cx) << "\" y2=\"" << px(y_hi)
            << "\" stroke=\"#222222\" stroke-width=\"1.2\"/>\n";
        for (double wy : {y_lo, y_hi}) {
          out << "<line x1=\"" << px(cx - 3) << "\" y1=\"" << px(wy)
              << "\" x2=\"" << px(cx + 3) << "\" y2=\"" << px(wy)
              << "\" stroke=\"#222222\" stroke-width=\"1.2\"/>\n";
        }
      }
    }
  }

  out << "<text x=\"" << px(f.x0() + f.plot_w / 2) << "\" y=\""
      << px(f.y0() + 40)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"13\">noise level</text>\n";

  std::vector<std::string> labels;
  for (double m : mults) labels.push_back(fmt("%g", m) + std::string("x"));
  svg_plot_border(out, f);
  svg_legend(out, f, labels);
  out << "</svg>\n";
  finish(out, path);
}

void plot_final(const SweepResult& sweep, int metric, const std::string& path) {
  if (metric < 0 || metric >= kMetricCount) {
    throw std::invalid_argument("plot_final: bad metric index");
  }
  const std::vector<double>& noises = sweep.config.noise_levels;
  const std::vector<double>& mults = sweep.config.capacity_multipliers;
  if (sweep.cells.size() != noises.size() * mults.size()) {
    throw std::invalid_argument("plot_final: cell count mismatch");
  }
  std::vector<FinalChartCell> cells;
  cells.reserve(sweep.cells.size());
  for (const CellResult& cell : sweep.cells) {
    const Aggregate agg = aggregate(cell.finals[metric]);
    cells.push_back({agg.mean, agg.se});
  }
  plot_final_chart(noises, mults, cells, metric_name(metric), path);
}

}  // namespace capsim
