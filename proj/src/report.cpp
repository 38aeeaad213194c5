#include "ragbench/report.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "json.hpp"
#include "ragbench/errors.hpp"
#include "ragbench/util.hpp"

namespace ragbench {

using nlohmann::json;

namespace {

std::string csv_field(const std::string& raw) {
  if (raw.find_first_of(",\"\n") == std::string::npos) return raw;
  std::string quoted = "\"";
  for (char c : raw) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

}  // namespace

size_t emit_scores_csv(const std::vector<ScoreRecord>& records, const std::string& path) {
  std::vector<ScoreRecord> rows = records;
  std::sort(rows.begin(), rows.end(), [](const ScoreRecord& a, const ScoreRecord& b) {
    return std::tie(a.model, a.temperature, a.perturbation, a.question_type, a.sample_id,
                    a.run_index, a.metric) < std::tie(b.model, b.temperature, b.perturbation,
                                                      b.question_type, b.sample_id, b.run_index,
                                                      b.metric);
  });
  std::string out =
      "sample_id,model,temperature,perturbation,question_type,fact_count,run_index,metric,value,"
      "cached\n";
  for (const auto& r : rows) {
    out += csv_field(r.sample_id) + ',' + csv_field(r.model) + ',' + fmt_double(r.temperature, 6) +
           ',' + perturbation_name(r.perturbation) + ',' + question_type_name(r.question_type) +
           ',' + std::to_string(r.fact_count) + ',' + std::to_string(r.run_index) + ',' +
           metric_name(r.metric) + ',' + fmt_double(r.value, 6) + ',' + (r.cached ? "1" : "0") +
           '\n';
  }
  write_file_atomic(path, out);
  return rows.size();
}

size_t emit_run_stats_csv(const std::vector<RunStats>& stats, const std::string& path) {
  std::vector<RunStats> rows = stats;
  std::sort(rows.begin(), rows.end(), [](const RunStats& a, const RunStats& b) {
    if (!(a.key == b.key)) return condition_key_less(a.key, b.key);
    return a.sample_id < b.sample_id;
  });
  std::string out = "model,temperature,perturbation,question_type,sample_id,n_runs,mean,std,cv\n";
  for (const auto& r : rows) {
    out += csv_field(r.key.model) + ',' + fmt_double(r.key.temperature, 6) + ',' +
           perturbation_name(r.key.perturbation) + ',' +
           question_type_name(r.key.question_type) + ',' + csv_field(r.sample_id) + ',' +
           std::to_string(r.n_runs) + ',' + fmt_double(r.mean, 6) + ',' + fmt_double(r.std, 6) +
           ',' + fmt_double(r.cv, 6) + '\n';
  }
  write_file_atomic(path, out);
  return rows.size();
}

size_t emit_condition_stats_csv(const std::vector<ConditionStats>& stats,
                                const std::string& path) {
  std::vector<ConditionStats> rows = stats;
  std::sort(rows.begin(), rows.end(),
            [](const ConditionStats& a, const ConditionStats& b) {
              return condition_key_less(a.key, b.key);
            });
  std::string out =
      "model,temperature,perturbation,question_type,n_samples,mean_of_means,mean_of_stds,mean_cv,"
      "condition_cv\n";
  for (const auto& r : rows) {
    out += csv_field(r.key.model) + ',' + fmt_double(r.key.temperature, 6) + ',' +
           perturbation_name(r.key.perturbation) + ',' +
           question_type_name(r.key.question_type) + ',' + std::to_string(r.n_samples) + ',' +
           fmt_double(r.mean_of_means, 6) + ',' + fmt_double(r.mean_of_stds, 6) + ',' +
           fmt_double(r.mean_cv, 6) + ',' + fmt_double(r.condition_cv, 6) + '\n';
  }
  write_file_atomic(path, out);
  return rows.size();
}

BoxStats box_stats(std::vector<double> values) {
  if (values.empty()) throw EmptyGroup("box_stats: empty value list");
  std::sort(values.begin(), values.end());
  auto quantile = [&](double p) {
    double h = static_cast<double>(values.size() - 1) * p;
    size_t lo = static_cast<size_t>(h);
    double frac = h - static_cast<double>(lo);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + frac * (values[lo + 1] - values[lo]);
  };
  BoxStats b;
  b.q1 = quantile(0.25);
  b.median = quantile(0.5);
  b.q3 = quantile(0.75);
  double iqr = b.q3 - b.q1;
  double lo_fence = b.q1 - 1.5 * iqr;
  double hi_fence = b.q3 + 1.5 * iqr;
  b.lo_whisker = b.q1;
  b.hi_whisker = b.q3;
  bool lo_set = false, hi_set = false;
  for (double v : values) {
    if (v < lo_fence || v > hi_fence) {
      b.outliers.push_back(v);
      continue;
    }
    if (!lo_set) {
      b.lo_whisker = v;
      lo_set = true;
    }
    b.hi_whisker = v;  // values are sorted, so the last in-fence value wins
    hi_set = true;
  }
  if (!lo_set) b.lo_whisker = b.q1;
  if (!hi_set) b.hi_whisker = b.q3;
  return b;
}

namespace {

// Fixed palette indexed by PerturbationKind's enumerator order.
constexpr const char* kPalette[] = {
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
};

const char* series_color(PerturbationKind k) {
  return kPalette[static_cast<size_t>(k) % (sizeof(kPalette) / sizeof(kPalette[0]))];
}

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

std::string num(double v) { return fmt_double(v, 2); }

constexpr double kPanelW = 280, kPanelH = 210;
constexpr double kMarginL = 46, kMarginR = 12, kMarginT = 26, kMarginB = 34;
constexpr double kPlotW = kPanelW - kMarginL - kMarginR;
constexpr double kPlotH = kPanelH - kMarginT - kMarginB;
constexpr double kPanelGap = 14, kFigPad = 8, kLegendH = 26;

struct PanelFrame {
  double ox = 0, oy = 0;           // panel origin in figure coordinates
  double x_min = 0, x_max = 1;     // data ranges
  double y_min = 0, y_max = 1;

  double px(double x) const {
    double span = x_max - x_min;
    if (span <= 0) return ox + kMarginL + kPlotW / 2;
    return ox + kMarginL + (x - x_min) / span * kPlotW;
  }
  double py(double y) const {
    double span = y_max - y_min;
    if (span <= 0) return oy + kMarginT + kPlotH / 2;
    return oy + kMarginT + kPlotH - (y - y_min) / span * kPlotH;
  }
};

void open_svg(std::string& svg, double width, double height) {
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
         num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + num(width) + "\" height=\"" + num(height) +
         "\" fill=\"#ffffff\"/>\n";
}

void draw_text(std::string& svg, double x, double y, const std::string& text, int size,
               const char* anchor, const char* fill = "#333333") {
  svg += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-family=\"sans-serif\" font-size=\"" +
         std::to_string(size) + "\" text-anchor=\"" + anchor + "\" fill=\"" + fill + "\">" +
         esc(text) + "</text>\n";
}

void draw_panel_frame(std::string& svg, const PanelFrame& f, const std::string& title,
                      const std::vector<double>& x_ticks, int y_tick_count, int y_decimals) {
  draw_text(svg, f.ox + kMarginL + kPlotW / 2, f.oy + kMarginT - 10, title, 12, "middle");
  svg += "<rect x=\"" + num(f.ox + kMarginL) + "\" y=\"" + num(f.oy + kMarginT) + "\" width=\"" +
         num(kPlotW) + "\" height=\"" + num(kPlotH) +
         "\" fill=\"none\" stroke=\"#888888\" stroke-width=\"1\"/>\n";
  for (int i = 0; i <= y_tick_count; ++i) {
    double v = f.y_min + (f.y_max - f.y_min) * i / y_tick_count;
    double y = f.py(v);
    svg += "<line x1=\"" + num(f.ox + kMarginL) + "\" y1=\"" + num(y) + "\" x2=\"" +
           num(f.ox + kMarginL + kPlotW) + "\" y2=\"" + num(y) +
           "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    draw_text(svg, f.ox + kMarginL - 4, y + 3, fmt_double(v, y_decimals), 9, "end");
  }
  for (double t : x_ticks) {
    double x = f.px(t);
    svg += "<line x1=\"" + num(x) + "\" y1=\"" + num(f.oy + kMarginT + kPlotH) + "\" x2=\"" +
           num(x) + "\" y2=\"" + num(f.oy + kMarginT + kPlotH + 4) +
           "\" stroke=\"#888888\" stroke-width=\"1\"/>\n";
    draw_text(svg, x, f.oy + kMarginT + kPlotH + 14, fmt_double(t, 1), 9, "middle");
  }
  draw_text(svg, f.ox + kMarginL + kPlotW / 2, f.oy + kPanelH - 6, "temperature", 10, "middle");
}

void draw_legend(std::string& svg, double y, const std::vector<PerturbationKind>& series) {
  double x = kFigPad + 4;
  for (PerturbationKind k : series) {
    std::string label = perturbation_name(k);
    svg += "<rect x=\"" + num(x) + "\" y=\"" + num(y) +
           "\" width=\"10\" height=\"10\" fill=\"" + series_color(k) + "\"/>\n";
    draw_text(svg, x + 14, y + 9, label, 10, "start");
    x += 14 + 6.2 * static_cast<double>(label.size()) + 16;
  }
}

// One trend point per (model, series, temperature).
using TrendMap = std::map<std::tuple<std::string, int, double>, const ConditionStats*>;

TrendMap index_stats(const std::vector<ConditionStats>& stats, QuestionType question_type) {
  TrendMap m;
  for (const auto& c : stats)
    if (c.key.question_type == question_type)
      m[{c.key.model, static_cast<int>(c.key.perturbation), c.key.temperature}] = &c;
  return m;
}

void check_spec(const FigureSpec& spec) {
  if (spec.models.empty()) throw InvalidConfig("figure spec lists no models");
  if (spec.series.empty()) throw InvalidConfig("figure spec lists no perturbation series");
  if (spec.temperatures.empty()) throw InvalidConfig("figure spec lists no temperatures");
}

std::string finish_svg(std::string svg, const std::string& output_path) {
  svg += "</svg>\n";
  if (!output_path.empty()) write_file_atomic(output_path, svg);
  return svg;
}

std::string trend_figure(const FigureSpec& spec, const std::vector<ConditionStats>& stats,
                         const std::map<std::string, double>* baseline_by_model, bool cv_mode) {
  check_spec(spec);
  TrendMap points = index_stats(stats, spec.question_type);

  double x_min = *std::min_element(spec.temperatures.begin(), spec.temperatures.end());
  double x_max = *std::max_element(spec.temperatures.begin(), spec.temperatures.end());

  double y_max = 1.0;
  if (cv_mode) {
    y_max = 0.0;
    for (const auto& [key, c] : points) y_max = std::max(y_max, c->mean_cv);
    if (baseline_by_model)
      for (const auto& [model, b] : *baseline_by_model) y_max = std::max(y_max, b);
    y_max = y_max > 0 ? y_max * 1.15 : 0.1;
  }

  double width = kFigPad * 2 + spec.models.size() * kPanelW +
                 (spec.models.size() - 1) * kPanelGap;
  double height = kFigPad + kPanelH + kLegendH;
  std::string svg;
  open_svg(svg, width, height);

  for (size_t pi = 0; pi < spec.models.size(); ++pi) {
    const std::string& model = spec.models[pi];
    PanelFrame f;
    f.ox = kFigPad + pi * (kPanelW + kPanelGap);
    f.oy = kFigPad;
    f.x_min = x_min;
    f.x_max = x_max;
    f.y_min = 0.0;
    f.y_max = y_max;
    draw_panel_frame(svg, f, model, spec.temperatures, 4, cv_mode ? 3 : 2);

    if (cv_mode && baseline_by_model) {
      auto it = baseline_by_model->find(model);
      if (it == baseline_by_model->end())
        throw MissingSeries("no baseline CV for model '" + model + "'");
      double by = f.py(std::min(it->second, f.y_max));
      svg += "<line x1=\"" + num(f.ox + kMarginL) + "\" y1=\"" + num(by) + "\" x2=\"" +
             num(f.ox + kMarginL + kPlotW) + "\" y2=\"" + num(by) +
             "\" stroke=\"#555555\" stroke-width=\"1\" stroke-dasharray=\"4 3\"/>\n";
      draw_text(svg, f.ox + kMarginL + 4, f.oy + kMarginT + 11,
                "baseline CV: " + fmt_double(it->second, 3), 9, "start", "#555555");
    }

    for (PerturbationKind kind : spec.series) {
      std::vector<std::tuple<double, double, double>> pts;  // (T, value, band half-width)
      for (double t : spec.temperatures) {
        auto it = points.find({model, static_cast<int>(kind), t});
        if (it == points.end()) {
          if (spec.allow_gaps) continue;
          throw MissingSeries("no stats for model '" + model + "', perturbation '" +
                              perturbation_name(kind) + "', temperature " +
                              fmt_double(t, 1));
        }
        const ConditionStats& c = *it->second;
        pts.emplace_back(t, cv_mode ? c.mean_cv : c.mean_of_means,
                         cv_mode ? 0.0 : c.mean_of_stds);
      }
      if (pts.empty()) continue;
      const char* color = series_color(kind);

      if (!cv_mode) {
        std::string band = "<polygon points=\"";
        for (const auto& [t, v, s] : pts)
          band += num(f.px(t)) + "," + num(f.py(std::min(v + s, f.y_max))) + " ";
        for (auto it2 = pts.rbegin(); it2 != pts.rend(); ++it2)
          band += num(f.px(std::get<0>(*it2))) + "," +
                  num(f.py(std::max(std::get<1>(*it2) - std::get<2>(*it2), f.y_min))) + " ";
        band.pop_back();
        band += "\" fill=\"" + std::string(color) + "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
        svg += band;
      }

      std::string line = "<polyline points=\"";
      for (const auto& [t, v, s] : pts) line += num(f.px(t)) + "," + num(f.py(v)) + " ";
      line.pop_back();
      line += "\" fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\"/>\n";
      svg += line;
      for (const auto& [t, v, s] : pts)
        svg += "<circle cx=\"" + num(f.px(t)) + "\" cy=\"" + num(f.py(v)) +
               "\" r=\"2\" fill=\"" + color + "\"/>\n";
    }
  }
  draw_legend(svg, kFigPad + kPanelH + 8, spec.series);
  return finish_svg(std::move(svg), spec.output_path);
}

}  // namespace

std::string render_temperature_trend(const FigureSpec& spec,
                                     const std::vector<ConditionStats>& stats) {
  return trend_figure(spec, stats, nullptr, /*cv_mode=*/false);
}

std::string render_cv_trend(const FigureSpec& spec, const std::vector<ConditionStats>& stats,
                            const std::map<std::string, double>& baseline_by_model) {
  return trend_figure(spec, stats, &baseline_by_model, /*cv_mode=*/true);
}

std::string render_score_boxplot(const FigureSpec& spec, const std::vector<RunStats>& stats) {
  check_spec(spec);
  // Population per box: per-sample mean scores of one condition.
  std::map<std::tuple<std::string, int, double>, std::vector<double>> pops;
  for (const auto& s : stats)
    if (s.key.question_type == spec.question_type)
      pops[{s.key.model, static_cast<int>(s.key.perturbation), s.key.temperature}].push_back(
          s.mean);

  double width = kFigPad * 2 + spec.models.size() * kPanelW +
                 (spec.models.size() - 1) * kPanelGap;
  double height = kFigPad + kPanelH + kLegendH;
  std::string svg;
  open_svg(svg, width, height);

  const double box_w = 14, box_gap = 4;
  for (size_t pi = 0; pi < spec.models.size(); ++pi) {
    const std::string& model = spec.models[pi];
    PanelFrame f;
    f.ox = kFigPad + pi * (kPanelW + kPanelGap);
    f.oy = kFigPad;
    f.x_min = 0;
    f.x_max = static_cast<double>(spec.temperatures.size());
    f.y_min = 0.0;
    f.y_max = 1.0;

    draw_text(svg, f.ox + kMarginL + kPlotW / 2, f.oy + kMarginT - 10, model, 12, "middle");
    svg += "<rect x=\"" + num(f.ox + kMarginL) + "\" y=\"" + num(f.oy + kMarginT) + "\" width=\"" +
           num(kPlotW) + "\" height=\"" + num(kPlotH) +
           "\" fill=\"none\" stroke=\"#888888\" stroke-width=\"1\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      double v = i / 4.0;
      double y = f.py(v);
      svg += "<line x1=\"" + num(f.ox + kMarginL) + "\" y1=\"" + num(y) + "\" x2=\"" +
             num(f.ox + kMarginL + kPlotW) + "\" y2=\"" + num(y) +
             "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
      draw_text(svg, f.ox + kMarginL - 4, y + 3, fmt_double(v, 2), 9, "end");
    }

    for (size_t ti = 0; ti < spec.temperatures.size(); ++ti) {
      double t = spec.temperatures[ti];
      double center = f.px(static_cast<double>(ti) + 0.5);
      draw_text(svg, center, f.oy + kMarginT + kPlotH + 14, "T=" + fmt_double(t, 1), 9, "middle");

      double total_w = spec.series.size() * box_w + (spec.series.size() - 1) * box_gap;
      double x = center - total_w / 2;
      for (PerturbationKind kind : spec.series) {
        auto it = pops.find({model, static_cast<int>(kind), t});
        if (it == pops.end()) {
          if (!spec.allow_gaps)
            throw MissingSeries("no per-sample scores for model '" + model + "', perturbation '" +
                                perturbation_name(kind) + "', temperature " +
                                fmt_double(t, 1));
          x += box_w + box_gap;
          continue;
        }
        BoxStats b = box_stats(it->second);
        const char* color = series_color(kind);
        double cx = x + box_w / 2;
        // whisker stem and caps
        svg += "<line x1=\"" + num(cx) + "\" y1=\"" + num(f.py(b.lo_whisker)) + "\" x2=\"" +
               num(cx) + "\" y2=\"" + num(f.py(b.hi_whisker)) + "\" stroke=\"" + color +
               "\" stroke-width=\"1\"/>\n";
        for (double w : {b.lo_whisker, b.hi_whisker})
          svg += "<line x1=\"" + num(cx - box_w / 4) + "\" y1=\"" + num(f.py(w)) + "\" x2=\"" +
                 num(cx + box_w / 4) + "\" y2=\"" + num(f.py(w)) + "\" stroke=\"" + color +
                 "\" stroke-width=\"1\"/>\n";
        // interquartile box and median
        svg += "<rect x=\"" + num(x) + "\" y=\"" + num(f.py(b.q3)) + "\" width=\"" + num(box_w) +
               "\" height=\"" + num(std::max(f.py(b.q1) - f.py(b.q3), 0.5)) + "\" fill=\"" +
               color + "\" fill-opacity=\"0.35\" stroke=\"" + color + "\" stroke-width=\"1\"/>\n";
        svg += "<line x1=\"" + num(x) + "\" y1=\"" + num(f.py(b.median)) + "\" x2=\"" +
               num(x + box_w) + "\" y2=\"" + num(f.py(b.median)) + "\" stroke=\"" + color +
               "\" stroke-width=\"1.5\"/>\n";
        for (double o : b.outliers)
          svg += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(f.py(o)) +
                 "\" r=\"2\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1\"/>\n";
        x += box_w + box_gap;
      }
    }
    draw_text(svg, f.ox + kMarginL + kPlotW / 2, f.oy + kPanelH - 6, "temperature", 10, "middle");
  }
  draw_legend(svg, kFigPad + kPanelH + 8, spec.series);
  return finish_svg(std::move(svg), spec.output_path);
}

ArtifactEntry artifact_entry_for(const std::string& dir, const std::string& relative_path) {
  std::string content = read_file(dir + "/" + relative_path);
  return {relative_path, sha256_hex(content), content.size()};
}

void write_report_manifest(const std::string& path, std::vector<ArtifactEntry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const ArtifactEntry& a, const ArtifactEntry& b) { return a.path < b.path; });
  json arr = json::array();
  for (const auto& e : entries)
    arr.push_back(json{{"path", e.path}, {"sha256", e.sha256}, {"bytes", e.bytes}});
  write_file_atomic(path, arr.dump(2) + "\n");
}

}  // namespace ragbench
