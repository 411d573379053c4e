#include "hnnmc/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace hnnmc {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::string& dir, const std::string& name) {
  fs::path p = fs::path(dir) / name;
  std::ofstream os(p);
  if (!os) throw std::runtime_error("emit_report: cannot write " + p.string());
  return os;
}

template <typename T>
std::string join_levels(const std::vector<SubsetLevel>& levels, T getter) {
  std::string s;
  for (size_t i = 0; i < levels.size(); ++i) {
    if (i) s += ";";
    s += format_double(getter(levels[i]));
  }
  return s;
}

}  // namespace

void write_level_scatter_svg(const std::vector<SubsetLevel>& levels, const std::string& path,
                             const std::string& title) {
  static const char* kPalette[] = {"#4477aa", "#ee6677", "#228833", "#ccbb44",
                                   "#66ccee", "#aa3377", "#bbbbbb", "#222255"};
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& lvl : levels)
    for (const auto& s : lvl.samples) {
      if (s.size() < 2) return;  // nothing to plot for 1-D problems
      xmin = std::min(xmin, s[0]);
      xmax = std::max(xmax, s[0]);
      ymin = std::min(ymin, s[1]);
      ymax = std::max(ymax, s[1]);
    }
  if (xmin > xmax) return;  // no stored samples
  const double W = 640, H = 640, M = 60;
  auto sx = [&](double x) { return M + (x - xmin) / (xmax - xmin + 1e-300) * (W - 2 * M); };
  auto sy = [&](double y) { return H - M - (y - ymin) / (ymax - ymin + 1e-300) * (H - 2 * M); };

  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_level_scatter_svg: cannot write " + path);
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
  os << "<rect width='100%' height='100%' fill='white'/>\n";
  os << "<text x='" << W / 2 << "' y='24' text-anchor='middle' font-size='15'>" << title
     << "</text>\n";
  char buf[160];
  for (size_t l = 0; l < levels.size(); ++l) {
    const char* color = kPalette[l % 8];
    for (const auto& s : levels[l].samples) {
      std::snprintf(buf, sizeof buf, "<circle cx='%.2f' cy='%.2f' r='1.6' fill='%s'/>\n",
                    sx(s[0]), sy(s[1]), color);
      os << buf;
    }
    std::snprintf(buf, sizeof buf,
                  "<text x='%.0f' y='%.0f' font-size='12' fill='%s'>level %zu</text>\n", W - M + 4,
                  M + 16.0 * l, color, l);
    os << buf;
  }
  std::snprintf(buf, sizeof buf,
                "<text x='%.0f' y='%.0f' font-size='11'>x1: [%.4g, %.4g]  x2: [%.4g, %.4g]"
                "</text>\n",
                M, H - 18.0, xmin, xmax, ymin, ymax);
  os << buf;
  os << "</svg>\n";
}

void emit_report(const RunReport& report, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("emit_report: cannot create " + dir + ": " + ec.message());

  {
    auto os = open_out(dir, "trials.csv");
    os << "trial,seed,pf,beta,censored,n_levels,total_model_evals,limit_state_evals,"
          "exact_grad_initial,exact_grad_subset,exact_grad_training,hnn_grad,"
          "level_thresholds,level_acc_hmc,level_acc_indicator,level_fallback_steps\n";
    for (size_t i = 0; i < report.stats.trials.size(); ++i) {
      const ReliabilityResult& r = report.stats.trials[i];
      os << i << "," << r.seed << "," << format_double(r.pf) << "," << format_double(r.beta) << ","
         << (r.censored ? 1 : 0) << "," << r.levels.size() << "," << r.total_model_evals << ","
         << r.ledger.limit_state_evals << "," << r.ledger.exact_grad_initial << ","
         << r.ledger.exact_grad_subset << "," << r.ledger.exact_grad_training << ","
         << r.ledger.hnn_grad << ",\""
         << join_levels(r.levels, [](const SubsetLevel& l) { return l.threshold; }) << "\",\""
         << join_levels(r.levels, [](const SubsetLevel& l) { return l.acceptance_rate_hmc; })
         << "\",\""
         << join_levels(r.levels, [](const SubsetLevel& l) { return l.acceptance_rate_indicator; })
         << "\",\""
         << join_levels(r.levels,
                        [](const SubsetLevel& l) { return static_cast<double>(l.fallback_steps); })
         << "\"\n";
    }
  }
  {
    auto os = open_out(dir, "summary.csv");
    os << "key,value\n";
    os << "experiment," << report.experiment_id << "\n";
    os << "n_trials," << report.stats.trials.size() << "\n";
    os << "n_censored," << report.stats.n_censored << "\n";
    if (!report.stats.trials.empty() &&
        report.stats.n_censored < static_cast<int>(report.stats.trials.size())) {
      os << "mean_beta," << format_double(report.stats.mean_beta) << "\n";
      os << "var_beta," << format_double(report.stats.var_beta) << "\n";
      os << "cv_beta," << format_double(report.stats.cv_beta) << "\n";
    }
    for (const auto& [k, v] : report.metrics) os << k << "," << format_double(v) << "\n";
  }
  {
    auto os = open_out(dir, "ledger.csv");
    os << "phase,evaluations\n";
    EvalLedger total = report.training_ledger;
    for (const auto& r : report.stats.trials) total += r.ledger;
    os << "training_exact_gradients," << total.exact_grad_training << "\n";
    os << "initial_set_exact_gradients," << total.exact_grad_initial << "\n";
    os << "subset_exact_gradients," << total.exact_grad_subset << "\n";
    os << "hnn_gradient_predictions," << total.hnn_grad << "\n";
    os << "limit_state_evaluations," << total.limit_state_evals << "\n";
    os << "model_runs," << total.model_runs << "\n";
  }
  {
    auto os = open_out(dir, "timings.csv");
    os << "key,seconds\n";
    os << "training," << format_double(report.train_seconds) << "\n";
    os << "sampling," << format_double(report.sampling_seconds) << "\n";
  }
  if (!report.config_echo.empty()) {
    auto os = open_out(dir, "config.json");
    os << report.config_echo;
  }
  for (const auto& r : report.stats.trials) {
    if (!r.levels.empty() && !r.levels.front().samples.empty() &&
        r.levels.front().samples.front().size() == 2) {
      write_level_scatter_svg(r.levels, (fs::path(dir) / "levels.svg").string(),
                              report.experiment_id);
      break;  // one representative trial
    }
  }
}

TrialsAggregate aggregate_trials_csv(const std::string& trials_csv_path) {
  std::ifstream is(trials_csv_path);
  if (!is) throw std::runtime_error("aggregate_trials_csv: cannot open " + trials_csv_path);
  std::string header;
  std::getline(is, header);
  TrialsAggregate agg;
  std::vector<double> betas;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    bool in_quote = false;
    std::string cur;
    for (char ch : line) {
      if (ch == '"') in_quote = !in_quote;
      else if (ch == ',' && !in_quote) {
        fields.push_back(cur);
        cur.clear();
      } else cur += ch;
    }
    fields.push_back(cur);
    if (fields.size() < 6) throw std::runtime_error("aggregate_trials_csv: malformed row");
    agg.n_trials++;
    if (fields[4] == "1") {
      agg.n_censored++;
      continue;
    }
    betas.push_back(std::stod(fields[3]));
  }
  if (!betas.empty()) {
    double s = 0.0;
    for (double b : betas) s += b;
    agg.mean_beta = s / betas.size();
    double ss = 0.0;
    for (double b : betas) ss += (b - agg.mean_beta) * (b - agg.mean_beta);
    agg.var_beta = betas.size() > 1 ? ss / (betas.size() - 1) : 0.0;
    agg.cv_beta = agg.mean_beta != 0.0 ? std::sqrt(agg.var_beta) / agg.mean_beta : 0.0;
  }
  return agg;
}

}  // namespace hnnmc
