#include <cstdio>
#include <fstream>

#include "stylemimic/error.hpp"
#include "stylemimic/orchestrator.hpp"

namespace stylemimic {

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// RFC 4180 quoting for identifiers that may hold commas or quotes.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string header(const EvaluationReport& report) { return "# manifest_digest: " + report.manifest_digest + "\n"; }

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

}  // namespace

std::string metrics_csv(const EvaluationReport& report) {
  std::string out = header(report);
  out += "dataset,model_id,condition,metric,value\n";
  for (const auto& c : report.cells) {
    const std::string prefix = csv_field(c.dataset) + "," + csv_field(c.model_id) + "," + csv_field(c.condition) + ",";
    const std::pair<const char*, double> rows[] = {
        {"av_accuracy", c.av_accuracy},     {"aa_top5_accuracy", c.aa_top5_accuracy},
        {"style_match_accuracy", c.style_match_accuracy}, {"percent_human", c.percent_human},
        {"meteor", c.meteor},               {"rouge_l", c.rouge_l},
    };
    for (const auto& [name, value] : rows) out += prefix + name + "," + num(value) + "\n";
    if (c.embedding_cos) out += prefix + "embedding_cos," + num(*c.embedding_cos) + "\n";
  }
  return out;
}

std::string summary_table(const EvaluationReport& report) {
  std::string out = header(report);
  out += "\n";
  out += pad("dataset", 14) + pad("model", 22) + pad("condition", 14) + pad("n", 6) + pad("AV", 8) + pad("AA@5", 8) +
         pad("Style", 8) + pad("%Human", 8) + pad("METEOR", 8) + pad("ROUGE-L", 8) + "Embed\n";
  for (const auto& c : report.cells) {
    out += pad(c.dataset, 14) + pad(c.model_id, 22) + pad(c.condition, 14) + pad(std::to_string(c.n_records), 6) +
           pad(fixed(c.av_accuracy, 3), 8) + pad(fixed(c.aa_top5_accuracy, 3), 8) +
           pad(fixed(c.style_match_accuracy, 3), 8) + pad(fixed(c.percent_human, 1), 8) + pad(fixed(c.meteor, 3), 8) +
           pad(fixed(c.rouge_l, 3), 8) + (c.embedding_cos ? fixed(*c.embedding_cos, 3) : std::string("-")) + "\n";
  }
  if (!report.comparisons.empty()) {
    out += "\nPaired Wilcoxon signed-rank on per-author average Mahalanobis distance\n";
    for (const auto& cmp : report.comparisons) {
      out += "  " + cmp.dataset + " / " + cmp.model_id + ": " + cmp.condition_a + " vs " + cmp.condition_b + ": ";
      if (cmp.test) {
        out += "W = " + num(cmp.test->w_statistic) + ", n = " + std::to_string(cmp.test->n_effective) +
               ", p = " + num(cmp.test->p_value) + " (" + std::string(to_string(cmp.test->method)) + ")\n";
      } else {
        out += cmp.note + "\n";
      }
    }
  }
  return out;
}

std::string author_distances_csv(const EvaluationReport& report) {
  std::string out = header(report);
  out += "dataset,model_id,condition,author_id,avg_mahalanobis\n";
  for (const auto& c : report.cells) {
    for (const auto& [author, d] : c.author_distances) {
      out += csv_field(c.dataset) + "," + csv_field(c.model_id) + "," + csv_field(c.condition) + "," +
             csv_field(author) + "," + num(d) + "\n";
    }
  }
  return out;
}

std::string comparisons_csv(const EvaluationReport& report) {
  std::string out = header(report);
  out += "dataset,model_id,condition_a,condition_b,w_statistic,n_effective,p_value,method,note\n";
  for (const auto& c : report.comparisons) {
    out += csv_field(c.dataset) + "," + csv_field(c.model_id) + "," + csv_field(c.condition_a) + "," +
           csv_field(c.condition_b) + ",";
    if (c.test) {
      out += num(c.test->w_statistic) + "," + std::to_string(c.test->n_effective) + "," + num(c.test->p_value) + "," +
             std::string(to_string(c.test->method));
    } else {
      out += ",,,";
    }
    out += "," + csv_field(c.note) + "\n";
  }
  return out;
}

ReportFiles emit_report(const EvaluationReport& report, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + out_dir.string() + ": " + ec.message());
  ReportFiles files{out_dir / "metrics.csv", out_dir / "summary.txt", out_dir / "author_distances.csv",
                    out_dir / "comparisons.csv"};
  write_file(files.metrics_csv, metrics_csv(report));
  write_file(files.summary_txt, summary_table(report));
  write_file(files.author_csv, author_distances_csv(report));
  write_file(files.comparisons_csv, comparisons_csv(report));
  return files;
}

}  // namespace stylemimic
