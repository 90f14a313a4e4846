#include "mleval/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "mleval/error.hpp"

namespace mleval {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr Rgb kGreen{99, 190, 123};
constexpr Rgb kYellow{255, 235, 132};
constexpr Rgb kRed{248, 105, 107};

std::uint8_t lerp_channel(std::uint8_t a, std::uint8_t b, double s) {
  return static_cast<std::uint8_t>(std::lround(a + (static_cast<double>(b) - a) * s));
}

Rgb lerp(const Rgb& a, const Rgb& b, double s) {
  return {lerp_channel(a.r, b.r, s), lerp_channel(a.g, b.g, s), lerp_channel(a.b, b.b, s)};
}

std::string full_precision(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string three_decimals(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3f", value);
  return buf;
}

std::string quoted(const std::string& s) { return json(s).dump(); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string html_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* direction_name(Direction d) { return d == Direction::LowerBetter ? "lower" : "higher"; }

std::set<std::size_t> distinct_ks(const MetricReport& report) {
  std::set<std::size_t> ks;
  for (const auto& row : report.rows) ks.insert(row.k);
  return ks;
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << content;
  out.close();
  if (!out) throw Error(Errc::IoError, "failed writing " + path.string());
}

}  // namespace

std::string hex(const Rgb& color) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02X%02X%02X", color.r, color.g, color.b);
  return buf;
}

std::optional<std::size_t> MetricReport::column_index(const std::string& id) const {
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c].id == id) return c;
  }
  return std::nullopt;
}

Rgb gradient_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t <= 0.5 ? lerp(kGreen, kYellow, 2.0 * t) : lerp(kYellow, kRed, 2.0 * t - 1.0);
}

void rank_and_colorize(MetricReport& report) {
  if (report.rows.empty()) throw Error(Errc::EmptyReport, "nothing to rank");
  const auto ncols = report.columns.size();
  for (auto& row : report.rows) {
    if (row.cells.size() != ncols) throw Error(Errc::InvalidArgument, "row width differs from the column count");
    row.ranks.assign(ncols, std::nullopt);
    row.colors.assign(ncols, std::nullopt);
  }
  for (const auto k : distinct_ks(report)) {
    for (std::size_t c = 0; c < ncols; ++c) {
      const bool lower = report.columns[c].direction == Direction::LowerBetter;
      std::vector<double> values;
      for (const auto& row : report.rows) {
        if (row.k == k && row.cells[c]) values.push_back(*row.cells[c]);
      }
      if (values.empty()) continue;
      std::sort(values.begin(), values.end());
      values.erase(std::unique(values.begin(), values.end()), values.end());
      if (!lower) std::reverse(values.begin(), values.end());
      const double best = values.front();
      const double worst = values.back();
      for (auto& row : report.rows) {
        if (row.k != k || !row.cells[c]) continue;
        const double v = *row.cells[c];
        const auto pos = std::find(values.begin(), values.end(), v) - values.begin();
        row.ranks[c] = static_cast<std::size_t>(pos) + 1;
        row.colors[c] = gradient_color(best == worst ? 0.5 : std::abs(v - best) / std::abs(worst - best));
      }
    }
  }
}

ReportFormat parse_report_format(const std::string& name) {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json_lines" || name == "jsonl") return ReportFormat::JsonLines;
  if (name == "html") return ReportFormat::Html;
  throw Error(Errc::InvalidArgument, "unknown report format '" + name + "'");
}

std::string report_format_name(ReportFormat format) {
  switch (format) {
    case ReportFormat::Csv: return "csv";
    case ReportFormat::JsonLines: return "json_lines";
    case ReportFormat::Html: return "html";
  }
  return "?";
}

std::string to_csv(const MetricReport& report, std::size_t k) {
  std::ostringstream out;
  out << "api_id";
  for (const auto& col : report.columns) out << ',' << csv_field(col.id);
  out << ",images,unknown_object_rate,mean_labels_per_object\n";
  for (const auto& row : report.rows) {
    if (row.k != k) continue;
    out << csv_field(row.api_id);
    for (const auto& cell : row.cells) {
      out << ',';
      if (cell) out << three_decimals(*cell);
    }
    out << ',' << row.stats.images << ',' << three_decimals(row.stats.unknown_object_rate) << ','
        << three_decimals(row.stats.mean_labels_per_object) << '\n';
  }
  return out.str();
}

std::string to_json_lines(const MetricReport& report) {
  std::ostringstream out;
  for (const auto& row : report.rows) {
    out << "{\"api_id\":" << quoted(row.api_id) << ",\"k\":" << row.k << ",\"metrics\":[";
    for (std::size_t c = 0; c < report.columns.size(); ++c) {
      if (c) out << ',';
      out << "{\"id\":" << quoted(report.columns[c].id) << ",\"direction\":\""
          << direction_name(report.columns[c].direction) << "\",\"value\":";
      const auto& cell = row.cells.at(c);
      out << (cell && std::isfinite(*cell) ? full_precision(*cell) : "null");
      out << ",\"rank\":";
      if (c < row.ranks.size() && row.ranks[c]) {
        out << *row.ranks[c];
      } else {
        out << "null";
      }
      out << ",\"color\":";
      if (c < row.colors.size() && row.colors[c]) {
        out << quoted(hex(*row.colors[c]));
      } else {
        out << "null";
      }
      out << '}';
    }
    const auto& s = row.stats;
    out << "],\"stats\":{\"images\":" << s.images << ",\"objects\":" << s.objects
        << ",\"unknown_objects\":" << s.unknown_objects
        << ",\"unknown_object_rate\":" << full_precision(s.unknown_object_rate)
        << ",\"mean_labels_per_object\":" << full_precision(s.mean_labels_per_object)
        << ",\"wmd_skipped\":" << s.wmd_skipped << ",\"sentence_skipped\":" << s.sentence_skipped << "}}\n";
  }
  return out.str();
}

MetricReport parse_json_lines(const std::string& text) {
  MetricReport report;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto obj = json::parse(line);
      ReportRow row;
      row.api_id = obj.at("api_id").get<std::string>();
      row.k = obj.at("k").get<std::size_t>();
      const auto& metrics = obj.at("metrics");
      if (report.rows.empty()) {
        for (const auto& m : metrics) {
          report.columns.push_back({m.at("id").get<std::string>(), m.at("direction") == "lower"
                                                                        ? Direction::LowerBetter
                                                                        : Direction::HigherBetter});
        }
      }
      if (metrics.size() != report.columns.size()) {
        throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": column count differs");
      }
      for (std::size_t c = 0; c < metrics.size(); ++c) {
        const auto& m = metrics[c];
        if (m.at("id") != report.columns[c].id) {
          throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": column order differs");
        }
        const auto& v = m.at("value");
        row.cells.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
        const auto& r = m.at("rank");
        row.ranks.push_back(r.is_null() ? std::nullopt : std::optional<std::size_t>(r.get<std::size_t>()));
        const auto& col = m.at("color");
        if (col.is_null()) {
          row.colors.push_back(std::nullopt);
        } else {
          unsigned r8 = 0, g8 = 0, b8 = 0;
          std::sscanf(col.get<std::string>().c_str(), "#%02X%02X%02X", &r8, &g8, &b8);
          row.colors.push_back(Rgb{static_cast<std::uint8_t>(r8), static_cast<std::uint8_t>(g8),
                                   static_cast<std::uint8_t>(b8)});
        }
      }
      const auto& s = obj.at("stats");
      row.stats.images = s.at("images").get<std::size_t>();
      row.stats.objects = s.at("objects").get<std::size_t>();
      row.stats.unknown_objects = s.at("unknown_objects").get<std::size_t>();
      row.stats.unknown_object_rate = s.at("unknown_object_rate").get<double>();
      row.stats.mean_labels_per_object = s.at("mean_labels_per_object").get<double>();
      row.stats.wmd_skipped = s.at("wmd_skipped").get<std::size_t>();
      row.stats.sentence_skipped = s.at("sentence_skipped").get<std::size_t>();
      report.rows.push_back(std::move(row));
    } catch (const json::exception& e) {
      throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return report;
}

std::string to_html(const MetricReport& report) {
  std::ostringstream out;
  out << "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>Label evaluation report</title>\n"
      << "</head>\n<body style=\"font-family:sans-serif\">\n";
  for (const auto k : distinct_ks(report)) {
    out << "<h2>Top " << k << "</h2>\n"
        << "<table style=\"border-collapse:collapse\">\n<tr><th style=\"padding:4px 8px\">API</th>";
    for (const auto& col : report.columns) {
      out << "<th style=\"padding:4px 8px\">" << html_escape(col.id) << "</th>";
    }
    out << "</tr>\n";
    for (const auto& row : report.rows) {
      if (row.k != k) continue;
      out << "<tr><td style=\"padding:4px 8px\">" << html_escape(row.api_id) << "</td>";
      for (std::size_t c = 0; c < report.columns.size(); ++c) {
        const auto& cell = row.cells[c];
        const auto color = c < row.colors.size() && row.colors[c] ? hex(*row.colors[c]) : std::string("#DDDDDD");
        out << "<td class=\"metric\" style=\"padding:4px 8px;text-align:right;background-color:" << color << "\"";
        if (c < row.ranks.size() && row.ranks[c]) out << " title=\"rank " << *row.ranks[c] << "\"";
        out << '>' << (cell ? three_decimals(*cell) : std::string("n/a")) << "</td>";
      }
      out << "</tr>\n";
    }
    out << "</table>\n";
  }
  out << "</body>\n</html>\n";
  return out.str();
}

std::string provenance_json(const MetricReport& report) {
  json columns = json::array();
  for (const auto& col : report.columns) columns.push_back({{"id", col.id}, {"direction", direction_name(col.direction)}});
  const json doc{
      {"columns", columns},
      {"config", report.config},
      {"inputs", report.input_digests},
      {"skips",
       {{"unusable_truth", report.skips.unusable_truth},
        {"predictions_without_truth", report.skips.predictions_without_truth},
        {"truth_without_predictions", report.skips.truth_without_predictions}}},
  };
  return doc.dump(2) + "\n";
}

std::vector<fs::path> emit(const MetricReport& report, ReportFormat format, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<fs::path> written;
  switch (format) {
    case ReportFormat::Csv:
      for (const auto k : distinct_ks(report)) {
        written.push_back(out_dir / ("report_k" + std::to_string(k) + ".csv"));
        write_text(written.back(), to_csv(report, k));
      }
      break;
    case ReportFormat::JsonLines:
      written.push_back(out_dir / "report.jsonl");
      write_text(written.back(), to_json_lines(report));
      break;
    case ReportFormat::Html:
      written.push_back(out_dir / "report.html");
      write_text(written.back(), to_html(report));
      break;
  }
  written.push_back(out_dir / "provenance.json");
  write_text(written.back(), provenance_json(report));
  return written;
}

}  // namespace mleval
