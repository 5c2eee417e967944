#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "virialab/analysis.hpp"
#include "virialab/errors.hpp"
#include "virialab/pde.hpp"
#include "virialab/virial.hpp"

namespace virialab {

/// Shortest round-trip decimal form, '.' separator regardless of locale.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) throw IoError("not a number: '" + s + "'");
  return v;
}

/// Minimal CSV writer: comma separated, '\n' line ends, fields quoted only
/// when they contain a comma, quote or newline.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : path_(path), out_(path) {
    if (!out_) throw IoError("cannot open " + path + " for writing");
  }

  CsvWriter& field(const std::string& s) {
    if (!first_) out_ << ',';
    first_ = false;
    if (s.find_first_of(",\"\n\r") == std::string::npos) {
      out_ << s;
    } else {
      out_ << '"';
      for (char c : s) {
        if (c == '"') out_ << '"';
        out_ << c;
      }
      out_ << '"';
    }
    return *this;
  }
  CsvWriter& field(double v) { return field(format_double(v)); }
  CsvWriter& field(std::uint64_t v) { return field(std::to_string(v)); }
  CsvWriter& empty() { return field(std::string()); }

  void end_row() {
    out_ << '\n';
    first_ = true;
  }

  void row(const std::vector<std::string>& fields) {
    for (const auto& f : fields) field(f);
    end_row();
  }

  void close() {
    out_.close();
    if (out_.fail()) throw IoError("error writing " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
  bool first_ = true;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

inline const std::vector<std::string>& curve_csv_header() {
  static const std::vector<std::string> header{"rho_eff", "psi_hat", "p_hat", "std_error", "n_samples", "clamp_rate"};
  return header;
}

inline void write_curve_csv(const PressureCurve& curve, const std::string& path) {
  CsvWriter w(path);
  w.row(curve_csv_header());
  for (const auto& pt : curve.points) {
    w.field(pt.rho_eff).field(pt.psi_hat).field(pt.p_hat).field(pt.std_error).field(pt.n_samples).field(pt.clamp_rate);
    w.end_row();
  }
  w.close();
}

/// Reads the (rho_eff, p_hat) columns of a curve.csv into a tabulated law.
inline TabulatedLaw read_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read curve file " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  const auto header = split_csv_line(line);
  std::optional<std::size_t> rho_col, p_col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "rho_eff" || header[i] == "rho") rho_col = i;
    if (header[i] == "p_hat") p_col = i;
  }
  if (!rho_col || !p_col) throw IoError(path + ": header lacks rho_eff/p_hat columns");
  std::vector<double> rho, p;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() <= std::max(*rho_col, *p_col)) throw IoError(path + ": short row at line " + std::to_string(lineno));
    rho.push_back(parse_double(f[*rho_col]));
    p.push_back(parse_double(f[*p_col]));
  }
  return TabulatedLaw(std::move(rho), std::move(p));
}

inline const std::vector<std::string>& plot_csv_header() {
  static const std::vector<std::string> header{"rho",        "p_hat",      "log_rho",
                                               "log_p",      "prediction", "rescaled_prediction"};
  return header;
}

namespace detail {

inline void plot_row(CsvWriter& w, double rho, double p, std::optional<double> pred, std::optional<double> rescaled,
                     std::vector<std::string>& warnings) {
  w.field(rho).field(p);
  if (rho > 0.0 && p > 0.0) {
    w.field(std::log(rho)).field(std::log(p));
  } else {
    w.empty().empty();
    warnings.push_back("rho=" + format_double(rho) + ": p_hat=" + format_double(p) +
                       " is nonpositive; log columns left empty");
  }
  if (pred) w.field(*pred); else w.empty();
  if (rescaled) w.field(*rescaled); else w.empty();
  w.end_row();
}

}  // namespace detail

/// Plot-ready CSV for a curve; prediction columns are empty. Returns the
/// warnings raised (nonpositive pressures).
inline std::vector<std::string> emit_plot_data(const PressureCurve& curve, const std::string& path) {
  std::vector<std::string> warnings;
  CsvWriter w(path);
  w.row(plot_csv_header());
  for (const auto& pt : curve.points) detail::plot_row(w, pt.rho_eff, pt.p_hat, std::nullopt, std::nullopt, warnings);
  w.close();
  return warnings;
}

/// Plot-ready CSV for a comparison: rescaled_prediction is c * prediction.
inline std::vector<std::string> emit_plot_data(const ComparisonReport& report, const std::string& path) {
  std::vector<std::string> warnings;
  CsvWriter w(path);
  w.row(plot_csv_header());
  for (const auto& row : report.rows)
    detail::plot_row(w, row.rho, row.p_hat, row.prediction, row.rescaled_prediction, warnings);
  w.close();
  return warnings;
}

/// One row per (snapshot, cell): t, cell centre x, rho.
inline void write_snapshots_csv(const PdeSolution& sol, const std::string& path) {
  CsvWriter w(path);
  w.row({"t", "x", "rho"});
  for (const auto& snap : sol.snapshots) {
    for (std::size_t i = 0; i < snap.rho.size(); ++i) {
      w.field(snap.t).field((static_cast<double>(i) + 0.5) * sol.dx).field(snap.rho[i]);
      w.end_row();
    }
  }
  w.close();
}

}  // namespace virialab
