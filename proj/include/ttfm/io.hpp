#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ttfm/forecast.hpp"
#include "ttfm/series.hpp"
#include "ttfm/simulate.hpp"

#include <json.hpp>

namespace ttfm {

/// Parse failure with the offending 1-based line number when known.
class parse_error : public std::runtime_error {
 public:
  parse_error(const std::string& path, long line, const std::string& message)
      : std::runtime_error(path + (line > 0 ? ":" + std::to_string(line) : "") +
                           ": " + message) {}
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline long parse_index(const std::string& s, const std::string& path,
                        long line, const char* what) {
  long value = 0;
  const auto* begin = s.data();
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || value < 1)
    throw parse_error(path, line,
                      std::string("expected a positive integer for '") + what +
                          "', got '" + s + "'");
  return value;
}

inline double parse_value(const std::string& s, const std::string& path,
                          long line) {
  double value = 0.0;
  const auto* begin = s.data();
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value))
    throw parse_error(path, line,
                      "expected a finite number for 'value', got '" + s + "'");
  return value;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Read a series from long-format CSV with mandatory header `t,row,col,value`
/// and 1-based contiguous indices covering the full n x p1 x p2 grid.
/// Duplicate or missing cells, malformed rows, and non-numeric values are
/// reported with line numbers.
inline MatrixSeries ingest_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error(path, 0, "cannot open file");

  std::string line;
  if (!std::getline(in, line)) throw parse_error(path, 1, "empty file");
  {
    auto fields = detail::split_csv(line);
    if (fields != std::vector<std::string>{"t", "row", "col", "value"})
      throw parse_error(path, 1, "header must be exactly 't,row,col,value'");
  }

  struct Entry {
    long t, row, col;
    double value;
    long line;
  };
  std::vector<Entry> entries;
  long t_max = 0, row_max = 0, col_max = 0;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_csv(line);
    if (fields.size() != 4)
      throw parse_error(path, line_no,
                        "expected 4 comma-separated fields, got " +
                            std::to_string(fields.size()));
    Entry e;
    e.t = detail::parse_index(fields[0], path, line_no, "t");
    e.row = detail::parse_index(fields[1], path, line_no, "row");
    e.col = detail::parse_index(fields[2], path, line_no, "col");
    e.value = detail::parse_value(fields[3], path, line_no);
    e.line = line_no;
    t_max = std::max(t_max, e.t);
    row_max = std::max(row_max, e.row);
    col_max = std::max(col_max, e.col);
    entries.push_back(e);
  }
  if (entries.empty()) throw parse_error(path, line_no, "no data rows");
  if (t_max < 2) throw parse_error(path, 0, "need at least n = 2 time points");

  const long total = t_max * row_max * col_max;
  if (total > (1L << 31))
    throw parse_error(path, 0, "grid implied by the index maxima is too large");
  if (static_cast<long>(entries.size()) < total && total > 10'000'000)
    throw parse_error(path, 0,
                      "incomplete grid: " +
                          std::to_string(total -
                                         static_cast<long>(entries.size())) +
                          " missing cells");
  Eigen::MatrixXd flat = Eigen::MatrixXd::Zero(row_max * col_max, t_max);
  std::vector<long> seen_line(static_cast<std::size_t>(total), 0);
  for (const auto& e : entries) {
    const long key =
        (e.t - 1) * row_max * col_max + (e.col - 1) * row_max + (e.row - 1);
    auto& mark = seen_line[static_cast<std::size_t>(key)];
    if (mark != 0)
      throw parse_error(path, e.line,
                        "duplicate entry for (t=" + std::to_string(e.t) +
                            ",row=" + std::to_string(e.row) +
                            ",col=" + std::to_string(e.col) +
                            "), first seen at line " + std::to_string(mark));
    mark = e.line;
    flat((e.col - 1) * row_max + (e.row - 1), e.t - 1) = e.value;
  }
  if (static_cast<long>(entries.size()) != total) {
    std::string missing;
    int listed = 0;
    for (long key = 0; key < total && listed < 20; ++key) {
      if (seen_line[static_cast<std::size_t>(key)] != 0) continue;
      const long t = key / (row_max * col_max);
      const long rem = key % (row_max * col_max);
      const long col = rem / row_max, row = rem % row_max;
      missing += " (" + std::to_string(t + 1) + "," + std::to_string(row + 1) +
                 "," + std::to_string(col + 1) + ")";
      ++listed;
    }
    throw parse_error(path, 0,
                      "incomplete grid: " +
                          std::to_string(total - static_cast<long>(
                                                     entries.size())) +
                          " missing cells, first" + missing);
  }
  return MatrixSeries::from_flat(std::move(flat), row_max, col_max, false);
}

/// Write a matrix sequence in the same long format (1-based indices,
/// 17 significant digits).
inline void write_matrix_list_csv(const std::string& path,
                                  const std::vector<Eigen::MatrixXd>& seq) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t,row,col,value\n";
  for (std::size_t t = 0; t < seq.size(); ++t)
    for (Eigen::Index j = 0; j < seq[t].cols(); ++j)
      for (Eigen::Index i = 0; i < seq[t].rows(); ++i)
        out << (t + 1) << ',' << (i + 1) << ',' << (j + 1) << ','
            << detail::format_double(seq[t](i, j)) << '\n';
}

inline void write_series_csv(const std::string& path, const MatrixSeries& s) {
  std::vector<Eigen::MatrixXd> seq(static_cast<std::size_t>(s.n()));
  for (Eigen::Index t = 0; t < s.n(); ++t)
    seq[static_cast<std::size_t>(t)] = s.matrix(t);
  write_matrix_list_csv(path, seq);
}

// ---- JSON helpers ----------------------------------------------------------

inline nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json vector_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline nlohmann::json trace_json(const OrderTrace& trace) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : trace.steps) {
    steps.push_back({{"phase", phase_name(s.phase)},
                     {"row_start", s.row_start},
                     {"col_start", s.col_start},
                     {"rows", s.rows},
                     {"cols", s.cols},
                     {"statistic", s.statistic},
                     {"threshold", s.threshold},
                     {"rejected", s.rejected}});
  }
  return steps;
}

/// Everything a fit reports besides the factor series itself.
inline nlohmann::json fit_report_json(const FactorFit& f) {
  nlohmann::json j;
  j["orders"] = {{"r1", f.r1}, {"r2", f.r2}};
  j["spikes"] = {{"k1", f.denoiser.k_front},
                 {"k2", f.denoiser.k_back},
                 {"k1_band", {f.denoiser.k_front, f.denoiser.k_front_upper}},
                 {"k2_band", {f.denoiser.k_back, f.denoiser.k_back_upper}},
                 {"warned", f.denoiser.k_warned},
                 {"small_dim", f.denoiser.small_dim}};
  j["alignment"] = {{"smin_front", f.denoiser.smin_front},
                    {"smin_back", f.denoiser.smin_back}};
  j["spectra"] = {{"dyn_front", vector_json(f.loadings.front_eigs)},
                  {"dyn_back", vector_json(f.loadings.back_eigs)},
                  {"noise_front", vector_json(f.denoiser.noise_front_eigs)},
                  {"noise_back", vector_json(f.denoiser.noise_back_eigs)}};
  j["loadings"] = {{"front", matrix_json(f.loadings.front)},
                   {"back", matrix_json(f.loadings.back)}};
  j["order_trace"] = trace_json(f.order_trace);
  return j;
}

inline nlohmann::json mc_row_json(const McMethodRow& row) {
  return {{"method", row.method},
          {"reps", row.reps},
          {"failures", row.failures},
          {"prob_correct", row.prob_correct},
          {"modal_r1", row.modal_r1},
          {"modal_r2", row.modal_r2},
          {"dbar_front_mean", row.dbar_front_mean},
          {"dbar_front_sd", row.dbar_front_sd},
          {"dbar_back_mean", row.dbar_back_mean},
          {"dbar_back_sd", row.dbar_back_sd},
          {"factor_err_mean", row.factor_err_mean},
          {"factor_err_sd", row.factor_err_sd}};
}

inline nlohmann::json sim_config_json(const SimConfig& c) {
  return {{"p1", c.p1},           {"p2", c.p2},
          {"r1", c.r1},           {"r2", c.r2},
          {"k1", c.k1},           {"k2", c.k2},
          {"delta1", c.delta1},   {"delta2", c.delta2},
          {"n", c.n},             {"seed", c.seed},
          {"reps", c.reps},       {"burn_in", c.burn_in}};
}

inline void write_mc_csv(const std::string& path, const McReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "delta1,delta2,p1,p2,r1,r2,k1,k2,n,reps,method,failures,"
         "prob_correct,modal_r1,modal_r2,dbar_front_mean,dbar_front_sd,"
         "dbar_back_mean,dbar_back_sd,factor_err_mean,factor_err_sd\n";
  for (const auto& cell : report.cells) {
    for (const McMethodRow* row : {&cell.gt, &cell.wlc}) {
      const auto& c = cell.config;
      out << detail::format_double(c.delta1) << ','
          << detail::format_double(c.delta2) << ',' << c.p1 << ',' << c.p2
          << ',' << c.r1 << ',' << c.r2 << ',' << c.k1 << ',' << c.k2 << ','
          << c.n << ',' << row->reps << ',' << row->method << ','
          << row->failures << ',' << detail::format_double(row->prob_correct)
          << ',' << row->modal_r1 << ',' << row->modal_r2 << ','
          << detail::format_double(row->dbar_front_mean) << ','
          << detail::format_double(row->dbar_front_sd) << ','
          << detail::format_double(row->dbar_back_mean) << ','
          << detail::format_double(row->dbar_back_sd) << ','
          << detail::format_double(row->factor_err_mean) << ','
          << detail::format_double(row->factor_err_sd) << '\n';
    }
  }
}

inline void write_fe_csv(const std::string& path,
                         const std::vector<FeRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "method,h,fe_f,fe_2,origins,excluded\n";
  for (const auto& r : rows)
    out << method_name(r.method) << ',' << r.h << ','
        << detail::format_double(r.fe_frobenius) << ','
        << detail::format_double(r.fe_spectral) << ',' << r.origins_used << ','
        << r.excluded << '\n';
}

}  // namespace ttfm
