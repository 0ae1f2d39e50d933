#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "wbrel/curves.hpp"
#include "wbrel/errors.hpp"
#include "wbrel/mcem.hpp"
#include "wbrel/rng.hpp"
#include "wbrel/sampler.hpp"
#include "wbrel/simlab.hpp"
#include "wbrel/sysmodel.hpp"

namespace wbrel::io {

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string hex_digest(std::string_view content) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(content)));
  return std::string("fnv1a64:") + buf;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << content;
}

// ---------------------------------------------------------------- generic CSV

struct CsvRow {
  std::size_t line;
  std::vector<std::string> fields;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<CsvRow> rows;
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

/// Reads a headed CSV; blank lines are skipped; every row must match the header width.
inline CsvTable read_csv(std::istream& in, const std::string& source = "input") {
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size())
      throw DataError(source + " line " + std::to_string(lineno) + ": expected " +
                      std::to_string(table.header.size()) + " fields, got " + std::to_string(fields.size()));
    table.rows.push_back({lineno, std::move(fields)});
  }
  if (!have_header) throw DataError(source + ": missing header line");
  return table;
}

inline void require_header(const CsvTable& t, const std::vector<std::string>& expected, const std::string& source) {
  if (t.header != expected) {
    std::string want;
    for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
    throw DataError(source + " line 1: expected header '" + want + "'");
  }
}

inline double parse_double(const std::string& s, std::size_t line, const std::string& source) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw DataError(source + " line " + std::to_string(line) + ": '" + s + "' is not a number");
  return v;
}

inline long long parse_int(const std::string& s, std::size_t line, const std::string& source) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw DataError(source + " line " + std::to_string(line) + ": '" + s + "' is not an integer");
  return v;
}

// ---------------------------------------------------------------- lifetime data

/// What a data file holds: masked system records or one component's records.
enum class DataLayout { system, component };

inline DataLayout detect_layout(const CsvTable& t, const std::string& source) {
  if (t.header == std::vector<std::string>{"time", "cause"}) return DataLayout::system;
  if (t.header == std::vector<std::string>{"time", "event"}) return DataLayout::component;
  throw DataError(source + " line 1: header must be 'time,cause' or 'time,event'");
}

inline double parse_time(const CsvRow& r, const std::string& source) {
  const double t = parse_double(r.fields[0], r.line, source);
  if (!(t > 0.0) || !std::isfinite(t))
    throw DataError(source + " line " + std::to_string(r.line) + ": time must be positive and finite");
  return t;
}

/// `k` = 0 takes the component count from the largest cause seen.
inline SystemSample parse_system_table(const CsvTable& t, SystemKind kind, int k, const std::string& source) {
  require_header(t, {"time", "cause"}, source);
  SystemSample s;
  s.kind = kind;
  int max_cause = 0;
  for (const auto& r : t.rows) {
    const double time = parse_time(r, source);
    const long long cause = parse_int(r.fields[1], r.line, source);
    if (cause < 1 || (k > 0 && cause > k))
      throw DataError(source + " line " + std::to_string(r.line) + ": cause " + std::to_string(cause) +
                      " outside 1.." + (k > 0 ? std::to_string(k) : std::string("k")));
    max_cause = std::max(max_cause, static_cast<int>(cause));
    s.records.push_back({time, static_cast<int>(cause)});
  }
  if (s.records.empty()) throw DataError(source + ": no data rows");
  s.k = k > 0 ? k : max_cause;
  return s;
}

inline ComponentSample parse_component_table(const CsvTable& t, Side side, const std::string& source) {
  require_header(t, {"time", "event"}, source);
  ComponentSample c;
  c.side = side;
  for (const auto& r : t.rows) {
    const double time = parse_time(r, source);
    const long long ev = parse_int(r.fields[1], r.line, source);
    if (ev != 0 && ev != 1)
      throw DataError(source + " line " + std::to_string(r.line) + ": event must be 1 (exact) or 0 (censored)");
    c.records.push_back({time, ev == 1 ? Status::exact : Status::censored});
  }
  if (c.records.empty()) throw DataError(source + ": no data rows");
  return c;
}

inline std::string system_csv(const SystemSample& s) {
  std::string out = "time,cause\n";
  for (const auto& r : s.records) out += format_double(r.t) + "," + std::to_string(r.cause) + "\n";
  return out;
}

inline std::string component_csv(const ComponentSample& c) {
  std::string out = "time,event\n";
  for (const auto& r : c.records) out += format_double(r.t) + (r.status == Status::exact ? ",1\n" : ",0\n");
  return out;
}

// ---------------------------------------------------------------- draws

inline std::string draws_csv(int component, const PosteriorDraws& d) {
  std::string out = "component,draw_index,beta,eta\n";
  for (std::size_t i = 0; i < d.size(); ++i)
    out += std::to_string(component) + "," + std::to_string(i + 1) + "," + format_double(d.draws[i].beta) + "," +
           format_double(d.draws[i].eta) + "\n";
  return out;
}

inline PosteriorDraws parse_draws(std::istream& in, const std::string& source, int* component = nullptr) {
  const auto t = read_csv(in, source);
  require_header(t, {"component", "draw_index", "beta", "eta"}, source);
  PosteriorDraws d;
  for (const auto& r : t.rows) {
    if (component) *component = static_cast<int>(parse_int(r.fields[0], r.line, source));
    const ComponentParams p{parse_double(r.fields[2], r.line, source), parse_double(r.fields[3], r.line, source)};
    if (!p.valid()) throw DataError(source + " line " + std::to_string(r.line) + ": draw must be positive");
    d.draws.push_back(p);
  }
  if (d.draws.empty()) throw DataError(source + ": no draws");
  return d;
}

// ---------------------------------------------------------------- bands and traces

inline std::string band_csv(const ReliabilityBand& b) {
  std::string out = "t,mean,lower,upper\n";
  for (std::size_t i = 0; i < b.t.size(); ++i)
    out += format_double(b.t[i]) + "," + format_double(b.mean[i]) + "," + format_double(b.lower[i]) + "," +
           format_double(b.upper[i]) + "\n";
  return out;
}

inline ReliabilityBand parse_band(std::istream& in, const std::string& source) {
  const auto t = read_csv(in, source);
  require_header(t, {"t", "mean", "lower", "upper"}, source);
  ReliabilityBand b;
  for (const auto& r : t.rows) {
    b.t.push_back(parse_double(r.fields[0], r.line, source));
    b.mean.push_back(parse_double(r.fields[1], r.line, source));
    b.lower.push_back(parse_double(r.fields[2], r.line, source));
    b.upper.push_back(parse_double(r.fields[3], r.line, source));
  }
  return b;
}

struct TraceRow {
  std::size_t iteration;
  int component;
  double m_beta;
  double m_eta;
  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

inline std::string trace_csv(const std::vector<ComponentFit>& fits) {
  std::string out = "iteration,component,m_beta,m_eta\n";
  for (std::size_t j = 0; j < fits.size(); ++j)
    for (const auto& e : fits[j].em_trace)
      out += std::to_string(e.iteration) + "," + std::to_string(j + 1) + "," + format_double(e.m_beta) + "," +
             format_double(e.m_eta) + "\n";
  return out;
}

inline std::vector<TraceRow> parse_trace(std::istream& in, const std::string& source) {
  const auto t = read_csv(in, source);
  require_header(t, {"iteration", "component", "m_beta", "m_eta"}, source);
  std::vector<TraceRow> rows;
  for (const auto& r : t.rows)
    rows.push_back({static_cast<std::size_t>(parse_int(r.fields[0], r.line, source)),
                    static_cast<int>(parse_int(r.fields[1], r.line, source)), parse_double(r.fields[2], r.line, source),
                    parse_double(r.fields[3], r.line, source)});
  return rows;
}

// ---------------------------------------------------------------- study table

struct StudyRow {
  Side side;
  Family family;
  int censor_pct;
  double true_mean;
  std::size_t n;
  double bias;
  double mse;
  std::size_t n_failed;
};

inline StudyRow study_row(const ScenarioResult& r) {
  return {r.spec.side,  r.spec.generator.family, static_cast<int>(std::lround(100.0 * r.spec.censor_fraction)),
          r.spec.true_mean(), r.spec.n, r.bias, r.mse, r.n_failed};
}

inline std::string study_csv(const std::vector<ScenarioResult>& results) {
  std::string out = "side,family,censor_pct,true_mean,n,bias,mse,n_failed\n";
  for (const auto& res : results) {
    const auto r = study_row(res);
    out += std::string(to_string(r.side)) + "," + std::string(to_string(r.family)) + "," +
           std::to_string(r.censor_pct) + "," + format_double(r.true_mean) + "," + std::to_string(r.n) + "," +
           format_double(r.bias) + "," + format_double(r.mse) + "," + std::to_string(r.n_failed) + "\n";
  }
  return out;
}

inline std::vector<StudyRow> parse_study(std::istream& in, const std::string& source) {
  const auto t = read_csv(in, source);
  require_header(t, {"side", "family", "censor_pct", "true_mean", "n", "bias", "mse", "n_failed"}, source);
  std::vector<StudyRow> rows;
  for (const auto& r : t.rows) {
    auto num = [&](std::size_t i) { return r.fields[i] == "nan" ? NAN : parse_double(r.fields[i], r.line, source); };
    rows.push_back({parse_side(r.fields[0]), parse_family(r.fields[1]),
                    static_cast<int>(parse_int(r.fields[2], r.line, source)), num(3),
                    static_cast<std::size_t>(parse_int(r.fields[4], r.line, source)), num(5), num(6),
                    static_cast<std::size_t>(parse_int(r.fields[7], r.line, source))});
  }
  return rows;
}

}  // namespace wbrel::io
