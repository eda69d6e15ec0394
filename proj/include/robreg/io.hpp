#pragma once

// Text formats.
//
// Datasets: UTF-8 comma-separated, header `y,x1,...,xd`, one sample per row.
// Numbers are written in the shortest form that parses back to the same
// double, so write -> read is bit-exact.
//
// Records (results, estimates, ground truth): one record per line as
// space-separated `key=value` pairs; vector values are comma-separated.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "robreg/core.hpp"
#include "robreg/pipeline.hpp"

namespace robreg {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view s, double& out) {
  if (s == "inf") {
    out = std::numeric_limits<double>::infinity();
    return true;
  }
  if (s == "-inf") {
    out = -std::numeric_limits<double>::infinity();
    return true;
  }
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline void write_dataset(std::ostream& os, const Dataset& data) {
  os << 'y';
  for (Index j = 0; j < data.d(); ++j) os << ",x" << (j + 1);
  os << '\n';
  for (Index i = 0; i < data.n(); ++i) {
    os << format_double(data.response()[i]);
    for (Index j = 0; j < data.d(); ++j) os << ',' << format_double(data.design()(i, j));
    os << '\n';
  }
}

inline Dataset read_dataset(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  Index d = -1;
  std::vector<double> values;
  Index rows = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string_view sv = trim(line);
    if (sv.empty()) continue;
    const auto fields = split(sv, ',');
    if (d < 0) {
      if (trim(fields[0]) != "y") throw ParseError(lineno, "header must start with 'y'");
      for (std::size_t j = 1; j < fields.size(); ++j) {
        if (trim(fields[j]) != "x" + std::to_string(j)) {
          throw ParseError(lineno, "header column " + std::to_string(j + 1) + " must be 'x" + std::to_string(j) + "'");
        }
      }
      d = static_cast<Index>(fields.size()) - 1;
      if (d < 1) throw ParseError(lineno, "header declares no covariates");
      continue;
    }
    if (static_cast<Index>(fields.size()) != d + 1) {
      throw ParseError(lineno, "expected " + std::to_string(d + 1) + " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      double v = 0.0;
      if (!parse_double(trim(fields[j]), v) || !std::isfinite(v)) {
        throw ParseError(lineno, "field " + std::to_string(j + 1) + " is not a finite number: '" +
                                     std::string(fields[j]) + "'");
      }
      values.push_back(v);
    }
    ++rows;
  }
  if (d < 0) throw ParseError(lineno, "missing header");
  Matrix X(rows, d);
  Vector y(rows);
  for (Index i = 0; i < rows; ++i) {
    const auto base = static_cast<std::size_t>(i * (d + 1));
    y[i] = values[base];
    for (Index j = 0; j < d; ++j) X(i, j) = values[base + 1 + static_cast<std::size_t>(j)];
  }
  return Dataset(std::move(X), std::move(y));
}

inline void write_dataset_file(const std::string& path, const Dataset& data) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_dataset(os, data);
}

inline Dataset read_dataset_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  return read_dataset(is);
}

/// An ordered list of key=value pairs.
class Record {
 public:
  Record& add(std::string key, std::string value) {
    fields_.emplace_back(std::move(key), std::move(value));
    return *this;
  }
  Record& add(std::string key, double v) { return add(std::move(key), format_double(v)); }
  Record& add(std::string key, Index v) { return add(std::move(key), std::to_string(v)); }
  Record& add(std::string key, int v) { return add(std::move(key), std::to_string(v)); }
  Record& add(std::string key, std::uint64_t v) { return add(std::move(key), std::to_string(v)); }
  Record& add(std::string key, bool v) { return add(std::move(key), std::string(v ? "true" : "false")); }
  Record& add(std::string key, const Vector& v) {
    std::string s;
    for (Index i = 0; i < v.size(); ++i) {
      if (i) s += ',';
      s += format_double(v[i]);
    }
    return add(std::move(key), s.empty() ? std::string("-") : s);
  }
  Record& add(std::string key, const std::vector<Index>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(v[i]);
    }
    return add(std::move(key), s.empty() ? std::string("-") : s);
  }

  const std::vector<std::pair<std::string, std::string>>& fields() const { return fields_; }

  const std::string* find(std::string_view key) const {
    for (const auto& [k, v] : fields_) {
      if (k == key) return &v;
    }
    return nullptr;
  }

  friend std::ostream& operator<<(std::ostream& os, const Record& r) {
    bool first = true;
    for (const auto& [k, v] : r.fields_) {
      if (!first) os << ' ';
      first = false;
      os << k << '=' << v;
    }
    return os;
  }

 private:
  std::vector<std::pair<std::string, std::string>> fields_;
};

/// Parses one `key=value ...` line. Values may not contain spaces.
inline Record parse_record(std::string_view line, std::size_t lineno = 1) {
  Record r;
  for (auto tok : split(trim(line), ' ')) {
    if (tok.empty()) continue;
    const auto eq = tok.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw ParseError(lineno, "expected key=value, found '" + std::string(tok) + "'");
    }
    r.add(std::string(tok.substr(0, eq)), std::string(tok.substr(eq + 1)));
  }
  return r;
}

inline Vector parse_vector(std::string_view s, std::size_t lineno = 1) {
  if (s == "-") return Vector(0);
  const auto parts = split(s, ',');
  Vector v(static_cast<Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!parse_double(parts[i], v[static_cast<Index>(i)])) {
      throw ParseError(lineno, "bad number '" + std::string(parts[i]) + "'");
    }
  }
  return v;
}

inline std::vector<Index> parse_index_list(std::string_view s, std::size_t lineno = 1) {
  std::vector<Index> out;
  if (s == "-" || s.empty()) return out;
  for (auto p : split(s, ',')) {
    Index v = 0;
    const auto res = std::from_chars(p.data(), p.data() + p.size(), v);
    if (res.ec != std::errc() || res.ptr != p.data() + p.size()) {
      throw ParseError(lineno, "bad index '" + std::string(p) + "'");
    }
    out.push_back(v);
  }
  return out;
}

inline Record to_record(const SweepRecord& r, bool include_timing) {
  Record rec;
  rec.add("n", r.n)
      .add("d", r.d)
      .add("s", r.s)
      .add("o", r.o)
      .add("delta", r.delta)
      .add("attack_scale", r.attack_scale)
      .add("rep", r.rep)
      .add("seed", r.seed)
      .add("estimator", std::string(estimator_name(r.estimator)))
      .add("l2_error", r.l2_error)
      .add("l1_error", r.l1_error)
      .add("certificate", r.certificate)
      .add("failed", r.failed)
      .add("retained", r.retained);
  if (include_timing) rec.add("wall_seconds", r.wall_seconds);
  if (!r.error.empty()) {
    std::string e = r.error;
    for (auto& c : e) {
      if (c == ' ' || c == '=') c = '_';
    }
    rec.add("error", e);
  }
  return rec;
}

/// Wall time is omitted unless requested so that reruns are byte-identical.
inline void write_results(std::ostream& os, const SweepResult& res, bool include_timing = false) {
  for (const auto& r : res.records) os << to_record(r, include_timing) << '\n';
}

inline Record truth_record(const GroundTruth& t) {
  Record r;
  r.add("beta_star", t.beta_star)
      .add("support", t.support)
      .add("outliers", t.outliers)
      .add("sigma", t.sigma)
      .add("subgaussian_constant", t.subgaussian_constant);
  return r;
}

inline Record estimate_record(const Estimate& est) {
  Record r;
  r.add("ok", est.ok())
      .add("failed", est.saddle.failed)
      .add("fallback", est.used_fallback)
      .add("certificate", est.saddle.certificate_value)
      .add("tau_cut", est.params.tau_cut)
      .add("duality_gap", est.saddle.duality_gap)
      .add("weight_iterations", est.saddle.iterations)
      .add("weights_converged", est.saddle.converged)
      .add("retained", static_cast<Index>(est.truncated.retained.size()))
      .add("lambda_o", est.params.lambda_o)
      .add("lambda_s", est.params.lambda_s)
      .add("eps", est.params.eps)
      .add("r1", est.params.r1)
      .add("r2", est.params.r2);
  if (est.fit) {
    r.add("fit_iterations", est.fit->iterations)
        .add("kkt_residual", est.fit->kkt_residual)
        .add("fit_converged", est.fit->converged);
  }
  r.add("beta_hat", est.beta_hat ? *est.beta_hat : Vector(0));
  return r;
}

/// 64-bit FNV-1a, used for golden-file checksums.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace robreg
