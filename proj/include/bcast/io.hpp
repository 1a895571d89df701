#pragma once

// BTF v1, the plain-text tensor interchange format:
//
//   btf 1
//   <d1> <d2> ... <dN>
//   <v1>
//   <v2>
//   ...
//
// Values are whitespace separated, column-major, exactly d1*...*dN of them.
// The writer emits one value per line with 17 significant digits, which
// round-trips every double.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "bcast/error.hpp"
#include "bcast/tensor.hpp"

namespace bcast {

/// "%.17g" with the C locale's '.' separator; "nan", "inf", "-inf" for
/// non-finite values.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline double parse_double(const std::string& tok, std::size_t position) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != tok.size()) {
    throw format_error("btf: value " + std::to_string(position) + " is not a number: '" + tok +
                       "'");
  }
  return v;
}

}  // namespace detail

inline Tensor parse_btf(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw format_error("btf: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "btf 1") throw format_error("btf: bad header '" + line + "', expected 'btf 1'");

  if (!std::getline(in, line)) throw format_error("btf: missing dimension line");
  std::istringstream dims_in(line);
  std::vector<std::size_t> dims;
  std::string tok;
  while (dims_in >> tok) {
    std::size_t used = 0;
    long long d = 0;
    try {
      d = std::stoll(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || d < 1) {
      throw format_error("btf: bad dimension '" + tok + "'");
    }
    dims.push_back(static_cast<std::size_t>(d));
  }
  if (dims.empty()) throw format_error("btf: dimension line is empty");
  Shape shape(std::move(dims));

  std::vector<double> values;
  values.reserve(shape.numel());
  while (in >> tok) {
    if (values.size() == shape.numel()) {
      throw format_error("btf: more than the " + std::to_string(shape.numel()) +
                         " values declared by shape " + shape.str());
    }
    values.push_back(detail::parse_double(tok, values.size() + 1));
  }
  if (values.size() != shape.numel()) {
    throw format_error("btf: shape " + shape.str() + " declares " +
                       std::to_string(shape.numel()) + " values, found " +
                       std::to_string(values.size()));
  }
  return Tensor(std::move(shape), std::move(values));
}

inline void write_btf(std::ostream& out, const Tensor& t) {
  out << "btf 1\n";
  const auto& dims = t.shape().dims();
  for (std::size_t n = 0; n < dims.size(); ++n) {
    if (n) out << ' ';
    out << dims[n];
  }
  out << '\n';
  for (double v : t.data()) out << format_double(v) << '\n';
}

inline Tensor read_btf(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw format_error("btf: cannot open " + path.string());
  return parse_btf(in);
}

inline void write_btf(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw format_error("btf: cannot write " + path.string());
  write_btf(out, t);
  if (!out) throw format_error("btf: write failed for " + path.string());
}

}  // namespace bcast
