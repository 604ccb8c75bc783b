#pragma once

// Plain-text matrix and vector files.
//
// Matrix: a line "m n", then m lines of n space-separated reals.
// Vector: a line "n", then n lines of one real each.
//
// Lines starting with '#' are comments; writers put provenance headers there
// and readers skip them. Numbers are written with the shortest decimal form
// that round-trips exactly (std::to_chars), so write/read is lossless.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "nncs/core.hpp"

namespace nncs {

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc()) throw io_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view sv, const char* what) {
  double v = 0.0;
  auto res = std::from_chars(sv.data(), sv.data() + sv.size(), v);
  if (res.ec != std::errc() || res.ptr != sv.data() + sv.size())
    throw io_error(std::string(what) + ": bad number '" + std::string(sv) + "'");
  if (!std::isfinite(v)) throw io_error(std::string(what) + ": non-finite value");
  return v;
}

namespace detail {

// Next non-comment, non-blank line; false at end of stream.
inline bool next_data_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    std::size_t pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos) continue;
    if (line[pos] == '#') continue;
    if (line.back() == '\r') line.pop_back();
    return true;
  }
  return false;
}

inline std::vector<std::string_view> split_fields(const std::string& line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.emplace_back(line.data() + start, i - start);
  }
  return out;
}

inline void write_header(std::ostream& out, const std::vector<std::string>& header) {
  for (const auto& h : header) out << "# " << h << "\n";
}

}  // namespace detail

inline void write_matrix(std::ostream& out, const DenseMatrix& A,
                         const std::vector<std::string>& header = {}) {
  detail::write_header(out, header);
  out << A.rows() << " " << A.cols() << "\n";
  for (std::size_t i = 0; i < A.rows(); ++i) {
    for (std::size_t j = 0; j < A.cols(); ++j) {
      if (j) out << " ";
      out << format_double(A(i, j));
    }
    out << "\n";
  }
}

inline void write_matrix(const std::string& path, const DenseMatrix& A,
                         const std::vector<std::string>& header = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("write_matrix: cannot open " + path);
  write_matrix(out, A, header);
  if (!out) throw io_error("write_matrix: write failed for " + path);
}

inline DenseMatrix read_matrix(std::istream& in, const char* what = "read_matrix") {
  std::string line;
  if (!detail::next_data_line(in, line)) throw io_error(std::string(what) + ": empty input");
  auto dims = detail::split_fields(line);
  if (dims.size() != 2) throw io_error(std::string(what) + ": expected 'rows cols' line");
  const auto m = static_cast<std::size_t>(parse_double(dims[0], what));
  const auto n = static_cast<std::size_t>(parse_double(dims[1], what));
  if (m == 0 || n == 0) throw io_error(std::string(what) + ": dimensions must be positive");
  DenseMatrix A(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    if (!detail::next_data_line(in, line)) throw io_error(std::string(what) + ": truncated matrix");
    auto fields = detail::split_fields(line);
    if (fields.size() != n) throw io_error(std::string(what) + ": wrong number of columns");
    for (std::size_t j = 0; j < n; ++j) A(i, j) = parse_double(fields[j], what);
  }
  return A;
}

inline DenseMatrix read_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("read_matrix: cannot open " + path);
  return read_matrix(in);
}

inline void write_vector(std::ostream& out, const Vec& x,
                         const std::vector<std::string>& header = {}) {
  detail::write_header(out, header);
  out << x.size() << "\n";
  for (double v : x) out << format_double(v) << "\n";
}

inline void write_vector(const std::string& path, const Vec& x,
                         const std::vector<std::string>& header = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("write_vector: cannot open " + path);
  write_vector(out, x, header);
  if (!out) throw io_error("write_vector: write failed for " + path);
}

inline Vec read_vector(std::istream& in, const char* what = "read_vector") {
  std::string line;
  if (!detail::next_data_line(in, line)) throw io_error(std::string(what) + ": empty input");
  auto dims = detail::split_fields(line);
  if (dims.size() != 1) throw io_error(std::string(what) + ": expected length line");
  const auto n = static_cast<std::size_t>(parse_double(dims[0], what));
  if (n == 0) throw io_error(std::string(what) + ": length must be positive");
  Vec x(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!detail::next_data_line(in, line)) throw io_error(std::string(what) + ": truncated vector");
    auto fields = detail::split_fields(line);
    if (fields.size() != 1) throw io_error(std::string(what) + ": expected one value per line");
    x[i] = parse_double(fields[0], what);
  }
  return x;
}

inline Vec read_vector(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("read_vector: cannot open " + path);
  return read_vector(in);
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("read_file_bytes: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace nncs
