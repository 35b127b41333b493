// SPDX-License-Identifier: Apache-2.0
#include "wbft/matrix.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace wbft {

namespace {
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
  }
  return out;
}
}  // namespace

std::string LatencyMatrix::validate() const {
  const std::size_t n = labels.size();
  if (n == 0) return "empty matrix";
  if (delays_ms.size() != n) return "row count does not match label count";
  for (std::size_t i = 0; i < n; ++i) {
    if (delays_ms[i].size() != n) return "row " + std::to_string(i) + " has wrong width";
    for (std::size_t j = 0; j < n; ++j) {
      double v = delays_ms[i][j];
      if (!std::isfinite(v)) return "non-finite delay at (" + std::to_string(i) + "," + std::to_string(j) + ")";
      if (v < 0) return "negative delay at (" + std::to_string(i) + "," + std::to_string(j) + ")";
      if (i == j && v != 0.0) return "nonzero diagonal at " + std::to_string(i);
    }
  }
  return {};
}

LatencyMatrix LatencyMatrix::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open latency matrix: " + path);
  LatencyMatrix m;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty latency matrix: " + path);
  m.labels = split_csv(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != m.labels.size())
      throw std::runtime_error(path + ": row " + std::to_string(m.delays_ms.size() + 1) +
                               " has " + std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(m.labels.size()));
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      try {
        row.push_back(std::stod(c));
      } catch (...) {
        throw std::runtime_error(path + ": bad number '" + c + "'");
      }
    }
    m.delays_ms.push_back(std::move(row));
  }
  auto err = m.validate();
  if (!err.empty()) throw std::runtime_error(path + ": " + err);
  return m;
}

DelayMatrixNs DelayMatrixNs::from(const LatencyMatrix& m) {
  DelayMatrixNs out;
  out.d.resize(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    out.d[i].resize(m.size());
    for (std::size_t j = 0; j < m.size(); ++j) out.d[i][j] = ms_to_ns(m.at(i, j));
  }
  return out;
}

}  // namespace wbft
