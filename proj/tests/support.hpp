#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "phrev/datagen.hpp"
#include "phrev/model.hpp"

namespace phrev::test {

// Reference values computed by tests/oracles/derive_values.py.
inline const nlohmann::json& frozen() {
  static const nlohmann::json data = [] {
    std::ifstream in(std::string(PHREV_TEST_DATA_DIR) + "/frozen_oracles.json");
    return nlohmann::json::parse(in);
  }();
  return data;
}

inline Matrix matrix_from(const nlohmann::json& rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c].get<double>();
  }
  return m;
}

inline Vector vector_from(const nlohmann::json& values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = values[i].get<double>();
  return v;
}

inline Matrix rows(std::initializer_list<std::initializer_list<double>> data) {
  Matrix m(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(data.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : data) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

inline Vector vec(std::initializer_list<double> data) {
  Vector v(static_cast<Eigen::Index>(data.size()));
  Eigen::Index i = 0;
  for (double x : data) v[i++] = x;
  return v;
}

// The two-period worked examples.
inline MarketStatistics harp_feasible() {
  return MarketStatistics(rows({{1, 1}, {2, 1}}), rows({{0.5, 0.5}, {0.25, 0.5}}));
}
inline MarketStatistics harp_infeasible() {
  return MarketStatistics(rows({{1, 1}, {2, 1}}), rows({{0.25, 0.5}, {0.5, 0.5}}));
}

inline Vector random_exponents(Rng& rng, std::size_t n) {
  Vector a(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = rng.uniform(0.5, 1.5);
  return a / a.sum();
}

}  // namespace phrev::test
