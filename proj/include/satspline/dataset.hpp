#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "satspline/error.hpp"

namespace satspline {

// Dense column-major matrix; columns are the natural unit for per-feature work.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_columns(const std::vector<std::vector<double>>& columns) {
    require(!columns.empty(), "matrix needs at least one column");
    Matrix m(columns.front().size(), columns.size());
    for (std::size_t d = 0; d < columns.size(); ++d) {
      require(columns[d].size() == m.rows_, "ragged columns");
      std::copy(columns[d].begin(), columns[d].end(), m.col(d).begin());
    }
    return m;
  }

  static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    require(!rows.empty(), "matrix needs at least one row");
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      require(rows[i].size() == m.cols_, "ragged rows");
      for (std::size_t d = 0; d < m.cols_; ++d) m(i, d) = rows[i][d];
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t d) { return data_[d * rows_ + i]; }
  double operator()(std::size_t i, std::size_t d) const { return data_[d * rows_ + i]; }

  std::span<double> col(std::size_t d) { return {data_.data() + d * rows_, rows_}; }
  std::span<const double> col(std::size_t d) const { return {data_.data() + d * rows_, rows_}; }

  std::vector<double> row(std::size_t i) const {
    std::vector<double> r(cols_);
    for (std::size_t d = 0; d < cols_; ++d) r[d] = (*this)(i, d);
    return r;
  }

  Matrix select_rows(std::span<const std::size_t> idx) const {
    Matrix m(idx.size(), cols_);
    for (std::size_t d = 0; d < cols_; ++d)
      for (std::size_t r = 0; r < idx.size(); ++r) m(r, d) = (*this)(idx[r], d);
    return m;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct Dataset {
  Matrix X;                // n x D raw features
  std::vector<double> y;   // n responses
  std::vector<std::string> names;  // optional, empty or D entries

  std::size_t n() const { return X.rows(); }
  std::size_t dim() const { return X.cols(); }

  void validate() const {
    require(X.rows() >= 1, "dataset must have at least one row");
    require(X.cols() >= 1, "dataset must have at least one feature");
    require(y.size() == X.rows(), "response length does not match number of rows");
    require(names.empty() || names.size() == X.cols(), "column name count does not match features");
    for (std::size_t d = 0; d < X.cols(); ++d)
      for (double v : X.col(d)) require(std::isfinite(v), "non-finite feature value");
    for (double v : y) require(std::isfinite(v), "non-finite response value");
  }

  Dataset subset(std::span<const std::size_t> idx) const {
    Dataset out{X.select_rows(idx), {}, names};
    out.y.reserve(idx.size());
    for (std::size_t i : idx) out.y.push_back(y[i]);
    return out;
  }
};

}  // namespace satspline
