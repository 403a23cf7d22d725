/**
 * Copyright 2026 The pipesim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PIPESIM_MATRIX_HPP_
#define PIPESIM_MATRIX_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace pipesim {

// Dense row-major matrix of doubles. The only numeric container in the
// simulator: weights, biases, activations, gradients and optimizer moments.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double &operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double &operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool same_shape(const Matrix &o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool all_finite() const;
  std::string shape_str() const;

  // In-place updates. Shapes must match.
  Matrix &operator+=(const Matrix &o);
  Matrix &operator-=(const Matrix &o);
  Matrix &operator*=(double s);
  // this += alpha * x
  Matrix &axpy(double alpha, const Matrix &x);

  bool operator==(const Matrix &o) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix &a, const Matrix &b);
Matrix transpose(const Matrix &a);
Matrix operator+(Matrix a, const Matrix &b);
Matrix operator-(Matrix a, const Matrix &b);
Matrix operator*(double s, Matrix a);
Matrix hadamard(const Matrix &a, const Matrix &b);
// x (n×k) plus row vector b (1×k) broadcast over rows.
Matrix add_row(const Matrix &x, const Matrix &b);
// Column sums as a 1×cols row vector.
Matrix col_sums(const Matrix &a);
// Rows [begin, end) of a.
Matrix slice_rows(const Matrix &a, std::size_t begin, std::size_t end);

double max_abs_diff(const Matrix &a, const Matrix &b);

void require_same_shape(const Matrix &a, const Matrix &b, const char *what);

}  // namespace pipesim

#endif  // PIPESIM_MATRIX_HPP_
