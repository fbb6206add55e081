// Copyright 2026 The Croma Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CROMA_MAT_HPP_
#define CROMA_MAT_HPP_

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace croma {

class Rng;

/// Dense row-major matrix of doubles. Batches are rows throughout the
/// project: sample i lives in row i.
struct Mat {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> data;  // rows * cols, row-major

  Mat() = default;
  Mat(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  Mat(std::initializer_list<std::initializer_list<double>> m);

  double& at(size_t r, size_t c) { return data[r * cols + c]; }
  double at(size_t r, size_t c) const { return data[r * cols + c]; }

  double* row(size_t r) { return data.data() + r * cols; }
  const double* row(size_t r) const { return data.data() + r * cols; }

  size_t size() const { return data.size(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

  static Mat zeros(size_t r, size_t c) { return Mat(r, c); }
  static Mat identity(size_t n);
  static Mat gaussian(size_t r, size_t c, Rng& rng, double stddev = 1.0);

  Mat& operator+=(const Mat& o);
  Mat& operator-=(const Mat& o);
  Mat& operator*=(double s);
};

Mat operator+(Mat a, const Mat& b);
Mat operator-(Mat a, const Mat& b);
Mat operator*(Mat a, double s);

/// a * b  [n x k] . [k x m]
Mat matmul(const Mat& a, const Mat& b);
/// a^T * b  [k x n]^T . [k x m]
Mat matmul_tn(const Mat& a, const Mat& b);
/// a * b^T  [n x k] . [m x k]^T
Mat matmul_nt(const Mat& a, const Mat& b);

Mat transpose(const Mat& m);
Mat hadamard(const Mat& a, const Mat& b);

/// Sum of each column, returned as a 1 x cols matrix.
Mat col_sums(const Mat& m);

double dot(const Mat& a, const Mat& b);
double dot_rows(const Mat& a, size_t ra, const Mat& b, size_t rb);
double frobenius_norm(const Mat& m);
double row_norm(const Mat& m, size_t r);

/// Throws NumericError naming the first offending coordinate if any entry
/// is NaN or infinite. `what` identifies the value being checked.
void check_finite(const Mat& m, const std::string& what);

void require_shape(const Mat& m, size_t rows, size_t cols, const std::string& what);

}  // namespace croma

#endif  // CROMA_MAT_HPP_
