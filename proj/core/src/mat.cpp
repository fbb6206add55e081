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

#include "croma/mat.hpp"

#include <cmath>
#include <sstream>

#include "croma/error.hpp"
#include "croma/rng.hpp"

namespace croma {

Mat::Mat(std::initializer_list<std::initializer_list<double>> m) {
  rows = m.size();
  cols = rows == 0 ? 0 : m.begin()->size();
  data.reserve(rows * cols);
  for (const auto& r : m) {
    if (r.size() != cols) throw ConfigError("Mat: ragged initializer list");
    data.insert(data.end(), r.begin(), r.end());
  }
}

Mat Mat::identity(size_t n) {
  Mat m(n, n);
  for (size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

Mat Mat::gaussian(size_t r, size_t c, Rng& rng, double stddev) {
  Mat m(r, c);
  for (auto& x : m.data) x = stddev * rng.normal();
  return m;
}

namespace {
void require_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (!a.same_shape(b)) {
    std::ostringstream os;
    os << op << ": shape mismatch " << a.rows << "x" << a.cols << " vs " << b.rows
       << "x" << b.cols;
    throw ConfigError(os.str());
  }
}
}  // namespace

Mat& Mat::operator+=(const Mat& o) {
  require_same_shape(*this, o, "Mat::+=");
  for (size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
  return *this;
}

Mat& Mat::operator-=(const Mat& o) {
  require_same_shape(*this, o, "Mat::-=");
  for (size_t i = 0; i < data.size(); ++i) data[i] -= o.data[i];
  return *this;
}

Mat& Mat::operator*=(double s) {
  for (auto& x : data) x *= s;
  return *this;
}

Mat operator+(Mat a, const Mat& b) { return a += b; }
Mat operator-(Mat a, const Mat& b) { return a -= b; }
Mat operator*(Mat a, double s) { return a *= s; }

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols != b.rows) {
    std::ostringstream os;
    os << "matmul: inner dimension mismatch " << a.rows << "x" << a.cols << " . "
       << b.rows << "x" << b.cols;
    throw ConfigError(os.str());
  }
  Mat out(a.rows, b.cols);
  // i-k-j loop order keeps the inner loop contiguous in both b and out.
  for (size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    double* orow = out.row(i);
    for (size_t k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.row(k);
      for (size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Mat matmul_tn(const Mat& a, const Mat& b) {
  if (a.rows != b.rows) throw ConfigError("matmul_tn: row count mismatch");
  Mat out(a.cols, b.cols);
  for (size_t k = 0; k < a.rows; ++k) {
    const double* arow = a.row(k);
    const double* brow = b.row(k);
    for (size_t i = 0; i < a.cols; ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      double* orow = out.row(i);
      for (size_t j = 0; j < b.cols; ++j) orow[j] += aki * brow[j];
    }
  }
  return out;
}

Mat matmul_nt(const Mat& a, const Mat& b) {
  if (a.cols != b.cols) throw ConfigError("matmul_nt: column count mismatch");
  Mat out(a.rows, b.rows);
  for (size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    double* orow = out.row(i);
    for (size_t j = 0; j < b.rows; ++j) {
      const double* brow = b.row(j);
      double acc = 0.0;
      for (size_t k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
      orow[j] = acc;
    }
  }
  return out;
}

Mat transpose(const Mat& m) {
  Mat out(m.cols, m.rows);
  for (size_t i = 0; i < m.rows; ++i)
    for (size_t j = 0; j < m.cols; ++j) out.at(j, i) = m.at(i, j);
  return out;
}

Mat hadamard(const Mat& a, const Mat& b) {
  require_same_shape(a, b, "hadamard");
  Mat out = a;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.data[i];
  return out;
}

Mat col_sums(const Mat& m) {
  Mat out(1, m.cols);
  for (size_t i = 0; i < m.rows; ++i) {
    const double* row = m.row(i);
    for (size_t j = 0; j < m.cols; ++j) out.data[j] += row[j];
  }
  return out;
}

double dot(const Mat& a, const Mat& b) {
  require_same_shape(a, b, "dot");
  double acc = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) acc += a.data[i] * b.data[i];
  return acc;
}

double dot_rows(const Mat& a, size_t ra, const Mat& b, size_t rb) {
  if (a.cols != b.cols) throw ConfigError("dot_rows: column count mismatch");
  const double* x = a.row(ra);
  const double* y = b.row(rb);
  double acc = 0.0;
  for (size_t k = 0; k < a.cols; ++k) acc += x[k] * y[k];
  return acc;
}

double frobenius_norm(const Mat& m) { return std::sqrt(dot(m, m)); }

double row_norm(const Mat& m, size_t r) {
  const double* x = m.row(r);
  double acc = 0.0;
  for (size_t k = 0; k < m.cols; ++k) acc += x[k] * x[k];
  return std::sqrt(acc);
}

void check_finite(const Mat& m, const std::string& what) {
  for (size_t i = 0; i < m.data.size(); ++i) {
    if (!std::isfinite(m.data[i])) {
      std::ostringstream os;
      os << what << ": non-finite value " << m.data[i] << " at (" << i / m.cols
         << ", " << i % m.cols << ")";
      throw NumericError(os.str());
    }
  }
}

void require_shape(const Mat& m, size_t rows, size_t cols, const std::string& what) {
  if (m.rows != rows || m.cols != cols) {
    std::ostringstream os;
    os << what << ": expected " << rows << "x" << cols << ", got " << m.rows << "x"
       << m.cols;
    throw ConfigError(os.str());
  }
}

}  // namespace croma
