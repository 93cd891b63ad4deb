#include "np2l/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace np2l {

std::string shape_string(std::size_t rows, std::size_t cols) {
  return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw std::invalid_argument("Matrix: data size " + std::to_string(data_.size()) +
                                " does not match shape " + shape_string(rows, cols));
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw std::invalid_argument("Matrix::from_rows: ragged rows");
    std::copy(row.begin(), row.end(), m.row(i++).begin());
  }
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix& Matrix::operator+=(const Matrix& other) {
  if (!same_shape(other)) {
    throw std::invalid_argument("Matrix +=: shape mismatch " + shape_string(rows_, cols_) +
                                " vs " + shape_string(other.rows_, other.cols_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  if (!same_shape(other)) {
    throw std::invalid_argument("Matrix -=: shape mismatch " + shape_string(rows_, cols_) +
                                " vs " + shape_string(other.rows_, other.cols_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: shape mismatch " + shape_string(a.rows(), a.cols()) +
                                " * " + shape_string(b.rows(), b.cols()));
  }
  Matrix c(a.rows(), b.cols());
  const std::size_t n = b.cols(), inner = a.cols();
  std::size_t i = 0;
  // four rows of C at a time so each row of B is read once per block; every
  // output still accumulates over k in ascending order
  for (; i + 4 <= a.rows(); i += 4) {
    double* o0 = c.row(i).data();
    double* o1 = c.row(i + 1).data();
    double* o2 = c.row(i + 2).data();
    double* o3 = c.row(i + 3).data();
    for (std::size_t k = 0; k < inner; ++k) {
      const double a0 = a(i, k), a1 = a(i + 1, k), a2 = a(i + 2, k), a3 = a(i + 3, k);
      if (a0 == 0.0 && a1 == 0.0 && a2 == 0.0 && a3 == 0.0) continue;
      const double* brow = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) {
        const double bj = brow[j];
        o0[j] += a0 * bj;
        o1[j] += a1 * bj;
        o2[j] += a2 * bj;
        o3[j] += a3 * bj;
      }
    }
  }
  for (; i < a.rows(); ++i) {
    double* out = c.row(i).data();
    for (std::size_t k = 0; k < inner; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) out[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("matmul_tn: shape mismatch " + shape_string(a.rows(), a.cols()) +
                                "^T * " + shape_string(b.rows(), b.cols()));
  }
  return matmul(a.transposed(), b);
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("matmul_nt: shape mismatch " + shape_string(a.rows(), a.cols()) +
                                " * " + shape_string(b.rows(), b.cols()) + "^T");
  }
  return matmul(a, b.transposed());
}

// ---------------------------------------------------------------------------
// SparseMatrix

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row >= rows || t.col >= cols) {
      throw std::invalid_argument("SparseMatrix: triplet (" + std::to_string(t.row) + "," +
                                  std::to_string(t.col) + ") outside " +
                                  shape_string(rows, cols));
    }
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseMatrix m(rows, cols);
  m.col_idx_.reserve(triplets.size());
  m.values_.reserve(triplets.size());
  std::vector<std::size_t> counts(rows, 0);
  for (std::size_t i = 0; i < triplets.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < triplets.size() && triplets[j].row == triplets[i].row &&
           triplets[j].col == triplets[i].col) {
      sum += triplets[j].value;
      ++j;
    }
    if (sum != 0.0) {
      m.col_idx_.push_back(triplets[i].col);
      m.values_.push_back(sum);
      ++counts[triplets[i].row];
    }
    i = j;
  }
  for (std::size_t r = 0; r < rows; ++r) m.row_ptr_[r + 1] = m.row_ptr_[r] + counts[r];
  return m;
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<Triplet> t;
  t.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
  return from_triplets(n, n, std::move(t));
}

SparseMatrix SparseMatrix::from_dense(const Matrix& d) {
  std::vector<Triplet> t;
  for (std::uint32_t i = 0; i < d.rows(); ++i)
    for (std::uint32_t j = 0; j < d.cols(); ++j)
      if (d(i, j) != 0.0) t.push_back({i, j, d(i, j)});
  return from_triplets(d.rows(), d.cols(), std::move(t));
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
  const auto cols = row_cols(r);
  const auto it = std::lower_bound(cols.begin(), cols.end(), static_cast<std::uint32_t>(c));
  if (it == cols.end() || *it != c) return 0.0;
  return values_[row_ptr_[r] + static_cast<std::size_t>(it - cols.begin())];
}

SparseMatrix SparseMatrix::transposed() const {
  std::vector<Triplet> t;
  t.reserve(nnz());
  for (std::uint32_t r = 0; r < rows_; ++r) {
    const auto cols = row_cols(r);
    const auto vals = row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k) t.push_back({cols[k], r, vals[k]});
  }
  return from_triplets(cols_, rows_, std::move(t));
}

Matrix SparseMatrix::to_dense() const {
  Matrix d(rows_, cols_);
  for (std::size_t r = 0; r < rows_; ++r) {
    const auto cols = row_cols(r);
    const auto vals = row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k) d(r, cols[k]) = vals[k];
  }
  return d;
}

Matrix SparseMatrix::apply(const Matrix& x) const {
  if (cols_ != x.rows()) {
    throw std::invalid_argument("spmm: shape mismatch " + shape_string(rows_, cols_) + " * " +
                                shape_string(x.rows(), x.cols()));
  }
  const std::size_t d = x.cols();
  Matrix out(rows_, d);
  // Rows are independent, so the per-row accumulation order is fixed regardless
  // of how rows are scheduled.
#pragma omp parallel for schedule(static) if (rows_ * d > 65536)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows_); ++r) {
    double* o = out.row(static_cast<std::size_t>(r)).data();
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const double v = values_[k];
      const double* xr = x.row(col_idx_[k]).data();
      for (std::size_t j = 0; j < d; ++j) o[j] += v * xr[j];
    }
  }
  return out;
}

Matrix SparseMatrix::apply_transpose(const Matrix& x) const {
  if (rows_ != x.rows()) {
    throw std::invalid_argument("spmm^T: shape mismatch " + shape_string(rows_, cols_) +
                                "^T * " + shape_string(x.rows(), x.cols()));
  }
  const std::size_t d = x.cols();
  Matrix out(cols_, d);
  for (std::size_t r = 0; r < rows_; ++r) {
    const double* xr = x.row(r).data();
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const double v = values_[k];
      double* o = out.row(col_idx_[k]).data();
      for (std::size_t j = 0; j < d; ++j) o[j] += v * xr[j];
    }
  }
  return out;
}

}  // namespace np2l
