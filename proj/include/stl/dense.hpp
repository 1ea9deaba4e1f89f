/*
   Copyright 2026 The stl-tile Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "stl/errors.hpp"

namespace stl {

using Index = Eigen::Index;

// Row-major storage everywhere: tiles are vectorized row-major, and fibers of
// encoded tensors are stored as contiguous rows.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using DenseMatrix = Matrix<double>;
using DenseVector = Vector<double>;

/// Multiply-accumulate tally used to instrument the reference kernels.
struct MacCounter {
  std::uint64_t macs = 0;
  std::uint64_t flops() const noexcept { return 2 * macs; }
};

/// Tile (I, J) of a matrix partitioned into t x t blocks.
struct TileIndex {
  Index block_row = 0;
  Index block_col = 0;
  Index t = 1;
};

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
  if (!m.allFinite()) throw std::domain_error(std::string(what) + ": non-finite entry");
}

template <typename Derived>
void require_tiled(const Eigen::MatrixBase<Derived>& m, Index t, const char* what) {
  if (t < 1 || m.rows() % t != 0 || m.cols() % t != 0) {
    throw ShapeError(std::string(what) + ": tile size " + std::to_string(t) +
                     " does not divide " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()));
  }
}

/// Exact product with a fixed summation order (k innermost, ascending), so
/// results are reproducible bit for bit.
template <typename DerivedA, typename DerivedB>
Matrix<typename DerivedA::Scalar> matmul(const Eigen::MatrixBase<DerivedA>& a,
                                         const Eigen::MatrixBase<DerivedB>& b,
                                         MacCounter* counter = nullptr) {
  using Scalar = typename DerivedA::Scalar;
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
                     std::to_string(b.rows()) + ")");
  }
  Matrix<Scalar> c(a.rows(), b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < b.cols(); ++j) {
      Scalar acc(0);
      for (Index k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  }
  if (counter) counter->macs += static_cast<std::uint64_t>(a.rows() * b.cols() * a.cols());
  return c;
}

template <typename Derived>
Vector<typename Derived::Scalar> vec_tile(const Eigen::MatrixBase<Derived>& m, TileIndex idx) {
  require_tiled(m, idx.t, "vec_tile");
  if (idx.block_row < 0 || idx.block_row >= m.rows() / idx.t || idx.block_col < 0 ||
      idx.block_col >= m.cols() / idx.t) {
    throw IndexError("vec_tile: tile index out of range");
  }
  const Index t = idx.t;
  Vector<typename Derived::Scalar> v(t * t);
  for (Index a = 0; a < t; ++a)
    for (Index b = 0; b < t; ++b) v(a * t + b) = m(idx.block_row * t + a, idx.block_col * t + b);
  return v;
}

/// Inverse of vec_tile: writes a row-major t^2 vector back into tile idx of m.
template <typename Derived, typename DerivedV>
void unvec_tile(const Eigen::MatrixBase<DerivedV>& v, TileIndex idx,
                Eigen::MatrixBase<Derived>& m) {
  require_tiled(m, idx.t, "unvec_tile");
  const Index t = idx.t;
  if (v.size() != t * t) throw ShapeError("unvec_tile: vector length must be t^2");
  if (idx.block_row < 0 || idx.block_row >= m.rows() / t || idx.block_col < 0 ||
      idx.block_col >= m.cols() / t) {
    throw IndexError("unvec_tile: tile index out of range");
  }
  for (Index a = 0; a < t; ++a)
    for (Index b = 0; b < t; ++b) m(idx.block_row * t + a, idx.block_col * t + b) = v(a * t + b);
}

/// All tiles as rows: row I*(cols/t)+J holds vec_tile(m, (I,J)).
template <typename Derived>
Matrix<typename Derived::Scalar> tiles_as_rows(const Eigen::MatrixBase<Derived>& m, Index t) {
  require_tiled(m, t, "tiles_as_rows");
  const Index br = m.rows() / t, bc = m.cols() / t;
  Matrix<typename Derived::Scalar> out(br * bc, t * t);
  for (Index I = 0; I < br; ++I)
    for (Index J = 0; J < bc; ++J)
      for (Index a = 0; a < t; ++a)
        for (Index b = 0; b < t; ++b) out(I * bc + J, a * t + b) = m(I * t + a, J * t + b);
  return out;
}

template <typename Derived>
Matrix<typename Derived::Scalar> rows_as_tiles(const Eigen::MatrixBase<Derived>& rows, Index t,
                                               Index block_rows, Index block_cols) {
  if (rows.rows() != block_rows * block_cols || rows.cols() != t * t) {
    throw ShapeError("rows_as_tiles: expected (block_rows*block_cols) x t^2 input");
  }
  Matrix<typename Derived::Scalar> m(block_rows * t, block_cols * t);
  for (Index I = 0; I < block_rows; ++I)
    for (Index J = 0; J < block_cols; ++J)
      for (Index a = 0; a < t; ++a)
        for (Index b = 0; b < t; ++b) m(I * t + a, J * t + b) = rows(I * block_cols + J, a * t + b);
  return m;
}

/// Condition numbers above this are treated as singular by the symmetric solvers.
inline constexpr double kMaxCondition = 1e12;

/// Solves gram * x = rhs for symmetric positive definite gram. The condition
/// number is estimated from the Gram spectrum.
template <typename DerivedG, typename DerivedR>
Matrix<typename DerivedG::Scalar> symmetric_solve(const Eigen::MatrixBase<DerivedG>& gram,
                                                  const Eigen::MatrixBase<DerivedR>& rhs,
                                                  double max_condition = kMaxCondition) {
  using Scalar = typename DerivedG::Scalar;
  if (gram.rows() != gram.cols() || gram.rows() != rhs.rows()) {
    throw ShapeError("symmetric_solve: incompatible shapes");
  }
  const Matrix<Scalar> g = gram;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(g, Eigen::EigenvaluesOnly);
  const Scalar lo = eig.eigenvalues().minCoeff();
  const Scalar hi = eig.eigenvalues().maxCoeff();
  const double condition =
      lo > Scalar(0) ? static_cast<double>(hi / lo) : std::numeric_limits<double>::infinity();
  if (!(hi > Scalar(0)) || condition > max_condition) {
    throw SingularSystemError("symmetric_solve: Gram matrix is rank deficient", condition);
  }
  Eigen::LDLT<Matrix<Scalar>> ldlt(g);
  Matrix<Scalar> x = ldlt.solve(rhs.derived().eval());
  require_finite(x, "symmetric_solve");
  return x;
}

/// argmin ||design * x - targets||_2 via the normal equations.
template <typename DerivedA, typename DerivedY>
Vector<typename DerivedA::Scalar> least_squares(const Eigen::MatrixBase<DerivedA>& design,
                                                const Eigen::MatrixBase<DerivedY>& targets) {
  if (design.rows() < design.cols()) throw ShapeError("least_squares: underdetermined design");
  if (design.rows() != targets.size()) throw ShapeError("least_squares: target length mismatch");
  const auto gram = (design.transpose() * design).eval();
  const auto rhs = (design.transpose() * targets).eval();
  return symmetric_solve(gram, rhs).col(0);
}

/// Nonincreasing singular values.
template <typename Derived>
Vector<typename Derived::Scalar> singular_values(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) throw ShapeError("singular_values: empty matrix");
  require_finite(m, "singular_values");
  using Plain = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Eigen::JacobiSVD<Plain> svd{Plain(m)};
  return svd.singularValues();
}

/// ||a - b||_F / ||b||_F (or the absolute error when b is zero).
template <typename DerivedA, typename DerivedB>
double relative_frobenius_error(const Eigen::MatrixBase<DerivedA>& a,
                                const Eigen::MatrixBase<DerivedB>& b) {
  const double diff = static_cast<double>((a - b).norm());
  const double ref = static_cast<double>(b.norm());
  return ref > 0 ? diff / ref : diff;
}

}  // namespace stl
