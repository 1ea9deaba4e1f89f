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

#include "stl/strassen.hpp"

#include <algorithm>
#include <cmath>

namespace stl {

StrassenFactors2x2 strassen_rank7() {
  StrassenFactors2x2 f{DenseMatrix(7, 4), DenseMatrix(7, 4), DenseMatrix(7, 4)};
  // columns: [11, 12, 21, 22]
  f.e_x7 << 1, 0, 0, 1,
            0, 0, 1, 1,
            1, 0, 0, 0,
            0, 0, 0, 1,
            1, 1, 0, 0,
           -1, 0, 1, 0,
            0, 1, 0, -1;
  f.e_w7 << 1, 0, 0, 1,
            1, 0, 0, 0,
            0, 1, 0, -1,
           -1, 0, 1, 0,
            0, 0, 0, 1,
            1, 1, 0, 0,
            0, 0, 1, 1;
  f.d7 << 1, 0, 0, 1,
          0, 0, 1, -1,
          0, 1, 0, 1,
          1, 0, 1, 0,
         -1, 1, 0, 0,
          0, 0, 0, 1,
          1, 0, 0, 0;
  return f;
}

namespace {

DenseMatrix compose_two_level(const DenseMatrix& f7) {
  DenseMatrix out(49, 16);
  out.setZero();
  for (Index p = 0; p < 7; ++p)
    for (Index q = 0; q < 7; ++q)
      for (Index bi = 0; bi < 2; ++bi)
        for (Index bj = 0; bj < 2; ++bj)
          for (Index ii = 0; ii < 2; ++ii)
            for (Index jj = 0; jj < 2; ++jj) {
              // block (bi,bj) in the outer 2x2, element (ii,jj) inside it
              const Index col = (bi * 2 + ii) * 4 + (bj * 2 + jj);
              out(p * 7 + q, col) = f7(p, bi * 2 + bj) * f7(q, ii * 2 + jj);
            }
  return out;
}

}  // namespace

double elementary_pair_error(const Snf& snf) {
  snf.validate();
  const Index t = snf.t, area = t * t;
  double worst = 0.0;
  DenseMatrix a = DenseMatrix::Zero(t, t), b = DenseMatrix::Zero(t, t);
  for (Index i = 0; i < area; ++i) {
    a.setZero();
    a(i / t, i % t) = 1.0;
    for (Index j = 0; j < area; ++j) {
      b.setZero();
      b(j / t, j % t) = 1.0;
      const DenseMatrix diff = stl_reference(a, b, snf) - matmul(a, b);
      worst = std::max(worst, diff.cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

StrassenFactors4x4 strassen_rank49() {
  const auto f = strassen_rank7();
  StrassenFactors4x4 out{
      make_snf<double>(4, compose_two_level(f.e_x7), compose_two_level(f.e_w7), compose_two_level(f.d7))};
  if (elementary_pair_error(out.triple) != 0.0) {
    throw ConstructionError("strassen_rank49: composed factors are not exact");
  }
  return out;
}

Snf select_rows(const Snf& full, const std::vector<Index>& indices) {
  full.validate();
  const auto r = static_cast<Index>(indices.size());
  DenseMatrix ex(r, full.tile_area()), ew(r, full.tile_area()), d(r, full.tile_area());
  for (Index i = 0; i < r; ++i) {
    const Index row = indices[static_cast<std::size_t>(i)];
    if (row < 0 || row >= full.rank()) throw IndexError("select_rows: row index out of range");
    ex.row(i) = full.e_x.row(row);
    ew.row(i) = full.e_w.row(row);
    d.row(i) = full.d.row(row);
  }
  return make_snf<double>(full.t, std::move(ex), std::move(ew), std::move(d));
}

std::vector<Index> pruned_subset_indices(Index full_rank, Index r, Rng& rng) {
  if (r < 1 || r > full_rank) {
    throw ParameterError("pruned_subset_init: rank must lie in [1, " + std::to_string(full_rank) + "]");
  }
  auto perm = rng.permutation(full_rank);
  perm.resize(static_cast<std::size_t>(r));
  std::sort(perm.begin(), perm.end());
  return perm;
}

Snf pruned_subset_init(const StrassenFactors4x4& full, Index r, Rng& rng) {
  return select_rows(full.triple, pruned_subset_indices(full.triple.rank(), r, rng));
}

Snf random_gaussian_init(Index t, Index r, Rng& rng, double scale) {
  if (t < 1 || r < 1) throw ParameterError("random_gaussian_init: t and r must be positive");
  if (!(scale >= 0.0) || !std::isfinite(scale)) {
    throw ParameterError("random_gaussian_init: scale must be finite and non-negative");
  }
  DenseMatrix ex = scale * gaussian_matrix(rng, r, t * t);
  DenseMatrix ew = scale * gaussian_matrix(rng, r, t * t);
  DenseMatrix d = scale * gaussian_matrix(rng, r, t * t);
  return make_snf<double>(t, std::move(ex), std::move(ew), std::move(d));
}

}  // namespace stl
