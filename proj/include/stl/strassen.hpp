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

#include <vector>

#include "stl/dense.hpp"
#include "stl/rng.hpp"
#include "stl/snf.hpp"

namespace stl {

/// Strassen's seven products for 2x2 blocks, as 7 x 4 factors over row-major
/// vec of 2x2 matrices:
///
///   M1 = (A11 + A22)(B11 + B22)   M5 = (A11 + A12) B22
///   M2 = (A21 + A22) B11          M6 = (A21 - A11)(B11 + B12)
///   M3 = A11 (B12 - B22)          M7 = (A12 - A22)(B21 + B22)
///   M4 = A22 (B21 - B11)
///
///   C11 = M1 + M4 - M5 + M7   C12 = M3 + M5
///   C21 = M2 + M4             C22 = M1 - M2 + M3 + M6
struct StrassenFactors2x2 {
  DenseMatrix e_x7;
  DenseMatrix e_w7;
  DenseMatrix d7;

  Snf as_snf() const { return make_snf<double>(2, e_x7, e_w7, d7); }
};

/// Two-level Strassen: an exact rank-49 triple for 4x4 tiles.
struct StrassenFactors4x4 {
  Snf triple;
};

StrassenFactors2x2 strassen_rank7();

/// Composes the rank-7 factors two levels deep. Row p*7+q of each factor is
/// the outer product p applied to 2x2 blocks with the inner product q applied
/// inside each block; columns follow row-major vec of the 4x4 tile. Throws
/// ConstructionError if the result is not exact on all 256 elementary pairs.
StrassenFactors4x4 strassen_rank49();

/// Largest |STL(E_ab, E_cd) - E_ab E_cd| over all pairs of elementary t x t
/// matrices (t^4 pairs).
double elementary_pair_error(const Snf& snf);

/// The rows `indices` (in the given order) of all three factors.
Snf select_rows(const Snf& full, const std::vector<Index>& indices);

/// Random row subset of the rank-49 triple. The subset is the first r entries
/// of a seeded permutation of [0, 49), sorted ascending, so a fixed seed
/// yields nested subsets as r grows.
Snf pruned_subset_init(const StrassenFactors4x4& full, Index r, Rng& rng);

/// The row indices pruned_subset_init would choose.
std::vector<Index> pruned_subset_indices(Index full_rank, Index r, Rng& rng);

/// Three independent r x t^2 factors with i.i.d. N(0, scale^2) entries.
Snf random_gaussian_init(Index t, Index r, Rng& rng, double scale);

}  // namespace stl
