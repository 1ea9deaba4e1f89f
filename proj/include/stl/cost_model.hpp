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

#include <cstdint>
#include <string>
#include <vector>

namespace stl::cost {

using Count = std::uint64_t;

/// X is n x k, W is k x m, tiles are t x t, encodings have rank r.
struct ProblemShape {
  Count n = 0, k = 0, m = 0;
  Count t = 1;
  Count r = 1;
  Count bytes_per_scalar = 2;

  static ProblemShape square(Count n, Count t, Count r, Count bytes_per_scalar = 2) {
    return {n, n, n, t, r, bytes_per_scalar};
  }
  /// Throws stl::ParameterError unless all fields are positive and t | n, k, m.
  void validate() const;
};

/// Analytic cost of one square STL product against naive matmul, with W held
/// in encoded form. One multiply-accumulate is two FLOPs. IO counts ideal
/// reads plus writes only.
struct CostReport {
  Count n = 0, t = 0, r = 0, bytes_per_scalar = 0;
  Count flop_encode = 0, flop_products = 0, flop_decode = 0;
  Count io_encode = 0, io_products = 0, io_decode = 0;
  Count flops_stl = 0, flops_naive = 0;
  Count io_stl_bytes = 0, io_naive_bytes = 0;
  double speedup_flops = 0.0;
};

/// Tile-wise operator cost with all three operands encoded/decoded:
///   2r(nk + km + nm) + 2r (n/t)(k/t)(m/t)
Count flops_general(const ProblemShape& shape);

struct SquareFlops {
  Count flops_stl = 0;    // 4 n^2 r + 2 r (n/t)^3
  Count flops_naive = 0;  // 2 n^3
};
SquareFlops flops_square(Count n, Count t, Count r);

struct SquareIo {
  Count io_stl = 0;    // |X| (2 + 5 r / t^2)
  Count io_naive = 0;  // 3 |X|
};
/// |X| = n^2 * bytes_per_scalar. Accumulator re-reads inside the slice
/// products are not counted.
SquareIo io_square(Count n, Count t, Count r, Count bytes_per_scalar);

CostReport cost_report(Count n, Count t, Count r, Count bytes_per_scalar = 2);

/// IO of a chain of `layers` square STL layers when each interior
/// decode/encode pair is fused away: layers * io_stl - (layers - 1) * (io_1 + io_3).
Count io_fused_chain(Count n, Count t, Count r, Count bytes_per_scalar, Count layers);

/// Runs the batched kernel on dummy data with a MAC counter attached and
/// returns 2 * MACs. With include_weight_encoding the W encode is counted too
/// (matches flops_general); without it the count matches flops_square.
Count count_reference_flops(const ProblemShape& shape, bool include_weight_encoding = true);

struct SpeedupRow {
  Count n = 0, t = 0, r = 0;
  Count flops_stl = 0, flops_naive = 0, io_stl = 0, io_naive = 0;
  double speedup_flops = 0.0;
};

std::vector<SpeedupRow> speedup_table(const std::vector<Count>& n_list,
                                      const std::vector<Count>& r_list, Count t,
                                      Count bytes_per_scalar = 2);

std::string speedup_csv_header();
std::string to_csv_row(const SpeedupRow& row);

}  // namespace stl::cost
