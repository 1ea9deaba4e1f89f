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

#include "stl/cost_model.hpp"

#include <stdexcept>

#include "stl/errors.hpp"
#include "stl/io.hpp"
#include "stl/snf.hpp"

namespace stl::cost {

namespace {

Count mul(Count a, Count b) {
  Count out;
  if (__builtin_mul_overflow(a, b, &out)) throw std::overflow_error("cost model: integer overflow");
  return out;
}

Count add(Count a, Count b) {
  Count out;
  if (__builtin_add_overflow(a, b, &out)) throw std::overflow_error("cost model: integer overflow");
  return out;
}

void require_square(Count n, Count t, Count r) {
  ProblemShape::square(n, t, r, 1).validate();
}

}  // namespace

void ProblemShape::validate() const {
  if (n == 0 || k == 0 || m == 0 || t == 0 || r == 0 || bytes_per_scalar == 0) {
    throw ParameterError("ProblemShape: all fields must be positive");
  }
  if (n % t || k % t || m % t) throw ParameterError("ProblemShape: t must divide n, k and m");
}

Count flops_general(const ProblemShape& s) {
  s.validate();
  // Each encode/decode of a tile is an r x t^2 mat-vec: 2 t^2 r FLOPs, and
  // there are nk/t^2 + km/t^2 + nm/t^2 of them.
  const Count mac_encode = add(add(mul(s.n, s.k), mul(s.k, s.m)), mul(s.n, s.m));
  const Count mac_products = mul(mul(mul(s.n / s.t, s.k / s.t), s.m / s.t), s.r);
  return mul(2, add(mul(mac_encode, s.r), mac_products));
}

SquareFlops flops_square(Count n, Count t, Count r) {
  require_square(n, t, r);
  const Count nb = n / t;
  return {add(mul(mul(4, mul(n, n)), r), mul(mul(2, r), mul(mul(nb, nb), nb))),
          mul(2, mul(mul(n, n), n))};
}

CostReport cost_report(Count n, Count t, Count r, Count bytes_per_scalar) {
  ProblemShape::square(n, t, r, bytes_per_scalar).validate();
  CostReport c;
  c.n = n;
  c.t = t;
  c.r = r;
  c.bytes_per_scalar = bytes_per_scalar;

  const Count nb = n / t;
  c.flop_encode = mul(mul(2, mul(n, n)), r);
  c.flop_products = mul(mul(2, r), mul(mul(nb, nb), nb));
  c.flop_decode = c.flop_encode;
  c.flops_stl = add(add(c.flop_encode, c.flop_products), c.flop_decode);
  c.flops_naive = mul(2, mul(mul(n, n), n));

  const Count x_bytes = mul(mul(n, n), bytes_per_scalar);
  // |X| r / t^2 = (n/t)^2 * r * bytes: the size of all r slices together.
  const Count slices_bytes = mul(mul(mul(nb, nb), r), bytes_per_scalar);
  c.io_encode = add(x_bytes, slices_bytes);
  c.io_products = mul(3, slices_bytes);
  c.io_decode = add(x_bytes, slices_bytes);
  c.io_stl_bytes = add(add(c.io_encode, c.io_products), c.io_decode);
  c.io_naive_bytes = mul(3, x_bytes);
  c.speedup_flops = static_cast<double>(c.flops_naive) / static_cast<double>(c.flops_stl);
  return c;
}

SquareIo io_square(Count n, Count t, Count r, Count bytes_per_scalar) {
  const auto c = cost_report(n, t, r, bytes_per_scalar);
  return {c.io_stl_bytes, c.io_naive_bytes};
}

Count io_fused_chain(Count n, Count t, Count r, Count bytes_per_scalar, Count layers) {
  if (layers == 0) throw ParameterError("io_fused_chain: need at least one layer");
  const auto c = cost_report(n, t, r, bytes_per_scalar);
  return mul(layers, c.io_stl_bytes) - mul(layers - 1, add(c.io_encode, c.io_decode));
}

Count count_reference_flops(const ProblemShape& s, bool include_weight_encoding) {
  s.validate();
  const auto t = static_cast<Index>(s.t), r = static_cast<Index>(s.r);
  const DenseMatrix x = DenseMatrix::Ones(static_cast<Index>(s.n), static_cast<Index>(s.k));
  const DenseMatrix w = DenseMatrix::Ones(static_cast<Index>(s.k), static_cast<Index>(s.m));
  const Snf snf = make_snf<double>(t, DenseMatrix::Ones(r, t * t), DenseMatrix::Ones(r, t * t),
                                   DenseMatrix::Ones(r, t * t));
  MacCounter counter;
  const auto w_enc = encode_tiles(w, snf.e_w, t, include_weight_encoding ? &counter : nullptr);
  (void)stl_batched(x, w_enc, snf, &counter);
  return counter.flops();
}

std::vector<SpeedupRow> speedup_table(const std::vector<Count>& n_list,
                                      const std::vector<Count>& r_list, Count t,
                                      Count bytes_per_scalar) {
  std::vector<SpeedupRow> rows;
  for (const Count n : n_list) {
    for (const Count r : r_list) {
      const auto c = cost_report(n, t, r, bytes_per_scalar);
      rows.push_back({n, t, r, c.flops_stl, c.flops_naive, c.io_stl_bytes, c.io_naive_bytes,
                      c.speedup_flops});
    }
  }
  return rows;
}

std::string speedup_csv_header() {
  return "n,t,r,flops_stl,flops_naive,io_stl,io_naive,speedup_flops";
}

std::string to_csv_row(const SpeedupRow& row) {
  return std::to_string(row.n) + ',' + std::to_string(row.t) + ',' + std::to_string(row.r) + ',' +
         std::to_string(row.flops_stl) + ',' + std::to_string(row.flops_naive) + ',' +
         std::to_string(row.io_stl) + ',' + std::to_string(row.io_naive) + ',' +
         io::format_double(row.speedup_flops);
}

}  // namespace stl::cost
