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

#include "stl/pruning24.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "stl/io.hpp"

namespace stl::pruning {

Mask24::Mask24(const DenseMatrix& m) {
  if (m.rows() != 4 || m.cols() != 4) throw ParameterError("Mask24: mask must be 4x4");
  for (Index j = 0; j < 4; ++j) {
    int ones = 0;
    for (Index i = 0; i < 4; ++i) {
      if (m(i, j) != 0.0 && m(i, j) != 1.0) throw ParameterError("Mask24: entries must be 0 or 1");
      bits_[static_cast<std::size_t>(i * 4 + j)] = m(i, j) == 1.0;
      ones += m(i, j) == 1.0;
    }
    if (ones != 2) throw ParameterError("Mask24: every column must keep exactly two entries");
  }
}

std::array<Index, 2> Mask24::kept_rows(Index col) const {
  std::array<Index, 2> rows{};
  std::size_t found = 0;
  for (Index i = 0; i < 4; ++i)
    if (kept(i, col)) rows[found++] = i;
  return rows;
}

DenseMatrix Mask24::as_matrix() const {
  DenseMatrix m(4, 4);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 4; ++j) m(i, j) = kept(i, j) ? 1.0 : 0.0;
  return m;
}

Mask24 mask_top2(const DenseMatrix& w) {
  if (w.rows() != 4 || w.cols() != 4) throw ShapeError("mask_top2: expected a 4x4 tile");
  DenseMatrix m = DenseMatrix::Zero(4, 4);
  for (Index j = 0; j < 4; ++j) {
    std::array<Index, 4> order{0, 1, 2, 3};
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return std::abs(w(a, j)) > std::abs(w(b, j)); });
    m(order[0], j) = 1.0;
    m(order[1], j) = 1.0;
  }
  return Mask24(m);
}

DenseMatrix refit_masked(const DenseMatrix& w, const Mask24& mask,
                         std::span<const DenseMatrix> x_samples) {
  if (w.rows() != 4 || w.cols() != 4) throw ShapeError("refit_masked: expected a 4x4 tile");
  if (x_samples.empty()) throw ParameterError("refit_masked: empty sample set");
  const auto n = static_cast<Index>(x_samples.size());
  DenseMatrix refit = DenseMatrix::Zero(4, 4);
  DenseMatrix design(4 * n, 2);
  DenseVector targets(4 * n);
  for (Index j = 0; j < 4; ++j) {
    const auto rows = mask.kept_rows(j);
    for (Index s = 0; s < n; ++s) {
      const DenseMatrix& x = x_samples[static_cast<std::size_t>(s)];
      if (x.rows() != 4 || x.cols() != 4) throw ShapeError("refit_masked: samples must be 4x4");
      design.block(4 * s, 0, 4, 1) = x.col(rows[0]);
      design.block(4 * s, 1, 4, 1) = x.col(rows[1]);
      targets.segment(4 * s, 4) = x * w.col(j);
    }
    const DenseVector c = least_squares(design, targets);
    refit(rows[0], j) = c(0);
    refit(rows[1], j) = c(1);
  }
  return refit;
}

double mean_tile_residual(const DenseMatrix& a, const DenseMatrix& b,
                          std::span<const DenseMatrix> x_samples) {
  if (x_samples.empty()) throw ParameterError("mean_tile_residual: empty sample set");
  const DenseMatrix diff = a - b;
  double total = 0.0;
  for (const auto& x : x_samples) total += (x * diff).squaredNorm();
  return total / (16.0 * static_cast<double>(x_samples.size()));
}

Alpha24Result estimate_alpha24(std::uint64_t n_w, std::uint64_t n_x, Rng& rng,
                               const Alpha24Options& options) {
  if (n_w < 1 || n_x < 1) throw ParameterError("estimate_alpha24: sample counts must be positive");
  const std::uint64_t n_eval = options.n_eval_x ? options.n_eval_x : n_x;
  std::vector<DenseMatrix> fit(n_x), eval(n_eval);
  std::vector<double> per_w(n_w);
  for (std::uint64_t i = 0; i < n_w; ++i) {
    Rng stream = rng.split(i);
    const DenseMatrix w = options.weight_sampler ? options.weight_sampler(stream)
                                                 : gaussian_matrix(stream, 4, 4);
    for (auto& x : fit) x = gaussian_matrix(stream, 4, 4);
    for (auto& x : eval) x = gaussian_matrix(stream, 4, 4);
    const Mask24 mask = mask_top2(w);
    const DenseMatrix pruned = refit_masked(w, mask, fit);
    per_w[i] = mean_tile_residual(w, pruned, eval);
  }
  const double n = static_cast<double>(n_w);
  const double mean = std::accumulate(per_w.begin(), per_w.end(), 0.0) / n;
  double var = 0.0;
  for (const double v : per_w) var += (v - mean) * (v - mean);
  var = n_w > 1 ? var / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n), n_w, n_x, rng.seed()};
}

double order_statistics_alpha24(std::uint64_t n_columns, Rng& rng) {
  if (n_columns < 1) throw ParameterError("order_statistics_alpha24: need at least one draw");
  double total = 0.0;
  std::array<double, 4> sq{};
  for (std::uint64_t c = 0; c < n_columns; ++c) {
    for (auto& v : sq) {
      const double z = rng.normal();
      v = z * z;
    }
    std::sort(sq.begin(), sq.end());
    total += sq[0] + sq[1];
  }
  return total / static_cast<double>(n_columns);
}

std::string alpha24_csv_header() { return "seed,n_w,n_x,alpha,stderr"; }

std::string to_csv_row(const Alpha24Result& r) {
  return std::to_string(r.seed) + ',' + std::to_string(r.n_w_samples) + ',' +
         std::to_string(r.n_x_samples) + ',' + io::format_double(r.alpha) + ',' +
         io::format_double(r.standard_error);
}

}  // namespace stl::pruning
