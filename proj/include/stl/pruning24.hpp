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

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "stl/dense.hpp"
#include "stl/rng.hpp"

namespace stl::pruning {

/// 2:4 mask of a 4x4 tile: exactly two kept rows in every column.
class Mask24 {
 public:
  /// Throws ParameterError unless m is 4x4, binary, with column sums of 2.
  explicit Mask24(const DenseMatrix& m);

  bool kept(Index row, Index col) const { return bits_[static_cast<std::size_t>(row * 4 + col)]; }
  /// Kept row indices of column `col`, ascending.
  std::array<Index, 2> kept_rows(Index col) const;
  DenseMatrix as_matrix() const;

  bool operator==(const Mask24&) const = default;

 private:
  std::array<bool, 16> bits_{};
};

/// Per column, keeps the two largest-magnitude entries; ties go to the lower
/// row index.
Mask24 mask_top2(const DenseMatrix& w);

/// W~ .* mask minimizing the sample mean of ||X W - X (W~ .* mask)||_F^2,
/// solved column by column as a two-variable least squares problem.
/// Throws SingularSystemError if a column's design is degenerate.
DenseMatrix refit_masked(const DenseMatrix& w, const Mask24& mask,
                         std::span<const DenseMatrix> x_samples);

/// Mean over samples of (1/16) ||X a - X b||_F^2.
double mean_tile_residual(const DenseMatrix& a, const DenseMatrix& b,
                          std::span<const DenseMatrix> x_samples);

struct Alpha24Result {
  double alpha = 0.0;
  double standard_error = 0.0;
  std::uint64_t n_w_samples = 0;
  std::uint64_t n_x_samples = 0;
  std::uint64_t seed = 0;
};

struct Alpha24Options {
  /// Held-out X tiles per W; 0 means "same as n_x".
  std::uint64_t n_eval_x = 0;
  /// Draws the W tile for sample i; defaults to a standard Gaussian 4x4.
  std::function<DenseMatrix(Rng&)> weight_sampler;
};

/// Monte Carlo estimate of the refit 2:4 residual on Gaussian 4x4 tiles.
/// Each W sample uses its own stream split from rng's seed, drawing W, then
/// n_x refit tiles, then a disjoint set of held-out tiles.
Alpha24Result estimate_alpha24(std::uint64_t n_w, std::uint64_t n_x, Rng& rng,
                               const Alpha24Options& options = {});

/// Closed-form reduction for isotropic X: E||X d||^2 = 4 ||d||^2, so the
/// refit keeps W's entries and the residual is the two smallest squared
/// entries per column. Returns the Monte Carlo mean over `n_columns` columns of
/// four N(0,1) draws.
double order_statistics_alpha24(std::uint64_t n_columns, Rng& rng);

std::string alpha24_csv_header();
std::string to_csv_row(const Alpha24Result& r);

}  // namespace stl::pruning
