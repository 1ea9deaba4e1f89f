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
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stl/dense.hpp"
#include "stl/rng.hpp"
#include "stl/snf.hpp"

namespace stl::training {

/// One (X, W) pair of t x t tiles.
struct TilePair {
  DenseMatrix x;
  DenseMatrix w;
};

/// Pairs stacked as rows: x_rows(i) = vec(X_i), w_rows(i) = vec(W_i),
/// y_rows(i) = vec(X_i W_i).
struct TileBatch {
  Index t = 0;
  DenseMatrix x_rows;
  DenseMatrix w_rows;
  DenseMatrix y_rows;

  Index size() const noexcept { return x_rows.rows(); }
};

TileBatch make_batch(std::span<const TilePair> pairs);
/// n i.i.d. Gaussian pairs.
TileBatch gaussian_batch(Rng& rng, Index t, Index n);
std::vector<TilePair> gaussian_pairs(Rng& rng, Index t, Index n);

struct Class0Gradients {
  DenseMatrix g_ex;
  DenseMatrix g_ew;
  DenseMatrix g_d;
};

/// Mean over pairs of (1/t^2) ||vec(XW) - D^T (E_X vec(X) .* E_W vec(W))||^2.
double class0_loss(const Snf& snf, std::span<const TilePair> pairs);
double class0_loss(const Snf& snf, const TileBatch& batch);

/// Analytic gradients of the per-pair loss. With u = E_X vec X,
/// v = E_W vec W and e = vec(XW) - D^T (u .* v):
///   g_d  = -(2/t^2) (u .* v) e^T
///   g_ex = -(2/t^2) ((D e) .* v) vec(X)^T
///   g_ew = -(2/t^2) ((D e) .* u) vec(W)^T
Class0Gradients class0_gradients(const Snf& snf, const TilePair& pair);

/// Batch-mean loss; fills `grads` with the batch-mean gradients when non-null.
double class0_loss_and_gradients(const Snf& snf, const TileBatch& batch, Class0Gradients* grads);

enum class InitKind { strassen_subset, random_gaussian };
enum class Optimizer { plain_sgd, momentum };

std::string to_string(InitKind kind);
InitKind parse_init_kind(const std::string& s);
std::string to_string(Optimizer opt);
Optimizer parse_optimizer(const std::string& s);

struct Class0Config {
  Index t = 4;
  Index r = 32;
  InitKind init = InitKind::strassen_subset;
  std::uint64_t seed = 0;
  /// Size of the fixed W population; only used with fixed_weight_population.
  Index n_train_pairs = 4096;
  bool fixed_weight_population = false;
  Index n_eval_pairs = 20000;
  Index steps = 30000;
  double step_size = 2e-2;
  Optimizer optimizer = Optimizer::momentum;
  double momentum = 0.9;
  Index batch = 128;
  /// Entry standard deviation of the random_gaussian init.
  double init_scale = 0.3;
  /// Global gradient-norm clip; 0 disables.
  double grad_clip = 10.0;
  /// The step size is halved when the mean training loss over a window of
  /// this many steps fails to improve on the best window by 1%.
  Index plateau_window = 2000;
  Index eval_interval = 1000;
  Index curve_interval = 100;

  void validate() const;
};

struct CurvePoint {
  Index step = 0;
  double loss = 0.0;
};

struct Class0Result {
  Index r = 0;
  InitKind init = InitKind::strassen_subset;
  std::uint64_t seed = 0;
  double loss_init = 0.0;
  /// Held-out loss of the best checkpoint.
  double loss_final = 0.0;
  Index best_step = 0;
  std::vector<CurvePoint> loss_curve;
  Snf snf;

  std::string to_json() const;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::vector<CurvePoint> curve)
      : std::runtime_error(what), curve_(std::move(curve)) {}
  const std::vector<CurvePoint>& curve() const noexcept { return curve_; }

 private:
  std::vector<CurvePoint> curve_;
};

/// Initial triple for a config (pruned Strassen needs t = 4 and r <= 49).
Snf initial_triple(const Class0Config& cfg);

/// Minibatch gradient descent on (E_X, E_W, D). Throws DivergenceError when the
/// batch loss stays above 10x the initial held-out loss for 100 consecutive
/// steps.
Class0Result train_class0(const Class0Config& cfg);

/// Best of `restarts` independent runs. Restart 0 is train_class0(cfg); the
/// others reseed from cfg.seed. Every restart's checkpoint is rescored on the
/// held-out set of restart 0, and the lowest one is returned with that score.
Class0Result estimate_alpha_stl(const Class0Config& cfg, Index restarts = 4);

/// Seed of restart k (k = 0 gives cfg.seed).
std::uint64_t restart_seed(std::uint64_t seed, Index k);

// Fake encodings with fixed (E_X, D).

/// Coefficient vectors for output coordinate i of a single tile:
///   z . vec(W) = vec(XW)_i
///   z_prime . fe = (D^T (E_X vec(X) .* fe))_i,  z_prime_p = D(p, i) (E_X vec X)_p
struct ZVectors {
  DenseVector z;
  DenseVector z_prime;
};
ZVectors build_zw_vectors(const DenseMatrix& x, Index i, const DenseMatrix& e_x,
                          const DenseMatrix& d);

/// r x t^2 map sending vec(W) to its L2-optimal fake encoding:
///   F = E[z' z'^T]^-1 E[z' z^T], expectations over the samples and i.
struct SolutionMatrix {
  DenseMatrix f;

  DenseVector apply(const DenseMatrix& w) const;
};

/// Throws SingularSystemError when E[z' z'^T] has condition number > 1e12.
SolutionMatrix solution_matrix(const DenseMatrix& e_x, const DenseMatrix& d,
                               std::span<const DenseMatrix> x_samples);

/// The optimal fake encoding of one W computed directly, as a least squares
/// problem over all (X, i) equations.
DenseVector fake_encoding_regression(const DenseMatrix& e_x, const DenseMatrix& d,
                                     const DenseMatrix& w, std::span<const DenseMatrix> x_samples);

/// Mean over samples of (1/t^2) ||vec(XW) - D^T (E_X vec(X) .* fe)||^2.
double fake_encoding_loss(const DenseMatrix& e_x, const DenseMatrix& d, const DenseVector& fe,
                          const DenseMatrix& w, std::span<const DenseMatrix> x_samples);

}  // namespace stl::training
