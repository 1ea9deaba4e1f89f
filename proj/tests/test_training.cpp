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

#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "stl/errors.hpp"
#include "stl/rng.hpp"
#include "stl/strassen.hpp"
#include "stl/training.hpp"

using namespace stl;
using namespace stl::training;

namespace {

Snf zero_triple(Index t, Index r) {
  return make_snf<double>(t, DenseMatrix::Zero(r, t * t), DenseMatrix::Zero(r, t * t),
                          DenseMatrix::Zero(r, t * t));
}

Snf random_triple(Rng& rng, Index t, Index r, double scale) {
  return make_snf<double>(t, scale * gaussian_matrix(rng, r, t * t),
                          scale * gaussian_matrix(rng, r, t * t), scale * gaussian_matrix(rng, r, t * t));
}

std::vector<DenseMatrix> gaussian_tiles(Rng& rng, Index t, std::size_t n) {
  std::vector<DenseMatrix> v(n);
  for (auto& x : v) x = gaussian_matrix(rng, t, t);
  return v;
}

/// Gaussian population loss of a triple whose full version is exact: only the
/// dropped rows contribute, with E[u_p v_p u_q v_q] = <ex_p, ex_q><ew_p, ew_q>.
double dropped_rows_population_loss(const Snf& full, const std::vector<Index>& kept) {
  std::vector<bool> in(static_cast<std::size_t>(full.rank()), false);
  for (Index k : kept) in[static_cast<std::size_t>(k)] = true;
  double total = 0.0;
  for (Index p = 0; p < full.rank(); ++p) {
    if (in[static_cast<std::size_t>(p)]) continue;
    for (Index q = 0; q < full.rank(); ++q) {
      if (in[static_cast<std::size_t>(q)]) continue;
      total += full.d.row(p).dot(full.d.row(q)) * full.e_x.row(p).dot(full.e_x.row(q)) *
               full.e_w.row(p).dot(full.e_w.row(q));
    }
  }
  return total / static_cast<double>(full.tile_area());
}

/// Least-squares decoder residual for fixed encoders: regress vec(XW) on u .* v.
double refit_decoder_residual(const DenseMatrix& e_x, const DenseMatrix& e_w, const TileBatch& b) {
  const DenseMatrix feats = (b.x_rows * e_x.transpose()).cwiseProduct(b.w_rows * e_w.transpose());
  const DenseMatrix d = feats.colPivHouseholderQr().solve(b.y_rows);
  return (b.y_rows - feats * d).squaredNorm() / static_cast<double>(b.size() * b.t * b.t);
}

Class0Config small_config() {
  Class0Config cfg;
  cfg.r = 8;
  cfg.steps = 300;
  cfg.batch = 32;
  cfg.n_eval_pairs = 500;
  cfg.eval_interval = 100;
  cfg.plateau_window = 100;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_SUITE("training") {
  TEST_CASE("loss at known triples") {
    const Snf s49 = strassen_rank49().triple;
    Rng rng(1);
    const auto pairs = gaussian_pairs(rng, 4, 200);
    CHECK(class0_loss(s49, pairs) < 1e-20);

    Rng big(2);
    const TileBatch batch = gaussian_batch(big, 4, 100000);
    CHECK(class0_loss(zero_triple(4, 8), batch) == doctest::Approx(4.0).epsilon(0.0125));

    const std::vector<TilePair> id{{DenseMatrix::Identity(4, 4), DenseMatrix::Identity(4, 4)}};
    CHECK(class0_loss(zero_triple(4, 3), id) == 0.25);
    CHECK(class0_loss(zero_triple(4, 3), make_batch(id)) == 0.25);
  }

  TEST_CASE("gradients match central differences") {
    Rng rng(3);
    double worst = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
      Snf s = random_triple(rng, 4, 6, 0.5);
      const TilePair pair{gaussian_matrix(rng, 4, 4), gaussian_matrix(rng, 4, 4)};
      const std::vector<TilePair> one{pair};
      const Class0Gradients g = class0_gradients(s, pair);
      auto f = [&] { return class0_loss(s, one); };
      const Index i = draw % 6, j = (draw * 7) % 16;
      for (auto [m, gm] : {std::pair{&s.e_x, &g.g_ex}, std::pair{&s.e_w, &g.g_ew}, std::pair{&s.d, &g.g_d}}) {
        const double fd = oracle::central_difference(*m, i, j, 1e-5, f);
        worst = std::max(worst, oracle::rel_diff((*gm)(i, j), fd, 1e-4));
      }
    }
    CHECK(worst <= 1e-5);
  }

  TEST_CASE("batch gradients are the mean of per-pair gradients") {
    Rng rng(4);
    const Snf s = random_triple(rng, 4, 5, 0.5);
    const auto pairs = gaussian_pairs(rng, 4, 7);
    Class0Gradients sum{DenseMatrix::Zero(5, 16), DenseMatrix::Zero(5, 16), DenseMatrix::Zero(5, 16)};
    for (const auto& p : pairs) {
      const auto g = class0_gradients(s, p);
      sum.g_ex += g.g_ex / 7.0;
      sum.g_ew += g.g_ew / 7.0;
      sum.g_d += g.g_d / 7.0;
    }
    Class0Gradients batch;
    class0_loss_and_gradients(s, make_batch(pairs), &batch);
    CHECK(oracle::rel_fro(batch.g_ex, sum.g_ex) < 1e-12);
    CHECK(oracle::rel_fro(batch.g_ew, sum.g_ew) < 1e-12);
    CHECK(oracle::rel_fro(batch.g_d, sum.g_d) < 1e-12);
  }

  TEST_CASE("gradients vanish at the exact triple") {
    const Snf s49 = strassen_rank49().triple;
    Rng rng(5);
    const TilePair pair{gaussian_matrix(rng, 4, 4), gaussian_matrix(rng, 4, 4)};
    const auto g = class0_gradients(s49, pair);
    CHECK(g.g_ex.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(g.g_ew.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(g.g_d.cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("g_d is linear in the residual at fixed encodings") {
    // Doubling W doubles both u .* v and the residual e, so g_d scales by 4.
    Rng rng(6);
    const Snf s = random_triple(rng, 4, 5, 0.5);
    const DenseMatrix x = gaussian_matrix(rng, 4, 4), w = gaussian_matrix(rng, 4, 4);
    const auto g1 = class0_gradients(s, {x, w});
    const auto g2 = class0_gradients(s, {x, DenseMatrix(2.0 * w)});
    CHECK(oracle::rel_fro(g2.g_d, 4.0 * g1.g_d) < 1e-12);
  }

  TEST_CASE("z and z' coefficient vectors") {
    Rng rng(7);
    const Snf s = random_triple(rng, 4, 6, 1.0);
    for (Index i = 0; i < 16; ++i) {
      const auto zv = build_zw_vectors(DenseMatrix::Identity(4, 4), i, s.e_x, s.d);
      DenseVector indicator = DenseVector::Zero(16);
      indicator(i) = 1.0;
      CHECK(zv.z == indicator);

      const auto zero = build_zw_vectors(DenseMatrix::Zero(4, 4), i, s.e_x, s.d);
      CHECK(zero.z.isZero(0.0));
      CHECK(zero.z_prime.isZero(0.0));
    }
    const DenseMatrix x = gaussian_matrix(rng, 4, 4);
    const DenseVector u = s.e_x * vec_tile(x, {0, 0, 4});
    for (Index i = 0; i < 16; ++i) {
      const auto zv = build_zw_vectors(x, i, s.e_x, s.d);
      for (int k = 0; k < 3; ++k) {
        const DenseMatrix w = gaussian_matrix(rng, 4, 4);
        CHECK(std::abs(zv.z.dot(vec_tile(w, {0, 0, 4})) - vec_tile(oracle::matmul(x, w), {0, 0, 4})(i)) < 1e-12);
        const DenseVector fe = gaussian_matrix(rng, 6, 1).col(0);
        const DenseVector out = s.d.transpose() * u.cwiseProduct(fe);
        CHECK(std::abs(zv.z_prime.dot(fe) - out(i)) < 1e-12);
      }
    }
    CHECK_THROWS(build_zw_vectors(x, 16, s.e_x, s.d));
  }

  TEST_CASE("solution matrix agrees with per-W regression") {
    Rng rng(8);
    const Snf s = random_triple(rng, 4, 12, 1.0);
    const auto xs = gaussian_tiles(rng, 4, 64);
    const SolutionMatrix f = solution_matrix(s.e_x, s.d, xs);
    CHECK(f.f.rows() == 12);
    CHECK(f.f.cols() == 16);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      const DenseMatrix w = gaussian_matrix(rng, 4, 4);
      const DenseVector a = f.apply(w), b = fake_encoding_regression(s.e_x, s.d, w, xs);
      worst = std::max(worst, (a - b).norm() / b.norm());
    }
    CHECK(worst <= 1e-8);

    const DenseMatrix w = gaussian_matrix(rng, 4, 4);
    CHECK((f.apply(3.0 * w) - 3.0 * f.apply(w)).norm() < 1e-10 * f.apply(w).norm());
  }

  TEST_CASE("solution matrix is optimal among tested encodings") {
    Rng rng(9);
    const Snf s = random_triple(rng, 4, 10, 1.0);
    const auto xs = gaussian_tiles(rng, 4, 40);
    const SolutionMatrix f = solution_matrix(s.e_x, s.d, xs);
    const DenseMatrix w = gaussian_matrix(rng, 4, 4);
    const DenseVector best = f.apply(w);
    const double best_loss = fake_encoding_loss(s.e_x, s.d, best, w, xs);
    for (int k = 0; k < 50; ++k) {
      const DenseVector other = best + (k < 25 ? 0.1 : 1.0) * gaussian_matrix(rng, 10, 1).col(0);
      CHECK(fake_encoding_loss(s.e_x, s.d, other, w, xs) >= best_loss);
    }

    double norm = 0.0;
    for (const auto& x : xs) norm += oracle::matmul(x, w).squaredNorm();
    CHECK(fake_encoding_loss(s.e_x, s.d, DenseVector::Zero(10), w, xs) ==
          doctest::Approx(norm / (16.0 * 40.0)));
  }

  TEST_CASE("exact encoders give a zero-loss fake encoding") {
    const Snf s49 = strassen_rank49().triple;
    Rng rng(10);
    const auto xs = gaussian_tiles(rng, 4, 80);
    const SolutionMatrix f = solution_matrix(s49.e_x, s49.d, xs);
    for (int k = 0; k < 5; ++k) {
      const DenseMatrix w = gaussian_matrix(rng, 4, 4);
      CHECK(fake_encoding_loss(s49.e_x, s49.d, s49.e_w * vec_tile(w, {0, 0, 4}), w, xs) < 1e-24);
      CHECK(fake_encoding_loss(s49.e_x, s49.d, f.apply(w), w, xs) < 1e-16);
    }
  }

  TEST_CASE("singular Gram matrix is reported") {
    const Snf z = zero_triple(4, 5);
    Rng rng(11);
    const auto xs = gaussian_tiles(rng, 4, 10);
    CHECK_THROWS_AS(solution_matrix(z.e_x, z.d, xs), SingularSystemError);
  }

  TEST_CASE("pruned init loss matches the closed form") {
    const auto full = strassen_rank49();
    Rng data(12);
    const TileBatch batch = gaussian_batch(data, 4, 100000);
    for (Index r : {1, 16, 40}) {
      Rng a(r), b(r);
      const auto kept = pruned_subset_indices(49, r, a);
      const Snf sub = pruned_subset_init(full, r, b);
      const double exact = dropped_rows_population_loss(full.triple, kept);
      CHECK(class0_loss(sub, batch) == doctest::Approx(exact).epsilon(0.03));
    }
    CHECK(dropped_rows_population_loss(full.triple, pruned_subset_indices(49, 49, data)) == 0.0);
  }

  TEST_CASE("refit-decoder residual is non-increasing along nested subsets") {
    const auto full = strassen_rank49();
    Rng data(13);
    const TileBatch batch = gaussian_batch(data, 4, 3000);
    double prev = std::numeric_limits<double>::infinity();
    for (Index r = 1; r <= 49; ++r) {
      Rng rng(21);
      const Snf sub = pruned_subset_init(full, r, rng);
      const double res = refit_decoder_residual(sub.e_x, sub.e_w, batch);
      CHECK(res <= prev + 1e-9);
      prev = res;
    }
    CHECK(prev < 1e-20);
  }

  TEST_CASE("training from the exact triple stays exact") {
    Class0Config cfg = small_config();
    cfg.r = 49;
    cfg.steps = 50;
    cfg.eval_interval = 25;
    const auto res = train_class0(cfg);
    CHECK(res.loss_init < 1e-20);
    CHECK(res.loss_final < 1e-20);
  }

  TEST_CASE("training reduces the held-out loss and is deterministic") {
    const Class0Config cfg = small_config();
    const auto a = train_class0(cfg), b = train_class0(cfg);
    CHECK(a.loss_final < a.loss_init);
    CHECK(a.to_json() == b.to_json());
    CHECK(a.snf.e_x == b.snf.e_x);
    CHECK(a.loss_curve.front().step == 1);
    CHECK(a.loss_curve.back().step == 300);

    Class0Config other = cfg;
    other.seed = 12;
    CHECK(train_class0(other).loss_final != a.loss_final);

    Class0Config pop = cfg;
    pop.fixed_weight_population = true;
    pop.n_train_pairs = 64;
    CHECK(train_class0(pop).loss_final < a.loss_init);
  }

  TEST_CASE("divergence carries the loss curve") {
    Class0Config cfg = small_config();
    cfg.init = InitKind::random_gaussian;
    cfg.init_scale = 1.0;
    cfg.step_size = 50.0;
    cfg.grad_clip = 0.0;
    cfg.curve_interval = 1;
    try {
      train_class0(cfg);
      FAIL("expected DivergenceError");
    } catch (const DivergenceError& e) {
      CHECK(!e.curve().empty());
    }
  }

  TEST_CASE("best-of restarts") {
    Class0Config cfg = small_config();
    cfg.steps = 150;
    CHECK(restart_seed(5, 0) == 5);
    CHECK(restart_seed(5, 1) != restart_seed(5, 2));
    CHECK_THROWS_AS(restart_seed(5, -1), ParameterError);

    const auto best = estimate_alpha_stl(cfg, 3);
    Rng eval_rng = Rng(cfg.seed).split(2);
    const TileBatch eval = gaussian_batch(eval_rng, cfg.t, cfg.n_eval_pairs);
    CHECK(best.loss_final <= class0_loss(train_class0(cfg).snf, eval));
    CHECK(best.loss_final == doctest::Approx(class0_loss(best.snf, eval)));
    CHECK_THROWS_AS(estimate_alpha_stl(cfg, 0), ParameterError);
  }

  TEST_CASE("config validation and names") {
    Class0Config cfg;
    cfg.r = 50;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    cfg.r = 8;
    cfg.t = 3;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    cfg.init = InitKind::random_gaussian;
    CHECK_NOTHROW(cfg.validate());
    cfg.momentum = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    cfg.momentum = 0.9;
    cfg.step_size = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);

    CHECK(parse_init_kind("strassen") == InitKind::strassen_subset);
    CHECK(parse_init_kind(to_string(InitKind::random_gaussian)) == InitKind::random_gaussian);
    CHECK_THROWS_AS(parse_init_kind("adam"), ParameterError);
    CHECK(parse_optimizer("sgd") == Optimizer::plain_sgd);
    CHECK_THROWS_AS(parse_optimizer("adam"), ParameterError);
  }
}
