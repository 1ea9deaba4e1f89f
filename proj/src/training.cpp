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

#include "stl/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "stl/strassen.hpp"

namespace stl::training {

namespace {

Index tile_side(const DenseMatrix& m) {
  if (m.rows() != m.cols() || m.rows() < 1) throw ShapeError("expected a square tile");
  return m.rows();
}

DenseVector vec(const DenseMatrix& tile) {
  return Eigen::Map<const DenseVector>(tile.data(), tile.size());
}

nlohmann::json matrix_json(const DenseMatrix& m) {
  auto rows = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

TileBatch make_batch(std::span<const TilePair> pairs) {
  if (pairs.empty()) throw ParameterError("make_batch: no pairs");
  const Index t = tile_side(pairs.front().x);
  const auto n = static_cast<Index>(pairs.size());
  TileBatch b{t, DenseMatrix(n, t * t), DenseMatrix(n, t * t), DenseMatrix(n, t * t)};
  for (Index i = 0; i < n; ++i) {
    const auto& p = pairs[static_cast<std::size_t>(i)];
    if (tile_side(p.x) != t || tile_side(p.w) != t) throw ShapeError("make_batch: mixed tile sizes");
    b.x_rows.row(i) = vec(p.x).transpose();
    b.w_rows.row(i) = vec(p.w).transpose();
    const DenseMatrix y = p.x * p.w;
    b.y_rows.row(i) = vec(y).transpose();
  }
  return b;
}

std::vector<TilePair> gaussian_pairs(Rng& rng, Index t, Index n) {
  std::vector<TilePair> pairs;
  pairs.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    DenseMatrix x = gaussian_matrix(rng, t, t);
    DenseMatrix w = gaussian_matrix(rng, t, t);
    pairs.push_back({std::move(x), std::move(w)});
  }
  return pairs;
}

TileBatch gaussian_batch(Rng& rng, Index t, Index n) {
  const auto pairs = gaussian_pairs(rng, t, n);
  return make_batch(pairs);
}

double class0_loss_and_gradients(const Snf& snf, const TileBatch& batch, Class0Gradients* grads) {
  snf.validate();
  if (batch.t != snf.t) throw ShapeError("class0 loss: batch tile size differs from triple");
  const double area = static_cast<double>(snf.tile_area());
  const double n = static_cast<double>(batch.size());

  const DenseMatrix u = batch.x_rows * snf.e_x.transpose();
  const DenseMatrix v = batch.w_rows * snf.e_w.transpose();
  const DenseMatrix s = u.cwiseProduct(v);
  const DenseMatrix e = batch.y_rows - s * snf.d;
  const double loss = e.squaredNorm() / (area * n);

  if (grads) {
    const double scale = -2.0 / (area * n);
    const DenseMatrix de = e * snf.d.transpose();
    grads->g_d = scale * (s.transpose() * e);
    grads->g_ex = scale * (de.cwiseProduct(v).transpose() * batch.x_rows);
    grads->g_ew = scale * (de.cwiseProduct(u).transpose() * batch.w_rows);
  }
  return loss;
}

double class0_loss(const Snf& snf, const TileBatch& batch) {
  return class0_loss_and_gradients(snf, batch, nullptr);
}

double class0_loss(const Snf& snf, std::span<const TilePair> pairs) {
  return class0_loss(snf, make_batch(pairs));
}

Class0Gradients class0_gradients(const Snf& snf, const TilePair& pair) {
  Class0Gradients g;
  class0_loss_and_gradients(snf, make_batch(std::span<const TilePair>(&pair, 1)), &g);
  return g;
}

std::string to_string(InitKind kind) {
  return kind == InitKind::strassen_subset ? "strassen_subset" : "random_gaussian";
}

InitKind parse_init_kind(const std::string& s) {
  if (s == "strassen_subset" || s == "strassen") return InitKind::strassen_subset;
  if (s == "random_gaussian" || s == "random") return InitKind::random_gaussian;
  throw ParameterError("unknown init kind '" + s + "'");
}

std::string to_string(Optimizer opt) { return opt == Optimizer::momentum ? "momentum" : "plain_sgd"; }

Optimizer parse_optimizer(const std::string& s) {
  if (s == "momentum") return Optimizer::momentum;
  if (s == "plain_sgd" || s == "sgd") return Optimizer::plain_sgd;
  throw ParameterError("unknown optimizer '" + s + "'");
}

void Class0Config::validate() const {
  if (t < 1 || r < 1) throw ParameterError("Class0Config: t and r must be positive");
  if (n_eval_pairs < 1 || steps < 1 || batch < 1 || plateau_window < 1 || eval_interval < 1 ||
      curve_interval < 1) {
    throw ParameterError("Class0Config: counts must be positive");
  }
  if (fixed_weight_population && n_train_pairs < 1) {
    throw ParameterError("Class0Config: weight population must be nonempty");
  }
  if (!(step_size > 0.0)) throw ParameterError("Class0Config: step_size must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw ParameterError("Class0Config: momentum must be in [0, 1)");
  if (grad_clip < 0.0) throw ParameterError("Class0Config: grad_clip must be non-negative");
  if (init == InitKind::strassen_subset && (t != 4 || r > 49)) {
    throw ParameterError("Class0Config: strassen_subset init needs t = 4 and r <= 49");
  }
}

Snf initial_triple(const Class0Config& cfg) {
  cfg.validate();
  Rng init_rng = Rng(cfg.seed).split(0);
  if (cfg.init == InitKind::strassen_subset) {
    return pruned_subset_init(strassen_rank49(), cfg.r, init_rng);
  }
  return random_gaussian_init(cfg.t, cfg.r, init_rng, cfg.init_scale);
}

Class0Result train_class0(const Class0Config& cfg) {
  cfg.validate();
  const Rng root(cfg.seed);
  Rng data_rng = root.split(1);
  Rng eval_rng = root.split(2);
  Rng population_rng = root.split(3);

  Snf snf = initial_triple(cfg);
  const TileBatch eval = gaussian_batch(eval_rng, cfg.t, cfg.n_eval_pairs);

  std::vector<DenseMatrix> population;
  if (cfg.fixed_weight_population) {
    for (Index i = 0; i < cfg.n_train_pairs; ++i) {
      population.push_back(gaussian_matrix(population_rng, cfg.t, cfg.t));
    }
  }

  Class0Result result;
  result.r = cfg.r;
  result.init = cfg.init;
  result.seed = cfg.seed;
  result.loss_init = class0_loss(snf, eval);
  result.loss_final = result.loss_init;
  result.snf = snf;

  const double divergence_level = 10.0 * result.loss_init + 1e-8;
  Index above = 0;

  Class0Gradients g;
  Class0Gradients velocity{DenseMatrix::Zero(cfg.r, cfg.t * cfg.t),
                           DenseMatrix::Zero(cfg.r, cfg.t * cfg.t),
                           DenseMatrix::Zero(cfg.r, cfg.t * cfg.t)};
  double step_size = cfg.step_size;
  double window_sum = 0.0;
  double best_window = std::numeric_limits<double>::infinity();

  const Index t = cfg.t, area = t * t;
  TileBatch batch{t, DenseMatrix(cfg.batch, area), DenseMatrix(cfg.batch, area),
                  DenseMatrix(cfg.batch, area)};
  for (Index step = 1; step <= cfg.steps; ++step) {
    // Same draw order as gaussian_pairs: X then W for each pair.
    for (Index i = 0; i < cfg.batch; ++i) {
      for (Index c = 0; c < area; ++c) batch.x_rows(i, c) = data_rng.normal();
      if (cfg.fixed_weight_population) {
        const auto& w = population[data_rng.below(static_cast<std::uint64_t>(population.size()))];
        batch.w_rows.row(i) = vec(w).transpose();
      } else {
        for (Index c = 0; c < area; ++c) batch.w_rows(i, c) = data_rng.normal();
      }
      for (Index a = 0; a < t; ++a)
        for (Index b = 0; b < t; ++b) {
          double acc = 0.0;
          for (Index c = 0; c < t; ++c) acc += batch.x_rows(i, a * t + c) * batch.w_rows(i, c * t + b);
          batch.y_rows(i, a * t + b) = acc;
        }
    }
    const double loss = class0_loss_and_gradients(snf, batch, &g);
    if (!std::isfinite(loss)) {
      throw DivergenceError("train_class0: non-finite loss at step " + std::to_string(step),
                            result.loss_curve);
    }
    if (step % cfg.curve_interval == 0 || step == 1) result.loss_curve.push_back({step, loss});

    above = loss > divergence_level ? above + 1 : 0;
    if (above >= 100) {
      throw DivergenceError("train_class0: loss above 10x initial for 100 steps (step " +
                                std::to_string(step) + ")",
                            result.loss_curve);
    }

    if (cfg.grad_clip > 0.0) {
      const double norm =
          std::sqrt(g.g_ex.squaredNorm() + g.g_ew.squaredNorm() + g.g_d.squaredNorm());
      if (norm > cfg.grad_clip) {
        const double c = cfg.grad_clip / norm;
        g.g_ex *= c;
        g.g_ew *= c;
        g.g_d *= c;
      }
    }
    if (cfg.optimizer == Optimizer::momentum) {
      velocity.g_ex = cfg.momentum * velocity.g_ex + g.g_ex;
      velocity.g_ew = cfg.momentum * velocity.g_ew + g.g_ew;
      velocity.g_d = cfg.momentum * velocity.g_d + g.g_d;
      snf.e_x -= step_size * velocity.g_ex;
      snf.e_w -= step_size * velocity.g_ew;
      snf.d -= step_size * velocity.g_d;
    } else {
      snf.e_x -= step_size * g.g_ex;
      snf.e_w -= step_size * g.g_ew;
      snf.d -= step_size * g.g_d;
    }

    window_sum += loss;
    if (step % cfg.plateau_window == 0) {
      const double window_mean = window_sum / static_cast<double>(cfg.plateau_window);
      if (window_mean > 0.99 * best_window) step_size *= 0.5;
      best_window = std::min(best_window, window_mean);
      window_sum = 0.0;
    }

    if (step % cfg.eval_interval == 0 || step == cfg.steps) {
      const double held_out = class0_loss(snf, eval);
      if (held_out < result.loss_final) {
        result.loss_final = held_out;
        result.best_step = step;
        result.snf = snf;
      }
    }
  }
  return result;
}

std::uint64_t restart_seed(std::uint64_t seed, Index k) {
  if (k < 0) throw ParameterError("restart_seed: restart index must be non-negative");
  return k == 0 ? seed : Rng(seed).split(1000 + static_cast<std::uint64_t>(k)).seed();
}

Class0Result estimate_alpha_stl(const Class0Config& cfg, Index restarts) {
  if (restarts < 1) throw ParameterError("estimate_alpha_stl: restarts must be positive");
  cfg.validate();
  Rng eval_rng = Rng(cfg.seed).split(2);
  const TileBatch eval = gaussian_batch(eval_rng, cfg.t, cfg.n_eval_pairs);

  Class0Result best;
  best.loss_final = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < restarts; ++k) {
    Class0Config run = cfg;
    run.seed = restart_seed(cfg.seed, k);
    Class0Result res = train_class0(run);
    res.loss_final = class0_loss(res.snf, eval);
    if (res.loss_final < best.loss_final) best = std::move(res);
  }
  return best;
}

std::string Class0Result::to_json() const {
  nlohmann::json j;
  j["r"] = r;
  j["init"] = to_string(init);
  j["seed"] = seed;
  j["loss_init"] = loss_init;
  j["loss_final"] = loss_final;
  j["best_step"] = best_step;
  auto curve = nlohmann::json::array();
  for (const auto& c : loss_curve) curve.push_back({c.step, c.loss});
  j["loss_curve"] = std::move(curve);
  j["snf"] = {{"t", snf.t},
              {"e_x", matrix_json(snf.e_x)},
              {"e_w", matrix_json(snf.e_w)},
              {"d", matrix_json(snf.d)}};
  return j.dump();
}

ZVectors build_zw_vectors(const DenseMatrix& x, Index i, const DenseMatrix& e_x,
                          const DenseMatrix& d) {
  const Index t = tile_side(x);
  const Index area = t * t;
  if (i < 0 || i >= area) throw IndexError("build_zw_vectors: coordinate out of range");
  if (e_x.cols() != area || d.cols() != area || e_x.rows() != d.rows()) {
    throw ShapeError("build_zw_vectors: encoder/decoder must both be r x t^2");
  }
  // vec(XW)_{a*t+b} = sum_c X(a,c) W(c,b)
  const Index a = i / t, b = i % t;
  ZVectors out{DenseVector::Zero(area), DenseVector(e_x.rows())};
  for (Index c = 0; c < t; ++c) out.z(c * t + b) = x(a, c);
  const DenseVector u = e_x * vec(x);
  out.z_prime = d.col(i).cwiseProduct(u);
  return out;
}

DenseVector SolutionMatrix::apply(const DenseMatrix& w) const { return f * vec(w); }

SolutionMatrix solution_matrix(const DenseMatrix& e_x, const DenseMatrix& d,
                               std::span<const DenseMatrix> x_samples) {
  if (x_samples.empty()) throw ParameterError("solution_matrix: no samples");
  const Index r = e_x.rows(), area = e_x.cols();
  DenseMatrix zz_prime = DenseMatrix::Zero(r, r);
  DenseMatrix z_cross = DenseMatrix::Zero(r, area);
  for (const auto& x : x_samples) {
    for (Index i = 0; i < area; ++i) {
      const auto zv = build_zw_vectors(x, i, e_x, d);
      zz_prime.noalias() += zv.z_prime * zv.z_prime.transpose();
      z_cross.noalias() += zv.z_prime * zv.z.transpose();
    }
  }
  const double count = static_cast<double>(x_samples.size()) * static_cast<double>(area);
  zz_prime /= count;
  z_cross /= count;
  return {symmetric_solve(zz_prime, z_cross)};
}

DenseVector fake_encoding_regression(const DenseMatrix& e_x, const DenseMatrix& d,
                                     const DenseMatrix& w, std::span<const DenseMatrix> x_samples) {
  if (x_samples.empty()) throw ParameterError("fake_encoding_regression: no samples");
  const Index r = e_x.rows(), area = e_x.cols();
  const auto n = static_cast<Index>(x_samples.size());
  DenseMatrix design(n * area, r);
  DenseVector targets(n * area);
  const DenseVector w_vec = vec(w);
  for (Index s = 0; s < n; ++s) {
    for (Index i = 0; i < area; ++i) {
      const auto zv = build_zw_vectors(x_samples[static_cast<std::size_t>(s)], i, e_x, d);
      design.row(s * area + i) = zv.z_prime.transpose();
      targets(s * area + i) = zv.z.dot(w_vec);
    }
  }
  return least_squares(design, targets);
}

double fake_encoding_loss(const DenseMatrix& e_x, const DenseMatrix& d, const DenseVector& fe,
                          const DenseMatrix& w, std::span<const DenseMatrix> x_samples) {
  if (x_samples.empty()) throw ParameterError("fake_encoding_loss: no samples");
  if (fe.size() != e_x.rows()) throw ShapeError("fake_encoding_loss: encoding length must be r");
  const double area = static_cast<double>(e_x.cols());
  double total = 0.0;
  for (const auto& x : x_samples) {
    const DenseMatrix y = x * w;
    const DenseVector u = e_x * vec(x);
    total += (vec(y) - d.transpose() * u.cwiseProduct(fe)).squaredNorm();
  }
  return total / (area * static_cast<double>(x_samples.size()));
}

}  // namespace stl::training
