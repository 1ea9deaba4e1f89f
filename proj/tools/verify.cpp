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

#include "verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "stl/cost_model.hpp"
#include "stl/io.hpp"
#include "stl/rng.hpp"
#include "stl/snf.hpp"
#include "stl/strassen.hpp"
#include "stl/toy_network.hpp"
#include "stl/training.hpp"

namespace stl::cli {

namespace {

struct Check {
  std::string name;
  std::string group;
  std::function<CheckOutcome(Rng&)> run;
};

CheckOutcome outcome(bool passed, const std::string& detail) { return {{}, {}, passed, detail}; }

std::string sci(double v) {
  std::ostringstream s;
  s.precision(3);
  s << std::scientific << v;
  return s.str();
}

double fd_relative(double fd, double an, double floor) {
  return std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), floor});
}

CheckOutcome strassen_exactness(Rng& rng, const std::filesystem::path& golden_dir) {
  const auto path = golden_dir / "strassen49.snf";
  Snf golden;
  try {
    golden = io::load_snf(path);
  } catch (const std::exception& e) {
    return outcome(false, std::string("cannot load golden triple: ") + e.what());
  }
  if (golden.t != 4 || golden.rank() != 49) return outcome(false, "golden triple is not 4x4 rank 49");

  const Snf built = strassen_rank49().triple;
  const double drift = std::max({(golden.e_x - built.e_x).cwiseAbs().maxCoeff(),
                                 (golden.e_w - built.e_w).cwiseAbs().maxCoeff(),
                                 (golden.d - built.d).cwiseAbs().maxCoeff()});
  const double elementary = elementary_pair_error(golden);
  double worst = 0.0;
  for (Index n : {4, 8, 16}) {
    for (int trial = 0; trial < 20; ++trial) {
      const DenseMatrix x = gaussian_matrix(rng, n, n), w = gaussian_matrix(rng, n, n);
      const DenseMatrix y = stl_batched(x, encode_tiles(w, golden.e_w, 4), golden);
      worst = std::max(worst, relative_frobenius_error(y, DenseMatrix(x * w)));
    }
  }
  const bool ok = drift == 0.0 && elementary == 0.0 && worst <= 1e-12;
  return outcome(ok, "golden drift " + sci(drift) + ", elementary error " + sci(elementary) +
                         ", max relative error " + sci(worst) + " (tol 1e-12)");
}

CheckOutcome rank7_exactness(Rng& rng) {
  const Snf s7 = strassen_rank7().as_snf();
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const DenseMatrix x = gaussian_matrix(rng, 8, 8), w = gaussian_matrix(rng, 8, 8);
    worst = std::max(worst, relative_frobenius_error(stl_reference(x, w, s7), DenseMatrix(x * w)));
  }
  return outcome(worst <= 1e-12, "max relative error " + sci(worst) + " (tol 1e-12)");
}

CheckOutcome path_equivalence(Rng& rng) {
  double batched = 0.0, fused = 0.0;
  for (Index t : {1, 2, 4}) {
    for (Index r : {1, 7, 24}) {
      for (Index blocks : {1, 3}) {
        const Index n = t * blocks;
        Snf snf = random_gaussian_init(t, r, rng, 1.0);
        const DenseMatrix x = gaussian_matrix(rng, n, n);
        const DenseMatrix w1 = gaussian_matrix(rng, n, n), w2 = gaussian_matrix(rng, n, n);
        const auto w1e = encode_tiles(w1, snf.e_w, t), w2e = encode_tiles(w2, snf.e_w, t);
        const DenseMatrix y_ref = stl_reference(x, w1, snf);
        batched = std::max(batched, relative_frobenius_error(stl_batched(x, w1e, snf), y_ref));

        const auto y1_enc = slice_products(encode_tiles(x, snf.e_x, t), w1e);
        const DenseMatrix y1 = decode_tiles(y1_enc, snf.d, t);
        const DenseMatrix unfused = stl_batched(y1, w2e, snf);
        const DenseMatrix fused_out = decode_tiles(stl_fused_step(y1_enc, w2e, snf), snf.d, t);
        fused = std::max(fused, relative_frobenius_error(fused_out, unfused));
      }
    }
  }
  return outcome(batched <= 1e-12 && fused <= 1e-10,
                 "batched vs reference " + sci(batched) + " (tol 1e-12), fused vs unfused " +
                     sci(fused) + " (tol 1e-10)");
}

CheckOutcome class0_gradients(Rng& rng) {
  Snf snf = random_gaussian_init(4, 12, rng, 0.5);
  const auto batch = training::gaussian_batch(rng, 4, 8);
  training::Class0Gradients g;
  training::class0_loss_and_gradients(snf, batch, &g);
  double worst = 0.0;
  for (int k = 0; k < 30; ++k) {
    const int which = static_cast<int>(rng.below(3));
    DenseMatrix& m = which == 0 ? snf.e_x : which == 1 ? snf.e_w : snf.d;
    const DenseMatrix& gm = which == 0 ? g.g_ex : which == 1 ? g.g_ew : g.g_d;
    const auto i = static_cast<Index>(rng.below(static_cast<std::uint64_t>(m.rows())));
    const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(m.cols())));
    const double h = 1e-5, orig = m(i, j);
    m(i, j) = orig + h;
    const double lp = training::class0_loss(snf, batch);
    m(i, j) = orig - h;
    const double lm = training::class0_loss(snf, batch);
    m(i, j) = orig;
    worst = std::max(worst, fd_relative((lp - lm) / (2 * h), gm(i, j), 1e-6));
  }
  return outcome(worst <= 1e-5, "max relative error " + sci(worst) + " over 30 entries (tol 1e-5)");
}

CheckOutcome toy_gradients(Rng& rng) {
  toy::ToyConfig cfg;
  cfg.dims = {16, 16, 8};
  cfg.r = 12;
  const Snf snf = random_gaussian_init(4, 12, rng, 0.5);
  auto net = toy::initial_network(cfg, snf, rng);
  const DenseMatrix x = gaussian_matrix(rng, 8, 16), y = gaussian_matrix(rng, 8, 8);
  std::vector<toy::LayerGradients> g;
  net.loss(x, y, &g);
  double worst = 0.0;
  for (int k = 0; k < 30; ++k) {
    const auto l = static_cast<std::size_t>(rng.below(net.layers.size()));
    const int which = static_cast<int>(rng.below(3));
    auto& layer = net.layers[l];
    DenseMatrix& m = which == 0 ? layer.snf.e_x : which == 1 ? layer.snf.d : layer.weights.encoded.fibers;
    const DenseMatrix& gm = which == 0 ? g[l].g_ex : which == 1 ? g[l].g_d : g[l].g_weights;
    const auto i = static_cast<Index>(rng.below(static_cast<std::uint64_t>(m.rows())));
    const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(m.cols())));
    const double h = 1e-5, orig = m(i, j);
    m(i, j) = orig + h;
    const double lp = net.loss(x, y);
    m(i, j) = orig - h;
    const double lm = net.loss(x, y);
    m(i, j) = orig;
    worst = std::max(worst, fd_relative((lp - lm) / (2 * h), gm(i, j), 1e-6));
  }
  return outcome(worst <= 1e-4, "max relative error " + sci(worst) + " over 30 entries (tol 1e-4)");
}

CheckOutcome cost_counter(Rng&) {
  using namespace stl::cost;
  bool ok = true;
  std::ostringstream d;
  for (Count n : {4, 8, 16}) {
    for (Count t : {1, 2, 4}) {
      if (n % t != 0) continue;
      for (Count r : {1, 7, 16}) {
        const auto shape = ProblemShape::square(n, t, r);
        const Count with_w = count_reference_flops(shape, true);
        const Count without_w = count_reference_flops(shape, false);
        if (with_w != flops_general(shape) || without_w != flops_square(n, t, r).flops_stl) {
          ok = false;
          d << "mismatch at n=" << n << " t=" << t << " r=" << r << "; ";
        }
      }
    }
  }
  const auto ex = flops_square(8192, 4, 32);
  const auto io = io_square(8192, 4, 32, 2);
  const bool example = ex.flops_stl == 558345748480ULL && ex.flops_naive == 1099511627776ULL &&
                       io.io_stl == 12ULL * 134217728ULL;
  ok = ok && example;
  d << "counter vs formula " << (ok ? "equal" : "differs") << ", worked example flops_stl=" << ex.flops_stl
    << " flops_naive=" << ex.flops_naive << " io_stl=" << io.io_stl;
  return outcome(ok, d.str());
}

CheckOutcome solution_matrix_linearity(Rng& rng) {
  double worst = 0.0;
  std::vector<DenseMatrix> xs;
  for (int i = 0; i < 64; ++i) xs.push_back(gaussian_matrix(rng, 4, 4));
  for (int draw = 0; draw < 2; ++draw) {
    const Snf snf = random_gaussian_init(4, 24, rng, 1.0);
    const auto sol = training::solution_matrix(snf.e_x, snf.d, xs);
    for (int k = 0; k < 5; ++k) {
      const DenseMatrix w = gaussian_matrix(rng, 4, 4);
      const DenseVector direct = training::fake_encoding_regression(snf.e_x, snf.d, w, xs);
      const DenseVector closed = sol.apply(w);
      worst = std::max(worst, (direct - closed).norm() / std::max(1.0, direct.norm()));
    }
  }
  const Snf s49 = strassen_rank49().triple;
  const auto sol49 = training::solution_matrix(s49.e_x, s49.d, xs);
  double residual = 0.0;
  for (int k = 0; k < 5; ++k) {
    const DenseMatrix w = gaussian_matrix(rng, 4, 4);
    residual = std::max(residual, training::fake_encoding_loss(s49.e_x, s49.d, sol49.apply(w), w, xs));
  }
  return outcome(worst <= 1e-8 && residual <= 1e-8,
                 "regression vs solution matrix " + sci(worst) + " (tol 1e-8), rank-49 residual " +
                     sci(residual) + " (tol 1e-8)");
}

}  // namespace

namespace {

std::vector<Check> all_checks(const std::filesystem::path& golden_dir) {
  return {
      {"strassen-exactness", "exactness",
       [golden_dir](Rng& rng) { return strassen_exactness(rng, golden_dir); }},
      {"strassen7-exactness", "exactness", rank7_exactness},
      {"path-equivalence", "equivalence", path_equivalence},
      {"class0-gradients", "gradients", class0_gradients},
      {"toy-gradients", "gradients", toy_gradients},
      {"cost-counter", "cost", cost_counter},
      {"solution-matrix", "linearity", solution_matrix_linearity},
  };
}

}  // namespace

std::vector<std::pair<std::string, std::string>> verify_check_names() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& c : all_checks({})) out.emplace_back(c.name, c.group);
  return out;
}

std::vector<CheckOutcome> run_verify(const std::string& filter, const std::filesystem::path& golden_dir,
                                     std::uint64_t seed) {
  std::vector<CheckOutcome> results;
  const Rng root(seed);
  std::uint64_t stream = 0;
  for (const auto& check : all_checks(golden_dir)) {
    ++stream;
    if (!filter.empty() && check.name.find(filter) == std::string::npos &&
        check.group.find(filter) == std::string::npos) {
      continue;
    }
    Rng rng = root.split(stream);
    CheckOutcome res;
    try {
      res = check.run(rng);
    } catch (const std::exception& e) {
      res = outcome(false, std::string("threw: ") + e.what());
    }
    res.name = check.name;
    res.group = check.group;
    results.push_back(std::move(res));
  }
  return results;
}

}  // namespace stl::cli
