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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "stl/dense.hpp"
#include "stl/rng.hpp"
#include "stl/snf.hpp"
#include "stl/training.hpp"

namespace stl::toy {

/// A linear layer evaluated with the tile-wise operator against fake-encoded
/// weights. E_X, D and the fake encodings are trainable; snf.e_w is kept only
/// as the encoder the weights were initialized from.
struct StlLayer {
  Snf snf;
  FakeEncodedWeights<double> weights;
  Index in_dim = 0;
  Index out_dim = 0;

  /// Throws ShapeError unless the weight tensor is (in_dim/t, out_dim/t, r).
  void validate() const;
};

/// Layer whose fake encodings are E_W vec(W) for the tiles of a dense W.
StlLayer make_layer(const Snf& snf, const DenseMatrix& w);

/// x is batch x in_dim; the batch is tiled t rows at a time, so batch must be
/// a multiple of t.
DenseMatrix stl_layer_forward(const StlLayer& layer, const DenseMatrix& x);

struct LayerGradients {
  DenseMatrix g_ex;
  DenseMatrix g_d;
  DenseMatrix g_weights;  // fiber layout, like weights.encoded.fibers
};

/// Intermediates of one forward pass, kept for the backward pass.
struct LayerCache {
  DenseMatrix x_rows;  // tiles of x as rows
  EncodedTiles<double> x_enc;
  EncodedTiles<double> y_enc;
};

DenseMatrix stl_layer_forward(const StlLayer& layer, const DenseMatrix& x, LayerCache& cache);

/// Returns dLoss/dx and fills grads from dLoss/dy.
DenseMatrix stl_layer_backward(const StlLayer& layer, const LayerCache& cache,
                               const DenseMatrix& grad_y, LayerGradients& grads);

/// STL layers with tanh between them (none after the last layer).
struct StlNetwork {
  std::vector<StlLayer> layers;

  DenseMatrix forward(const DenseMatrix& x) const;
  /// Mean squared error against targets; fills per-layer gradients when
  /// grads is non-null.
  double loss(const DenseMatrix& x, const DenseMatrix& targets,
              std::vector<LayerGradients>* grads = nullptr) const;
};

// Checkpoint: one JSON header line {"layers":..,"version":1} followed by each
// layer's triple file and fake-encoding blob.
inline constexpr int kNetworkVersion = 1;
void write_network(std::ostream& out, const StlNetwork& net);
StlNetwork read_network(std::istream& in);
void save_network(const std::filesystem::path& path, const StlNetwork& net);
StlNetwork load_network(const std::filesystem::path& path);

/// Dense tanh MLP used as the regression teacher.
struct DenseMlp {
  std::vector<DenseMatrix> weights;

  DenseMatrix forward(const DenseMatrix& x) const;
};

struct SpectrumReport {
  DenseVector singular_values;
  /// Spectrum of a Gaussian matrix of the same shape, rescaled to the same
  /// Frobenius norm.
  DenseVector reference_singular_values;
  double tau = 0.0;
  /// Count of sigma_i / sigma_1 >= tau.
  Index numerical_rank = 0;

  double ratio(Index i) const;
};

/// Stacks every fake-encoding fiber of the layer as a column of an
/// r x num_tiles matrix and reports its spectrum.
SpectrumReport spectrum_report(const StlLayer& layer, double tau, Rng& reference_rng);
SpectrumReport spectrum_of(const DenseMatrix& stacked, double tau, Rng& reference_rng);

enum class TeacherKind { dense_mlp, stl_realizable };

struct ToyConfig {
  std::vector<Index> dims{64, 64, 16};
  Index t = 4;
  Index r = 24;
  std::uint64_t seed = 0;
  Index batch = 64;
  Index steps = 3000;
  double step_size = 0.05;
  double momentum = 0.9;
  Index n_eval = 512;
  double tau = 1e-3;
  TeacherKind teacher = TeacherKind::dense_mlp;
  /// Budget of the Class-0 run that supplies (E_X, E_W, D) when no
  /// encoder_snf is given.
  Index class0_steps = 5000;
  std::optional<Snf> encoder_snf;
  Index curve_interval = 50;

  void validate() const;
};

struct ToyResult {
  StlNetwork model;
  std::vector<SpectrumReport> init_spectra;
  std::vector<SpectrumReport> trained_spectra;
  double loss_init = 0.0;
  double loss_final = 0.0;
  std::vector<training::CurvePoint> loss_curve;
};

/// Teacher-student regression: builds the teacher and an STL student whose
/// fake encodings start as E_W-encodings of Gaussian weights, trains E_X, D
/// and the fake encodings with heavy-ball gradient descent, and reports the
/// stacked fake-encoding spectra before and after training.
ToyResult train_toy_network(const ToyConfig& cfg);

/// Network built the way train_toy_network initializes its student.
StlNetwork initial_network(const ToyConfig& cfg, const Snf& snf, Rng& rng);

}  // namespace stl::toy
