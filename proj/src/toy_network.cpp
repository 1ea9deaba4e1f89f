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

#include "stl/toy_network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "stl/errors.hpp"
#include "stl/io.hpp"

namespace stl::toy {

namespace {

// Y^(p) = X^(p) W^(p) for every slice, without the counting matmul.
EncodedTiles<double> products(const EncodedTiles<double>& x_enc, const EncodedTiles<double>& w_enc) {
  EncodedTiles<double> y(x_enc.block_rows, w_enc.block_cols, x_enc.rank());
  for (Index p = 0; p < x_enc.rank(); ++p) {
    const DenseMatrix xs = extract_slice(x_enc, p);
    const DenseMatrix ws = extract_slice(w_enc, p);
    set_slice(y, p, DenseMatrix(xs * ws));
  }
  return y;
}

DenseMatrix tanh_of(const DenseMatrix& m) { return m.array().tanh().matrix(); }

}  // namespace

void StlLayer::validate() const {
  snf.validate();
  const Index t = snf.t;
  if (in_dim % t != 0 || out_dim % t != 0) {
    throw ShapeError("StlLayer: dimensions must be multiples of t");
  }
  const auto& enc = weights.encoded;
  if (enc.block_rows != in_dim / t || enc.block_cols != out_dim / t || enc.rank() != snf.rank()) {
    throw ShapeError("StlLayer: fake encodings must be (in/t, out/t, r)");
  }
}

StlLayer make_layer(const Snf& snf, const DenseMatrix& w) {
  snf.validate();
  StlLayer layer{snf, {encode_tiles(w, snf.e_w, snf.t)}, w.rows(), w.cols()};
  layer.validate();
  return layer;
}

DenseMatrix stl_layer_forward(const StlLayer& layer, const DenseMatrix& x, LayerCache& cache) {
  const Index t = layer.snf.t;
  require_tiled(x, t, "stl_layer_forward");
  if (x.cols() != layer.in_dim) throw ShapeError("stl_layer_forward: input width differs");
  cache.x_rows = tiles_as_rows(x, t);
  cache.x_enc = EncodedTiles<double>(x.rows() / t, x.cols() / t,
                                     DenseMatrix(cache.x_rows * layer.snf.e_x.transpose()));
  cache.y_enc = products(cache.x_enc, layer.weights.encoded);
  return rows_as_tiles(DenseMatrix(cache.y_enc.fibers * layer.snf.d), t, cache.y_enc.block_rows,
                       cache.y_enc.block_cols);
}

DenseMatrix stl_layer_forward(const StlLayer& layer, const DenseMatrix& x) {
  LayerCache cache;
  return stl_layer_forward(layer, x, cache);
}

DenseMatrix stl_layer_backward(const StlLayer& layer, const LayerCache& cache,
                               const DenseMatrix& grad_y, LayerGradients& grads) {
  const Index t = layer.snf.t, r = layer.snf.rank();
  const DenseMatrix gy_rows = tiles_as_rows(grad_y, t);
  if (gy_rows.rows() != cache.y_enc.num_tiles()) {
    throw ShapeError("stl_layer_backward: gradient shape differs from the cached output");
  }
  grads.g_d = cache.y_enc.fibers.transpose() * gy_rows;

  EncodedTiles<double> gy_enc(cache.y_enc.block_rows, cache.y_enc.block_cols,
                              DenseMatrix(gy_rows * layer.snf.d.transpose()));
  const auto& w_enc = layer.weights.encoded;
  EncodedTiles<double> gw(w_enc.block_rows, w_enc.block_cols, r);
  EncodedTiles<double> gx_enc(cache.x_enc.block_rows, cache.x_enc.block_cols, r);
  for (Index p = 0; p < r; ++p) {
    const DenseMatrix gys = extract_slice(gy_enc, p);
    set_slice(gw, p, DenseMatrix(extract_slice(cache.x_enc, p).transpose() * gys));
    set_slice(gx_enc, p, DenseMatrix(gys * extract_slice(w_enc, p).transpose()));
  }
  grads.g_weights = std::move(gw.fibers);
  grads.g_ex = gx_enc.fibers.transpose() * cache.x_rows;
  return rows_as_tiles(DenseMatrix(gx_enc.fibers * layer.snf.e_x), t, gx_enc.block_rows,
                       gx_enc.block_cols);
}

DenseMatrix StlNetwork::forward(const DenseMatrix& x) const {
  DenseMatrix h = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    h = stl_layer_forward(layers[l], h);
    if (l + 1 < layers.size()) h = tanh_of(h);
  }
  return h;
}

double StlNetwork::loss(const DenseMatrix& x, const DenseMatrix& targets,
                        std::vector<LayerGradients>* grads) const {
  const std::size_t n_layers = layers.size();
  std::vector<LayerCache> caches(n_layers);
  std::vector<DenseMatrix> activations(n_layers);  // tanh outputs feeding layer l+1
  DenseMatrix h = x;
  for (std::size_t l = 0; l < n_layers; ++l) {
    h = stl_layer_forward(layers[l], h, caches[l]);
    if (l + 1 < n_layers) {
      h = tanh_of(h);
      activations[l] = h;
    }
  }
  if (h.rows() != targets.rows() || h.cols() != targets.cols()) {
    throw ShapeError("StlNetwork::loss: target shape differs from the output");
  }
  const DenseMatrix diff = h - targets;
  const double scale = 1.0 / static_cast<double>(diff.size());
  const double value = diff.squaredNorm() * scale;
  if (grads == nullptr) return value;

  grads->assign(n_layers, {});
  DenseMatrix g = 2.0 * scale * diff;
  for (std::size_t l = n_layers; l-- > 0;) {
    g = stl_layer_backward(layers[l], caches[l], g, (*grads)[l]);
    if (l > 0) {
      const auto& a = activations[l - 1];
      g = (g.array() * (1.0 - a.array().square())).matrix();
    }
  }
  return value;
}

void write_network(std::ostream& out, const StlNetwork& net) {
  nlohmann::json header{{"layers", net.layers.size()}, {"version", kNetworkVersion}};
  out << header.dump() << '\n';
  for (const auto& layer : net.layers) {
    io::write_snf(out, layer.snf);
    io::write_encoded(out, layer.weights.encoded);
  }
  if (!out) throw FormatError("write_network: stream write failed");
}

StlNetwork read_network(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("read_network: missing header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("read_network: bad header: ") + e.what());
  }
  if (!header.contains("version") || header["version"] != kNetworkVersion || !header.contains("layers")) {
    throw FormatError("read_network: unsupported header");
  }
  StlNetwork net;
  const auto n = header["layers"].get<std::size_t>();
  for (std::size_t l = 0; l < n; ++l) {
    StlLayer layer;
    layer.snf = io::read_snf(in);
    layer.weights.encoded = io::read_encoded(in);
    layer.in_dim = layer.weights.encoded.block_rows * layer.snf.t;
    layer.out_dim = layer.weights.encoded.block_cols * layer.snf.t;
    try {
      layer.validate();
    } catch (const ShapeError& e) {
      throw FormatError(std::string("read_network: ") + e.what());
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

void save_network(const std::filesystem::path& path, const StlNetwork& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("save_network: cannot open " + path.string());
  write_network(out, net);
}

StlNetwork load_network(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("load_network: cannot open " + path.string());
  return read_network(in);
}

DenseMatrix DenseMlp::forward(const DenseMatrix& x) const {
  DenseMatrix h = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    h = h * weights[l];
    if (l + 1 < weights.size()) h = tanh_of(h);
  }
  return h;
}

double SpectrumReport::ratio(Index i) const {
  if (i < 0 || i >= singular_values.size()) throw IndexError("SpectrumReport::ratio: index out of range");
  const double s1 = singular_values(0);
  return s1 > 0.0 ? singular_values(i) / s1 : 0.0;
}

SpectrumReport spectrum_of(const DenseMatrix& stacked, double tau, Rng& reference_rng) {
  if (!(tau > 0.0 && tau < 1.0)) throw ParameterError("spectrum_of: tau must lie in (0, 1)");
  SpectrumReport rep;
  rep.tau = tau;
  rep.singular_values = singular_values(stacked);
  const double s1 = rep.singular_values.size() > 0 ? rep.singular_values(0) : 0.0;
  for (Index i = 0; i < rep.singular_values.size(); ++i) {
    if (s1 > 0.0 && rep.singular_values(i) / s1 >= tau) ++rep.numerical_rank;
  }
  DenseMatrix g = gaussian_matrix(reference_rng, stacked.rows(), stacked.cols());
  const double norm = stacked.norm();
  if (norm > 0.0) g *= norm / g.norm();
  rep.reference_singular_values = singular_values(g);
  return rep;
}

SpectrumReport spectrum_report(const StlLayer& layer, double tau, Rng& reference_rng) {
  return spectrum_of(layer.weights.encoded.fibers.transpose(), tau, reference_rng);
}

void ToyConfig::validate() const {
  if (dims.size() < 2) throw ParameterError("ToyConfig: need at least an input and an output width");
  if (t < 1) throw ParameterError("ToyConfig: t must be positive");
  for (Index d : dims) {
    if (d < t || d % t != 0) throw ParameterError("ToyConfig: every width must be a positive multiple of t");
  }
  if (r < 1) throw ParameterError("ToyConfig: r must be positive");
  if (batch < t || batch % t != 0) throw ParameterError("ToyConfig: batch must be a positive multiple of t");
  if (n_eval < t || n_eval % t != 0) throw ParameterError("ToyConfig: n_eval must be a positive multiple of t");
  if (steps < 0) throw ParameterError("ToyConfig: steps must be non-negative");
  if (!(step_size > 0.0)) throw ParameterError("ToyConfig: step_size must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ParameterError("ToyConfig: momentum must lie in [0, 1)");
  if (!(tau > 0.0 && tau < 1.0)) throw ParameterError("ToyConfig: tau must lie in (0, 1)");
  if (curve_interval < 1) throw ParameterError("ToyConfig: curve_interval must be positive");
  if (encoder_snf) {
    encoder_snf->validate();
    if (encoder_snf->t != t || encoder_snf->rank() != r) {
      throw ParameterError("ToyConfig: encoder_snf must match t and r");
    }
  } else if (class0_steps < 0) {
    throw ParameterError("ToyConfig: class0_steps must be non-negative");
  }
}

StlNetwork initial_network(const ToyConfig& cfg, const Snf& snf, Rng& rng) {
  StlNetwork net;
  for (std::size_t l = 0; l + 1 < cfg.dims.size(); ++l) {
    const Index fan_in = cfg.dims[l];
    DenseMatrix w = gaussian_matrix(rng, fan_in, cfg.dims[l + 1]);
    w /= std::sqrt(static_cast<double>(fan_in));
    net.layers.push_back(make_layer(snf, w));
  }
  return net;
}

namespace {

Snf encoder_triple(const ToyConfig& cfg) {
  if (cfg.encoder_snf) return *cfg.encoder_snf;
  training::Class0Config c0;
  c0.t = cfg.t;
  c0.r = cfg.r;
  c0.seed = cfg.seed;
  c0.steps = cfg.class0_steps;
  c0.init = (cfg.t == 4 && cfg.r <= 49) ? training::InitKind::strassen_subset
                                        : training::InitKind::random_gaussian;
  c0.eval_interval = std::max<Index>(1, std::min<Index>(c0.eval_interval, cfg.class0_steps));
  return training::train_class0(c0).snf;
}

DenseMatrix gaussian_inputs(Rng& rng, Index rows, Index cols) { return gaussian_matrix(rng, rows, cols); }

struct Targets {
  TeacherKind kind;
  DenseMlp mlp;
  StlNetwork stl;

  DenseMatrix operator()(const DenseMatrix& x) const {
    return kind == TeacherKind::dense_mlp ? mlp.forward(x) : stl.forward(x);
  }
};

}  // namespace

ToyResult train_toy_network(const ToyConfig& cfg) {
  cfg.validate();
  const Rng root(cfg.seed);
  Rng teacher_rng = root.split(1);
  Rng init_rng = root.split(2);
  Rng data_rng = root.split(3);
  Rng eval_rng = root.split(4);
  Rng reference_rng = root.split(5);

  const Snf snf = encoder_triple(cfg);
  ToyResult res;
  res.model = initial_network(cfg, snf, init_rng);

  Targets teacher{cfg.teacher, {}, {}};
  if (cfg.teacher == TeacherKind::dense_mlp) {
    for (std::size_t l = 0; l + 1 < cfg.dims.size(); ++l) {
      DenseMatrix w = gaussian_matrix(teacher_rng, cfg.dims[l], cfg.dims[l + 1]);
      teacher.mlp.weights.push_back(w / std::sqrt(static_cast<double>(cfg.dims[l])));
    }
  } else {
    // Same E_X and D as the student, fake encodings drawn independently.
    teacher.stl = res.model;
    for (auto& layer : teacher.stl.layers) {
      auto& f = layer.weights.encoded.fibers;
      f = gaussian_matrix(teacher_rng, f.rows(), f.cols()) * (f.norm() / std::sqrt(double(f.size())));
    }
  }

  for (const auto& layer : res.model.layers) {
    res.init_spectra.push_back(spectrum_report(layer, cfg.tau, reference_rng));
  }

  const DenseMatrix x_eval = gaussian_inputs(eval_rng, cfg.n_eval, cfg.dims.front());
  const DenseMatrix y_eval = teacher(x_eval);
  res.loss_init = res.model.loss(x_eval, y_eval);
  res.loss_curve.push_back({0, res.loss_init});

  const std::size_t n_layers = res.model.layers.size();
  std::vector<LayerGradients> vel(n_layers), grads;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& layer = res.model.layers[l];
    vel[l] = {DenseMatrix::Zero(layer.snf.e_x.rows(), layer.snf.e_x.cols()),
              DenseMatrix::Zero(layer.snf.d.rows(), layer.snf.d.cols()),
              DenseMatrix::Zero(layer.weights.encoded.fibers.rows(), layer.weights.encoded.fibers.cols())};
  }

  for (Index step = 1; step <= cfg.steps; ++step) {
    const DenseMatrix x = gaussian_inputs(data_rng, cfg.batch, cfg.dims.front());
    const double batch_loss = res.model.loss(x, teacher(x), &grads);
    if (!std::isfinite(batch_loss)) {
      throw training::DivergenceError("train_toy_network: loss became non-finite", res.loss_curve);
    }
    for (std::size_t l = 0; l < n_layers; ++l) {
      auto& layer = res.model.layers[l];
      vel[l].g_ex = cfg.momentum * vel[l].g_ex + grads[l].g_ex;
      vel[l].g_d = cfg.momentum * vel[l].g_d + grads[l].g_d;
      vel[l].g_weights = cfg.momentum * vel[l].g_weights + grads[l].g_weights;
      layer.snf.e_x -= cfg.step_size * vel[l].g_ex;
      layer.snf.d -= cfg.step_size * vel[l].g_d;
      layer.weights.encoded.fibers -= cfg.step_size * vel[l].g_weights;
    }
    if (step % cfg.curve_interval == 0 || step == cfg.steps) {
      res.loss_curve.push_back({step, res.model.loss(x_eval, y_eval)});
    }
  }

  res.loss_final = res.model.loss(x_eval, y_eval);
  for (const auto& layer : res.model.layers) {
    res.trained_spectra.push_back(spectrum_report(layer, cfg.tau, reference_rng));
  }
  return res;
}

}  // namespace stl::toy
