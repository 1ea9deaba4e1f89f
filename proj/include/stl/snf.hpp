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

#include <string>

#include "stl/dense.hpp"

namespace stl {

/// Encoder/encoder/decoder triple of a tile-wise bilinear operator.
///
/// For t x t tiles the operator is
///
///   vec(Y_{I,J}) = D^T ( sum_L (E_X vec(X_{I,L})) .* (E_W vec(W_{L,J})) )
///
/// with all three factors stored r x t^2. The decoder is applied transposed.
template <typename Scalar>
struct SnfTriple {
  Index t = 1;
  Matrix<Scalar> e_x;
  Matrix<Scalar> e_w;
  Matrix<Scalar> d;

  Index rank() const noexcept { return e_x.rows(); }
  Index tile_area() const noexcept { return t * t; }

  /// Throws ShapeError unless all factors are rank() x t^2 with rank() >= 1.
  void validate() const {
    if (t < 1) throw ShapeError("SnfTriple: tile size must be positive");
    const Index r = e_x.rows();
    if (r < 1) throw ShapeError("SnfTriple: rank must be positive");
    for (const auto* m : {&e_x, &e_w, &d}) {
      if (m->rows() != r || m->cols() != t * t) {
        throw ShapeError("SnfTriple: factors must all be r x t^2 (r=" + std::to_string(r) +
                         ", t=" + std::to_string(t) + ")");
      }
    }
  }

  template <typename Other>
  SnfTriple<Other> cast() const {
    return {t, e_x.template cast<Other>(), e_w.template cast<Other>(), d.template cast<Other>()};
  }
};

using Snf = SnfTriple<double>;

template <typename Scalar>
SnfTriple<Scalar> make_snf(Index t, Matrix<Scalar> e_x, Matrix<Scalar> e_w, Matrix<Scalar> d) {
  SnfTriple<Scalar> s{t, std::move(e_x), std::move(e_w), std::move(d)};
  s.validate();
  return s;
}

/// Per-tile encodings of a tiled matrix: a (block_rows, block_cols, r) tensor
/// stored fiber-contiguous, one fiber per row of `fibers` at row
/// I * block_cols + J.
template <typename Scalar>
struct EncodedTiles {
  Index block_rows = 0;
  Index block_cols = 0;
  Matrix<Scalar> fibers;

  EncodedTiles() = default;
  EncodedTiles(Index br, Index bc, Index r) : block_rows(br), block_cols(bc), fibers(br * bc, r) {
    fibers.setZero();
  }
  EncodedTiles(Index br, Index bc, Matrix<Scalar> f)
      : block_rows(br), block_cols(bc), fibers(std::move(f)) {
    if (fibers.rows() != br * bc) throw ShapeError("EncodedTiles: fiber count mismatch");
  }

  Index rank() const noexcept { return fibers.cols(); }
  Index num_tiles() const noexcept { return block_rows * block_cols; }

  auto fiber(Index I, Index J) { return fibers.row(I * block_cols + J); }
  auto fiber(Index I, Index J) const { return fibers.row(I * block_cols + J); }

  Scalar& operator()(Index I, Index J, Index p) { return fibers(I * block_cols + J, p); }
  Scalar operator()(Index I, Index J, Index p) const { return fibers(I * block_cols + J, p); }
};

/// Fake-encoded weights: trainable per-tile r-vectors not tied to any E_W.
template <typename Scalar>
struct FakeEncodedWeights {
  EncodedTiles<Scalar> encoded;
};

/// output[I,J,:] = encoder * vec_tile(m, (I,J)).
template <typename Derived, typename DerivedE>
EncodedTiles<typename Derived::Scalar> encode_tiles(const Eigen::MatrixBase<Derived>& m,
                                                    const Eigen::MatrixBase<DerivedE>& encoder,
                                                    Index t, MacCounter* counter = nullptr) {
  require_tiled(m, t, "encode_tiles");
  if (encoder.cols() != t * t) throw ShapeError("encode_tiles: encoder must have t^2 columns");
  const auto rows = tiles_as_rows(m, t);
  return {m.rows() / t, m.cols() / t, matmul(rows, encoder.transpose(), counter)};
}

/// Decodes every fiber with D^T and reassembles the tiled matrix.
template <typename Scalar, typename DerivedD>
Matrix<Scalar> decode_tiles(const EncodedTiles<Scalar>& enc, const Eigen::MatrixBase<DerivedD>& d,
                            Index t, MacCounter* counter = nullptr) {
  if (d.rows() != enc.rank() || d.cols() != t * t) {
    throw ShapeError("decode_tiles: decoder must be r x t^2");
  }
  return rows_as_tiles(matmul(enc.fibers, d, counter), t, enc.block_rows, enc.block_cols);
}

/// The p-th coordinate of every fiber as a block_rows x block_cols matrix.
template <typename Scalar>
Matrix<Scalar> extract_slice(const EncodedTiles<Scalar>& enc, Index p) {
  if (p < 0 || p >= enc.rank()) throw IndexError("extract_slice: slice index out of range");
  Matrix<Scalar> s(enc.block_rows, enc.block_cols);
  for (Index I = 0; I < enc.block_rows; ++I)
    for (Index J = 0; J < enc.block_cols; ++J) s(I, J) = enc(I, J, p);
  return s;
}

template <typename Scalar, typename Derived>
void set_slice(EncodedTiles<Scalar>& enc, Index p, const Eigen::MatrixBase<Derived>& slice) {
  if (p < 0 || p >= enc.rank()) throw IndexError("set_slice: slice index out of range");
  if (slice.rows() != enc.block_rows || slice.cols() != enc.block_cols) {
    throw ShapeError("set_slice: slice shape mismatch");
  }
  for (Index I = 0; I < enc.block_rows; ++I)
    for (Index J = 0; J < enc.block_cols; ++J) enc(I, J, p) = slice(I, J);
}

/// Direct per-tile evaluation. Hadamard products are accumulated over the
/// contraction index L in ascending order and decoded once per output tile.
template <typename DerivedX, typename DerivedW, typename Scalar = typename DerivedX::Scalar>
Matrix<Scalar> stl_reference(const Eigen::MatrixBase<DerivedX>& x,
                             const Eigen::MatrixBase<DerivedW>& w, const SnfTriple<Scalar>& snf) {
  snf.validate();
  const Index t = snf.t, r = snf.rank();
  require_tiled(x, t, "stl_reference");
  require_tiled(w, t, "stl_reference");
  if (x.cols() != w.rows()) throw ShapeError("stl_reference: inner dimensions differ");
  const Index n_blocks = x.rows() / t, k_blocks = x.cols() / t, m_blocks = w.cols() / t;

  Matrix<Scalar> y(x.rows(), w.cols());
  Vector<Scalar> acc(r);
  for (Index I = 0; I < n_blocks; ++I) {
    for (Index J = 0; J < m_blocks; ++J) {
      acc.setZero();
      for (Index L = 0; L < k_blocks; ++L) {
        const Vector<Scalar> u = snf.e_x * vec_tile(x, {I, L, t});
        const Vector<Scalar> v = snf.e_w * vec_tile(w, {L, J, t});
        for (Index p = 0; p < r; ++p) acc(p) += u(p) * v(p);
      }
      const Vector<Scalar> tile = snf.d.transpose() * acc;
      unvec_tile(tile, {I, J, t}, y);
    }
  }
  return y;
}

/// Step 2 of the batched algorithm: Y^(p) = X^(p) W^(p) for every p.
template <typename Scalar>
EncodedTiles<Scalar> slice_products(const EncodedTiles<Scalar>& x_enc,
                                    const EncodedTiles<Scalar>& w_enc,
                                    MacCounter* counter = nullptr) {
  if (x_enc.rank() != w_enc.rank()) throw ShapeError("slice_products: ranks differ");
  if (x_enc.block_cols != w_enc.block_rows) {
    throw ShapeError("slice_products: block shapes are not compatible");
  }
  EncodedTiles<Scalar> y(x_enc.block_rows, w_enc.block_cols, x_enc.rank());
  for (Index p = 0; p < x_enc.rank(); ++p) {
    set_slice(y, p, matmul(extract_slice(x_enc, p), extract_slice(w_enc, p), counter));
  }
  return y;
}

/// Encode x, multiply slice-wise against pre-encoded weights, decode.
template <typename DerivedX, typename Scalar = typename DerivedX::Scalar>
Matrix<Scalar> stl_batched(const Eigen::MatrixBase<DerivedX>& x,
                           const EncodedTiles<Scalar>& w_encoded, const SnfTriple<Scalar>& snf,
                           MacCounter* counter = nullptr) {
  snf.validate();
  require_tiled(x, snf.t, "stl_batched");
  if (w_encoded.rank() != snf.rank()) throw ShapeError("stl_batched: weight encoding rank differs");
  if (x.cols() / snf.t != w_encoded.block_rows) {
    throw ShapeError("stl_batched: weight block rows do not match x block columns");
  }
  const auto x_enc = encode_tiles(x, snf.e_x, snf.t, counter);
  const auto y_enc = slice_products(x_enc, w_encoded, counter);
  return decode_tiles(y_enc, snf.d, snf.t, counter);
}

/// E_X * D^T: maps an encoded output fiber straight to the next layer's
/// encoded input fiber.
template <typename Scalar>
Matrix<Scalar> fused_composite(const SnfTriple<Scalar>& snf) {
  return snf.e_x * snf.d.transpose();
}

/// One layer of the fused pipeline: re-encode the previous layer's encoded
/// output through E_X * D^T (no dense round trip), then slice products.
template <typename Scalar>
EncodedTiles<Scalar> stl_fused_step(const EncodedTiles<Scalar>& x_encoded_prev,
                                    const EncodedTiles<Scalar>& w_encoded,
                                    const SnfTriple<Scalar>& snf, MacCounter* counter = nullptr) {
  snf.validate();
  if (x_encoded_prev.rank() != snf.rank()) throw ShapeError("stl_fused_step: rank mismatch");
  // Fibers are rows, so the column-vector map M = E_X D^T acts as fibers * M^T.
  const Matrix<Scalar> composite_t = fused_composite(snf).transpose();
  EncodedTiles<Scalar> x_enc(x_encoded_prev.block_rows, x_encoded_prev.block_cols,
                             matmul(x_encoded_prev.fibers, composite_t, counter));
  return slice_products(x_enc, w_encoded, counter);
}

}  // namespace stl
