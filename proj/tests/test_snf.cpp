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

#include <sstream>

#include "oracles.hpp"
#include "stl/io.hpp"
#include "stl/rng.hpp"
#include "stl/snf.hpp"
#include "stl/strassen.hpp"

using namespace stl;

namespace {

Snf random_snf(Rng& rng, Index t, Index r) {
  return make_snf<double>(t, gaussian_matrix(rng, r, t * t), gaussian_matrix(rng, r, t * t),
                          gaussian_matrix(rng, r, t * t));
}

}  // namespace

TEST_SUITE("snf") {
  TEST_CASE("triple validation") {
    Rng rng(1);
    Snf s = random_snf(rng, 4, 20);
    CHECK(s.rank() == 20);
    CHECK(s.tile_area() == 16);
    s.d = DenseMatrix::Zero(19, 16);
    CHECK_THROWS_AS(s.validate(), ShapeError);
    CHECK_THROWS_AS(make_snf<double>(2, DenseMatrix::Zero(3, 4), DenseMatrix::Zero(3, 4),
                                     DenseMatrix::Zero(3, 5)),
                    ShapeError);
    // r below t^2 is legal.
    CHECK_NOTHROW(random_snf(rng, 4, 3));
  }

  TEST_CASE("encode_tiles") {
    Rng rng(2);
    const DenseMatrix m = gaussian_matrix(rng, 8, 8);
    const auto ident = encode_tiles(m, DenseMatrix::Identity(16, 16), 4);
    for (Index I = 0; I < 2; ++I)
      for (Index J = 0; J < 2; ++J) CHECK(ident.fiber(I, J).transpose() == vec_tile(m, {I, J, 4}));

    const auto zero = encode_tiles(DenseMatrix::Zero(8, 8), gaussian_matrix(rng, 5, 16), 4);
    CHECK(zero.fibers.isZero(0.0));

    const DenseMatrix e = gaussian_matrix(rng, 20, 16);
    const auto enc = encode_tiles(m, e, 4);
    for (Index I = 0; I < 2; ++I)
      for (Index J = 0; J < 2; ++J) {
        const DenseVector direct = e * vec_tile(m, {I, J, 4});
        CHECK((enc.fiber(I, J).transpose() - direct).norm() < 1e-13);
      }

    CHECK_THROWS_AS(encode_tiles(DenseMatrix::Zero(6, 8), e, 4), ShapeError);
    CHECK_THROWS_AS(encode_tiles(m, DenseMatrix::Zero(20, 9), 4), ShapeError);
  }

  TEST_CASE("stl_reference degenerates to matmul at t=1, r=1") {
    Rng rng(3);
    const Snf unit = make_snf<double>(1, DenseMatrix::Ones(1, 1), DenseMatrix::Ones(1, 1),
                                      DenseMatrix::Ones(1, 1));
    const DenseMatrix x = gaussian_matrix(rng, 5, 7), w = gaussian_matrix(rng, 7, 3);
    // Same ascending summation order as matmul, so equality is bitwise.
    CHECK(stl_reference(x, w, unit) == matmul(x, w));
    CHECK(stl_batched(x, encode_tiles(w, unit.e_w, 1), unit) == matmul(x, w));
  }

  TEST_CASE("stl_reference matches the entrywise definition") {
    Rng rng(4);
    for (Index t : {1, 2, 4}) {
      const Snf s = random_snf(rng, t, 7);
      const DenseMatrix x = gaussian_matrix(rng, 2 * t, 3 * t), w = gaussian_matrix(rng, 3 * t, t);
      CHECK(oracle::rel_fro(stl_reference(x, w, s), oracle::stl_entrywise(x, w, s)) < 1e-12);
    }
  }

  TEST_CASE("stl_reference with the rank-49 triple is matmul") {
    Rng rng(5);
    const Snf s = strassen_rank49().triple;
    for (Index n : {4, 8, 12}) {
      const DenseMatrix x = gaussian_matrix(rng, n, n), w = gaussian_matrix(rng, n, n);
      CHECK(oracle::rel_fro(stl_reference(x, w, s), oracle::matmul(x, w)) < 1e-10);
    }
  }

  TEST_CASE("zero input gives zero output") {
    Rng rng(6);
    const Snf s = random_snf(rng, 4, 10);
    CHECK(stl_reference(DenseMatrix::Zero(8, 8), gaussian_matrix(rng, 8, 8), s).isZero(0.0));
  }

  TEST_CASE("bilinearity") {
    Rng rng(7);
    for (Index n : {4, 8, 12}) {
      const Snf s = random_snf(rng, 4, 12);
      const DenseMatrix x1 = gaussian_matrix(rng, n, n), x2 = gaussian_matrix(rng, n, n);
      const DenseMatrix w1 = gaussian_matrix(rng, n, n), w2 = gaussian_matrix(rng, n, n);
      const double a = 4.0 * rng.uniform() - 2.0, b = 4.0 * rng.uniform() - 2.0;
      const DenseMatrix left = stl_reference(DenseMatrix(a * x1 + b * x2), w1, s);
      const DenseMatrix left_sum = a * stl_reference(x1, w1, s) + b * stl_reference(x2, w1, s);
      CHECK(oracle::rel_fro(left, left_sum) < 1e-10);
      const DenseMatrix right = stl_reference(x1, DenseMatrix(a * w1 + b * w2), s);
      const DenseMatrix right_sum = a * stl_reference(x1, w1, s) + b * stl_reference(x1, w2, s);
      CHECK(oracle::rel_fro(right, right_sum) < 1e-10);
    }
  }

  TEST_CASE("stl_batched equals stl_reference") {
    Rng rng(8);
    const Snf s = random_snf(rng, 4, 20);
    const DenseMatrix x = gaussian_matrix(rng, 8, 8), w = gaussian_matrix(rng, 8, 8);
    CHECK(oracle::rel_fro(stl_batched(x, encode_tiles(w, s.e_w, 4), s), stl_reference(x, w, s)) < 1e-12);

    // Rank-one encoders.
    const DenseVector a = gaussian_matrix(rng, 16, 1).col(0);
    const Snf r1 = make_snf<double>(4, DenseMatrix(a.transpose()), gaussian_matrix(rng, 1, 16),
                                    gaussian_matrix(rng, 1, 16));
    CHECK(oracle::rel_fro(stl_batched(x, encode_tiles(w, r1.e_w, 4), r1), stl_reference(x, w, r1)) <
          1e-12);

    const Snf s49 = strassen_rank49().triple;
    const DenseMatrix y = stl_batched(DenseMatrix::Identity(8, 8), encode_tiles(w, s49.e_w, 4), s49);
    CHECK((y - w).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("stl_batched shape errors") {
    Rng rng(9);
    const Snf s = random_snf(rng, 4, 5);
    const auto w_enc = encode_tiles(gaussian_matrix(rng, 8, 4), s.e_w, 4);
    CHECK_THROWS_AS(stl_batched(gaussian_matrix(rng, 4, 4), w_enc, s), ShapeError);
    CHECK_THROWS_AS(stl_batched(gaussian_matrix(rng, 4, 6), w_enc, s), ShapeError);
    const Snf other = random_snf(rng, 4, 6);
    CHECK_THROWS_AS(stl_batched(gaussian_matrix(rng, 4, 8), w_enc, other), ShapeError);
  }

  TEST_CASE("slices") {
    EncodedTiles<double> enc(3, 2, 4);
    for (Index I = 0; I < 3; ++I)
      for (Index J = 0; J < 2; ++J)
        for (Index p = 0; p < 4; ++p) enc(I, J, p) = static_cast<double>(p);
    CHECK(extract_slice(enc, 2) == DenseMatrix::Constant(3, 2, 2.0));

    Rng rng(10);
    EncodedTiles<double> r(3, 2, gaussian_matrix(rng, 6, 4));
    EncodedTiles<double> rebuilt(3, 2, 4);
    for (Index p = 0; p < 4; ++p) {
      const DenseMatrix s = extract_slice(r, p);
      for (Index I = 0; I < 3; ++I)
        for (Index J = 0; J < 2; ++J) CHECK(s(I, J) == r.fibers(I * 2 + J, p));
      set_slice(rebuilt, p, s);
    }
    CHECK(rebuilt.fibers == r.fibers);

    CHECK_THROWS_AS(extract_slice(r, 4), IndexError);
    CHECK_THROWS_AS(extract_slice(r, -1), IndexError);
    CHECK_THROWS_AS(set_slice(rebuilt, 0, DenseMatrix::Zero(2, 2)), ShapeError);
    CHECK_THROWS_AS(EncodedTiles<double>(2, 2, DenseMatrix::Zero(3, 4)), ShapeError);
  }

  TEST_CASE("fused step equals the unfused path") {
    Rng rng(11);
    const Snf s = random_snf(rng, 4, 20);
    const DenseMatrix x = gaussian_matrix(rng, 8, 8);
    const DenseMatrix w1 = gaussian_matrix(rng, 8, 8), w2 = gaussian_matrix(rng, 8, 12);
    const auto w1e = encode_tiles(w1, s.e_w, 4), w2e = encode_tiles(w2, s.e_w, 4);
    const auto y1_enc = slice_products(encode_tiles(x, s.e_x, 4), w1e);
    const DenseMatrix unfused = stl_batched(decode_tiles(y1_enc, s.d, 4), w2e, s);
    const DenseMatrix fused = decode_tiles(stl_fused_step(y1_enc, w2e, s), s.d, 4);
    CHECK(oracle::rel_fro(fused, unfused) < 1e-12);
  }

  TEST_CASE("fused step with an identity composite is a plain slice product") {
    // E_X = D = I_16 makes E_X D^T the identity.
    Rng rng(12);
    const DenseMatrix id = DenseMatrix::Identity(16, 16);
    const Snf s = make_snf<double>(4, id, gaussian_matrix(rng, 16, 16), id);
    CHECK(fused_composite(s) == id);
    const EncodedTiles<double> prev(2, 2, gaussian_matrix(rng, 4, 16));
    const auto w_enc = encode_tiles(gaussian_matrix(rng, 8, 8), s.e_w, 4);
    CHECK(oracle::rel_fro(stl_fused_step(prev, w_enc, s).fibers, slice_products(prev, w_enc).fibers) <
          1e-15);
  }

  TEST_CASE("three fused layers with the rank-49 triple are a matmul chain") {
    Rng rng(13);
    const Snf s = strassen_rank49().triple;
    const DenseMatrix x = gaussian_matrix(rng, 8, 8);
    std::vector<DenseMatrix> ws;
    for (int i = 0; i < 3; ++i) ws.push_back(gaussian_matrix(rng, 8, 8));
    auto enc = slice_products(encode_tiles(x, s.e_x, 4), encode_tiles(ws[0], s.e_w, 4));
    for (int l = 1; l < 3; ++l) enc = stl_fused_step(enc, encode_tiles(ws[static_cast<std::size_t>(l)], s.e_w, 4), s);
    const DenseMatrix expected = oracle::matmul(oracle::matmul(oracle::matmul(x, ws[0]), ws[1]), ws[2]);
    CHECK(oracle::rel_fro(decode_tiles(enc, s.d, 4), expected) < 1e-9);
  }

  TEST_CASE("fused step errors") {
    Rng rng(14);
    const Snf s = random_snf(rng, 4, 6);
    const EncodedTiles<double> prev(2, 2, gaussian_matrix(rng, 4, 5));
    const EncodedTiles<double> w(2, 2, gaussian_matrix(rng, 4, 6));
    CHECK_THROWS_AS(stl_fused_step(prev, w, s), ShapeError);
  }

  TEST_CASE("MAC counts of the batched path") {
    Rng rng(15);
    const Snf s = random_snf(rng, 4, 20);
    MacCounter c;
    stl_batched(gaussian_matrix(rng, 8, 8), encode_tiles(gaussian_matrix(rng, 8, 8), s.e_w, 4), s, &c);
    CHECK(c.macs == oracle::stl_macs(8, 4, 20, false));
  }

  TEST_CASE("encoded blob and triple serialization") {
    Rng rng(16);
    const EncodedTiles<double> enc(2, 3, gaussian_matrix(rng, 6, 5));
    std::stringstream ss;
    io::write_encoded(ss, enc);
    CHECK(ss.str().substr(0, 4) == "STLE");
    const auto back = io::read_encoded(ss);
    CHECK(back.block_rows == 2);
    CHECK(back.block_cols == 3);
    CHECK(back.fibers == enc.fibers);

    const Snf s = random_snf(rng, 4, 9);
    std::stringstream ts;
    io::write_snf(ts, s);
    std::string header;
    std::getline(ts, header);
    CHECK(header.find("\"version\":1") != std::string::npos);
    ts.seekg(0);
    const Snf s2 = io::read_snf(ts);
    CHECK(s2.t == 4);
    CHECK(s2.e_x == s.e_x);
    CHECK(s2.e_w == s.e_w);
    CHECK(s2.d == s.d);

    std::stringstream bad("{\"t\":4,\"r\":9,\"version\":2}\n");
    CHECK_THROWS_AS(io::read_snf(bad), FormatError);
    std::stringstream garbage("not json\n");
    CHECK_THROWS_AS(io::read_snf(garbage), FormatError);
  }
}
