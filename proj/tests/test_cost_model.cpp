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
#include <stdexcept>

#include "oracles.hpp"
#include "stl/cost_model.hpp"
#include "stl/errors.hpp"

using namespace stl::cost;

TEST_SUITE("cost") {
  TEST_CASE("flops_general at a single tile") {
    for (Count t : {1, 2, 4}) {
      for (Count r : {1, 7, 20}) {
        CHECK(flops_general(ProblemShape::square(t, t, r)) == 6 * t * t * r + 2 * r);
      }
    }
  }

  TEST_CASE("flops_general is linear in r and exceeds flops_square by the weight encode") {
    const auto s32 = ProblemShape::square(8192, 4, 32);
    const auto s64 = ProblemShape::square(8192, 4, 64);
    CHECK(flops_general(s64) == 2 * flops_general(s32));
    CHECK(flops_general(s32) == flops_square(8192, 4, 32).flops_stl + 2ULL * 8192 * 8192 * 32);
    // Product term dominates at this size.
    const Count product = 2ULL * 32 * 2048 * 2048 * 2048;
    CHECK(product > flops_general(s32) - product);
  }

  TEST_CASE("worked example n=8192, t=4, r=32") {
    const auto f = flops_square(8192, 4, 32);
    CHECK(f.flops_stl == 558345748480ULL);
    CHECK(f.flops_naive == 1099511627776ULL);
    CHECK(std::llround(static_cast<double>(f.flops_stl) / 1e8) == 5583);
    CHECK(std::llround(static_cast<double>(f.flops_naive) / 1e8) == 10995);

    const auto io = io_square(8192, 4, 32, 2);
    const Count x = 8192ULL * 8192ULL * 2ULL;
    CHECK(x == 134217728ULL);
    CHECK(io.io_stl == 12 * x);
    CHECK(io.io_naive == 3 * x);

    const auto rep = cost_report(8192, 4, 32, 2);
    CHECK(rep.flops_stl == rep.flop_encode + rep.flop_products + rep.flop_decode);
    CHECK(rep.io_stl_bytes == rep.io_encode + rep.io_products + rep.io_decode);
    CHECK(rep.io_encode == x + x * 32 / 16);
    CHECK(rep.io_products == 3 * x * 32 / 16);
    CHECK(rep.io_decode == rep.io_encode);
    CHECK(rep.speedup_flops == doctest::Approx(1099511627776.0 / 558345748480.0));
  }

  TEST_CASE("io at r = t^2 and naive io") {
    for (Count n : {16, 64, 256}) {
      const Count x = n * n * 2;
      CHECK(io_square(n, 4, 16, 2).io_stl == 7 * x);
      CHECK(io_square(n, 4, 5, 2).io_naive == 3 * x);
    }
  }

  TEST_CASE("r = t^3 crossover") {
    const auto f = flops_square(1024, 4, 64);
    CHECK(2ULL * 64 * 256 * 256 * 256 == f.flops_naive);
  }

  TEST_CASE("instrumented counter equals the formulas") {
    for (Count t : {1, 2, 4}) {
      for (Count mult : {1, 4, 8}) {
        const Count n = t * mult;
        for (Count r : {Count{1}, t * t, 2 * t * t, 3 * t * t}) {
          const auto shape = ProblemShape::square(n, t, r);
          CHECK(count_reference_flops(shape) == flops_general(shape));
          CHECK(count_reference_flops(shape, false) == flops_square(n, t, r).flops_stl);
          CHECK(count_reference_flops(shape, false) == 2 * oracle::stl_macs(n, t, r, false));
        }
      }
    }
    CHECK(count_reference_flops(ProblemShape::square(16, 4, 16), false) == flops_square(16, 4, 16).flops_stl);
    CHECK(count_reference_flops(ProblemShape::square(8, 4, 20)) == flops_general(ProblemShape::square(8, 4, 20)));
  }

  TEST_CASE("degenerate t=1, r=1 count") {
    for (Count n : {2, 5, 8}) {
      CHECK(count_reference_flops(ProblemShape::square(n, 1, 1)) == 2 * n * n * n + 6 * n * n);
    }
  }

  TEST_CASE("rectangular shapes") {
    const ProblemShape s{8, 12, 4, 4, 9, 2};
    CHECK(count_reference_flops(s) == flops_general(s));
    CHECK(flops_general(s) == 2 * 9 * (8 * 12 + 12 * 4 + 8 * 4) + 2 * 9 * 2 * 3 * 1);
  }

  TEST_CASE("doubling n scales the product term by 8") {
    const auto a = flops_square(64, 4, 16), b = flops_square(128, 4, 16);
    const Count prod_a = a.flops_stl - 4 * 64 * 64 * 16, prod_b = b.flops_stl - 4 * 128 * 128 * 16;
    CHECK(prod_b == 8 * prod_a);
  }

  TEST_CASE("product term dominates above 3 t^3") {
    for (Count t : {1, 2, 4}) {
      for (Count r : {Count{1}, t * t, 3 * t * t}) {
        const Count n = 3 * t * t * t + t;
        const Count product = 2 * r * (n / t) * (n / t) * (n / t);
        const Count encode_decode = 3 * 2 * r * n * n;
        CHECK(product > encode_decode);
      }
    }
  }

  TEST_CASE("speedup table") {
    const auto table = speedup_table({16384}, {16, 32, 49}, 4);
    REQUIRE(table.size() == 3);
    CHECK(table[0].speedup_flops > table[1].speedup_flops);
    CHECK(table[1].speedup_flops > table[2].speedup_flops);
    // Every term of flops_square is linear in r.
    CHECK(table[0].speedup_flops / table[1].speedup_flops == doctest::Approx(2.0));

    for (Count t : {2, 4}) {
      const Count r = t * t + 1;
      const auto row = speedup_table({100 * t * t * t}, {r}, t).front();
      const double limit = static_cast<double>(t * t * t) / static_cast<double>(r);
      CHECK(std::abs(row.speedup_flops - limit) / limit <= 0.1);
    }
    const auto big = speedup_table({1ULL << 20}, {49}, 4).front();
    CHECK(big.speedup_flops == doctest::Approx(64.0 / 49.0).epsilon(1e-3));
    const auto cross = speedup_table({1ULL << 20}, {64}, 4).front();
    CHECK(cross.speedup_flops == doctest::Approx(1.0).epsilon(1e-3));
  }

  TEST_CASE("csv row schema") {
    CHECK(speedup_csv_header() == "n,t,r,flops_stl,flops_naive,io_stl,io_naive,speedup_flops");
    const auto row = speedup_table({8192}, {32}, 4).front();
    CHECK(to_csv_row(row).rfind("8192,4,32,558345748480,1099511627776,1610612736,402653184,", 0) == 0);
  }

  TEST_CASE("fused chain io") {
    const auto io = io_square(1024, 4, 32, 2);
    const auto rep = cost_report(1024, 4, 32, 2);
    CHECK(io_fused_chain(1024, 4, 32, 2, 1) == io.io_stl);
    CHECK(io_fused_chain(1024, 4, 32, 2, 3) == 3 * io.io_stl - 2 * (rep.io_encode + rep.io_decode));
  }

  TEST_CASE("invalid shapes and overflow") {
    CHECK_THROWS_AS(flops_square(10, 4, 8), stl::ParameterError);
    CHECK_THROWS_AS(flops_general(ProblemShape{0, 4, 4, 4, 1, 2}), stl::ParameterError);
    CHECK_THROWS_AS(flops_square(1ULL << 40, 1, 1ULL << 20), std::overflow_error);
  }
}
