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

#include <filesystem>
#include <iosfwd>
#include <string>

#include "stl/dense.hpp"
#include "stl/snf.hpp"

namespace stl::io {

// CSV: one matrix row per line, ',' separated, '.' decimal point, shortest
// round-trip float representation.
std::string to_csv(const DenseMatrix& m);
DenseMatrix from_csv(const std::string& text);

/// Shortest decimal string that parses back to exactly `x`.
std::string format_double(double x);

// Binary matrix blob, little-endian:
//   "STLM" | u32 version = 1 | u64 rows | u64 cols | f64 data (row-major)
inline constexpr std::uint32_t kMatrixBlobVersion = 1;
void write_matrix(std::ostream& out, const DenseMatrix& m);
DenseMatrix read_matrix(std::istream& in);

// Encoded tiles blob, little-endian:
//   "STLE" | u32 version = 1 | u64 block_rows | u64 block_cols | u64 r |
//   f64 fibers (fiber-contiguous, tile-major)
inline constexpr std::uint32_t kEncodedBlobVersion = 1;
void write_encoded(std::ostream& out, const EncodedTiles<double>& enc);
EncodedTiles<double> read_encoded(std::istream& in);

// Triple file: one JSON header line {"r":..,"t":..,"version":1} followed by
// the three matrix blobs E_X, E_W, D.
inline constexpr int kSnfVersion = 1;
void write_snf(std::ostream& out, const Snf& snf);
Snf read_snf(std::istream& in);

void save_snf(const std::filesystem::path& path, const Snf& snf);
Snf load_snf(const std::filesystem::path& path);

void save_text(const std::filesystem::path& path, const std::string& text);
std::string load_text(const std::filesystem::path& path);

}  // namespace stl::io
