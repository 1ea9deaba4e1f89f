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

#include "stl/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace stl::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string to_csv(const DenseMatrix& m) {
  std::string out;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

DenseMatrix from_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p < end) {
      double v = 0;
      const auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc()) throw FormatError("from_csv: malformed number in '" + line + "'");
      row.push_back(v);
      p = res.ptr;
      if (p < end) {
        if (*p != ',') throw FormatError("from_csv: expected ',' in '" + line + "'");
        ++p;
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError("from_csv: ragged rows");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return {};
  DenseMatrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

namespace {

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError("unexpected end of binary stream");
  return v;
}

void expect_magic(std::istream& in, const char* magic) {
  char buf[4];
  in.read(buf, 4);
  if (!in || std::memcmp(buf, magic, 4) != 0) {
    throw FormatError(std::string("bad magic, expected ") + magic);
  }
}

void put_doubles(std::ostream& out, const DenseMatrix& m) {
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
}

void get_doubles(std::istream& in, DenseMatrix& m) {
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
  if (!in) throw FormatError("truncated matrix data");
}

constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

}  // namespace

void write_matrix(std::ostream& out, const DenseMatrix& m) {
  out.write("STLM", 4);
  put<std::uint32_t>(out, kMatrixBlobVersion);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  put_doubles(out, m);
}

DenseMatrix read_matrix(std::istream& in) {
  expect_magic(in, "STLM");
  if (const auto v = get<std::uint32_t>(in); v != kMatrixBlobVersion) {
    throw FormatError("unsupported matrix blob version " + std::to_string(v));
  }
  const auto rows = get<std::uint64_t>(in);
  const auto cols = get<std::uint64_t>(in);
  if (rows > kMaxElements || cols > kMaxElements || rows * cols > kMaxElements) {
    throw FormatError("matrix blob dimensions too large");
  }
  DenseMatrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  get_doubles(in, m);
  return m;
}

void write_encoded(std::ostream& out, const EncodedTiles<double>& enc) {
  out.write("STLE", 4);
  put<std::uint32_t>(out, kEncodedBlobVersion);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(enc.block_rows));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(enc.block_cols));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(enc.rank()));
  put_doubles(out, enc.fibers);
}

EncodedTiles<double> read_encoded(std::istream& in) {
  expect_magic(in, "STLE");
  if (const auto v = get<std::uint32_t>(in); v != kEncodedBlobVersion) {
    throw FormatError("unsupported encoded blob version " + std::to_string(v));
  }
  const auto br = get<std::uint64_t>(in);
  const auto bc = get<std::uint64_t>(in);
  const auto r = get<std::uint64_t>(in);
  if (br > kMaxElements || bc > kMaxElements || r > kMaxElements || br * bc * r > kMaxElements) {
    throw FormatError("encoded blob dimensions too large");
  }
  DenseMatrix fibers(static_cast<Index>(br * bc), static_cast<Index>(r));
  get_doubles(in, fibers);
  return {static_cast<Index>(br), static_cast<Index>(bc), std::move(fibers)};
}

void write_snf(std::ostream& out, const Snf& snf) {
  snf.validate();
  nlohmann::json header{{"t", snf.t}, {"r", snf.rank()}, {"version", kSnfVersion}};
  out << header.dump() << '\n';
  write_matrix(out, snf.e_x);
  write_matrix(out, snf.e_w);
  write_matrix(out, snf.d);
}

Snf read_snf(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("read_snf: missing header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("read_snf: bad header: ") + e.what());
  }
  if (header.value("version", -1) != kSnfVersion) throw FormatError("read_snf: unsupported version");
  const auto t = header.at("t").get<Index>();
  const auto r = header.at("r").get<Index>();
  auto ex = read_matrix(in);
  auto ew = read_matrix(in);
  auto d = read_matrix(in);
  Snf snf{t, std::move(ex), std::move(ew), std::move(d)};
  try {
    snf.validate();
  } catch (const ShapeError& e) {
    throw FormatError(std::string("read_snf: ") + e.what());
  }
  if (snf.rank() != r) throw FormatError("read_snf: header rank disagrees with factors");
  return snf;
}

void save_snf(const std::filesystem::path& path, const Snf& snf) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_snf(out, snf);
}

Snf load_snf(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_snf(in);
}

void save_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
}

std::string load_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace stl::io
