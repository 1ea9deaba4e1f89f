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

// Writes the golden rank-49 triple used by `stl_cli verify`.
//
//   make_golden <out-dir>

#include <filesystem>
#include <iostream>

#include "stl/io.hpp"
#include "stl/strassen.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_golden <out-dir>\n";
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  std::filesystem::create_directories(dir);
  const auto triple = stl::strassen_rank49().triple;
  stl::io::save_snf(dir / "strassen49.snf", triple);
  std::cout << "wrote " << (dir / "strassen49.snf").string() << "\n";
  return 0;
}
