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
#include <string>
#include <vector>

namespace stl::cli {

struct CheckOutcome {
  std::string name;
  std::string group;
  bool passed = false;
  std::string detail;
};

/// Names and groups of every invariant check, in run order.
std::vector<std::pair<std::string, std::string>> verify_check_names();

/// Runs every check whose name or group contains `filter` (empty runs all).
/// Golden assets are read from golden_dir.
std::vector<CheckOutcome> run_verify(const std::string& filter,
                                     const std::filesystem::path& golden_dir, std::uint64_t seed);

}  // namespace stl::cli
