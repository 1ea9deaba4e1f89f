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

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace stl::cli {

inline constexpr const char* kArtifactVersion = STL_VERSION;

/// JSON config files for CLI11. Top-level keys map to global flags, nested
/// objects to subcommands; key names are the long flag names.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    return to_json(app, default_also).dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(input);
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConfigError("config must be a JSON object");
    std::vector<CLI::ConfigItem> items;
    flatten(j, {}, items);
    return items;
  }

  static nlohmann::json to_json(const CLI::App* app, bool default_also) {
    nlohmann::json j = nlohmann::json::object();
    for (const CLI::Option* opt : app->get_options()) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string& name = opt->get_lnames().front();
      if (name == "help" || name == "config") continue;
      std::vector<std::string> values;
      if (opt->count() > 0) {
        values = opt->reduced_results();
      } else if (default_also && !opt->get_default_str().empty()) {
        values = {opt->get_default_str()};
      } else {
        continue;
      }
      j[name] = typed(values, opt->get_expected_max() > 1);
    }
    for (const CLI::App* sub : app->get_subcommands()) j[sub->get_name()] = to_json(sub, default_also);
    return j;
  }

 private:
  static nlohmann::json scalar(const std::string& s) {
    auto parsed = nlohmann::json::parse(s, nullptr, false);
    if (!parsed.is_discarded() && !parsed.is_object()) return parsed;
    return s;
  }

  static nlohmann::json typed(const std::vector<std::string>& values, bool is_list) {
    if (values.size() == 1) {
      nlohmann::json v = scalar(values.front());
      if (is_list && !v.is_array()) return nlohmann::json::array({v});
      return v;
    }
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& v : values) arr.push_back(scalar(v));
    return arr;
  }

  static std::string as_input(const nlohmann::json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
  }

  static void flatten(const nlohmann::json& j, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto p = parents;
        p.push_back(key);
        items.push_back({p, "++", {}});
        flatten(value, p, items);
        items.push_back({p, "--", {}});
        continue;
      }
      CLI::ConfigItem item{parents, key, {}};
      if (value.is_array()) {
        for (const auto& e : value) item.inputs.push_back(as_input(e));
      } else {
        item.inputs.push_back(as_input(value));
      }
      items.push_back(std::move(item));
    }
  }
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

/// Comment line closing every CSV.
inline std::string metadata_line(const std::string& config_hash) {
  return "# config_hash=" + config_hash + " version=" + kArtifactVersion + "\n";
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results must be written
/// to per-index slots so output order does not depend on scheduling. The first
/// exception is rethrown after all workers finish.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  for (std::size_t k = 0; k < count; ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

struct Series {
  std::string label;
  std::string color;
  std::vector<double> x;
  std::vector<double> y;
};

/// Self-contained SVG line plot: one polyline per series, axes with min/max
/// tick labels, optional log10 y axis.
std::string svg_line_plot(const std::vector<Series>& series, const std::string& title,
                          const std::string& x_label, const std::string& y_label, bool log_y);

}  // namespace stl::cli
