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

// stl_cli: batch driver for the tile-wise operator experiments.
//
//   stl_cli [--seed N] [--out-dir DIR] [--jobs N] [--config FILE] <command> [options]
//
// Commands: verify, class0, alpha24, cost, spectrum. Exit codes: 0 success,
// 1 invariant failure, 2 config error.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cli_support.hpp"
#include "stl/cost_model.hpp"
#include "stl/errors.hpp"
#include "stl/io.hpp"
#include "stl/pruning24.hpp"
#include "stl/rng.hpp"
#include "stl/toy_network.hpp"
#include "stl/training.hpp"
#include "verify.hpp"

namespace fs = std::filesystem;
using namespace stl;
using stl::cli::kArtifactVersion;

namespace {

struct InvariantFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 0;
  std::string out_dir = "stl_out";
  int jobs = 1;
};

struct Run {
  Globals globals;
  std::string config_hash;
  nlohmann::json effective;

  fs::path out(const std::string& name) const { return fs::path(globals.out_dir) / name; }

  void write_csv(const std::string& name, const std::string& header,
                 const std::vector<std::string>& rows) const {
    std::string text = header + "\n";
    for (const auto& r : rows) text += r + "\n";
    text += cli::metadata_line(config_hash);
    io::save_text(out(name), text);
  }
};

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

fs::path golden_dir() {
  if (const char* env = std::getenv("STL_GOLDEN_DIR"); env != nullptr && *env != '\0') return env;
  return STL_DEFAULT_GOLDEN_DIR;
}

// verify

struct VerifyOptions {
  std::string filter;
  bool list = false;
};

int cmd_verify(const Run& run, const VerifyOptions& opt) {
  if (opt.list) {
    for (const auto& [name, group] : cli::verify_check_names()) std::cout << name << "  [" << group << "]\n";
    return 0;
  }
  const auto results = cli::run_verify(opt.filter, golden_dir(), run.globals.seed);
  if (results.empty()) throw ParameterError("verify: filter '" + opt.filter + "' matches no check");
  nlohmann::json summary = {{"version", kArtifactVersion}, {"config_hash", run.config_hash}};
  auto checks = nlohmann::json::array();
  std::vector<std::string> failed;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS  " : "FAIL  ") << r.name << "  " << r.detail << "\n";
    checks.push_back({{"name", r.name}, {"group", r.group}, {"passed", r.passed}, {"detail", r.detail}});
    if (!r.passed) failed.push_back(r.name);
  }
  summary["checks"] = checks;
  summary["failed"] = failed;
  io::save_text(run.out("verify.json"), summary.dump(2) + "\n");
  if (!failed.empty()) {
    std::ostringstream msg;
    msg << "failing invariants:";
    for (const auto& f : failed) msg << ' ' << f;
    throw InvariantFailure(msg.str());
  }
  std::cout << results.size() << " checks passed\n";
  return 0;
}

// class0

struct Class0Options {
  std::vector<long> ranks;
  int seeds = 3;
  std::vector<std::string> inits{"strassen_subset", "random_gaussian"};
  long steps = 30000;
  double step_size = 2e-2;
  long batch = 128;
  double momentum = 0.9;
  double init_scale = 0.3;
  long n_eval = 20000;
  long alpha24_nw = 20000;
  long alpha24_nx = 512;
};

int cmd_class0(const Run& run, const Class0Options& opt) {
  std::vector<long> ranks = opt.ranks;
  if (ranks.empty())
    for (long r = 16; r <= 49; ++r) ranks.push_back(r);
  if (opt.seeds < 1) throw ParameterError("class0: --seeds must be positive");

  std::vector<training::Class0Config> grid;
  for (long r : ranks) {
    for (const auto& init : opt.inits) {
      for (int s = 0; s < opt.seeds; ++s) {
        training::Class0Config cfg;
        cfg.r = r;
        cfg.init = training::parse_init_kind(init);
        cfg.seed = run.globals.seed + static_cast<std::uint64_t>(s);
        cfg.steps = opt.steps;
        cfg.step_size = opt.step_size;
        cfg.batch = opt.batch;
        cfg.momentum = opt.momentum;
        cfg.init_scale = opt.init_scale;
        cfg.n_eval_pairs = opt.n_eval;
        cfg.eval_interval = std::min<Index>(cfg.eval_interval, std::max<long>(1, opt.steps));
        cfg.validate();
        grid.push_back(cfg);
      }
    }
  }

  std::vector<training::Class0Result> results(grid.size());
  cli::parallel_for(grid.size(), run.globals.jobs,
                    [&](std::size_t i) { results[i] = training::train_class0(grid[i]); });

  std::vector<std::string> rows;
  for (const auto& res : results) {
    rows.push_back(std::to_string(res.r) + "," + training::to_string(res.init) + "," +
                   std::to_string(res.seed) + "," + io::format_double(res.loss_init) + "," +
                   io::format_double(res.loss_final));
  }
  run.write_csv("class0.csv", "r,init,seed,loss_init,loss_final", rows);

  Rng alpha_rng = Rng(run.globals.seed).split(7);
  const auto a24 = pruning::estimate_alpha24(static_cast<std::uint64_t>(opt.alpha24_nw),
                                             static_cast<std::uint64_t>(opt.alpha24_nx), alpha_rng);
  run.write_csv("alpha24_reference.csv", pruning::alpha24_csv_header(), {pruning::to_csv_row(a24)});

  std::vector<std::string> median_rows;
  std::vector<cli::Series> series;
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  std::size_t color = 0;
  for (const auto& init : opt.inits) {
    cli::Series s{init + " (median)", colors[color++ % 4], {}, {}};
    for (long r : ranks) {
      std::vector<double> finals;
      for (const auto& res : results) {
        if (res.r == r && training::to_string(res.init) == init) finals.push_back(res.loss_final);
      }
      const double m = median(finals);
      median_rows.push_back(std::to_string(r) + "," + init + "," + io::format_double(m) + "," +
                            io::format_double(*std::min_element(finals.begin(), finals.end())));
      s.x.push_back(static_cast<double>(r));
      s.y.push_back(m);
      std::cout << "r=" << r << " " << init << " median loss_final " << m << "\n";
    }
    series.push_back(std::move(s));
  }
  run.write_csv("class0_median.csv", "r,init,median_loss_final,min_loss_final", median_rows);

  const double lo = static_cast<double>(ranks.front()), hi = static_cast<double>(ranks.back());
  series.push_back({"2:4 pruning reference", "#7f7f7f", {lo, hi}, {a24.alpha, a24.alpha}});
  io::save_text(run.out("class0.svg"),
                cli::svg_line_plot(series, "Class-0 loss vs rank", "rank r", "held-out loss", true));
  std::cout << "alpha24 reference " << a24.alpha << " (se " << a24.standard_error << ")\n";
  return 0;
}

// alpha24

struct Alpha24Options {
  long n_w = 20000;
  long n_x = 512;
  long n_eval_x = 0;
  long oracle_columns = 1000000;
};

int cmd_alpha24(const Run& run, const Alpha24Options& opt) {
  if (opt.n_w < 2 || opt.n_x < 2 || opt.n_eval_x < 0 || opt.oracle_columns < 1) {
    throw ParameterError("alpha24: sample counts must be positive (n-w, n-x >= 2)");
  }
  Rng rng = Rng(run.globals.seed).split(7);
  pruning::Alpha24Options o;
  o.n_eval_x = static_cast<std::uint64_t>(opt.n_eval_x);
  const auto res = pruning::estimate_alpha24(static_cast<std::uint64_t>(opt.n_w),
                                             static_cast<std::uint64_t>(opt.n_x), rng, o);
  Rng oracle_rng = Rng(run.globals.seed).split(8);
  const double oracle =
      pruning::order_statistics_alpha24(static_cast<std::uint64_t>(opt.oracle_columns), oracle_rng);
  run.write_csv("alpha24.csv", pruning::alpha24_csv_header(), {pruning::to_csv_row(res)});
  run.write_csv("alpha24_oracle.csv", "n_columns,alpha,abs_difference",
                {std::to_string(opt.oracle_columns) + "," + io::format_double(oracle) + "," +
                 io::format_double(std::abs(oracle - res.alpha))});
  std::cout << "alpha24 refit estimate " << res.alpha << " (se " << res.standard_error << ")\n"
            << "order-statistics oracle " << oracle << "\n";
  return 0;
}

// cost

struct CostOptions {
  std::vector<cost::Count> n{1024, 2048, 4096, 8192};
  std::vector<cost::Count> r{8, 16, 24, 32, 40, 48, 49};
  cost::Count t = 4;
  cost::Count bytes = 2;
  std::vector<cost::Count> check_n{8, 16, 32};
};

int cmd_cost(const Run& run, const CostOptions& opt) {
  using namespace stl::cost;
  std::vector<std::string> rows;
  for (const auto& row : speedup_table(opt.n, opt.r, opt.t, opt.bytes)) rows.push_back(to_csv_row(row));
  run.write_csv("cost.csv", speedup_csv_header(), rows);

  const auto ex = cost_report(8192, 4, 32, 2);
  const Count x_bytes = 8192ULL * 8192ULL * 2ULL;
  run.write_csv("cost_example.csv", "quantity,value,reference",
                {"n,8192,", "t,4,", "r,32,", "x_bytes," + std::to_string(x_bytes) + ",1.3e8",
                 "flops_stl," + std::to_string(ex.flops_stl) + ",5583e8",
                 "flops_naive," + std::to_string(ex.flops_naive) + ",10995e8",
                 "io_stl_bytes," + std::to_string(ex.io_stl_bytes) + ",12|X|",
                 "io_naive_bytes," + std::to_string(ex.io_naive_bytes) + ",3|X|",
                 "speedup_flops," + io::format_double(ex.speedup_flops) + ",almost 2"});

  bool all_match = true;
  std::vector<std::string> checks;
  for (Count n : opt.check_n) {
    for (Count r : opt.r) {
      if (n % opt.t != 0) throw ParameterError("cost: check sizes must be multiples of t");
      const auto shape = ProblemShape::square(n, opt.t, r, opt.bytes);
      const Count counted = count_reference_flops(shape, false);
      const Count formula = flops_square(n, opt.t, r).flops_stl;
      all_match = all_match && counted == formula;
      checks.push_back(std::to_string(n) + "," + std::to_string(opt.t) + "," + std::to_string(r) + "," +
                       std::to_string(counted) + "," + std::to_string(formula) + "," +
                       (counted == formula ? "1" : "0"));
    }
  }
  run.write_csv("cost_check.csv", "n,t,r,counted_flops,formula_flops,match", checks);
  std::cout << "worked example n=8192 t=4 r=32: flops_stl " << ex.flops_stl << ", flops_naive "
            << ex.flops_naive << ", io_stl " << ex.io_stl_bytes << " bytes (" << ex.io_stl_bytes / x_bytes
            << "|X|)\n";
  if (!all_match) throw InvariantFailure("cost: instrumented FLOP count differs from the formula");
  return 0;
}

// spectrum

struct SpectrumOptions {
  std::vector<long> dims{64, 64, 16};
  long t = 4;
  long r = 24;
  int seeds = 5;
  long steps = 3000;
  double step_size = 0.05;
  double momentum = 0.9;
  long batch = 64;
  double tau = 1e-3;
  long class0_steps = 5000;
  std::string encoder;
  std::string teacher = "dense_mlp";
};

int cmd_spectrum(const Run& run, const SpectrumOptions& opt) {
  if (opt.seeds < 1) throw ParameterError("spectrum: --seeds must be positive");
  toy::ToyConfig base;
  base.dims.assign(opt.dims.begin(), opt.dims.end());
  base.t = opt.t;
  base.r = opt.r;
  base.steps = opt.steps;
  base.step_size = opt.step_size;
  base.momentum = opt.momentum;
  base.batch = opt.batch;
  base.tau = opt.tau;
  base.class0_steps = opt.class0_steps;
  if (opt.teacher == "dense_mlp") {
    base.teacher = toy::TeacherKind::dense_mlp;
  } else if (opt.teacher == "stl_realizable") {
    base.teacher = toy::TeacherKind::stl_realizable;
  } else {
    throw ParameterError("spectrum: --teacher must be dense_mlp or stl_realizable");
  }
  if (!opt.encoder.empty()) {
    if (!fs::is_regular_file(opt.encoder)) throw ParameterError("spectrum: no such encoder file " + opt.encoder);
    base.encoder_snf = io::load_snf(opt.encoder);
  }
  base.validate();

  std::vector<toy::ToyResult> results(static_cast<std::size_t>(opt.seeds));
  cli::parallel_for(results.size(), run.globals.jobs, [&](std::size_t i) {
    toy::ToyConfig cfg = base;
    cfg.seed = run.globals.seed + i;
    results[i] = toy::train_toy_network(cfg);
  });

  std::vector<std::string> rows, rank_rows;
  std::vector<double> trained_ranks;
  bool init_exact = true;
  for (std::size_t s = 0; s < results.size(); ++s) {
    const auto& res = results[s];
    const std::string seed = std::to_string(run.globals.seed + s);
    for (std::size_t l = 0; l < res.init_spectra.size(); ++l) {
      for (const auto* stage : {"init", "trained"}) {
        const auto& rep = std::string(stage) == "init" ? res.init_spectra[l] : res.trained_spectra[l];
        for (Index i = 0; i < rep.singular_values.size(); ++i) {
          rows.push_back(seed + "," + stage + "," + std::to_string(l) + "," + std::to_string(i) + "," +
                         io::format_double(rep.singular_values(i)) + "," +
                         io::format_double(rep.ratio(i)) + "," +
                         io::format_double(rep.reference_singular_values(i)));
        }
      }
      const auto& a = res.init_spectra[l];
      const auto& b = res.trained_spectra[l];
      const Index area = base.t * base.t;
      init_exact = init_exact && a.numerical_rank == area;
      trained_ranks.push_back(static_cast<double>(b.numerical_rank));
      rank_rows.push_back(seed + "," + std::to_string(l) + "," + std::to_string(a.numerical_rank) + "," +
                          std::to_string(b.numerical_rank) + "," + io::format_double(res.loss_init) + "," +
                          io::format_double(res.loss_final));
    }
    toy::save_network(run.out("model_seed" + seed + ".stln"), res.model);
  }
  run.write_csv("spectrum.csv", "seed,stage,layer,index,sigma,sigma_over_sigma1,reference_sigma", rows);
  run.write_csv("spectrum_ranks.csv", "seed,layer,rank_init,rank_trained,loss_init,loss_final", rank_rows);

  const auto& first = results.front();
  std::vector<cli::Series> series;
  auto add = [&](const std::string& label, const std::string& color, const DenseVector& sv) {
    cli::Series s{label, color, {}, {}};
    for (Index i = 0; i < sv.size(); ++i) {
      s.x.push_back(static_cast<double>(i + 1));
      s.y.push_back(sv(0) > 0.0 ? sv(i) / sv(0) : 0.0);
    }
    series.push_back(std::move(s));
  };
  add("init", "#7f7f7f", first.init_spectra.front().singular_values);
  add("trained", "#d62728", first.trained_spectra.front().singular_values);
  add("Gaussian reference", "#1f77b4", first.trained_spectra.front().reference_singular_values);
  io::save_text(run.out("spectrum.svg"),
                cli::svg_line_plot(series, "Fake-encoding spectrum, layer 0", "index i", "sigma_i / sigma_1", true));

  const double med = median(trained_ranks);
  std::cout << "init rank " << (init_exact ? "exactly " : "not ") << base.t * base.t
            << "; median trained rank " << med << " at tau " << base.tau << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tile-wise bilinear operator experiments", "stl_cli"};
  app.config_formatter(std::make_shared<cli::JsonConfig>());
  app.set_config("--config", "", "JSON config; keys mirror flag names, subcommand keys nest");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kArtifactVersion);

  Run run;
  app.add_option("--seed", run.globals.seed, "Root seed")->capture_default_str();
  app.add_option("--out-dir", run.globals.out_dir, "Output directory")->capture_default_str();
  app.add_option("--jobs", run.globals.jobs, "Worker threads; 1 is the deterministic golden mode")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  VerifyOptions vopt;
  auto* verify = app.add_subcommand("verify", "Run the exactness, equivalence and gradient invariants");
  verify->add_option("--filter", vopt.filter, "Only checks whose name or group contains this");
  verify->add_flag("--list", vopt.list, "List checks and exit");

  Class0Options c0;
  auto* class0 = app.add_subcommand("class0", "Train triples on Gaussian 4x4 tiles across a rank grid");
  class0->add_option("--ranks", c0.ranks, "Ranks to train (default 16..49)");
  class0->add_option("--seeds", c0.seeds, "Seeds per (rank, init)")->capture_default_str();
  class0->add_option("--inits", c0.inits, "Init families")->capture_default_str();
  class0->add_option("--steps", c0.steps)->capture_default_str();
  class0->add_option("--step-size", c0.step_size)->capture_default_str();
  class0->add_option("--batch", c0.batch)->capture_default_str();
  class0->add_option("--momentum", c0.momentum)->capture_default_str();
  class0->add_option("--init-scale", c0.init_scale)->capture_default_str();
  class0->add_option("--n-eval", c0.n_eval, "Held-out pairs")->capture_default_str();
  class0->add_option("--alpha24-nw", c0.alpha24_nw)->capture_default_str();
  class0->add_option("--alpha24-nx", c0.alpha24_nx)->capture_default_str();

  Alpha24Options a24;
  auto* alpha24 = app.add_subcommand("alpha24", "Estimate the refit 2:4 pruning residual");
  alpha24->add_option("--n-w", a24.n_w, "Weight tiles")->capture_default_str();
  alpha24->add_option("--n-x", a24.n_x, "Refit input tiles per weight")->capture_default_str();
  alpha24->add_option("--n-eval-x", a24.n_eval_x, "Held-out input tiles per weight (0 = n-x)")
      ->capture_default_str();
  alpha24->add_option("--oracle-columns", a24.oracle_columns)->capture_default_str();

  CostOptions copt;
  auto* cost = app.add_subcommand("cost", "FLOP and IO model tables");
  cost->add_option("--n", copt.n, "Square sizes")->capture_default_str();
  cost->add_option("--r", copt.r, "Ranks")->capture_default_str();
  cost->add_option("--t", copt.t, "Tile size")->capture_default_str();
  cost->add_option("--bytes", copt.bytes, "Bytes per scalar")->capture_default_str();
  cost->add_option("--check-n", copt.check_n, "Sizes for the instrumented counter check")
      ->capture_default_str();

  SpectrumOptions sopt;
  auto* spectrum = app.add_subcommand("spectrum", "Train the toy network and report fake-encoding spectra");
  spectrum->add_option("--dims", sopt.dims, "Layer widths")->capture_default_str();
  spectrum->add_option("--t", sopt.t)->capture_default_str();
  spectrum->add_option("--r", sopt.r)->capture_default_str();
  spectrum->add_option("--seeds", sopt.seeds)->capture_default_str();
  spectrum->add_option("--steps", sopt.steps)->capture_default_str();
  spectrum->add_option("--step-size", sopt.step_size)->capture_default_str();
  spectrum->add_option("--momentum", sopt.momentum)->capture_default_str();
  spectrum->add_option("--batch", sopt.batch)->capture_default_str();
  spectrum->add_option("--tau", sopt.tau)->capture_default_str();
  spectrum->add_option("--class0-steps", sopt.class0_steps)->capture_default_str();
  spectrum->add_option("--encoder", sopt.encoder, "Triple file for (E_X, E_W, D)");
  spectrum->add_option("--teacher", sopt.teacher, "dense_mlp or stl_realizable")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  run.effective = cli::JsonConfig::to_json(&app, true);
  nlohmann::json hashed = run.effective;
  hashed.erase("out-dir");
  hashed.erase("jobs");
  run.config_hash = cli::hex64(cli::fnv1a(hashed.dump()));

  try {
    fs::create_directories(run.globals.out_dir);
    io::save_text(run.out("config.json"), run.effective.dump(2) + "\n");
    if (verify->parsed()) return cmd_verify(run, vopt);
    if (class0->parsed()) return cmd_class0(run, c0);
    if (alpha24->parsed()) return cmd_alpha24(run, a24);
    if (cost->parsed()) return cmd_cost(run, copt);
    if (spectrum->parsed()) return cmd_spectrum(run, sopt);
  } catch (const InvariantFailure& e) {
    std::cerr << "stl_cli: " << e.what() << "\n";
    return 1;
  } catch (const ParameterError& e) {
    std::cerr << "stl_cli: config error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "stl_cli: config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "stl_cli: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
