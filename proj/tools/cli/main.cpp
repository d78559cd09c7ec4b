#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "commands.hpp"
#include "config.hpp"
#include "jumplab/parallel.hpp"

namespace fs = std::filesystem;
using jumplab::cli::json;

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::int64_t> seed;
  std::optional<int> threads;
  bool manifest_only = false;
  // simulate
  std::optional<std::size_t> paths;
  std::optional<double> t_max, lambda;
  // heatkernel
  std::optional<double> rho, window;
  std::vector<double> times, source;
  // forms
  std::optional<std::string> mode;
  // clt
  std::vector<double> n_list;
  std::optional<double> t;
  std::optional<std::string> reference;
};

void apply_overrides(const std::string& cmd, const Flags& f, json& cfg) {
  if (f.seed) cfg["seed"] = *f.seed;
  auto sec = [&](const char* name) -> json& {
    if (!cfg.contains(name) || cfg[name].is_null()) cfg[name] = json::object();
    return cfg[name];
  };
  if (cmd == "simulate") {
    if (f.paths) sec("simulate")["paths"] = *f.paths;
    if (f.t_max) sec("simulate")["t_max"] = *f.t_max;
    if (f.lambda) sec("simulate")["lambda"] = *f.lambda;
  } else if (cmd == "heatkernel") {
    if (f.rho) sec("heatkernel")["rho"] = *f.rho;
    if (f.window) sec("heatkernel")["window"] = *f.window;
    if (!f.times.empty()) sec("heatkernel")["times"] = f.times;
    if (!f.source.empty()) sec("heatkernel")["sources"] = json::array({f.source});
  } else if (cmd == "forms") {
    if (f.mode) sec("forms")["mode"] = *f.mode;
  } else if (cmd == "clt") {
    if (!f.n_list.empty()) sec("clt")["n_list"] = f.n_list;
    if (f.t) sec("clt")["t"] = *f.t;
    if (f.paths) sec("clt")["paths"] = *f.paths;
    if (f.reference) sec("clt")["reference"] = *f.reference;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"jumplab: lattice jump processes, heat kernels and Dirichlet forms"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--threads", f.threads, "worker threads (default: JUMPLAB_THREADS or hardware)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--manifest-only", f.manifest_only, "validate the config and write config + manifest only");

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "JSON experiment config")->required();
    sub->add_option("--out", f.out, "output directory (default: config output_dir or ./out)");
    sub->add_option("--seed", f.seed, "master seed");
  };
  common(app.add_subcommand("build", "evaluate a field on a window and write its entries"));
  common(app.add_subcommand("validate", "check the structural assumptions on a window"));
  auto* sim = app.add_subcommand("simulate", "simulate paths and exit-time statistics");
  common(sim);
  sim->add_option("--paths", f.paths);
  sim->add_option("--t-max", f.t_max);
  sim->add_option("--lambda", f.lambda, "drop jumps longer than lambda");
  auto* hk = app.add_subcommand("heatkernel", "heat kernel on a window by uniformization");
  common(hk);
  hk->add_option("--rho", f.rho);
  hk->add_option("--window", f.window, "window radius in positions");
  hk->add_option("--times", f.times)->delimiter(',');
  hk->add_option("--source", f.source, "source position, comma separated")->delimiter(',');
  auto* fm = app.add_subcommand("forms", "Dirichlet form evaluation and comparison");
  common(fm);
  fm->add_option("--mode", f.mode)->check(CLI::IsMember({"discrete", "compare", "continuum", "cube-chain"}));
  auto* clt = app.add_subcommand("clt", "convergence of the rescaled chain to the stable limit");
  common(clt);
  clt->add_option("--n-list", f.n_list)->delimiter(',');
  clt->add_option("--t", f.t);
  clt->add_option("--paths", f.paths);
  clt->add_option("--reference", f.reference)->check(CLI::IsMember({"cauchy_standard", "alpha_stable_cf"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : jumplab::cli::kConfig;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    jumplab::cli::RunRequest req;
    req.command = cmd;
    req.config = jumplab::cli::load_config_file(f.config);
    if (!req.config.is_object()) throw jumplab::SpecError(f.config, "config must be a JSON object");
    apply_overrides(cmd, f, req.config);
    req.base_dir = fs::absolute(f.config).parent_path();
    if (!f.out.empty()) {
      req.output_dir = f.out;
    } else {
      const auto& od = req.config.contains("output_dir") ? req.config["output_dir"] : json("out");
      if (!od.is_string()) throw jumplab::SpecError("/output_dir", "expected a string");
      req.output_dir = od.get<std::string>();
    }
    std::optional<int> threads = f.threads;
    if (!threads && req.config.contains("threads")) {
      const auto& th = req.config["threads"];
      if (!th.is_number_integer() || th.get<int>() < 1)
        throw jumplab::SpecError("/threads", "expected a positive integer");
      threads = th.get<int>();
    }
    if (threads) jumplab::set_thread_count(*threads);
    req.manifest_only = f.manifest_only;
    const int rc = jumplab::cli::run(req);
    if (rc == jumplab::cli::kCheckFailed) std::cerr << cmd << ": checks failed (see reports in " << req.output_dir.string() << ")\n";
    return rc;
  } catch (...) {
    return jumplab::cli::exit_code_for_current_exception();
  }
}
