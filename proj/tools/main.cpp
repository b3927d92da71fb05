// Apache License, Version 2.0, refer to LICENSE.txt
//
// Batch front end: simulate current-status datasets, fit either prior,
// evaluate estimates against the reference density, run Monte-Carlo studies
// and render cell-weight heatmaps. Every command writes a manifest that the
// rerun command can replay bit-exactly.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "csmark/censoring.hpp"
#include "csmark/grid.hpp"
#include "csmark/io.hpp"
#include "csmark/laplacian.hpp"
#include "csmark/mcmc.hpp"
#include "csmark/rng.hpp"
#include "csmark/sim.hpp"
#include "csmark/transport.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw csmark::IoError("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw csmark::IoError("write failed: " + path);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw csmark::IoError("cannot open for reading: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw csmark::ParseError(path + ": " + e.what());
  }
  return j;
}

void write_manifest(const std::string& out_dir, const std::string& command,
                    const json& config, std::uint64_t seed,
                    const std::vector<std::string>& artifacts, double wall,
                    const json& acceptance = json::object()) {
  json m;
  m["command"] = command;
  m["config"] = config;
  m["seed"] = seed;
  m["artifacts"] = artifacts;
  m["wall_time_seconds"] = wall;
  if (!acceptance.empty()) m["acceptance"] = acceptance;
  write_json_file(join_path(out_dir, "manifest.json"), m);
}

// ---------------------------------------------------------------- simulate

struct SimulateConfig {
  int n = 200;
  std::uint64_t seed = 1;
  double mix_weight = 0.3;
  bool truth = false;
  std::string out_dir = ".";
};

json to_json(const SimulateConfig& c) {
  return {{"n", c.n},          {"seed", c.seed},       {"mix_weight", c.mix_weight},
          {"truth", c.truth},  {"out_dir", c.out_dir}};
}

SimulateConfig simulate_from_json(const json& j) {
  SimulateConfig c;
  c.n = j.at("n").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.mix_weight = j.at("mix_weight").get<double>();
  c.truth = j.at("truth").get<bool>();
  c.out_dir = j.at("out_dir").get<std::string>();
  return c;
}

void run_simulate(const SimulateConfig& cfg) {
  Timer timer;
  fs::create_directories(cfg.out_dir);
  csmark::SimSpec spec{cfg.n, cfg.seed, cfg.mix_weight};
  const auto latent = csmark::simulate_latent(spec);
  std::vector<csmark::Observation> data;
  data.reserve(latent.size());
  for (const auto& r : latent) data.push_back(csmark::observe(r));

  std::vector<std::string> artifacts{"data.csv"};
  csmark::write_observations_csv(join_path(cfg.out_dir, "data.csv"), data);
  if (cfg.truth) {
    csmark::write_latent_csv(join_path(cfg.out_dir, "truth.csv"), latent);
    artifacts.push_back("truth.csv");
  }
  write_manifest(cfg.out_dir, "simulate", to_json(cfg), cfg.seed, artifacts,
                 timer.seconds());
}

// --------------------------------------------------------------------- fit

struct FitConfig {
  std::string prior = "lngl";
  std::string data;
  std::string out_dir = ".";
  int bins_x = 25;
  int bins_y = 50;
  double m1 = 1.0;
  double m2 = 2.0;
  int iters = 20000;
  double burnin_frac = 1.0 / 3.0;
  double rho = 0.95;
  double delta = 0.1;
  std::uint64_t seed = 1;
  int thin = 1;
};

json to_json(const FitConfig& c) {
  return {{"prior", c.prior},     {"data", c.data},
          {"out_dir", c.out_dir}, {"bins_x", c.bins_x},
          {"bins_y", c.bins_y},   {"m1", c.m1},
          {"m2", c.m2},           {"iters", c.iters},
          {"burnin_frac", c.burnin_frac}, {"rho", c.rho},
          {"delta", c.delta},     {"seed", c.seed},
          {"thin", c.thin}};
}

FitConfig fit_from_json(const json& j) {
  FitConfig c;
  c.prior = j.at("prior").get<std::string>();
  c.data = j.at("data").get<std::string>();
  c.out_dir = j.at("out_dir").get<std::string>();
  c.bins_x = j.at("bins_x").get<int>();
  c.bins_y = j.at("bins_y").get<int>();
  c.m1 = j.at("m1").get<double>();
  c.m2 = j.at("m2").get<double>();
  c.iters = j.at("iters").get<int>();
  c.burnin_frac = j.at("burnin_frac").get<double>();
  c.rho = j.at("rho").get<double>();
  c.delta = j.at("delta").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.thin = j.at("thin").get<int>();
  return c;
}

csmark::ChainConfig chain_config(const FitConfig& cfg) {
  csmark::ChainConfig cc;
  cc.iterations = cfg.iters;
  cc.burnin_fraction = cfg.burnin_frac;
  cc.rho = cfg.rho;
  cc.delta = cfg.delta;
  cc.seed = cfg.seed;
  cc.thin = cfg.thin;
  return cc;
}

void validate_observations(const csmark::GridSpec& grid,
                           const std::vector<csmark::Observation>& data,
                           const std::string& path) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& obs = data[i];
    if (obs.t < 0.0 || obs.t > grid.m1 || obs.z < 0.0 || obs.z > grid.m2)
      throw std::domain_error(path + ": data row " + std::to_string(i + 1) +
                              " (t=" + csmark::format_double(obs.t) +
                              ", z=" + csmark::format_double(obs.z) +
                              ") lies outside the grid support");
  }
}

void run_fit(const FitConfig& cfg) {
  Timer timer;
  if (cfg.prior != "lngl" && cfg.prior != "dirichlet")
    throw std::invalid_argument("prior must be 'lngl' or 'dirichlet'");
  const auto grid = csmark::make_grid(cfg.m1, cfg.m2, cfg.bins_x, cfg.bins_y);
  const auto data = csmark::read_observations_csv(cfg.data);
  validate_observations(grid, data, cfg.data);

  const auto cc = chain_config(cfg);
  const csmark::ChainOutput out = cfg.prior == "lngl"
                                      ? csmark::run_lngl_chain(cc, grid, data)
                                      : csmark::run_dirichlet_chain(cc, grid, data);

  fs::create_directories(cfg.out_dir);
  csmark::write_bin_weights_csv(join_path(cfg.out_dir, "posterior_mean.csv"),
                                grid, out.posterior_mean);
  {
    std::ofstream tt(join_path(cfg.out_dir, "tau_trace.csv"), std::ios::binary);
    if (!tt) throw csmark::IoError("cannot open for writing: tau_trace.csv");
    for (double v : out.tau_trace) tt << csmark::format_double(v) << '\n';
  }

  json meta;
  meta["config"] = to_json(cfg);
  meta["seed"] = cfg.seed;
  meta["accept_z"] = out.accept_z;
  meta["accept_tau"] = out.accept_tau;
  meta["update_order"] = cfg.prior == "lngl" ? "tau-then-z" : "impute-theta-tau";
  if (!out.zmean_trace.empty()) {
    double zbar = 0.0;
    for (double v : out.zmean_trace) zbar += v;
    meta["zvec_mean_trace_average"] = zbar / out.zmean_trace.size();
  }
  meta["wall_time_seconds"] = timer.seconds();
  write_json_file(join_path(cfg.out_dir, "meta.json"), meta);

  json acceptance{{"accept_z", out.accept_z}, {"accept_tau", out.accept_tau}};
  write_manifest(cfg.out_dir, "fit", to_json(cfg), cfg.seed,
                 {"posterior_mean.csv", "tau_trace.csv", "meta.json"},
                 timer.seconds(), acceptance);
}

// ---------------------------------------------------------------- evaluate

struct EvaluateConfig {
  std::string estimate;
  std::string truth = "f0";  // path to a weight CSV, or 'f0' for the analytic density
  double m1 = 1.0;
  double m2 = 2.0;
  std::string out_dir = ".";
};

json to_json(const EvaluateConfig& c) {
  return {{"estimate", c.estimate}, {"truth", c.truth},   {"m1", c.m1},
          {"m2", c.m2},             {"out_dir", c.out_dir}};
}

EvaluateConfig evaluate_from_json(const json& j) {
  EvaluateConfig c;
  c.estimate = j.at("estimate").get<std::string>();
  c.truth = j.at("truth").get<std::string>();
  c.m1 = j.at("m1").get<double>();
  c.m2 = j.at("m2").get<double>();
  c.out_dir = j.at("out_dir").get<std::string>();
  return c;
}

void run_evaluate(const EvaluateConfig& cfg) {
  Timer timer;
  auto [est, dims] = csmark::read_bin_weights_csv(cfg.estimate);
  const auto grid = csmark::make_grid(cfg.m1, cfg.m2, dims.first, dims.second);

  csmark::BinWeights truth;
  if (cfg.truth == "f0") {
    truth = csmark::true_bin_masses(grid, [](double x, double y) {
      return csmark::f0_density(x, y);
    });
  } else {
    auto [w, tdims] = csmark::read_bin_weights_csv(cfg.truth);
    if (tdims != dims)
      throw std::invalid_argument(
          "grid mismatch: estimate is " + std::to_string(dims.first) + "x" +
          std::to_string(dims.second) + " but truth is " +
          std::to_string(tdims.first) + "x" + std::to_string(tdims.second));
    truth = std::move(w);
  }

  const double wp =
      csmark::wasserstein1(grid, est, truth, csmark::GroundUnits::physical);
  const double wi =
      csmark::wasserstein1(grid, est, truth, csmark::GroundUnits::index);

  fs::create_directories(cfg.out_dir);
  json report;
  report["wasserstein_physical"] = wp;
  report["wasserstein_index"] = wi;
  report["grid"] = {{"j_bins", grid.j_bins},
                    {"k_bins", grid.k_bins},
                    {"m1", grid.m1},
                    {"m2", grid.m2}};
  report["inputs"] = {{"estimate", cfg.estimate}, {"truth", cfg.truth}};
  write_json_file(join_path(cfg.out_dir, "report.json"), report);
  write_manifest(cfg.out_dir, "evaluate", to_json(cfg), 0, {"report.json"},
                 timer.seconds());
}

// ---------------------------------------------------------------------- mc

struct McConfig {
  std::vector<int> n_list{100, 250, 500};
  int reps = 20;
  int bins_x = 25;
  int bins_y = 50;
  double m1 = 1.0;
  double m2 = 2.0;
  int iters = 20000;
  double burnin_frac = 1.0 / 3.0;
  double rho = 0.95;
  double delta_lngl = 0.2;
  double delta_dirichlet = 0.5;
  bool tune = false;
  double mix_weight = 0.3;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency
  int thin = 20;
  std::string out_dir = ".";
};

json to_json(const McConfig& c) {
  return {{"n_list", c.n_list},
          {"reps", c.reps},
          {"bins_x", c.bins_x},
          {"bins_y", c.bins_y},
          {"m1", c.m1},
          {"m2", c.m2},
          {"iters", c.iters},
          {"burnin_frac", c.burnin_frac},
          {"rho", c.rho},
          {"delta_lngl", c.delta_lngl},
          {"delta_dirichlet", c.delta_dirichlet},
          {"tune", c.tune},
          {"mix_weight", c.mix_weight},
          {"seed", c.seed},
          {"threads", c.threads},
          {"thin", c.thin},
          {"out_dir", c.out_dir}};
}

McConfig mc_from_json(const json& j) {
  McConfig c;
  c.n_list = j.at("n_list").get<std::vector<int>>();
  c.reps = j.at("reps").get<int>();
  c.bins_x = j.at("bins_x").get<int>();
  c.bins_y = j.at("bins_y").get<int>();
  c.m1 = j.at("m1").get<double>();
  c.m2 = j.at("m2").get<double>();
  c.iters = j.at("iters").get<int>();
  c.burnin_frac = j.at("burnin_frac").get<double>();
  c.rho = j.at("rho").get<double>();
  c.delta_lngl = j.at("delta_lngl").get<double>();
  c.delta_dirichlet = j.at("delta_dirichlet").get<double>();
  c.tune = j.at("tune").get<bool>();
  c.mix_weight = j.at("mix_weight").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.threads = j.at("threads").get<int>();
  c.thin = j.at("thin").get<int>();
  c.out_dir = j.at("out_dir").get<std::string>();
  return c;
}

std::string csv_escape(std::string s) {
  for (char& ch : s)
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
  return s;
}

struct McRow {
  int rep = 0;
  int n = 0;
  std::string prior;
  std::uint64_t seed = 0;
  std::optional<double> wasserstein;
  std::string error;
};

void run_mc(const McConfig& cfg) {
  Timer timer;
  if (cfg.reps < 1) throw std::invalid_argument("reps must be >= 1");
  if (cfg.n_list.empty()) throw std::invalid_argument("n-list must be nonempty");
  const auto grid = csmark::make_grid(cfg.m1, cfg.m2, cfg.bins_x, cfg.bins_y);
  const auto truth = csmark::true_bin_masses(
      grid, [](double x, double y) { return csmark::f0_density(x, y); });

  double rho = cfg.rho;
  double delta_lngl = cfg.delta_lngl;
  double delta_d = cfg.delta_dirichlet;
  if (cfg.tune) {
    csmark::SimSpec pilot{cfg.n_list.front(), csmark::mix64(cfg.seed),
                          cfg.mix_weight};
    const auto pilot_data = csmark::simulate_dataset(pilot);
    csmark::ChainConfig base;
    base.burnin_fraction = cfg.burnin_frac;
    base.seed = pilot.seed;
    const auto tl = csmark::tune_lngl(base, grid, pilot_data);
    rho = tl.rho;
    delta_lngl = tl.delta;
    const auto td = csmark::tune_dirichlet(base, grid, pilot_data);
    delta_d = td.delta;
  }

  struct Cell {
    int rep;
    int n;
  };
  std::vector<Cell> cells;
  for (int rep = 0; rep < cfg.reps; ++rep)
    for (int n : cfg.n_list) cells.push_back({rep, n});

  std::vector<McRow> rows(cells.size() * 2);
  std::mutex next_mutex;
  std::size_t next_cell = 0;

  auto worker = [&]() {
    for (;;) {
      std::size_t idx;
      {
        std::lock_guard<std::mutex> lock(next_mutex);
        if (next_cell >= cells.size()) return;
        idx = next_cell++;
      }
      const Cell cell = cells[idx];
      const std::uint64_t data_seed =
          csmark::mix64(cfg.seed ^ csmark::mix64(static_cast<std::uint64_t>(
                                       cell.rep * 1000003 + cell.n)));
      csmark::SimSpec spec{cell.n, data_seed, cfg.mix_weight};

      const char* priors[2] = {"dirichlet", "lngl"};
      for (int pi = 0; pi < 2; ++pi) {
        McRow& row = rows[idx * 2 + static_cast<std::size_t>(pi)];
        row.rep = cell.rep;
        row.n = cell.n;
        row.prior = priors[pi];
        row.seed = data_seed;
        try {
          const auto data = csmark::simulate_dataset(spec);
          csmark::ChainConfig cc;
          cc.iterations = cfg.iters;
          cc.burnin_fraction = cfg.burnin_frac;
          cc.rho = rho;
          cc.delta = pi == 0 ? delta_d : delta_lngl;
          cc.seed = csmark::mix64(data_seed ^ static_cast<std::uint64_t>(pi + 1));
          cc.thin = cfg.thin;
          const csmark::ChainOutput out =
              pi == 0 ? csmark::run_dirichlet_chain(cc, grid, data)
                      : csmark::run_lngl_chain(cc, grid, data);
          row.wasserstein = csmark::wasserstein1(grid, out.posterior_mean, truth,
                                                 csmark::GroundUnits::physical);
        } catch (const std::exception& e) {
          row.error = e.what();
        }
      }
    }
  };

  int n_threads = cfg.threads > 0
                      ? cfg.threads
                      : static_cast<int>(std::thread::hardware_concurrency());
  if (n_threads < 1) n_threads = 1;
  std::vector<std::thread> pool;
  for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  fs::create_directories(cfg.out_dir);
  {
    std::ofstream out(join_path(cfg.out_dir, "results.csv"), std::ios::binary);
    if (!out) throw csmark::IoError("cannot open for writing: results.csv");
    out << "rep,n,prior,seed,wasserstein,error\n";
    for (const auto& r : rows) {
      out << r.rep << ',' << r.n << ',' << r.prior << ',' << r.seed << ',';
      if (r.wasserstein) out << csmark::format_double(*r.wasserstein);
      out << ',' << csv_escape(r.error) << '\n';
    }
  }
  {
    std::ofstream out(join_path(cfg.out_dir, "summary.csv"), std::ios::binary);
    if (!out) throw csmark::IoError("cannot open for writing: summary.csv");
    out << "n,prior,mean_wasserstein,completed\n";
    for (int n : cfg.n_list) {
      for (const char* prior : {"dirichlet", "lngl"}) {
        double sum = 0.0;
        int count = 0;
        for (const auto& r : rows)
          if (r.n == n && r.prior == prior && r.wasserstein) {
            sum += *r.wasserstein;
            ++count;
          }
        out << n << ',' << prior << ','
            << (count ? csmark::format_double(sum / count) : std::string())
            << ',' << count << '\n';
      }
    }
  }

  json extra{{"tuned_rho", rho},
             {"tuned_delta_lngl", delta_lngl},
             {"tuned_delta_dirichlet", delta_d}};
  write_manifest(cfg.out_dir, "mc", to_json(cfg), cfg.seed,
                 {"results.csv", "summary.csv"}, timer.seconds(), extra);
}

// ----------------------------------------------------------------- heatmap

struct HeatmapConfig {
  std::string input;
  std::string out = "heatmap.pgm";
  int block = 8;
  std::string out_dir = ".";
};

json to_json(const HeatmapConfig& c) {
  return {{"input", c.input}, {"out", c.out}, {"block", c.block},
          {"out_dir", c.out_dir}};
}

HeatmapConfig heatmap_from_json(const json& j) {
  HeatmapConfig c;
  c.input = j.at("input").get<std::string>();
  c.out = j.at("out").get<std::string>();
  c.block = j.at("block").get<int>();
  c.out_dir = j.at("out_dir").get<std::string>();
  return c;
}

void run_heatmap(const HeatmapConfig& cfg) {
  Timer timer;
  if (cfg.block < 1) throw std::invalid_argument("block size must be >= 1");
  auto [w, dims] = csmark::read_bin_weights_csv(cfg.input);
  const auto [j_bins, k_bins] = dims;

  double max_mass = 0.0;
  for (double v : w.theta) max_mass = std::max(max_mass, v);

  const int width = j_bins * cfg.block;
  const int height = k_bins * cfg.block;
  std::vector<std::uint8_t> pixels(
      static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
  // mark axis vertical, increasing upward: image row 0 is the top row k_bins-1
  for (int k = 0; k < k_bins; ++k) {
    const int img_row0 = (k_bins - 1 - k) * cfg.block;
    for (int j = 0; j < j_bins; ++j) {
      const double v = w.theta[static_cast<std::size_t>(k * j_bins + j)];
      const auto level = static_cast<std::uint8_t>(
          max_mass > 0.0 ? std::lround(255.0 * v / max_mass) : 0);
      for (int r = 0; r < cfg.block; ++r)
        for (int c = 0; c < cfg.block; ++c)
          pixels[static_cast<std::size_t>(img_row0 + r) * width +
                 static_cast<std::size_t>(j * cfg.block + c)] = level;
    }
  }

  fs::create_directories(cfg.out_dir);
  const std::string out_path = join_path(cfg.out_dir, cfg.out);
  csmark::write_pgm(out_path, width, height, pixels);
  json sidecar{{"block", cfg.block},
               {"j_bins", j_bins},
               {"k_bins", k_bins},
               {"max_mass", max_mass},
               {"white_level", 255}};
  write_json_file(out_path + ".json", sidecar);
  write_manifest(cfg.out_dir, "heatmap", to_json(cfg), 0,
                 {cfg.out, cfg.out + ".json"}, timer.seconds());
}

// ------------------------------------------------------------------- rerun

void run_from_manifest(const std::string& path, const std::string& out_dir) {
  const json m = read_json_file(path);
  const std::string command = m.at("command").get<std::string>();
  json config = m.at("config");
  if (!out_dir.empty()) config["out_dir"] = out_dir;
  if (command == "simulate")
    run_simulate(simulate_from_json(config));
  else if (command == "fit")
    run_fit(fit_from_json(config));
  else if (command == "evaluate")
    run_evaluate(evaluate_from_json(config));
  else if (command == "mc")
    run_mc(mc_from_json(config));
  else if (command == "heatmap")
    run_heatmap(heatmap_from_json(config));
  else
    throw std::invalid_argument("unknown command in manifest: " + command);
}

int fail(const std::string& category, const std::string& message, int code) {
  json err{{"error", {{"category", category}, {"message", message}}}};
  std::cerr << err.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian estimation of event-time/mark distributions from "
               "current-status data"};
  app.require_subcommand(1);
  app.set_config("--config", "", "configuration file (key=value, [section] per command)");

  SimulateConfig sim_cfg;
  auto* sim = app.add_subcommand("simulate", "draw a synthetic dataset");
  sim->add_option("--n", sim_cfg.n, "sample size")->check(CLI::NonNegativeNumber);
  sim->add_option("--seed", sim_cfg.seed, "RNG seed");
  sim->add_option("--mix-weight", sim_cfg.mix_weight, "event mixture weight");
  sim->add_flag("--truth", sim_cfg.truth, "also write the latent x,y,t records");
  sim->add_option("--out-dir", sim_cfg.out_dir, "output directory");

  FitConfig fit_cfg;
  auto* fit = app.add_subcommand("fit", "sample the posterior for one prior");
  fit->add_option("--prior", fit_cfg.prior, "lngl or dirichlet");
  fit->add_option("--data", fit_cfg.data, "observation CSV")->required();
  fit->add_option("--out-dir", fit_cfg.out_dir, "output directory");
  fit->add_option("--bins-x", fit_cfg.bins_x, "bins along the time axis");
  fit->add_option("--bins-y", fit_cfg.bins_y, "bins along the mark axis");
  fit->add_option("--m1", fit_cfg.m1, "time support bound");
  fit->add_option("--m2", fit_cfg.m2, "mark support bound");
  fit->add_option("--iters", fit_cfg.iters, "MCMC iterations");
  fit->add_option("--burnin-frac", fit_cfg.burnin_frac, "burn-in fraction");
  fit->add_option("--rho", fit_cfg.rho, "pCN tuning parameter");
  fit->add_option("--delta", fit_cfg.delta, "tau log-step size");
  fit->add_option("--seed", fit_cfg.seed, "RNG seed");
  fit->add_option("--thin", fit_cfg.thin, "thinning stride for stored draws");

  EvaluateConfig eval_cfg;
  auto* eval = app.add_subcommand("evaluate", "Wasserstein distance to a truth");
  eval->add_option("--estimate", eval_cfg.estimate, "estimate weight CSV")->required();
  eval->add_option("--truth", eval_cfg.truth, "truth weight CSV or 'f0'");
  eval->add_option("--m1", eval_cfg.m1, "time support bound");
  eval->add_option("--m2", eval_cfg.m2, "mark support bound");
  eval->add_option("--out-dir", eval_cfg.out_dir, "output directory");

  McConfig mc_cfg;
  auto* mc = app.add_subcommand("mc", "Monte-Carlo study over both priors");
  mc->add_option("--n-list", mc_cfg.n_list, "sample sizes")->delimiter(',');
  mc->add_option("--reps", mc_cfg.reps, "replications per sample size");
  mc->add_option("--bins-x", mc_cfg.bins_x, "bins along the time axis");
  mc->add_option("--bins-y", mc_cfg.bins_y, "bins along the mark axis");
  mc->add_option("--m1", mc_cfg.m1, "time support bound");
  mc->add_option("--m2", mc_cfg.m2, "mark support bound");
  mc->add_option("--iters", mc_cfg.iters, "MCMC iterations per fit");
  mc->add_option("--burnin-frac", mc_cfg.burnin_frac, "burn-in fraction");
  mc->add_option("--rho", mc_cfg.rho, "pCN tuning parameter");
  mc->add_option("--delta-lngl", mc_cfg.delta_lngl, "tau step size (LNGL)");
  mc->add_option("--delta-dirichlet", mc_cfg.delta_dirichlet, "tau step size (Dirichlet)");
  mc->add_flag("--tune", mc_cfg.tune, "pilot-tune rho and delta first");
  mc->add_option("--mix-weight", mc_cfg.mix_weight, "event mixture weight");
  mc->add_option("--seed", mc_cfg.seed, "master RNG seed");
  mc->add_option("--threads", mc_cfg.threads, "worker threads (0 = all cores)");
  mc->add_option("--thin", mc_cfg.thin, "thinning stride for stored draws");
  mc->add_option("--out-dir", mc_cfg.out_dir, "output directory");

  HeatmapConfig hm_cfg;
  auto* hm = app.add_subcommand("heatmap", "render a weight CSV as a PGM image");
  hm->add_option("--input", hm_cfg.input, "weight CSV")->required();
  hm->add_option("--out", hm_cfg.out, "output PGM file name");
  hm->add_option("--block", hm_cfg.block, "pixels per cell");
  hm->add_option("--out-dir", hm_cfg.out_dir, "output directory");

  std::string rerun_manifest;
  std::string rerun_out_dir;
  auto* rerun = app.add_subcommand("rerun", "replay a run from its manifest");
  rerun->add_option("manifest", rerun_manifest, "manifest.json path")->required();
  rerun->add_option("--out-dir", rerun_out_dir, "redirect outputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (sim->parsed()) run_simulate(sim_cfg);
    if (fit->parsed()) run_fit(fit_cfg);
    if (eval->parsed()) run_evaluate(eval_cfg);
    if (mc->parsed()) run_mc(mc_cfg);
    if (hm->parsed()) run_heatmap(hm_cfg);
    if (rerun->parsed()) run_from_manifest(rerun_manifest, rerun_out_dir);
  } catch (const csmark::ParseError& e) {
    return fail("parse", e.what(), 4);
  } catch (const csmark::IoError& e) {
    return fail("io", e.what(), 5);
  } catch (const std::domain_error& e) {
    return fail("domain", e.what(), 3);
  } catch (const std::invalid_argument& e) {
    return fail("invalid-argument", e.what(), 2);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 6);
  }
  return 0;
}
