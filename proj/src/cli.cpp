/*
 * Copyright 2026 The greenfilter Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "greenfilter/cli.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "greenfilter/csv.hpp"
#include "greenfilter/verify.hpp"

#ifndef GREENFILTER_VERSION
#define GREENFILTER_VERSION "0.0.0"
#endif

namespace greenfilter {

const char* version() noexcept { return GREENFILTER_VERSION; }

std::uint64_t fnv1a(std::string_view bytes) noexcept {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

/// Bad request (missing file, probe outside the horizon): exit 1.
struct RequestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RequestError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string hex(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex;
  ss.width(16);
  ss.fill('0');
  ss << v;
  return ss.str();
}

const char* route_name(KernelRoute route) {
  switch (route) {
    case KernelRoute::Riccati: return "riccati";
    case KernelRoute::BrysonFrazier: return "bf";
    case KernelRoute::Hamiltonian: return "hamiltonian";
  }
  return "?";
}

json checks_json(const std::vector<Check>& checks) {
  json list = json::array();
  for (const Check& c : checks) {
    list.push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"bound", c.bound}});
  }
  return list;
}

class Session {
 public:
  Session(const RunRequest& request, std::ostream& diag) : req_(request), diag_(diag) {}

  int execute();
  json& manifest() { return manifest_; }
  const std::vector<std::string>& outputs() const { return outputs_; }

 private:
  std::ofstream open(const std::string& name) {
    const fs::path path = fs::path(req_.output_dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RequestError("cannot write " + path.string());
    outputs_.push_back(name);
    return out;
  }
  void write_text(const std::string& name, const std::string& text) { open(name) << text; }

  const LtvModel& model() {
    if (!model_) {
      if (req_.model_path.empty()) throw RequestError("--model is required");
      const std::string text = read_file(req_.model_path);
      manifest_["inputs"]["model"] = {{"path", req_.model_path}, {"fnv1a", hex(fnv1a(text))}};
      model_ = load_model(text);
    }
    return *model_;
  }
  const KernelField& field() {
    if (!field_) field_.emplace(model());
    return *field_;
  }
  ObservationPath observations() {
    if (req_.obs_path.empty()) throw RequestError("--obs is required for " + req_.command);
    const std::string text = read_file(req_.obs_path);
    manifest_["inputs"]["obs"] = {{"path", req_.obs_path}, {"fnv1a", hex(fnv1a(text))}};
    std::istringstream in(text);
    return read_observations(in, model());
  }
  std::vector<double> probes(std::size_t default_count) {
    const TimeGrid& grid = model().grid;
    if (req_.probes.empty()) {
      std::vector<double> out;
      for (std::size_t k : spread_indices(grid, default_count)) out.push_back(grid[k]);
      return out;
    }
    std::vector<double> out;
    for (double t : req_.probes) {
      if (!grid.contains(t)) {
        throw RequestError("probe " + csv::format_double(t) + " is not a grid point of [" +
                           csv::format_double(grid.t0()) + ", " + csv::format_double(grid.T()) +
                           "]");
      }
      out.push_back(grid[grid.index_of(t)]);
    }
    return out;
  }

  int cmd_validate();
  int cmd_riccati();
  int cmd_kernel();
  int cmd_gram();
  int cmd_filter();
  int cmd_smooth();
  int cmd_simulate();
  int cmd_verify();

  const RunRequest& req_;
  std::ostream& diag_;
  json manifest_;
  std::vector<std::string> outputs_;
  std::optional<LtvModel> model_;
  std::optional<KernelField> field_;

};

int Session::execute() {
  const std::string& c = req_.command;
  if (c == "validate") return cmd_validate();
  if (c == "riccati") return cmd_riccati();
  if (c == "kernel") return cmd_kernel();
  if (c == "gram") return cmd_gram();
  if (c == "filter") return cmd_filter();
  if (c == "smooth") return cmd_smooth();
  if (c == "simulate") return cmd_simulate();
  if (c == "verify") return cmd_verify();
  throw RequestError("unknown command '" + c + "'");
}

int Session::cmd_validate() {
  const LtvModel& m = model();
  write_text("validation.json", json({{"valid", true},
                                      {"n", m.n()},
                                      {"p", m.p()},
                                      {"m", m.m()},
                                      {"n_steps", m.grid.n_steps()},
                                      {"time_invariant", m.time_invariant()}})
                                    .dump(2) +
                                    "\n");
  return kExitOk;
}

int Session::cmd_riccati() {
  const RiccatiSolution& r = field().riccati();
  {
    auto out = open("pi.csv");
    write_path_csv(out, r.grid, r.pi_path, "Pi");
  }
  auto out = open("sigma.csv");
  write_path_csv(out, r.grid, r.sigma_path, "Sigma");
  return kExitOk;
}

int Session::cmd_kernel() {
  const KernelField& f = field();
  const auto at = probes(5);
  kernel_value(f, req_.route, 0, 0);
  for (std::size_t a = 0; a < at.size(); ++a) {
    const std::string suffix = std::to_string(a) + ".csv";
    {
      auto out = open("kernel_K_" + suffix);
      write_kernel_slice_csv(out, f, KernelKind::K, at[a], req_.route);
    }
    auto out = open("kernel_Lambda_" + suffix);
    write_kernel_slice_csv(out, f, KernelKind::Lambda, at[a]);
  }
  json columns = json::array();
  for (double t : at) columns.push_back(t);
  manifest_["slices"] = std::move(columns);
  return kExitOk;
}

int Session::cmd_gram() {
  const KernelField& f = field();
  const auto at = probes(16);
  {
    auto out = open("gram_K.csv");
    write_gram_csv(out, at, gram(f, KernelKind::K, at, req_.route));
  }
  {
    auto out = open("gram_Lambda.csv");
    write_gram_csv(out, at, gram(f, KernelKind::Lambda, at));
  }
  auto matrix = [](const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  const LtvModel& m = model();
  write_text("gramians.json",
             json({{"controllability", matrix(controllability_gramian(m))},
                   {"observability_identity",
                    matrix(observability_gramian(m, ObservabilityWeight::Identity))},
                   {"observability_noise_weighted",
                    matrix(observability_gramian(m, ObservabilityWeight::NoiseWeighted))}})
                     .dump(2) +
                 "\n");
  return kExitOk;
}

int Session::cmd_filter() {
  const ObservationPath obs = observations();
  const FilterResult r = kalman_filter(model(), field().riccati(), obs);
  auto out = open("filter.csv");
  std::vector<std::string> header{"t"};
  for (Eigen::Index i = 0; i < model().n(); ++i) header.push_back("filtered_" + std::to_string(i));
  for (Eigen::Index i = 0; i < model().m(); ++i) header.push_back("innovation_" + std::to_string(i));
  csv::write_row(out, header);
  for (std::size_t k = 0; k < obs.grid.size(); ++k) {
    std::vector<double> row{obs.grid[k]};
    row.insert(row.end(), r.filtered[k].data(), r.filtered[k].data() + r.filtered[k].size());
    row.insert(row.end(), r.innovation[k].data(), r.innovation[k].data() + r.innovation[k].size());
    csv::write_row(out, row);
  }
  return kExitOk;
}

int Session::cmd_smooth() {
  const ObservationPath obs = observations();
  const SmootherResult r = run_smoother(field(), obs);
  auto out = open("smoother.csv");
  write_smoother_csv(out, obs.grid, r);
  return kExitOk;
}

int Session::cmd_simulate() {
  const LtvModel& m = model();
  const std::size_t n_paths = req_.n_paths.value_or(100);
  const Ensemble e = simulate(m, n_paths, req_.seed);
  auto out = open("paths.csv");
  std::vector<std::string> header{"path", "t"};
  for (Eigen::Index i = 0; i < m.n(); ++i) header.push_back("x_" + std::to_string(i));
  for (Eigen::Index i = 0; i < m.m(); ++i) header.push_back("y_" + std::to_string(i));
  csv::write_row(out, header);
  for (std::size_t q = 0; q < n_paths; ++q) {
    for (std::size_t k = 0; k < e.grid.size(); ++k) {
      std::vector<double> row{static_cast<double>(q), e.grid[k]};
      row.insert(row.end(), e.x[q][k].data(), e.x[q][k].data() + e.x[q][k].size());
      row.insert(row.end(), e.y[q][k].data(), e.y[q][k].data() + e.y[q][k].size());
      csv::write_row(out, row);
    }
  }
  if (n_paths > 0) {
    auto first = open("observations.csv");
    write_observations(first, ObservationPath{e.grid, e.y.front()});
  }
  manifest_["n_paths"] = n_paths;
  return kExitOk;
}

int Session::cmd_verify() {
  const std::string& suite = req_.suite;
  if (suite != "identities" && suite != "rkhs" && suite != "montecarlo" && suite != "all") {
    throw RequestError("unknown suite '" + suite + "'");
  }
  const KernelField& f = field();
  json suites = json::object();
  bool passed = true;
  auto record = [&](const char* name, const std::vector<Check>& checks) {
    for (const Check& c : checks) {
      passed = passed && c.passed;
      if (!c.passed) diag_ << "FAIL " << name << '.' << c.name << ": " << c.value << " > " << c.bound << '\n';
    }
    suites[name] = checks_json(checks);
  };
  if (suite == "identities" || suite == "all") record("identities", verify_identities(f, req_.seed));
  if (suite == "rkhs" || suite == "all") record("rkhs", verify_rkhs(f, req_.seed));
  if (suite == "montecarlo" || suite == "all") {
    MonteCarloConfig config;
    config.n_paths = req_.n_paths.value_or(config.n_paths);
    config.seed = req_.seed;
    if (!req_.probes.empty()) config.probes = probes(0);
    MonteCarloReport report;
    const auto checks = verify_montecarlo(f, config, &report);
    {
      auto out = open("montecarlo.csv");
      write_report_csv(out, report);
    }
    write_text("montecarlo.json", report_json(report, checks));
    record("montecarlo", checks);
  }
  manifest_["suites"] = suites;
  manifest_["passed"] = passed;
  write_text("verify.json", json({{"suites", suites}, {"passed", passed}}).dump(2) + "\n");
  return passed ? kExitOk : kExitVerification;
}

}  // namespace

int run(const RunRequest& request, std::ostream& diag) {
  const auto start = std::chrono::steady_clock::now();
  Session session(request, diag);
  json& manifest = session.manifest();
  manifest["command"] = request.command;
  manifest["version"] = version();
  manifest["seed"] = request.seed;
  manifest["inputs"] = json::object();
  manifest["options"] = {{"route", route_name(request.route)},
                         {"suite", request.suite},
                         {"probes", request.probes}};
  if (request.n_paths) manifest["options"]["paths"] = *request.n_paths;

  int status = kExitOk;
  std::error_code ec;
  fs::create_directories(request.output_dir, ec);
  try {
    if (ec || !fs::is_directory(request.output_dir)) {
      throw RequestError("output directory " + request.output_dir + " is not writable");
    }
    status = session.execute();
  } catch (const ValidationFailure& e) {
    for (const Violation& v : e.violations()) {
      diag << "invalid " << v.field << " (" << v.code << "): " << v.message << '\n';
    }
    json list = json::array();
    for (const Violation& v : e.violations()) {
      list.push_back({{"field", v.field}, {"code", v.code}, {"message", v.message}});
    }
    manifest["violations"] = std::move(list);
    status = kExitValidation;
  } catch (const RequestError& e) {
    diag << "error: " << e.what() << '\n';
    manifest["error"] = e.what();
    status = kExitValidation;
  } catch (const Error& e) {
    diag << "error: " << e.what() << '\n';
    manifest["error"] = e.what();
    status = e.kind() == ErrorKind::ParseError || e.kind() == ErrorKind::ValidationError
                 ? kExitValidation
                 : kExitNumerical;
  } catch (const std::exception& e) {
    diag << "error: " << e.what() << '\n';
    manifest["error"] = e.what();
    status = kExitNumerical;
  }
  manifest["outputs"] = session.outputs();
  manifest["exit_code"] = status;
  manifest["wall_time_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (fs::is_directory(request.output_dir, ec)) {
    std::ofstream out(fs::path(request.output_dir) / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << '\n';
  }
  return status;
}

int cli_main(int argc, char** argv) {
  CLI::App app{"Kernel smoothing and verification for linear time-varying estimation problems",
               "greenfilter"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1, 1);

  RunRequest req;
  std::string route = "riccati";
  std::string probes;
  std::size_t n_paths = 0;

  struct Spec {
    const char* name;
    const char* help;
  };
  const Spec commands[] = {
      {"validate", "Parse and check a model config"},
      {"riccati", "Write Pi and Sigma paths"},
      {"kernel", "Write kernel slices K(., t) and Lambda(., t) at the probe times"},
      {"gram", "Write kernel Gram matrices and the system Gramians"},
      {"filter", "Run the filter on an observation CSV"},
      {"smooth", "Run the smoother on an observation CSV"},
      {"simulate", "Write seeded sample paths"},
      {"verify", "Run verification suites"},
  };
  for (const Spec& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--model", req.model_path, "Model config (JSON)")->required();
    sub->add_option("--out", req.output_dir, "Output directory")->capture_default_str();
    sub->add_option("--probes", probes, "Comma-separated probe times");
    sub->add_option("--paths", n_paths, "Number of Monte Carlo paths");
    sub->add_option("--seed", req.seed, "Seed")->capture_default_str();
    sub->add_option("--route", route, "Kernel route")
        ->check(CLI::IsMember({"riccati", "bf", "hamiltonian"}, CLI::ignore_case))
        ->capture_default_str();
    sub->add_option("--suite", req.suite, "Verification suite")
        ->check(CLI::IsMember({"identities", "rkhs", "montecarlo", "all"}))
        ->capture_default_str();
    sub->add_option("--obs", req.obs_path, "Observation CSV (t, y_0, ...)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  req.command = app.get_subcommands().front()->get_name();
  std::transform(route.begin(), route.end(), route.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  req.route = route == "bf"            ? KernelRoute::BrysonFrazier
              : route == "hamiltonian" ? KernelRoute::Hamiltonian
                                       : KernelRoute::Riccati;
  if (n_paths > 0) req.n_paths = n_paths;
  std::stringstream list(probes);
  for (std::string item; std::getline(list, item, ',');) {
    if (item.empty()) continue;
    try {
      req.probes.push_back(std::stod(item));
    } catch (const std::exception&) {
      std::cerr << "error: probe '" << item << "' is not a number\n";
      return kExitValidation;
    }
  }
  return run(req, std::cerr);
}

}  // namespace greenfilter
