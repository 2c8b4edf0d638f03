// Copyright (c) 2026 The gnatrom Authors.
// SPDX-License-Identifier: Apache-2.0

#include "gnatrom/pipeline.hpp"

#include "gnatrom/error.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#ifdef GNATROM_HAVE_OPENBLAS
extern "C" void openblas_set_num_threads(int num_threads);
#endif

namespace gnatrom {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

[[noreturn]] void rethrow_with_stage(const std::string& stage) {
  try {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(stage + ": " + e.what());
  } catch (const SolverError& e) {
    throw SolverError(stage + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(stage + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(stage + ": " + e.what());
  } catch (const DimensionError& e) {
    throw DimensionError(stage + ": " + e.what());
  }
}

template <class F>
auto with_stage(const std::string& stage, F&& f) {
  try {
    return f();
  } catch (const Error&) {
    rethrow_with_stage(stage);
  }
}

// Runs body(i) for i in [0, count) on up to `threads` workers. The first
// exception is rethrown after all workers finish.
template <class F>
void parallel_for(std::size_t count, int threads, F&& body) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::string describe(const ParameterPoint& mu) {
  std::ostringstream s;
  s << "(a=" << mu.a << ", b=" << mu.b << ")";
  return s.str();
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const char* where) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& item : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char* k) { return item.key() == k; })) {
      throw ConfigError(std::string("unknown key '") + item.key() + "' in " + where);
    }
  }
}

ParameterPoint point_from_json(const json& j) {
  check_keys(j, {"a", "b"}, "parameter point");
  return {j.at("a").get<double>(), j.at("b").get<double>()};
}

json point_json(const ParameterPoint& mu) { return {{"a", mu.a}, {"b", mu.b}}; }

const char* variant_name(StateSnapshotVariant v) {
  switch (v) {
    case StateSnapshotVariant::from_initial: return "from_initial";
    case StateSnapshotVariant::per_step_increment: return "per_step_increment";
    case StateSnapshotVariant::raw: return "raw";
  }
  return "from_initial";
}

StateSnapshotVariant variant_from_name(const std::string& name) {
  if (name == "from_initial") return StateSnapshotVariant::from_initial;
  if (name == "per_step_increment") return StateSnapshotVariant::per_step_increment;
  if (name == "raw") return StateSnapshotVariant::raw;
  throw ConfigError("unknown state snapshot variant '" + name + "'");
}

json index_set_json(const IndexSet& set) { return json(set); }

IndexSet index_set_from_json(const json& j) { return make_index_set(j.get<std::vector<Index>>()); }

Matrix column_matrix(const Vector& v) { return Matrix(v); }

BurgersModel make_model(const OfflineConfig& config) {
  return BurgersModel(Grid1D(config.num_nodes, config.domain_length));
}

std::string online_file_name(const ParameterPoint& mu) {
  std::ostringstream s;
  s << "online_a" << mu.a << "_b" << mu.b << ".gnat";
  return s.str();
}

// Columns [0, size) of a POD basis as a new basis sharing the spectrum.
PodBasis leading(const PodBasis& pod, Index size) {
  PodBasis out;
  out.basis = pod.basis.leftCols(std::min(size, pod.size()));
  out.singular_values = pod.singular_values;
  const double total = pod.singular_values.squaredNorm();
  out.energy_fraction =
      total > 0.0 ? pod.singular_values.head(out.basis.cols()).squaredNorm() / total : 0.0;
  out.warnings = pod.warnings;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

void OfflineConfig::validate() const {
  if (num_nodes < 3) throw ConfigError("model.num_nodes must be at least 3");
  if (!(domain_length > 0.0)) throw ConfigError("model.domain_length must be positive");
  time.validate();
  solver.validate();
  if (training_inputs.empty()) throw ConfigError("training_inputs must not be empty");
  if (procedure < 0 || procedure > 3) throw ConfigError("snapshots.procedure must be 0..3");
  const Index n = num_nodes - 1;
  if (sizes.n_w < 1 || sizes.n_r < 1 || sizes.n_j < 1 || sizes.n_i < 1) {
    throw ConfigError("rom sizes must be positive");
  }
  if (sizes.n_i < std::max(sizes.n_r, sizes.n_j)) throw ConfigError("rom: need n_i >= max(n_R, n_J)");
  if (sizes.n_j < sizes.n_w) throw ConfigError("rom: need n_J >= n_w");
  if (sizes.n_i > n) throw ConfigError("rom: n_i exceeds the number of unknowns");
  if (residual_extra < 0) throw ConfigError("rom.residual_extra must be non-negative");
  if (working_columns < 0 ||
      working_columns > std::min({sizes.n_r, sizes.n_j, sizes.n_i})) {
    throw ConfigError("greedy.working_columns must lie in [0, min(n_R, n_J, n_i)]");
  }
  for (Index s : seed_nodes) {
    if (s < 0 || s >= n) throw ConfigError("greedy.seed_nodes entry out of range");
  }
  if (static_cast<Index>(make_index_set(seed_nodes).size()) > sizes.n_i) {
    throw ConfigError("greedy: more seed nodes than n_i");
  }
  for (Index p : outputs.probes) {
    if (p < 0 || p >= n) throw ConfigError("outputs.probes entry out of range");
  }
  if (!outputs.global && outputs.probes.empty()) {
    throw ConfigError("outputs: give probes or set global");
  }
}

SolverConfig solver_config_from_json(const json& doc) {
  check_keys(doc,
             {"newton_abs_tol", "newton_rel_tol", "max_newton_iters", "step_policy", "armijo_c",
              "backtrack_rho", "max_halvings", "gn_gradient_tol", "gn_step_tol", "gn_max_iters",
              "reduced_rel_tol", "reduced_abs_tol", "reduced_gradient_rel_tol"},
             "solver");
  SolverConfig c;
  c.newton_abs_tol = doc.value("newton_abs_tol", c.newton_abs_tol);
  c.newton_rel_tol = doc.value("newton_rel_tol", c.newton_rel_tol);
  c.max_newton_iters = doc.value("max_newton_iters", c.max_newton_iters);
  const std::string policy = doc.value("step_policy", std::string("unit"));
  if (policy == "unit") {
    c.step_policy = StepPolicy::unit;
  } else if (policy == "backtracking") {
    c.step_policy = StepPolicy::backtracking;
  } else {
    throw ConfigError("solver.step_policy must be 'unit' or 'backtracking'");
  }
  c.armijo_c = doc.value("armijo_c", c.armijo_c);
  c.backtrack_rho = doc.value("backtrack_rho", c.backtrack_rho);
  c.max_halvings = doc.value("max_halvings", c.max_halvings);
  c.gn_gradient_tol = doc.value("gn_gradient_tol", c.gn_gradient_tol);
  c.gn_step_tol = doc.value("gn_step_tol", c.gn_step_tol);
  c.gn_max_iters = doc.value("gn_max_iters", c.gn_max_iters);
  c.reduced_rel_tol = doc.value("reduced_rel_tol", c.reduced_rel_tol);
  c.reduced_abs_tol = doc.value("reduced_abs_tol", c.reduced_abs_tol);
  c.reduced_gradient_rel_tol = doc.value("reduced_gradient_rel_tol", c.reduced_gradient_rel_tol);
  c.validate();
  return c;
}

json to_json(const SolverConfig& c) {
  return {{"newton_abs_tol", c.newton_abs_tol},
          {"newton_rel_tol", c.newton_rel_tol},
          {"max_newton_iters", c.max_newton_iters},
          {"step_policy", c.step_policy == StepPolicy::unit ? "unit" : "backtracking"},
          {"armijo_c", c.armijo_c},
          {"backtrack_rho", c.backtrack_rho},
          {"max_halvings", c.max_halvings},
          {"gn_gradient_tol", c.gn_gradient_tol},
          {"gn_step_tol", c.gn_step_tol},
          {"gn_max_iters", c.gn_max_iters},
          {"reduced_rel_tol", c.reduced_rel_tol},
          {"reduced_abs_tol", c.reduced_abs_tol},
          {"reduced_gradient_rel_tol", c.reduced_gradient_rel_tol}};
}

OfflineConfig offline_config_from_json(const json& doc) {
  try {
    check_keys(doc,
               {"schema_version", "model", "time", "training_inputs", "online_input",
                "snapshots", "rom", "greedy", "outputs", "baselines", "solver"},
               "config");
    const int version = doc.at("schema_version").get<int>();
    if (version != kConfigSchemaVersion) {
      throw ConfigError("unsupported config schema_version " + std::to_string(version));
    }
    OfflineConfig c;
    if (doc.contains("model")) {
      const json& m = doc["model"];
      check_keys(m, {"num_nodes", "domain_length"}, "model");
      c.num_nodes = m.value("num_nodes", c.num_nodes);
      c.domain_length = m.value("domain_length", c.domain_length);
    }
    if (doc.contains("time")) {
      const json& t = doc["time"];
      check_keys(t, {"dt", "num_steps"}, "time");
      c.time.dt = t.value("dt", c.time.dt);
      c.time.num_steps = t.value("num_steps", c.time.num_steps);
    }
    for (const json& p : doc.at("training_inputs")) c.training_inputs.push_back(point_from_json(p));
    if (doc.contains("online_input")) c.online_input = point_from_json(doc["online_input"]);
    if (doc.contains("snapshots")) {
      const json& s = doc["snapshots"];
      check_keys(s, {"state_variant", "procedure", "normalize"}, "snapshots");
      c.state_snapshots = variant_from_name(s.value("state_variant", std::string("from_initial")));
      c.procedure = s.value("procedure", c.procedure);
      c.normalize_snapshots = s.value("normalize", c.normalize_snapshots);
    }
    if (doc.contains("rom")) {
      const json& r = doc["rom"];
      check_keys(r, {"n_w", "n_R", "n_J", "n_i", "residual_extra"}, "rom");
      c.sizes.n_w = r.value("n_w", c.sizes.n_w);
      c.sizes.n_r = r.value("n_R", c.sizes.n_r);
      c.sizes.n_j = r.value("n_J", c.sizes.n_j);
      c.sizes.n_i = r.value("n_i", c.sizes.n_i);
      c.residual_extra = r.value("residual_extra", c.residual_extra);
    }
    if (doc.contains("greedy")) {
      const json& g = doc["greedy"];
      check_keys(g, {"working_columns", "seed_nodes"}, "greedy");
      c.working_columns = g.value("working_columns", c.working_columns);
      if (g.contains("seed_nodes")) c.seed_nodes = g["seed_nodes"].get<std::vector<Index>>();
    }
    if (doc.contains("outputs")) {
      const json& o = doc["outputs"];
      check_keys(o, {"global", "probes"}, "outputs");
      c.outputs.global = o.value("global", true);
      if (o.contains("probes")) c.outputs.probes = o["probes"].get<std::vector<Index>>();
    }
    if (doc.contains("baselines")) {
      const json& b = doc["baselines"];
      check_keys(b, {"deim_basis"}, "baselines");
      c.deim_basis = b.value("deim_basis", c.deim_basis);
    }
    if (doc.contains("solver")) c.solver = solver_config_from_json(doc["solver"]);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
}

json to_json(const OfflineConfig& c) {
  json training = json::array();
  for (const auto& mu : c.training_inputs) training.push_back(point_json(mu));
  json doc = {
      {"schema_version", kConfigSchemaVersion},
      {"model", {{"num_nodes", c.num_nodes}, {"domain_length", c.domain_length}}},
      {"time", {{"dt", c.time.dt}, {"num_steps", c.time.num_steps}}},
      {"training_inputs", training},
      {"snapshots",
       {{"state_variant", variant_name(c.state_snapshots)},
        {"procedure", c.procedure},
        {"normalize", c.normalize_snapshots}}},
      {"rom",
       {{"n_w", c.sizes.n_w},
        {"n_R", c.sizes.n_r},
        {"n_J", c.sizes.n_j},
        {"n_i", c.sizes.n_i},
        {"residual_extra", c.residual_extra}}},
      {"greedy", {{"working_columns", c.working_columns}, {"seed_nodes", c.seed_nodes}}},
      {"outputs", {{"global", c.outputs.global}, {"probes", c.outputs.probes}}},
      {"baselines", {{"deim_basis", c.deim_basis}}},
      {"solver", to_json(c.solver)},
  };
  if (c.online_input) doc["online_input"] = point_json(*c.online_input);
  return doc;
}

OfflineConfig load_offline_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return offline_config_from_json(doc);
}

// ---------------------------------------------------------------------------
// Manifest

fs::path RunManifest::artifact(const std::string& name) const {
  const auto it = artifacts.find(name);
  if (it == artifacts.end()) throw IoError("manifest has no artifact '" + name + "'");
  return directory / it->second;
}

json to_json(const RunManifest& m) {
  return {
      {"schema_version", kConfigSchemaVersion},
      {"config", to_json(m.config)},
      {"sizes", {{"n_w", m.sizes.n_w}, {"n_R", m.sizes.n_r}, {"n_J", m.sizes.n_j}, {"n_i", m.sizes.n_i}}},
      {"artifacts", m.artifacts},
      {"index_sets",
       {{"nodes", index_set_json(m.sets.nodes)},
        {"residual", index_set_json(m.sets.residual_indices)},
        {"state", index_set_json(m.sets.state_indices)},
        {"output", index_set_json(m.sets.output_indices)},
        {"global_output", m.sets.global_output},
        {"unknowns_per_node", m.sets.unknowns_per_node}}},
      {"greedy", {{"sequence", m.greedy_sequence}, {"iterations", m.greedy_trace}}},
      {"warnings", m.warnings},
  };
}

void write_manifest(const RunManifest& manifest, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << to_json(manifest).dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

RunManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  RunManifest m;
  try {
    json doc;
    in >> doc;
    if (doc.at("schema_version").get<int>() != kConfigSchemaVersion) {
      throw FormatError(path.string() + ": unsupported manifest schema_version");
    }
    m.config = offline_config_from_json(doc.at("config"));
    const json& s = doc.at("sizes");
    m.sizes = {s.at("n_w").get<Index>(), s.at("n_R").get<Index>(), s.at("n_J").get<Index>(),
               s.at("n_i").get<Index>()};
    m.artifacts = doc.at("artifacts").get<std::map<std::string, std::string>>();
    const json& sets = doc.at("index_sets");
    m.sets.nodes = index_set_from_json(sets.at("nodes"));
    m.sets.residual_indices = index_set_from_json(sets.at("residual"));
    m.sets.state_indices = index_set_from_json(sets.at("state"));
    m.sets.output_indices = index_set_from_json(sets.at("output"));
    m.sets.global_output = sets.at("global_output").get<bool>();
    m.sets.unknowns_per_node = sets.at("unknowns_per_node").get<Index>();
    m.greedy_sequence = doc.at("greedy").at("sequence").get<std::vector<Index>>();
    m.greedy_trace = doc.at("greedy").at("iterations");
    m.warnings = doc.at("warnings").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": malformed manifest: " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  m.sets.validate();
  m.directory = path.parent_path();
  return m;
}

// ---------------------------------------------------------------------------
// Threads

int configured_threads() {
  if (const char* env = std::getenv("GNATROM_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1 || v > 4096) {
      throw ConfigError(std::string("GNATROM_THREADS must be a positive integer, got '") + env + "'");
    }
    return static_cast<int>(v);
  }
  return static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
}

void apply_thread_limit(int threads) {
  threads = std::max(threads, 1);
#ifdef GNATROM_HAVE_OPENBLAS
  openblas_set_num_threads(threads);
#endif
  Eigen::setNbThreads(threads);
}

ParameterPoint parse_parameter_point(const std::string& text) {
  std::optional<double> a;
  std::optional<double> b;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value in '" + text + "'");
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != value.size()) throw ConfigError("bad number '" + value + "' in '" + text + "'");
    if (key == "a") {
      a = v;
    } else if (key == "b") {
      b = v;
    } else {
      throw ConfigError("unknown parameter '" + key + "' (expected a and b)");
    }
  }
  if (!a || !b) throw ConfigError("parameter point needs both a and b: '" + text + "'");
  return {*a, *b};
}

// ---------------------------------------------------------------------------
// Offline

RunManifest run_offline(const OfflineConfig& config, const fs::path& out_dir, std::ostream* log) {
  config.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  const int threads = configured_threads();
  apply_thread_limit(threads);
  auto say = [&](const std::string& msg) {
    if (log) *log << msg << std::endl;
  };

  const BurgersModel model = make_model(config);
  const Index n_dim = model.dimension();
  const std::size_t n_train = config.training_inputs.size();
  RunManifest manifest;
  manifest.config = config;
  manifest.directory = out_dir;
  json timings = json::object();
  const auto t_all = Clock::now();

  auto save = [&](const std::string& name, const std::string& file, auto&& writer) {
    with_stage("persist " + name, [&] {
      writer(out_dir / file);
      return 0;
    });
    manifest.artifacts[name] = file;
  };

  // Tier-I training solves. Residuals are kept for procedure 0 and the
  // DEIM-like baseline.
  const bool need_tier1_residuals = config.procedure == 0 || config.deim_basis;
  std::vector<Trajectory> fom(n_train);
  std::vector<std::unique_ptr<HyperReductionCollector>> tier1(n_train);
  auto t0 = Clock::now();
  say("tier I: " + std::to_string(n_train) + " training solves");
  with_stage("tier I training", [&] {
    parallel_for(n_train, threads, [&](std::size_t j) {
      const ParameterPoint& mu = config.training_inputs[j];
      IterationHook hook;
      if (need_tier1_residuals) {
        tier1[j] = std::make_unique<HyperReductionCollector>(SnapshotProcedure(0), n_dim);
        hook = tier1[j]->hook();
      }
      fom[j] = solve_fom(mu, model, config.time, config.solver, hook);
      if (!fom[j].status.ok) throw SolverError("at " + describe(mu) + ": " + fom[j].status.message);
    });
    return 0;
  });
  timings["tier1_training_s"] = seconds_since(t0);
  for (std::size_t j = 0; j < n_train; ++j) {
    const std::string id = std::to_string(j);
    save("fom_" + id, "fom_" + id + ".gnat", [&](const fs::path& p) { persist(fom[j], p); });
    save("fom_" + id + "_log", "fom_" + id + "_convergence.csv",
         [&](const fs::path& p) { write_convergence_csv(p, fom[j].log); });
  }

  // State basis.
  t0 = Clock::now();
  const PodBasis state_pod = with_stage("state basis", [&] {
    std::vector<SnapshotMatrix> parts;
    for (const auto& traj : fom) parts.push_back(collect_state_snapshots(traj, config.state_snapshots));
    SnapshotMatrix snaps = concatenate(parts);
    parts.clear();
    if (config.normalize_snapshots) snaps = normalize_columns(snaps);
    return compute_pod(snaps, Truncation::fixed(config.sizes.n_w));
  });
  timings["state_basis_s"] = seconds_since(t0);
  const Matrix& phi_w = state_pod.basis;
  for (const auto& w : state_pod.warnings) manifest.warnings.push_back("state basis: " + w);
  save("basis_state", "basis_state.gnat", [&](const fs::path& p) { persist(state_pod, p); });
  say("state basis: n_w = " + std::to_string(phi_w.cols()));

  // Hyper-reduction snapshots.
  const SnapshotProcedure procedure(config.procedure);
  SnapshotMatrix residual_snaps;
  SnapshotMatrix jacobian_snaps;
  SnapshotMatrix tier1_residuals;
  if (need_tier1_residuals) {
    std::vector<SnapshotMatrix> parts;
    for (auto& c : tier1) {
      parts.push_back(c->finish().first);
      c.reset();
    }
    tier1_residuals = concatenate(parts);
  }
  t0 = Clock::now();
  if (config.procedure == 0) {
    residual_snaps = tier1_residuals;
    jacobian_snaps = residual_snaps;
  } else {
    const Vector w0 = model.initial_condition(config.training_inputs.front());
    std::vector<std::unique_ptr<HyperReductionCollector>> tier2(n_train);
    std::vector<ReducedTrajectory> roms(n_train);
    say("tier II: " + std::to_string(n_train) + " training solves");
    with_stage("tier II training", [&] {
      parallel_for(n_train, threads, [&](std::size_t j) {
        const ParameterPoint& mu = config.training_inputs[j];
        tier2[j] = std::make_unique<HyperReductionCollector>(procedure, n_dim);
        roms[j] = solve_tier2_pg(mu, model, phi_w, model.initial_condition(mu), config.time,
                                 config.solver, tier2[j]->hook());
        if (!roms[j].status.ok) throw SolverError("at " + describe(mu) + ": " + roms[j].status.message);
      });
      return 0;
    });
    std::vector<SnapshotMatrix> rparts;
    std::vector<SnapshotMatrix> jparts;
    for (std::size_t j = 0; j < n_train; ++j) {
      auto [r, jm] = tier2[j]->finish();
      tier2[j].reset();
      rparts.push_back(std::move(r));
      jparts.push_back(std::move(jm));
      const std::string id = std::to_string(j);
      save("tier2_" + id, "tier2_" + id + ".gnat", [&](const fs::path& p) { persist(roms[j], p); });
    }
    residual_snaps = concatenate(rparts);
    rparts.clear();
    jacobian_snaps = concatenate(jparts);
  }
  timings["tier2_training_s"] = seconds_since(t0);

  // Residual and Jacobian bases.
  t0 = Clock::now();
  const Index n_r_ext = config.sizes.n_r + config.residual_extra;
  const bool shared = config.procedure <= 1;
  const PodBasis residual_pod = with_stage("residual basis", [&] {
    SnapshotMatrix s = config.normalize_snapshots ? normalize_columns(residual_snaps) : residual_snaps;
    residual_snaps = SnapshotMatrix();
    const Index want = shared ? std::max(n_r_ext, config.sizes.n_j) : n_r_ext;
    return compute_pod(s, Truncation::fixed(want));
  });
  const PodBasis jacobian_pod = shared ? leading(residual_pod, config.sizes.n_j)
                                       : with_stage("Jacobian basis", [&] {
                                           SnapshotMatrix s = config.normalize_snapshots
                                                                  ? normalize_columns(jacobian_snaps)
                                                                  : jacobian_snaps;
                                           jacobian_snaps = SnapshotMatrix();
                                           return compute_pod(s, Truncation::fixed(config.sizes.n_j));
                                         });
  jacobian_snaps = SnapshotMatrix();
  const PodBasis residual_ext = leading(residual_pod, n_r_ext);
  for (const auto& w : residual_pod.warnings) manifest.warnings.push_back("residual basis: " + w);
  if (!shared) {
    for (const auto& w : jacobian_pod.warnings) manifest.warnings.push_back("Jacobian basis: " + w);
  }
  const Matrix phi_r = residual_ext.basis.leftCols(std::min(config.sizes.n_r, residual_ext.size()));
  const Matrix& phi_j = jacobian_pod.basis;
  save("basis_residual", "basis_residual.gnat", [&](const fs::path& p) { persist(residual_ext, p); });
  save("basis_jacobian", "basis_jacobian.gnat", [&](const fs::path& p) { persist(jacobian_pod, p); });
  if (config.deim_basis) {
    const PodBasis deim = with_stage("DEIM-like basis", [&] {
      SnapshotMatrix s = config.normalize_snapshots ? normalize_columns(tier1_residuals) : tier1_residuals;
      tier1_residuals = SnapshotMatrix();
      return compute_pod(s, Truncation::fixed(config.sizes.n_i));
    });
    for (const auto& w : deim.warnings) manifest.warnings.push_back("DEIM-like basis: " + w);
    save("basis_deim", "basis_deim.gnat", [&](const fs::path& p) { persist(deim, p); });
  }
  tier1_residuals = SnapshotMatrix();
  timings["hyper_bases_s"] = seconds_since(t0);
  say("residual basis: n_R = " + std::to_string(phi_r.cols()) +
      ", Jacobian basis: n_J = " + std::to_string(phi_j.cols()));

  // Sample mesh.
  t0 = Clock::now();
  const Index n_u = 1;
  GreedyConfig greedy;
  greedy.target_nodes = config.sizes.n_i / n_u;
  greedy.seed_nodes = config.seed_nodes;
  greedy.unknowns_per_node = n_u;
  greedy.working_columns = config.working_columns > 0
                               ? config.working_columns
                               : std::min({phi_r.cols(), phi_j.cols(), n_u * greedy.target_nodes});
  greedy.working_columns = std::min({greedy.working_columns, phi_r.cols(), phi_j.cols()});
  const GreedyResult selection = with_stage("greedy sampling", [&] { return greedy_select(phi_r, phi_j, greedy); });
  for (const auto& w : selection.warnings) manifest.warnings.push_back("greedy: " + w);
  manifest.greedy_sequence = selection.sequence;
  for (const auto& it : selection.trace) {
    manifest.greedy_trace.push_back({{"iteration", it.iteration},
                                     {"working_vectors", it.working_vectors},
                                     {"nodes_to_add", it.nodes_to_add},
                                     {"basis_vectors_before", it.basis_vectors_before},
                                     {"added", it.added}});
  }
  manifest.sets = build_sample_sets(model, selection.nodes, config.outputs, n_u);

  const OnlineOperators ops = with_stage("online operators", [&] {
    return compute_online_operators(phi_w, phi_r, phi_j, manifest.sets,
                                    model.initial_condition(config.training_inputs.front()));
  });
  for (const auto& w : ops.warnings) manifest.warnings.push_back("online operators: " + w);
  timings["sampling_s"] = seconds_since(t0);

  auto save_op = [&](const std::string& name, const Matrix& m) {
    save(name, name + ".gnat", [&](const fs::path& p) {
      save_artifact(p, {SnapshotKind::operator_matrix, m, {{"name", name}}});
    });
  };
  save_op("op_a", ops.a);
  save_op("op_b", ops.b);
  save_op("op_masked_basis", ops.masked_state_basis);
  save_op("op_masked_ic", column_matrix(ops.masked_initial_condition));
  save_op("op_output_basis", ops.output_basis);
  save_op("op_output_ic", column_matrix(ops.output_initial_condition));

  manifest.sizes = {phi_w.cols(), phi_r.cols(), phi_j.cols(), manifest.sets.num_samples()};
  timings["total_s"] = seconds_since(t_all);
  timings["threads"] = threads;
  write_manifest(manifest, out_dir / "manifest.json");
  {
    std::ofstream t(out_dir / "timings.json", std::ios::trunc);
    if (!t) throw IoError("cannot write timings.json");
    t << timings.dump(2) << '\n';
  }
  say("sample mesh: |I| = " + std::to_string(manifest.sets.residual_indices.size()) +
      ", |J| = " + std::to_string(manifest.sets.state_indices.size()));
  return manifest;
}

OnlineOperators load_online_operators(const RunManifest& manifest) {
  auto load = [&](const std::string& name) {
    MatrixArtifact art = load_artifact(manifest.artifact(name));
    if (art.kind != SnapshotKind::operator_matrix) {
      throw FormatError(manifest.artifact(name).string() + ": not an operator artifact");
    }
    return std::move(art.data);
  };
  OnlineOperators ops;
  ops.a = load("op_a");
  ops.b = load("op_b");
  ops.masked_state_basis = load("op_masked_basis");
  ops.masked_initial_condition = load("op_masked_ic").col(0);
  ops.output_basis = load("op_output_basis");
  ops.output_initial_condition = load("op_output_ic").col(0);
  ops.residual_indices = manifest.sets.residual_indices;
  ops.state_indices = manifest.sets.state_indices;
  ops.output_indices = manifest.sets.output_indices;
  if (ops.a.cols() != static_cast<Index>(ops.residual_indices.size()) ||
      ops.masked_state_basis.rows() != static_cast<Index>(ops.state_indices.size()) ||
      ops.output_basis.rows() != static_cast<Index>(ops.output_indices.size())) {
    throw FormatError("online operators do not match the manifest index sets");
  }
  return ops;
}

OnlineResult run_online(const RunManifest& manifest, const ParameterPoint& mu, bool persist_result) {
  apply_thread_limit(configured_threads());
  const BurgersModel model = make_model(manifest.config);
  const OnlineOperators ops = load_online_operators(manifest);
  OnlineResult result;
  const auto t0 = Clock::now();
  result.rom = solve_gnat_online(mu, model, ops, manifest.config.time, manifest.config.solver);
  result.wall_seconds = seconds_since(t0);
  if (persist_result) {
    result.trajectory_path = manifest.directory / online_file_name(mu);
    persist(result.rom, result.trajectory_path);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Metrics and comparison

double relative_time_averaged_discrepancy(const Matrix& reference, const Matrix& approximation) {
  if (reference.rows() != approximation.rows()) throw DimensionError("discrepancy: state lengths differ");
  const Index steps = std::min(reference.cols(), approximation.cols()) - 1;
  if (steps < 1) throw DimensionError("discrepancy: need at least one time step");
  double sum = 0.0;
  for (Index n = 1; n <= steps; ++n) {
    sum += (reference.col(n) - approximation.col(n)).norm() / reference.col(n).norm();
  }
  return sum / static_cast<double>(steps);
}

double discrepancy_mean_normalized(const Matrix& reference, const Matrix& approximation) {
  if (reference.rows() != approximation.rows()) throw DimensionError("discrepancy: state lengths differ");
  const Index steps = std::min(reference.cols(), approximation.cols()) - 1;
  if (steps < 1) throw DimensionError("discrepancy: need at least one time step");
  double err = 0.0;
  double ref = 0.0;
  for (Index n = 1; n <= steps; ++n) {
    err += (reference.col(n) - approximation.col(n)).norm();
    ref += reference.col(n).norm();
  }
  return err / ref;
}

json MetricsReport::to_json() const {
  json methods_json = json::array();
  for (const auto& m : methods) {
    methods_json.push_back({{"method", m.method},
                            {"ok", m.ok},
                            {"message", m.message},
                            {"steps_completed", m.steps_completed},
                            {"relative_time_averaged_discrepancy", m.discrepancy},
                            {"discrepancy_mean_normalized", m.discrepancy_mean_norm},
                            {"wall_seconds", m.wall_seconds},
                            {"wall_time_ratio",
                             m.wall_seconds > 0.0 ? reference_wall_seconds / m.wall_seconds : 0.0},
                            {"mean_iterations", m.mean_iterations},
                            {"max_residual_rows", m.max_residual_rows},
                            {"max_state_entries", m.max_state_entries}});
  }
  return {{"mu", point_json(mu)},
          {"reference_wall_seconds", reference_wall_seconds},
          {"sample_index_factor",
           residual_basis_size > 0 ? static_cast<double>(num_samples) / residual_basis_size : 0.0},
          {"methods", methods_json}};
}

MetricsReport run_compare(const RunManifest& manifest, const std::vector<std::string>& methods,
                          const fs::path& reference, const fs::path& out_dir,
                          std::optional<ParameterPoint> mu) {
  std::vector<std::string> list;
  for (const auto& m : methods) {
    if (m == "all") {
      list.insert(list.end(), known_methods().begin(), known_methods().end());
    } else if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end()) {
      throw ConfigError("unknown method '" + m + "'");
    } else {
      list.push_back(m);
    }
  }
  if (list.empty()) throw ConfigError("no methods given");
  apply_thread_limit(configured_threads());

  const OfflineConfig& config = manifest.config;
  const BurgersModel model = make_model(config);
  MetricsReport report;

  Trajectory ref;
  if (fs::exists(reference)) {
    ref = load_trajectory(reference);
    if (mu && !(*mu == ref.mu)) throw ConfigError("reference trajectory was computed at a different input");
    double ns = 0.0;
    for (const auto& s : ref.log) ns += static_cast<double>(s.wall_ns);
    report.reference_wall_seconds = ns * 1e-9;
  } else {
    const ParameterPoint at = mu ? *mu : config.online_input ? *config.online_input
                                                             : throw ConfigError("no input given and the manifest has no online input");
    const auto t0 = Clock::now();
    ref = solve_fom(at, model, config.time, config.solver);
    report.reference_wall_seconds = seconds_since(t0);
    if (!ref.status.ok) throw SolverError("reference solve failed: " + ref.status.message);
    if (!reference.parent_path().empty()) fs::create_directories(reference.parent_path());
    persist(ref, reference);
  }
  if (ref.states.rows() != model.dimension()) throw DimensionError("reference trajectory has the wrong dimension");
  report.mu = ref.mu;
  report.num_samples = manifest.sets.num_samples();
  report.residual_basis_size = manifest.sizes.n_r;

  const PodBasis state = load_basis(manifest.artifact("basis_state"));
  const Vector w0 = model.initial_condition(ref.mu);
  std::vector<Matrix> states(list.size());

  for (std::size_t k = 0; k < list.size(); ++k) {
    const std::string& name = list[k];
    MethodReport mr;
    mr.method = name;
    ReducedTrajectory rom;
    try {
      const auto t0 = Clock::now();
      if (name == "gnat") {
        const OnlineOperators ops = load_online_operators(manifest);
        const auto t1 = Clock::now();
        rom = solve_gnat_online(ref.mu, model, ops, config.time, config.solver);
        mr.wall_seconds = seconds_since(t1);
      } else if (name == "tier2-pg") {
        rom = solve_tier2_pg(ref.mu, model, state.basis, w0, config.time, config.solver);
      } else if (name == "collocation-galerkin") {
        rom = baseline_collocation_galerkin(ref.mu, model, state.basis, w0, manifest.sets,
                                            config.time, config.solver);
      } else if (name == "collocation-ls") {
        rom = baseline_collocation_least_squares(ref.mu, model, state.basis, w0, manifest.sets,
                                                 config.time, config.solver);
      } else {
        const PodBasis deim = load_basis(manifest.artifact("basis_deim"));
        const auto t1 = Clock::now();
        rom = baseline_deim_like(ref.mu, model, state.basis, deim.basis, w0, manifest.sets,
                                 config.time, config.solver);
        mr.wall_seconds = seconds_since(t1);
      }
      if (mr.wall_seconds == 0.0) mr.wall_seconds = seconds_since(t0);
      mr.ok = rom.status.ok;
      mr.message = rom.status.message;
    } catch (const SolverError& e) {
      mr.ok = false;
      mr.message = e.what();
    } catch (const ConfigError& e) {
      mr.ok = false;
      mr.message = e.what();
    }
    if (rom.coords.cols() >= 2) {
      states[k] = reconstruct_states(rom, w0, state.basis);
      mr.steps_completed = states[k].cols() - 1;
      mr.discrepancy = relative_time_averaged_discrepancy(ref.states, states[k]);
      mr.discrepancy_mean_norm = discrepancy_mean_normalized(ref.states, states[k]);
      mr.mean_iterations = static_cast<double>(rom.counters.total_iterations) /
                           static_cast<double>(std::max<Index>(1, mr.steps_completed));
      if (mr.mean_iterations == 0.0 && !rom.log.empty()) {
        double it = 0.0;
        for (const auto& s : rom.log) it += static_cast<double>(s.iterations);
        mr.mean_iterations = it / static_cast<double>(rom.log.size());
      }
      mr.max_residual_rows = rom.counters.max_residual_rows;
      mr.max_state_entries = rom.counters.max_state_entries;
    }
    report.methods.push_back(mr);
  }

  fs::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "report.json", std::ios::trunc);
    if (!out) throw IoError("cannot write " + (out_dir / "report.json").string());
    out << report.to_json().dump(2) << '\n';
  }
  {
    std::ofstream out(out_dir / "series.csv", std::ios::trunc);
    if (!out) throw IoError("cannot write " + (out_dir / "series.csv").string());
    out.precision(12);
    out << "time";
    for (const auto& m : list) out << ',' << m;
    out << '\n';
    for (Index n = 1; n < ref.states.cols(); ++n) {
      out << config.time.time(n);
      for (std::size_t k = 0; k < list.size(); ++k) {
        out << ',';
        if (n < states[k].cols()) out << (ref.states.col(n) - states[k].col(n)).norm() / ref.states.col(n).norm();
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(out_dir / "profiles.csv", std::ios::trunc);
    if (!out) throw IoError("cannot write " + (out_dir / "profiles.csv").string());
    out.precision(12);
    out << "x,reference";
    for (const auto& m : list) out << ',' << m;
    out << '\n';
    const Index last = ref.states.cols() - 1;
    for (Index i = 0; i < model.dimension(); ++i) {
      out << model.grid().x(i) << ',' << ref.states(i, last);
      for (std::size_t k = 0; k < list.size(); ++k) {
        out << ',';
        if (states[k].cols() == ref.states.cols()) out << states[k](i, last);
      }
      out << '\n';
    }
  }
  return report;
}

BoundsReport run_bounds(const RunManifest& manifest, std::optional<ParameterPoint> mu) {
  const OfflineConfig& config = manifest.config;
  const ParameterPoint at = mu ? *mu : config.online_input ? *config.online_input : config.training_inputs.front();
  const BurgersModel model = make_model(config);
  const OnlineResult online = run_online(manifest, at, false);
  if (!online.rom.status.ok) throw SolverError("GNAT solve failed: " + online.rom.status.message);

  const PodBasis state = load_basis(manifest.artifact("basis_state"));
  const PodBasis residual_ext = load_basis(manifest.artifact("basis_residual"));
  const Index n_r = manifest.sizes.n_r;
  const Matrix phi_r = residual_ext.basis.leftCols(n_r);
  const Vector w0 = model.initial_condition(at);
  const Matrix rom_states = reconstruct_states(online.rom, w0, state.basis);

  // Probe states: every few steps of the ROM and of the first training run.
  std::vector<Vector> probes;
  const Index stride = std::max<Index>(1, config.time.num_steps / 20);
  for (Index n = 0; n < rom_states.cols(); n += stride) probes.push_back(rom_states.col(n));
  const Trajectory train = load_trajectory(manifest.artifact("fom_0"));
  for (Index n = 0; n < train.states.cols(); n += stride) probes.push_back(train.states.col(n));

  BoundsReport report;
  report.lipschitz = estimate_lipschitz_a(model, at, probes, config.time);
  report.trace = bound_terms(online.rom, model, state.basis, w0, phi_r, manifest.sets.residual_indices,
                             config.solver.newton_abs_tol, report.lipschitz.value,
                             residual_ext.singular_values);

  if (residual_ext.size() > n_r) {
    const Vector src = model.source(at);
    Vector r;
    double sum = 0.0;
    for (Index n = 1; n < rom_states.cols(); ++n) {
      model.residual_into(rom_states.col(n), rom_states.col(n - 1), config.time.dt, at,
                          std::span<const double>(src.data(), static_cast<std::size_t>(src.size())), r);
      sum += projection_error_estimate(residual_ext.basis, n_r, manifest.sets.residual_indices,
                                       gather_rows(r, manifest.sets.residual_indices));
    }
    report.mean_projection_error_estimate = sum / static_cast<double>(rom_states.cols() - 1);
  }

  report.csv_path = manifest.directory / "bounds.csv";
  write_bounds_csv(report.csv_path, report.trace);
  json summary = {{"mu", point_json(at)},
                  {"lipschitz_a", report.lipschitz.value},
                  {"lipschitz_pairs", report.lipschitz.pairs_used},
                  {"lipschitz_is_sampled_lower_estimate", true},
                  {"eps_newton", report.trace.eps_newton},
                  {"r_inv_norm", report.trace.r_inv_norm},
                  {"neglected_singular_values", report.trace.neglected_singular_values},
                  {"mean_projection_error_estimate", report.mean_projection_error_estimate}};
  std::ofstream out(manifest.directory / "bounds.json", std::ios::trunc);
  if (!out) throw IoError("cannot write bounds.json");
  out << summary.dump(2) << '\n';
  return report;
}

}  // namespace gnatrom
