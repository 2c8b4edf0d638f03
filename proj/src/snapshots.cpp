// Copyright (c) 2026 The gnatrom Authors.
// SPDX-License-Identifier: Apache-2.0

#include "gnatrom/snapshots.hpp"

#include "gnatrom/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace gnatrom {

namespace {

constexpr std::array<char, 8> kMagic{'G', 'N', 'A', 'T', 'S', 'N', 'A', 'P'};

template <class T>
T to_little_endian(T value) {
  if constexpr (std::endian::native == std::endian::little) {
    return value;
  } else {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
}

template <class T>
void write_scalar(std::ostream& out, T value) {
  const T le = to_little_endian(value);
  out.write(reinterpret_cast<const char*>(&le), sizeof(T));
}

template <class T>
T read_scalar(std::istream& in, const std::filesystem::path& path) {
  T raw{};
  in.read(reinterpret_cast<char*>(&raw), sizeof(T));
  if (!in) throw FormatError("truncated artifact header in " + path.string());
  return to_little_endian(raw);
}

nlohmann::json provenance_to_json(const std::vector<ProvenanceEntry>& prov) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : prov) arr.push_back({p.mu.a, p.mu.b, p.step, p.iteration});
  return arr;
}

std::vector<ProvenanceEntry> provenance_from_json(const nlohmann::json& arr) {
  std::vector<ProvenanceEntry> prov;
  prov.reserve(arr.size());
  for (const auto& e : arr) {
    prov.push_back({{e.at(0).get<double>(), e.at(1).get<double>()},
                    e.at(2).get<Index>(),
                    e.at(3).get<Index>()});
  }
  return prov;
}

nlohmann::json log_to_json(const std::vector<StepRecord>& log) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : log) arr.push_back({r.step, r.iterations, r.residual_norm, r.wall_ns});
  return arr;
}

std::vector<StepRecord> log_from_json(const nlohmann::json& arr) {
  std::vector<StepRecord> log;
  for (const auto& e : arr) {
    log.push_back({e.at(0).get<Index>(), e.at(1).get<Index>(), e.at(2).get<double>(),
                   e.at(3).get<std::int64_t>()});
  }
  return log;
}

nlohmann::json trajectory_meta(const ParameterPoint& mu, const TimeDiscretization& time,
                               const std::vector<StepRecord>& log, const SolveStatus& status) {
  return {{"mu", {mu.a, mu.b}},
          {"dt", time.dt},
          {"num_steps", time.num_steps},
          {"log", log_to_json(log)},
          {"status",
           {{"ok", status.ok}, {"failed_step", status.failed_step}, {"message", status.message}}}};
}

void read_trajectory_meta(const nlohmann::json& t, ParameterPoint& mu, TimeDiscretization& time,
                          std::vector<StepRecord>& log, SolveStatus& status) {
  mu = {t.at("mu").at(0).get<double>(), t.at("mu").at(1).get<double>()};
  time.dt = t.at("dt").get<double>();
  time.num_steps = t.at("num_steps").get<Index>();
  log = log_from_json(t.at("log"));
  const auto& s = t.at("status");
  status.ok = s.at("ok").get<bool>();
  status.failed_step = s.at("failed_step").get<Index>();
  status.message = s.at("message").get<std::string>();
}

}  // namespace

std::string_view to_string(SnapshotKind kind) {
  switch (kind) {
    case SnapshotKind::state_from_initial: return "state-increment-from-initial";
    case SnapshotKind::state_per_step: return "state-increment-per-step";
    case SnapshotKind::raw_state: return "raw-state";
    case SnapshotKind::residual_tier1: return "residual-tierI";
    case SnapshotKind::residual_tier2: return "residual-tierII";
    case SnapshotKind::jacobian_action_tier2: return "jacobian-action-tierII";
    case SnapshotKind::jacobian_columns_tier2: return "jacobian-columns-tierII";
    case SnapshotKind::basis: return "basis";
    case SnapshotKind::full_trajectory: return "full-trajectory";
    case SnapshotKind::reduced_trajectory: return "reduced-trajectory";
    case SnapshotKind::operator_matrix: return "operator";
  }
  return "unknown";
}

void SnapshotMatrix::validate() const {
  if (static_cast<Index>(provenance.size()) != columns.cols()) {
    throw DimensionError("snapshot matrix has " + std::to_string(columns.cols()) +
                         " columns but " + std::to_string(provenance.size()) +
                         " provenance entries");
  }
}

SnapshotMatrix collect_state_snapshots(const Trajectory& trajectory,
                                       StateSnapshotVariant variant) {
  const Index n_states = trajectory.states.cols();
  if (n_states == 0) throw ConfigError("collect_state_snapshots: empty trajectory");
  const Index n = trajectory.states.rows();
  SnapshotMatrix out;
  switch (variant) {
    case StateSnapshotVariant::from_initial:
      out.kind = SnapshotKind::state_from_initial;
      out.columns.resize(n, n_states - 1);
      for (Index k = 1; k < n_states; ++k) {
        out.columns.col(k - 1) = trajectory.states.col(k) - trajectory.states.col(0);
        out.provenance.push_back({trajectory.mu, k, 0});
      }
      break;
    case StateSnapshotVariant::per_step_increment:
      out.kind = SnapshotKind::state_per_step;
      out.columns.resize(n, n_states - 1);
      for (Index k = 1; k < n_states; ++k) {
        out.columns.col(k - 1) = trajectory.states.col(k) - trajectory.states.col(k - 1);
        out.provenance.push_back({trajectory.mu, k, 0});
      }
      break;
    case StateSnapshotVariant::raw:
      out.kind = SnapshotKind::raw_state;
      out.columns = trajectory.states;
      for (Index k = 0; k < n_states; ++k) out.provenance.push_back({trajectory.mu, k, 0});
      break;
  }
  return out;
}

SnapshotMatrix concatenate(const std::vector<SnapshotMatrix>& parts) {
  if (parts.empty()) throw ConfigError("concatenate: no snapshot matrices");
  SnapshotMatrix out;
  out.kind = parts.front().kind;
  Index total = 0;
  for (const auto& p : parts) {
    if (p.kind != out.kind) throw ConfigError("concatenate: mixed snapshot kinds");
    if (p.rows() != parts.front().rows()) throw DimensionError("concatenate: row mismatch");
    total += p.cols();
  }
  out.columns.resize(parts.front().rows(), total);
  Index offset = 0;
  for (const auto& p : parts) {
    out.columns.middleCols(offset, p.cols()) = p.columns;
    out.provenance.insert(out.provenance.end(), p.provenance.begin(), p.provenance.end());
    offset += p.cols();
  }
  return out;
}

SnapshotMatrix normalize_columns(const SnapshotMatrix& snapshots) {
  SnapshotMatrix out;
  out.kind = snapshots.kind;
  std::vector<Index> keep;
  std::vector<double> norms;
  for (Index c = 0; c < snapshots.cols(); ++c) {
    const double nrm = snapshots.columns.col(c).norm();
    if (nrm > 0.0) {
      keep.push_back(c);
      norms.push_back(nrm);
    }
  }
  out.columns.resize(snapshots.rows(), static_cast<Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    out.columns.col(static_cast<Index>(k)) = snapshots.columns.col(keep[k]) / norms[k];
    if (!snapshots.provenance.empty()) {
      out.provenance.push_back(snapshots.provenance[static_cast<std::size_t>(keep[k])]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

SnapshotProcedure::SnapshotProcedure(int id) : id_(id) {
  if (id < 0 || id > 3) {
    throw ConfigError("snapshot procedure must be 0, 1, 2 or 3 (got " + std::to_string(id) + ")");
  }
}

Index SnapshotProcedure::snapshots_per_iteration(Index n_w) const {
  switch (id_) {
    case 0:
    case 1: return 1;
    case 2: return 2;
    default: return n_w + 1;
  }
}

HyperReductionCollector::HyperReductionCollector(SnapshotProcedure procedure, Index dimension)
    : procedure_(procedure), dimension_(dimension) {}

IterationHook HyperReductionCollector::hook() {
  return [this](const IterationEvent& e) { record(e); };
}

void HyperReductionCollector::record(const IterationEvent& event) {
  if (event.tier != procedure_.source_tier()) {
    throw ConfigError("snapshot procedure " + std::to_string(procedure_.id()) +
                      " cannot collect from a tier-" +
                      std::to_string(static_cast<int>(event.tier)) + " solver");
  }
  if (event.residual == nullptr || event.residual->size() != dimension_) {
    throw DimensionError("iteration event carries no full-length residual");
  }
  const ProvenanceEntry prov{event.mu, event.step, event.iteration};
  const Vector& r = *event.residual;
  residual_data_.insert(residual_data_.end(), r.data(), r.data() + r.size());
  residual_prov_.push_back(prov);

  if (procedure_.id() == 2) {
    if (event.jacobian_basis == nullptr || event.direction == nullptr) {
      throw ConfigError("procedure 2 needs J*Phi_w and the search direction");
    }
    const Vector js = (*event.jacobian_basis) * (*event.direction);
    jacobian_data_.insert(jacobian_data_.end(), js.data(), js.data() + js.size());
    jacobian_prov_.push_back(prov);
  } else if (procedure_.id() == 3) {
    if (event.jacobian_basis == nullptr) throw ConfigError("procedure 3 needs J*Phi_w");
    const Matrix& jp = *event.jacobian_basis;
    jacobian_data_.insert(jacobian_data_.end(), jp.data(), jp.data() + jp.size());
    for (Index c = 0; c < jp.cols(); ++c) jacobian_prov_.push_back(prov);
  }
  ++iterations_;
}

std::pair<SnapshotMatrix, SnapshotMatrix> HyperReductionCollector::finish() const {
  auto build = [&](SnapshotKind kind, const std::vector<double>& data,
                   const std::vector<ProvenanceEntry>& prov) {
    SnapshotMatrix m;
    m.kind = kind;
    m.columns = Eigen::Map<const Matrix>(data.data(), dimension_, static_cast<Index>(prov.size()));
    m.provenance = prov;
    return m;
  };
  const SnapshotKind res_kind =
      procedure_.id() == 0 ? SnapshotKind::residual_tier1 : SnapshotKind::residual_tier2;
  SnapshotMatrix residual = build(res_kind, residual_data_, residual_prov_);
  switch (procedure_.id()) {
    case 2:
      return {residual, build(SnapshotKind::jacobian_action_tier2, jacobian_data_, jacobian_prov_)};
    case 3:
      return {residual,
              build(SnapshotKind::jacobian_columns_tier2, jacobian_data_, jacobian_prov_)};
    default: {
      SnapshotMatrix copy = residual;
      return {std::move(residual), std::move(copy)};
    }
  }
}

// ---------------------------------------------------------------------------
// Persistence

void save_artifact(const std::filesystem::path& path, const MatrixArtifact& artifact) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  write_scalar<std::uint32_t>(out, kArtifactVersion);
  write_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(artifact.kind));
  write_scalar<std::uint64_t>(out, static_cast<std::uint64_t>(artifact.data.rows()));
  write_scalar<std::uint64_t>(out, static_cast<std::uint64_t>(artifact.data.cols()));
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(artifact.data.data()),
              static_cast<std::streamsize>(artifact.data.size() * sizeof(double)));
  } else {
    for (Index k = 0; k < artifact.data.size(); ++k) write_scalar(out, artifact.data.data()[k]);
  }
  const std::string trailer = artifact.trailer.dump();
  write_scalar<std::uint64_t>(out, trailer.size());
  out.write(trailer.data(), static_cast<std::streamsize>(trailer.size()));
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

MatrixArtifact load_artifact(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw FormatError(path.string() + ": bad magic, not a GNATSNAP file");
  const auto version = read_scalar<std::uint32_t>(in, path);
  if (version != kArtifactVersion) {
    throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
  }
  const auto kind = read_scalar<std::uint32_t>(in, path);
  if (kind > static_cast<std::uint32_t>(SnapshotKind::operator_matrix)) {
    throw FormatError(path.string() + ": unknown kind tag " + std::to_string(kind));
  }
  const auto rows = read_scalar<std::uint64_t>(in, path);
  const auto cols = read_scalar<std::uint64_t>(in, path);

  const auto file_size = std::filesystem::file_size(path);
  const std::uint64_t payload = rows * cols * sizeof(double);
  if (cols != 0 && rows > (file_size / sizeof(double)) / cols) {
    throw FormatError(path.string() + ": truncated payload");
  }
  if (kArtifactHeaderBytes + payload + sizeof(std::uint64_t) > file_size) {
    throw FormatError(path.string() + ": truncated payload");
  }

  MatrixArtifact art;
  art.kind = static_cast<SnapshotKind>(kind);
  art.data.resize(static_cast<Index>(rows), static_cast<Index>(cols));
  in.read(reinterpret_cast<char*>(art.data.data()), static_cast<std::streamsize>(payload));
  if (!in) throw FormatError(path.string() + ": truncated payload");
  if constexpr (std::endian::native != std::endian::little) {
    for (Index k = 0; k < art.data.size(); ++k) {
      art.data.data()[k] = to_little_endian(art.data.data()[k]);
    }
  }
  const auto trailer_len = read_scalar<std::uint64_t>(in, path);
  if (kArtifactHeaderBytes + payload + sizeof(std::uint64_t) + trailer_len != file_size) {
    throw FormatError(path.string() + ": trailer length does not match file size");
  }
  std::string trailer(trailer_len, '\0');
  in.read(trailer.data(), static_cast<std::streamsize>(trailer_len));
  if (!in) throw FormatError(path.string() + ": truncated trailer");
  try {
    art.trailer = trailer.empty() ? nlohmann::json::object() : nlohmann::json::parse(trailer);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": invalid JSON trailer: " + e.what());
  }
  return art;
}

void persist(const SnapshotMatrix& matrix, const std::filesystem::path& path) {
  matrix.validate();
  save_artifact(path, {matrix.kind, matrix.columns,
                       {{"provenance", provenance_to_json(matrix.provenance)}}});
}

SnapshotMatrix load_snapshots(const std::filesystem::path& path) {
  MatrixArtifact art = load_artifact(path);
  SnapshotMatrix m;
  m.kind = art.kind;
  m.columns = std::move(art.data);
  try {
    m.provenance = provenance_from_json(art.trailer.at("provenance"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad provenance trailer: " + e.what());
  }
  m.validate();
  return m;
}

void persist(const Trajectory& trajectory, const std::filesystem::path& path) {
  save_artifact(path, {SnapshotKind::full_trajectory, trajectory.states,
                       trajectory_meta(trajectory.mu, trajectory.time, trajectory.log,
                                       trajectory.status)});
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  MatrixArtifact art = load_artifact(path);
  if (art.kind != SnapshotKind::full_trajectory) {
    throw FormatError(path.string() + ": not a full trajectory artifact");
  }
  Trajectory t;
  t.states = std::move(art.data);
  try {
    read_trajectory_meta(art.trailer, t.mu, t.time, t.log, t.status);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad trajectory trailer: " + e.what());
  }
  return t;
}

void persist(const ReducedTrajectory& trajectory, const std::filesystem::path& path) {
  nlohmann::json meta =
      trajectory_meta(trajectory.mu, trajectory.time, trajectory.log, trajectory.status);
  meta["counters"] = {{"max_residual_rows", trajectory.counters.max_residual_rows},
                      {"max_state_entries", trajectory.counters.max_state_entries},
                      {"total_iterations", trajectory.counters.total_iterations}};
  save_artifact(path, {SnapshotKind::reduced_trajectory, trajectory.coords, meta});
}

ReducedTrajectory load_reduced_trajectory(const std::filesystem::path& path) {
  MatrixArtifact art = load_artifact(path);
  if (art.kind != SnapshotKind::reduced_trajectory) {
    throw FormatError(path.string() + ": not a reduced trajectory artifact");
  }
  ReducedTrajectory t;
  t.coords = std::move(art.data);
  try {
    read_trajectory_meta(art.trailer, t.mu, t.time, t.log, t.status);
    const auto& c = art.trailer.at("counters");
    t.counters.max_residual_rows = c.at("max_residual_rows").get<Index>();
    t.counters.max_state_entries = c.at("max_state_entries").get<Index>();
    t.counters.total_iterations = c.at("total_iterations").get<Index>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad trajectory trailer: " + e.what());
  }
  return t;
}

}  // namespace gnatrom
