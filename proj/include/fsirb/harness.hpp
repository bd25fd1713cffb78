#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "json.hpp"

#include "fsirb/config.hpp"
#include "fsirb/coupling.hpp"
#include "fsirb/reduced_basis.hpp"

namespace fsirb {

/// Offline artifacts absent or built for another configuration (exit status 2).
class MissingArtifacts : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Mesh, FE model and wall for one configuration, plus the offline stage
/// once trained or loaded. Owns everything the solvers point into.
class Workspace {
 public:
  explicit Workspace(RunConfig config);
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  const RunConfig& config() const { return config_; }
  const StokesModel& model() const { return *model_; }
  const WallModel& wall() const { return *wall_; }
  bool has_eim() const { return system_ != nullptr; }
  bool has_rb() const { return rb_.has_value(); }
  const AffineSystem& system() const;
  const ReducedModel& reduced_model() const;

  /// Trains EIM and builds the affine system; returns seconds spent.
  double train_eim();
  /// Greedy RB on top of train_eim(); returns seconds spent.
  double train_rb();
  void save_offline(const std::filesystem::path& dir) const;
  /// Loads eim.bin (and rb.bin when need_rb) from dir; throws MissingArtifacts.
  void load_offline(const std::filesystem::path& dir, bool need_rb);

  std::unique_ptr<FluidSolver> make_solver(SolverKind kind) const;

  /// Everything an artifact depends on, for compatibility checks.
  nlohmann::json eim_context() const;
  nlohmann::json rb_context() const;

 private:
  RunConfig config_;
  std::unique_ptr<StokesModel> model_;
  std::unique_ptr<WallModel> wall_;
  std::unique_ptr<AffineSystem> system_;
  std::optional<ReducedModel> rb_;
};

struct SolveSummary {
  double flow_rate = 0.0;      ///< outlet flux, cm^2/s
  double pressure_drop = 0.0;  ///< mean inlet minus mean outlet pressure
  double net_flux = 0.0;
  double traction_min = 0.0;
  double traction_max = 0.0;
};
SolveSummary summarize(const StokesModel& model, const WallTrace& wall, const FluidSolution& sol);
std::ostream& operator<<(std::ostream& os, const SolveSummary& s);

struct OfflineReport {
  std::array<std::size_t, kTensorEntries> eim_terms{};
  std::array<double, kTensorEntries> eim_error{};
  bool eim_converged = false;
  std::size_t rb_size = 0;
  double rb_final_residual = 0.0;
  bool rb_reached_tolerance = false;
  double eim_seconds = 0.0;
  double rb_seconds = 0.0;
};

struct BenchRecord {
  SolverKind solver = SolverKind::full_fem;
  bool online = true;
  std::size_t count = 0;
  double cumulative_s = 0.0;
  double per_solve_s = 0.0;
  std::size_t measured = 0;  ///< solves actually timed; the rest is extrapolated at per_solve_s
};

struct BenchOptions {
  std::vector<std::size_t> counts{1, 10, 100, 1000};
  double budget_s = 10.0;          ///< timed online solves per solver stop after this much time
  std::size_t min_batch = 200;     ///< batch size below the 1 ms timer threshold
  std::vector<SolverKind> solvers{SolverKind::full_fem, SolverKind::reduced_fem, SolverKind::rb};
};

struct BenchResult {
  std::vector<BenchRecord> records;
  double reference_solve_s = 0.0;  ///< one full FEM solve, the unit of the normalized columns
};

/// Measures offline cost (from scratch) and online cost per solver kind.
/// The workspace is retrained as a side effect.
BenchResult run_bench(Workspace& ws, const BenchOptions& options);
/// solver,phase,count,cumulative_s,per_solve_s,normalized_cumulative,normalized_per_solve,measured
void write_bench_csv(std::ostream& os, const BenchResult& result);

// Subcommands. Each validates the config first and writes into config.output_dir.
std::filesystem::path cmd_mesh(const RunConfig& config);
SolveSummary cmd_solve(const RunConfig& config, const ParameterVector& mu, SolverKind kind, std::ostream& log);
OfflineReport cmd_offline(const RunConfig& config, std::ostream& log);
CouplingState cmd_couple(const RunConfig& config, std::ostream& log);
BenchResult cmd_bench(const RunConfig& config, const std::vector<std::size_t>& counts, std::ostream& log);

/// Parse "1,10,100"; throws ConfigError.
std::vector<std::size_t> parse_counts(const std::string& text);

}  // namespace fsirb
