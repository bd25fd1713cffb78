#include "fsirb/harness.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "fsirb/serialization.hpp"

namespace fsirb {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::ofstream open_output(const std::filesystem::path& path) {
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

}  // namespace

Workspace::Workspace(RunConfig config) : config_(std::move(config)) {
  config_.validate();
  FfdLattice lattice = config_.lattice();
  TaylorHoodSpace space(build_mesh(config_.nx, config_.ny, config_.box), config_.quadrature_degree);
  model_ = std::make_unique<StokesModel>(std::move(space), std::move(lattice), config_.physics);
  wall_ = std::make_unique<WallModel>(model_->space(), model_->lattice(), config_.physics.K, config_.domain());
}

const AffineSystem& Workspace::system() const {
  if (!system_) throw std::logic_error("workspace: EIM stage not available");
  return *system_;
}

const ReducedModel& Workspace::reduced_model() const {
  if (!rb_) throw std::logic_error("workspace: reduced basis not available");
  return *rb_;
}

double Workspace::train_eim() {
  const auto t = Clock::now();
  rb_.reset();
  system_.reset();
  TensorEim eim = train_tensor_eim(model_->lattice(), model_->space().quadrature_points(), config_.domain(), config_.eim);
  system_ = std::make_unique<AffineSystem>(*model_, std::move(eim));
  return seconds_since(t);
}

double Workspace::train_rb() {
  double s = system_ ? 0.0 : train_eim();
  const auto t = Clock::now();
  rb_ = greedy_build(*system_, config_.domain(), config_.rb);
  return s + seconds_since(t);
}

nlohmann::json Workspace::eim_context() const {
  const auto& c = config_;
  return {{"box", {c.box.x1_min, c.box.x1_max, c.box.x2_min, c.box.x2_max}},
          {"degrees", {c.degree_x, c.degree_y}},
          {"movable", c.movable},
          {"mu_bounds", {c.mu_min, c.mu_max}},
          {"mesh", {c.nx, c.ny, c.quadrature_degree}}};
}

nlohmann::json Workspace::rb_context() const {
  nlohmann::json j = eim_context();
  const auto& p = config_.physics;
  j["physics"] = {p.nu, p.v0, p.force[0], p.force[1]};
  j["eim"] = {config_.eim.tolerance, config_.eim.max_terms, config_.eim.train_size, config_.eim.seed};
  return j;
}

void Workspace::save_offline(const std::filesystem::path& dir) const {
  {
    auto out = open_output(dir / "eim.bin");
    save_tensor_eim(out, system().eim(), eim_context());
  }
  if (rb_) {
    auto out = open_output(dir / "rb.bin");
    save_reduced_model(out, *rb_, rb_context());
  }
}

void Workspace::load_offline(const std::filesystem::path& dir, bool need_rb) {
  const std::string hint = "; build it with `fsirb offline --config <file> --out " + dir.string() + "`";
  std::ifstream eim_in(dir / "eim.bin", std::ios::binary);
  if (!eim_in) throw MissingArtifacts("offline artifact " + (dir / "eim.bin").string() + " not found" + hint);
  nlohmann::json context;
  TensorEim eim;
  try {
    eim = load_tensor_eim(eim_in, model_->lattice(), &context);
  } catch (const ArtifactError& e) {
    throw MissingArtifacts(std::string(e.what()) + hint);
  }
  if (context != eim_context()) throw MissingArtifacts("eim.bin was built for a different geometry or mesh" + hint);
  system_ = std::make_unique<AffineSystem>(*model_, std::move(eim));
  rb_.reset();
  if (!need_rb) return;
  std::ifstream rb_in(dir / "rb.bin", std::ios::binary);
  if (!rb_in) throw MissingArtifacts("offline artifact " + (dir / "rb.bin").string() + " not found" + hint);
  try {
    rb_ = load_reduced_model(rb_in, &context);
  } catch (const ArtifactError& e) {
    throw MissingArtifacts(std::string(e.what()) + hint);
  }
  if (context != rb_context()) throw MissingArtifacts("rb.bin was built for a different configuration" + hint);
}

std::unique_ptr<FluidSolver> Workspace::make_solver(SolverKind kind) const {
  switch (kind) {
    case SolverKind::full_fem: return std::make_unique<FullFemSolver>(*model_);
    case SolverKind::reduced_fem: return std::make_unique<ReducedFemSolver>(system());
    case SolverKind::rb: return std::make_unique<RbSolver>(*model_, system().eim(), reduced_model());
  }
  throw std::logic_error("unknown solver kind");
}

SolveSummary summarize(const StokesModel& model, const WallTrace& wall, const FluidSolution& sol) {
  SolveSummary s;
  s.flow_rate = boundary_flux(model, sol, BoundaryTag::outflow);
  s.net_flux = boundary_flux(model, sol);
  // Mean of the P1 pressure along the inlet and outlet (trapezoidal rule is exact).
  const auto& mesh = model.space().mesh();
  auto side_mean = [&](BoundaryTag tag) {
    double integral = 0.0, length = 0.0;
    for (const auto& e : mesh.edges) {
      if (e.tag != tag) continue;
      const auto a = static_cast<std::size_t>(e.v[0]), b = static_cast<std::size_t>(e.v[1]);
      const double h = (mesh.nodes[a] - mesh.nodes[b]).norm();
      integral += 0.5 * h * (sol.p[static_cast<Eigen::Index>(a)] + sol.p[static_cast<Eigen::Index>(b)]);
      length += h;
    }
    return integral / length;
  };
  s.pressure_drop = side_mean(BoundaryTag::inflow) - side_mean(BoundaryTag::outflow);
  const Eigen::VectorXd tau = compute_traction(model, wall, sol);
  s.traction_min = tau.minCoeff();
  s.traction_max = tau.maxCoeff();
  return s;
}

std::ostream& operator<<(std::ostream& os, const SolveSummary& s) {
  return os << "flow rate      " << s.flow_rate << " cm^2/s\n"
            << "pressure drop  " << s.pressure_drop << " g/(cm s^2)\n"
            << "net flux       " << s.net_flux << "\n"
            << "wall traction  [" << s.traction_min << ", " << s.traction_max << "]\n";
}

BenchResult run_bench(Workspace& ws, const BenchOptions& options) {
  BenchResult result;
  const ParameterDomain domain = ws.config().domain();
  const std::size_t largest = options.counts.empty() ? 0 : *std::max_element(options.counts.begin(), options.counts.end());

  // Online cost: time up to `largest` solves at random mu, batched so that
  // each timed block is well above the clock resolution.
  auto time_online = [&](std::string_view name, const std::function<void(const ParameterVector&)>& solve,
                         std::size_t& measured) {
    std::mt19937_64 rng(ws.config().bench_seed);
    const auto start = Clock::now();
    measured = 0;
    const std::size_t target = std::max<std::size_t>(largest, 1);
    while (measured < target) {
      solve(domain.sample(rng));
      ++measured;
      if (seconds_since(start) > options.budget_s) break;
    }
    double per = seconds_since(start) / static_cast<double>(measured);
    if (per < 1e-3) {
      std::clog << "note: " << name << " solves take under 1 ms; timing a batch of " << options.min_batch << "\n";
      const auto t = Clock::now();
      for (std::size_t i = 0; i < options.min_batch; ++i) solve(domain.sample(rng));
      per = seconds_since(t) / static_cast<double>(options.min_batch);
      measured += options.min_batch;
    }
    return per;
  };

  std::size_t reference_measured = 0;
  {
    FullFemSolver reference(ws.model());
    result.reference_solve_s =
        time_online("full_fem", [&](const ParameterVector& mu) { reference.solve(mu); }, reference_measured);
  }

  for (SolverKind kind : options.solvers) {
    double offline = 0.0;
    if (kind == SolverKind::reduced_fem) offline = ws.train_eim();
    if (kind == SolverKind::rb) offline = ws.train_eim() + ws.train_rb();
    std::size_t measured = reference_measured;
    double per = result.reference_solve_s;
    if (kind == SolverKind::reduced_fem) {
      ReducedFemSolver solver(ws.system());
      per = time_online("reduced_fem", [&](const ParameterVector& mu) { solver.solve(mu); }, measured);
    } else if (kind == SolverKind::rb) {
      // Online stage proper: EIM coefficients and the dense reduced solve.
      // Lifting the coordinates back to the mesh is an output step and scales with it.
      const TensorEim& eim = ws.system().eim();
      const ReducedModel& rb = ws.reduced_model();
      per = time_online("rb", [&](const ParameterVector& mu) { rb.solve(affine_theta(eim, mu), mu); }, measured);
    }
    result.records.push_back({kind, false, 0, offline, 0.0, 0});
    for (std::size_t n : options.counts) {
      result.records.push_back({kind, true, n, offline + per * static_cast<double>(n), per, std::min(n, measured)});
    }
  }
  return result;
}

void write_bench_csv(std::ostream& os, const BenchResult& result) {
  os << "solver,phase,count,cumulative_s,per_solve_s,normalized_cumulative,normalized_per_solve,measured\n"
     << std::setprecision(8);
  const double unit = result.reference_solve_s;
  for (const auto& r : result.records) {
    os << to_string(r.solver) << ',' << (r.online ? "online" : "offline") << ',' << r.count << ',' << r.cumulative_s << ','
       << r.per_solve_s << ',' << r.cumulative_s / unit << ',' << r.per_solve_s / unit << ',' << r.measured << '\n';
  }
}

std::filesystem::path cmd_mesh(const RunConfig& config) {
  config.validate();
  const Mesh mesh = build_mesh(config.nx, config.ny, config.box);
  const auto path = config.output_dir / "mesh.txt";
  auto out = open_output(path);
  write_mesh(out, mesh);
  return path;
}

SolveSummary cmd_solve(const RunConfig& config, const ParameterVector& mu, SolverKind kind, std::ostream& log) {
  config.validate();
  if (mu.size() != config.movable.size()) {
    throw ConfigError("--mu needs " + std::to_string(config.movable.size()) + " values, got " + std::to_string(mu.size()));
  }
  Workspace ws(config);
  if (kind != SolverKind::full_fem) ws.load_offline(config.output_dir, kind == SolverKind::rb);
  if (!config.domain().contains(mu, 1e-12)) log << "warning: mu lies outside the parameter box\n";
  auto solver = ws.make_solver(kind);
  const auto t = Clock::now();
  const FluidSolution sol = solver->solve(mu);
  const double elapsed = seconds_since(t);
  const SolveSummary summary = summarize(ws.model(), ws.wall().trace(), sol);
  {
    auto out = open_output(config.output_dir / ("solution_" + std::string(to_string(kind)) + ".csv"));
    write_solution_csv(out, ws.model(), sol);
  }
  {
    auto out = open_output(config.output_dir / "deformed_mesh.csv");
    write_deformed_mesh_csv(out, ws.model(), mu);
  }
  log << "solver " << to_string(kind) << " at mu = (" << mu.to_string() << "), " << std::fixed << std::setprecision(1)
      << elapsed * 1e3 << " ms\n"
      << std::defaultfloat << std::setprecision(6) << summary;
  return summary;
}

OfflineReport cmd_offline(const RunConfig& config, std::ostream& log) {
  config.validate();
  Workspace ws(config);
  OfflineReport report;
  report.eim_seconds = ws.train_eim();
  const TensorEim& eim = ws.system().eim();
  report.eim_converged = eim.converged();
  log << "EIM (tol " << config.eim.tolerance << ", " << config.eim.train_size << " samples, seed " << config.eim.seed << ")\n";
  for (std::size_t e = 0; e < kTensorEntries; ++e) {
    const auto& b = eim.bases()[e];
    report.eim_terms[e] = b.size();
    report.eim_error[e] = b.training_error();
    log << "  " << std::left << std::setw(6) << to_string(static_cast<TensorEntry>(e)) << std::right << " M = " << std::setw(2)
        << b.size() << "  max training error " << b.training_error() << (b.converged ? "" : "  NOT CONVERGED") << "\n";
  }
  log << "  affine terms: " << ws.system().num_a_terms() << " viscous, " << ws.system().num_b_terms() << " divergence, "
      << ws.system().num_f_terms() << " force\n";

  report.rb_seconds = ws.train_rb();
  const ReducedModel& rb = ws.reduced_model();
  report.rb_size = rb.num_snapshots();
  report.rb_final_residual = rb.history().empty() ? 0.0 : rb.history().back().max_train_residual;
  report.rb_reached_tolerance = report.rb_final_residual <= config.rb.tolerance;
  log << "RB greedy (Nmax " << config.rb.max_basis << ", tol " << config.rb.tolerance << ", " << config.rb.train_size
      << " samples, seed " << config.rb.seed << "): N = " << report.rb_size << ", final max residual "
      << report.rb_final_residual << (report.rb_reached_tolerance ? "" : " (stopped at Nmax)") << "\n";
  log << "  N  max_train_residual  max_test_error\n";
  for (const auto& r : rb.history()) {
    log << "  " << std::setw(2) << r.n << "  " << std::setw(18) << r.max_train_residual << "  " << std::setw(14)
        << r.max_test_error << "\n";
  }
  log << "offline time: EIM " << report.eim_seconds << " s, RB " << report.rb_seconds << " s\n";

  ws.save_offline(config.output_dir);
  {
    auto out = open_output(config.output_dir / "error_decay.csv");
    write_error_decay_csv(out, rb);
  }
  {
    nlohmann::json j;
    j["eim"] = nlohmann::json::object();
    for (std::size_t e = 0; e < kTensorEntries; ++e) {
      j["eim"][std::string(to_string(static_cast<TensorEntry>(e)))] = {{"M", report.eim_terms[e]}, {"error", report.eim_error[e]}};
    }
    j["eim_converged"] = report.eim_converged;
    j["eim_seed"] = config.eim.seed;
    j["rb"] = {{"N", report.rb_size}, {"final_residual", report.rb_final_residual},
               {"reached_tolerance", report.rb_reached_tolerance}, {"seed", config.rb.seed}, {"test_seed", config.rb.test_seed}};
    auto out = open_output(config.output_dir / "offline_report.json");
    out << j.dump(2) << "\n";
  }
  return report;
}

CouplingState cmd_couple(const RunConfig& config, std::ostream& log) {
  config.validate();
  Workspace ws(config);
  const SolverKind kind = config.coupling_solver;
  if (kind != SolverKind::full_fem) ws.load_offline(config.output_dir, kind == SolverKind::rb);
  auto solver = ws.make_solver(kind);
  const CouplingState state = couple(*solver, ws.model(), ws.wall(), config.coupling);
  {
    auto out = open_output(config.output_dir / "coupling_trace.csv");
    write_coupling_trace_csv(out, state);
  }
  {
    auto out = open_output(config.output_dir / "interface.csv");
    write_interface_csv(out, ws.wall(), state);
  }
  log << "coupling with " << to_string(kind) << ": " << (state.converged ? "converged" : "NOT converged") << " after "
      << state.history.size() << " iterations\n"
      << "  mu = (" << state.mu.to_string() << ")\n"
      << "  |mu^{k+1} - mu^k| = " << state.step_norm << ", J = " << state.misfit
      << ", strong-form residual = " << state.strong_residual << "\n"
      << "  max |eta| = " << ws.wall().displacement(state.mu).cwiseAbs().maxCoeff() << " cm\n";
  return state;
}

BenchResult cmd_bench(const RunConfig& config, const std::vector<std::size_t>& counts, std::ostream& log) {
  config.validate();
  Workspace ws(config);
  BenchOptions options;
  options.counts = counts;
  const BenchResult result = run_bench(ws, options);
  auto out = open_output(config.output_dir / "bench.csv");
  write_bench_csv(out, result);
  log << "one full FEM solve: " << result.reference_solve_s << " s (unit of the normalized columns)\n";
  write_bench_csv(log, result);
  return result;
}

std::vector<std::size_t> parse_counts(const std::string& text) {
  std::vector<std::size_t> out;
  if (text.find_first_not_of(" \t") == std::string::npos) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    long long v = -1;
    try {
      v = std::stoll(item, &used);
    } catch (const std::exception&) {
      throw ConfigError("malformed --counts '" + text + "'");
    }
    if (v < 0 || item.find_first_not_of(" \t", used) != std::string::npos) throw ConfigError("malformed --counts '" + text + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

}  // namespace fsirb
