// fsirb: channel flow with a flexible wall, FFD + EIM + reduced basis.
#include <iostream>

#include "CLI11.hpp"
#include "fsirb/harness.hpp"
#include "fsirb/serialization.hpp"

namespace {

enum Exit { ok = 0, config_error = 2, not_converged = 3, degenerate = 4 };

struct Options {
  std::string config;
  std::string mu;
  std::string solver;
  std::string counts = "1,10,100,1000";
  std::string out;
  std::optional<std::uint64_t> seed;
};

fsirb::RunConfig resolve(const Options& o) {
  fsirb::RunConfig c = o.config.empty() ? fsirb::RunConfig{} : fsirb::load_config(o.config);
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.seed) c.set_base_seed(*o.seed);
  if (!o.solver.empty()) c.coupling_solver = fsirb::parse_solver_kind(o.solver);
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reduced-basis Stokes flow in a channel with one flexible wall"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "INI configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory (overrides [output] dir)");
    sub->add_option("--seed", o.seed, "base seed for EIM, RB, test and bench sampling");
  };
  auto* mesh = app.add_subcommand("mesh", "write the reference mesh");
  auto* solve = app.add_subcommand("solve", "one fluid solve at a parameter");
  auto* offline = app.add_subcommand("offline", "train EIM and the reduced basis, write artifacts");
  auto* couple = app.add_subcommand("couple", "fixed-point fluid-wall coupling");
  auto* bench = app.add_subcommand("bench", "cost of full FEM, reduced FEM and RB versus number of solves");
  for (auto* s : {mesh, solve, offline, couple, bench}) common(s);
  solve->add_option("--mu", o.mu, "\"v1,...,v6\"")->required();
  for (auto* s : {solve, couple}) {
    s->add_option("--solver", o.solver, "full_fem | reduced_fem | rb")
        ->check(CLI::IsMember({"full_fem", "reduced_fem", "rb"}));
  }
  bench->add_option("--counts", o.counts, "comma-separated solve counts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }

  try {
    const fsirb::RunConfig config = resolve(o);
    if (mesh->parsed()) {
      std::cout << "wrote " << fsirb::cmd_mesh(config).string() << "\n";
    } else if (solve->parsed()) {
      fsirb::ParameterVector mu;
      try {
        mu = fsirb::parse_parameter_vector(o.mu);
      } catch (const std::invalid_argument& e) {
        throw fsirb::ConfigError(std::string("--mu: ") + e.what());
      }
      const auto kind = o.solver.empty() ? fsirb::SolverKind::full_fem : fsirb::parse_solver_kind(o.solver);
      fsirb::cmd_solve(config, mu, kind, std::cout);
    } else if (offline->parsed()) {
      const auto report = fsirb::cmd_offline(config, std::cout);
      if (!report.eim_converged) {
        std::cerr << "EIM did not reach its tolerance; artifacts written with the flag set\n";
        return not_converged;
      }
    } else if (couple->parsed()) {
      const auto state = fsirb::cmd_couple(config, std::cout);
      if (!state.converged) return not_converged;
    } else if (bench->parsed()) {
      fsirb::cmd_bench(config, fsirb::parse_counts(o.counts), std::cout);
    }
  } catch (const fsirb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const fsirb::DegenerateGeometry& e) {
    std::cerr << "degenerate geometry: " << e.what() << "\n";
    return degenerate;
  } catch (const fsirb::SolverError& e) {
    std::cerr << "solver failed: " << e.what() << "\n";
    return not_converged;
  } catch (const fsirb::ArtifactError& e) {
    std::cerr << "artifact error: " << e.what() << "\n";
    return config_error;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return config_error;
  }
  return ok;
}
