#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "fsirb/coupling.hpp"
#include "fsirb/reduced_basis.hpp"

namespace fsirb {

/// Invalid or inconsistent configuration (exit status 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SolverKind { full_fem, reduced_fem, rb };
std::string_view to_string(SolverKind kind);
SolverKind parse_solver_kind(const std::string& text);

struct RunConfig {
  ReferenceBox box;
  int degree_x = 9;
  int degree_y = 1;
  std::vector<int> movable{1, 2, 3, 6, 7, 8};  // top-row l indices, x2 direction
  double mu_min = -0.1;
  double mu_max = 0.1;

  int nx = 60;
  int ny = 20;
  int quadrature_degree = 4;

  PhysicalConstants physics;
  EimOptions eim;
  RbOptions rb;

  CouplingOptions coupling;
  SolverKind coupling_solver = SolverKind::full_fem;

  std::uint64_t bench_seed = 4;
  std::filesystem::path output_dir = "out";

  /// Throws ConfigError.
  void validate() const;
  /// Seeds of every stage derived from one base: eim = s, rb = s + 1, rb test = s + 2, bench = s + 3.
  void set_base_seed(std::uint64_t seed);

  FfdLattice lattice() const;
  ParameterDomain domain() const;
};

/// INI text with sections [geometry] [mesh] [physics] [eim] [rb] [coupling]
/// [bench] [output]; missing keys keep their defaults, unknown keys are errors.
RunConfig parse_config(std::istream& is);
RunConfig load_config(const std::filesystem::path& path);
void write_config(std::ostream& os, const RunConfig& config);

}  // namespace fsirb
