#include "fsirb/config.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace fsirb {

std::string_view to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::full_fem: return "full_fem";
    case SolverKind::reduced_fem: return "reduced_fem";
    case SolverKind::rb: return "rb";
  }
  return "?";
}

SolverKind parse_solver_kind(const std::string& text) {
  if (text == "full_fem") return SolverKind::full_fem;
  if (text == "reduced_fem") return SolverKind::reduced_fem;
  if (text == "rb") return SolverKind::rb;
  throw ConfigError("unknown solver '" + text + "' (expected full_fem, reduced_fem or rb)");
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  try {
    box.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  require(degree_x >= 2 && degree_y >= 1, "lattice degrees must be at least 2 (x1) and 1 (x2)");
  require(!movable.empty(), "at least one movable control point is required");
  for (int l : movable) require(l > 0 && l < degree_x, "movable index " + std::to_string(l) + " must be an interior lattice column");
  require(std::set<int>(movable.begin(), movable.end()).size() == movable.size(), "movable indices must be distinct");
  require(mu_min < mu_max, "mu_min must be below mu_max");
  require(nx >= 1 && ny >= 1, "nx and ny must be positive");
  require(quadrature_degree == 4 || quadrature_degree == 5, "quadrature degree must be 4 or 5");
  require(physics.nu > 0.0 && std::isfinite(physics.nu), "viscosity must be positive");
  require(physics.K > 0.0 && std::isfinite(physics.K), "spring constant K must be positive");
  require(std::isfinite(physics.v0) && physics.force.allFinite(), "inflow speed and force must be finite");
  require(eim.tolerance > 0.0, "eim tolerance must be positive");
  require(eim.max_terms >= 1, "eim max_terms must be positive");
  require(eim.train_size >= 1, "eim train_size must be positive");
  require(rb.tolerance > 0.0, "rb tolerance must be positive");
  require(rb.max_basis >= 1, "rb max_basis must be positive");
  require(rb.train_size >= 1, "rb train_size must be positive");
  require(coupling.tolerance > 0.0, "coupling tolerance must be positive");
  require(coupling.max_iterations >= 1, "coupling max_iterations must be positive");
  require(coupling.relaxation > 0.0 && coupling.relaxation <= 1.0, "relaxation must lie in (0, 1]");
  require(!output_dir.empty(), "output directory must be set");
}

void RunConfig::set_base_seed(std::uint64_t seed) {
  eim.seed = seed;
  rb.seed = seed + 1;
  rb.test_seed = seed + 2;
  bench_seed = seed + 3;
}

FfdLattice RunConfig::lattice() const { return FfdLattice::top_row(box, degree_x, degree_y, movable); }

ParameterDomain RunConfig::domain() const { return ParameterDomain(movable.size(), mu_min, mu_max); }

namespace {

using boost::property_tree::ptree;

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      throw ConfigError("malformed integer list '" + text + "'");
    }
    if (item.find_first_not_of(" \t", used) != std::string::npos) throw ConfigError("malformed integer list '" + text + "'");
    out.push_back(v);
  }
  return out;
}

// Reads every key of a section through typed setters, rejecting unknown keys.
class SectionReader {
 public:
  SectionReader(const ptree& root, std::string section) : section_(std::move(section)) {
    if (auto child = root.get_child_optional(section_)) tree_ = *child;
  }

  template <class T>
  SectionReader& read(const std::string& key, T& target) {
    known_.insert(key);
    if (auto v = tree_.get_optional<std::string>(key)) {
      if (!tree_.get_optional<T>(key)) throw ConfigError("[" + section_ + "] " + key + " = '" + *v + "' is not a valid value");
      target = *tree_.get_optional<T>(key);
    }
    return *this;
  }

  SectionReader& read_string(const std::string& key, std::string& target) {
    known_.insert(key);
    if (auto v = tree_.get_optional<std::string>(key)) target = *v;
    return *this;
  }

  void finish() const {
    for (const auto& [key, value] : tree_) {
      if (!known_.count(key)) throw ConfigError("unknown key [" + section_ + "] " + key);
    }
  }

 private:
  std::string section_;
  ptree tree_;
  std::set<std::string> known_;
};

}  // namespace

RunConfig parse_config(std::istream& is) {
  ptree root;
  try {
    boost::property_tree::ini_parser::read_ini(is, root);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  static const std::set<std::string> sections{"geometry", "mesh", "physics", "eim", "rb", "coupling", "bench", "output"};
  for (const auto& [name, child] : root) {
    if (!sections.count(name)) throw ConfigError("unknown config section [" + name + "]");
  }

  RunConfig c;
  std::string movable, solver = std::string(to_string(c.coupling_solver)), out = c.output_dir.string();
  SectionReader(root, "geometry")
      .read("x1_min", c.box.x1_min)
      .read("x1_max", c.box.x1_max)
      .read("x2_min", c.box.x2_min)
      .read("x2_max", c.box.x2_max)
      .read("degree_x", c.degree_x)
      .read("degree_y", c.degree_y)
      .read_string("movable", movable)
      .read("mu_min", c.mu_min)
      .read("mu_max", c.mu_max)
      .finish();
  if (!movable.empty()) c.movable = parse_int_list(movable);
  SectionReader(root, "mesh").read("nx", c.nx).read("ny", c.ny).read("quadrature_degree", c.quadrature_degree).finish();
  SectionReader(root, "physics")
      .read("nu", c.physics.nu)
      .read("v0", c.physics.v0)
      .read("K", c.physics.K)
      .read("f1", c.physics.force[0])
      .read("f2", c.physics.force[1])
      .finish();
  SectionReader(root, "eim")
      .read("tolerance", c.eim.tolerance)
      .read("max_terms", c.eim.max_terms)
      .read("train_size", c.eim.train_size)
      .read("seed", c.eim.seed)
      .finish();
  SectionReader(root, "rb")
      .read("max_basis", c.rb.max_basis)
      .read("tolerance", c.rb.tolerance)
      .read("train_size", c.rb.train_size)
      .read("seed", c.rb.seed)
      .read("true_error", c.rb.true_error)
      .read("test_size", c.rb.test_size)
      .read("test_seed", c.rb.test_seed)
      .finish();
  SectionReader(root, "coupling")
      .read("tolerance", c.coupling.tolerance)
      .read("max_iterations", c.coupling.max_iterations)
      .read("relaxation", c.coupling.relaxation)
      .read_string("solver", solver)
      .finish();
  c.coupling_solver = parse_solver_kind(solver);
  SectionReader(root, "bench").read("seed", c.bench_seed).finish();
  SectionReader(root, "output").read_string("dir", out).finish();
  c.output_dir = out;
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  return parse_config(in);
}

void write_config(std::ostream& os, const RunConfig& c) {
  os << std::setprecision(17);
  os << "[geometry]\nx1_min = " << c.box.x1_min << "\nx1_max = " << c.box.x1_max << "\nx2_min = " << c.box.x2_min
     << "\nx2_max = " << c.box.x2_max << "\ndegree_x = " << c.degree_x << "\ndegree_y = " << c.degree_y << "\nmovable = ";
  for (std::size_t i = 0; i < c.movable.size(); ++i) os << (i ? "," : "") << c.movable[i];
  os << "\nmu_min = " << c.mu_min << "\nmu_max = " << c.mu_max << "\n\n";
  os << "[mesh]\nnx = " << c.nx << "\nny = " << c.ny << "\nquadrature_degree = " << c.quadrature_degree << "\n\n";
  os << "[physics]\nnu = " << c.physics.nu << "\nv0 = " << c.physics.v0 << "\nK = " << c.physics.K
     << "\nf1 = " << c.physics.force[0] << "\nf2 = " << c.physics.force[1] << "\n\n";
  os << "[eim]\ntolerance = " << c.eim.tolerance << "\nmax_terms = " << c.eim.max_terms
     << "\ntrain_size = " << c.eim.train_size << "\nseed = " << c.eim.seed << "\n\n";
  os << "[rb]\nmax_basis = " << c.rb.max_basis << "\ntolerance = " << c.rb.tolerance << "\ntrain_size = " << c.rb.train_size
     << "\nseed = " << c.rb.seed << "\ntrue_error = " << (c.rb.true_error ? "true" : "false")
     << "\ntest_size = " << c.rb.test_size << "\ntest_seed = " << c.rb.test_seed << "\n\n";
  os << "[coupling]\ntolerance = " << c.coupling.tolerance << "\nmax_iterations = " << c.coupling.max_iterations
     << "\nrelaxation = " << c.coupling.relaxation << "\nsolver = " << to_string(c.coupling_solver) << "\n\n";
  os << "[bench]\nseed = " << c.bench_seed << "\n\n";
  os << "[output]\ndir = " << c.output_dir.string() << "\n";
}

}  // namespace fsirb
