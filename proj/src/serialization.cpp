#include "fsirb/serialization.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>

namespace fsirb {

static_assert(std::endian::native == std::endian::little, "artifact arrays are stored little-endian");

namespace {

constexpr char kMagic[8] = {'F', 'S', 'I', 'R', 'B', 'A', 'R', 'T'};

using json = nlohmann::json;

struct Container {
  json meta;
  std::vector<std::pair<std::string, Eigen::MatrixXd>> arrays;

  void add(std::string name, Eigen::MatrixXd m) { arrays.emplace_back(std::move(name), std::move(m)); }
  void add(std::string name, const Eigen::VectorXd& v) { arrays.emplace_back(std::move(name), Eigen::MatrixXd(v)); }

  const Eigen::MatrixXd& get(const std::string& name) const {
    for (const auto& [n, m] : arrays)
      if (n == name) return m;
    throw ArtifactError("artifact is missing array '" + name + "'");
  }
};

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T take(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw ArtifactError("artifact is truncated");
  return v;
}

void write_container(std::ostream& os, const std::string& kind, Container c) {
  c.meta["kind"] = kind;
  json list = json::array();
  for (const auto& [name, m] : c.arrays) list.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  c.meta["arrays"] = list;
  const std::string text = c.meta.dump();
  os.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(os, kArtifactVersion);
  put<std::uint64_t>(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, m] : c.arrays) {
    os.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  }
  if (!os) throw ArtifactError("failed writing artifact");
}

Container read_container(std::istream& is, const std::string& kind) {
  char magic[sizeof kMagic];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) throw ArtifactError("not an fsirb artifact");
  const auto version = take<std::uint32_t>(is);
  if (version != kArtifactVersion) {
    throw ArtifactError("artifact version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kArtifactVersion) + ")");
  }
  const auto length = take<std::uint64_t>(is);
  std::string text(length, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(length))) throw ArtifactError("artifact is truncated");
  Container c;
  try {
    c.meta = json::parse(text);
  } catch (const json::exception& e) {
    throw ArtifactError(std::string("artifact metadata is corrupt: ") + e.what());
  }
  if (c.meta.value("kind", "") != kind) throw ArtifactError("artifact holds '" + c.meta.value("kind", "") + "', expected '" + kind + "'");
  for (const auto& a : c.meta.at("arrays")) {
    Eigen::MatrixXd m(a.at("rows").get<Eigen::Index>(), a.at("cols").get<Eigen::Index>());
    if (!is.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)))) {
      throw ArtifactError("artifact is truncated");
    }
    c.arrays.emplace_back(a.at("name").get<std::string>(), std::move(m));
  }
  return c;
}

Eigen::MatrixXd parameters_matrix(const std::vector<ParameterVector>& mus, std::size_t dim) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(mus.size()));
  for (std::size_t j = 0; j < mus.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = mus[j].values();
  return m;
}

}  // namespace

void save_tensor_eim(std::ostream& os, const TensorEim& eim, const json& context) {
  Container c;
  const auto& o = eim.options();
  c.meta["context"] = context;
  c.meta["training"] = {{"tolerance", o.tolerance}, {"max_terms", o.max_terms}, {"train_size", o.train_size}, {"seed", o.seed}};
  json entries = json::array();
  for (std::size_t e = 0; e < kTensorEntries; ++e) {
    const auto& b = eim.bases()[e];
    const std::string name(to_string(static_cast<TensorEntry>(e)));
    entries.push_back({{"name", name},
                       {"magic", b.magic},
                       {"tolerance", b.tolerance},
                       {"converged", b.converged},
                       {"achieved_error", b.training_error()}});
    c.add(name + ".functions", b.functions);
    Eigen::MatrixXd points(2, static_cast<Eigen::Index>(b.magic_points.size()));
    for (std::size_t i = 0; i < b.magic_points.size(); ++i) points.col(static_cast<Eigen::Index>(i)) = b.magic_points[i];
    c.add(name + ".magic_points", points);
    c.add(name + ".interpolation", b.interpolation);
    c.add(name + ".error_history",
          Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(b.error_history.data(), static_cast<Eigen::Index>(b.error_history.size()))));
  }
  c.meta["entries"] = entries;
  write_container(os, "tensor_eim", std::move(c));
}

TensorEim load_tensor_eim(std::istream& is, const FfdLattice& lattice, json* context) {
  const Container c = read_container(is, "tensor_eim");
  EimOptions o;
  const auto& t = c.meta.at("training");
  o.tolerance = t.at("tolerance").get<double>();
  o.max_terms = t.at("max_terms").get<int>();
  o.train_size = t.at("train_size").get<std::size_t>();
  o.seed = t.at("seed").get<std::uint64_t>();
  const auto& entries = c.meta.at("entries");
  if (entries.size() != kTensorEntries) throw ArtifactError("EIM artifact must hold nine tensor entries");
  std::array<EimBasis, kTensorEntries> bases;
  for (std::size_t e = 0; e < kTensorEntries; ++e) {
    const auto& j = entries[e];
    const std::string name = j.at("name").get<std::string>();
    if (name != to_string(static_cast<TensorEntry>(e))) throw ArtifactError("EIM artifact entries out of order");
    auto& b = bases[e];
    b.magic = j.at("magic").get<std::vector<int>>();
    b.tolerance = j.at("tolerance").get<double>();
    b.converged = j.at("converged").get<bool>();
    b.functions = c.get(name + ".functions");
    b.interpolation = c.get(name + ".interpolation");
    const Eigen::MatrixXd& pts = c.get(name + ".magic_points");
    for (Eigen::Index i = 0; i < pts.cols(); ++i) b.magic_points.emplace_back(pts(0, i), pts(1, i));
    const Eigen::MatrixXd& h = c.get(name + ".error_history");
    b.error_history.assign(h.data(), h.data() + h.size());
    if (b.functions.cols() != static_cast<Eigen::Index>(b.magic.size())) throw ArtifactError("EIM artifact is inconsistent");
  }
  if (context) *context = c.meta.value("context", json::object());
  return TensorEim(std::move(bases), lattice, o);
}

struct ReducedModelAccess {
  static void save(std::ostream& os, const ReducedModel& rb, const json& context) {
    Container c;
    const auto& o = rb.options_;
    c.meta["context"] = context;
    c.meta["build"] = {{"max_basis", o.max_basis}, {"tolerance", o.tolerance}, {"train_size", o.train_size},
                       {"seed", o.seed}, {"true_error", o.true_error}, {"test_size", o.test_size},
                       {"test_seed", o.test_seed}};
    c.meta["velocity_offsets"] = rb.velocity_offsets_;
    c.meta["pressure_offsets"] = rb.pressure_offsets_;
    json hist = json::array();
    for (const auto& r : rb.history_) hist.push_back({{"n", r.n}, {"picked", r.picked}});
    c.meta["history"] = hist;
    c.meta["terms"] = {{"a", rb.a_red_.size()}, {"b", rb.b_red_.size()}, {"f", rb.f_red_.size()}};
    const std::size_t dim = rb.snapshots_.empty() ? 0 : rb.snapshots_.front().size();
    c.add("snapshots", parameters_matrix(rb.snapshots_, dim));
    Eigen::MatrixXd errors(2, static_cast<Eigen::Index>(rb.history_.size()));
    for (std::size_t i = 0; i < rb.history_.size(); ++i) {
      errors(0, static_cast<Eigen::Index>(i)) = rb.history_[i].max_train_residual;
      errors(1, static_cast<Eigen::Index>(i)) = rb.history_[i].max_test_error;
    }
    c.add("history_errors", errors);
    c.add("velocity_basis", rb.velocity_basis_);
    c.add("pressure_basis", rb.pressure_basis_);
    c.add("snapshot_coords", rb.snapshot_coords_);
    for (std::size_t q = 0; q < rb.a_red_.size(); ++q) {
      c.add("a." + std::to_string(q), rb.a_red_[q]);
      c.add("a_lift." + std::to_string(q), rb.a_lift_red_[q]);
    }
    for (std::size_t q = 0; q < rb.b_red_.size(); ++q) {
      c.add("b." + std::to_string(q), rb.b_red_[q]);
      c.add("b_lift." + std::to_string(q), rb.b_lift_red_[q]);
    }
    for (std::size_t q = 0; q < rb.f_red_.size(); ++q) c.add("f." + std::to_string(q), rb.f_red_[q]);
    write_container(os, "reduced_model", std::move(c));
  }

  static ReducedModel load(std::istream& is, json* context) {
    const Container c = read_container(is, "reduced_model");
    ReducedModel rb;
    const auto& b = c.meta.at("build");
    rb.options_.max_basis = b.at("max_basis").get<int>();
    rb.options_.tolerance = b.at("tolerance").get<double>();
    rb.options_.train_size = b.at("train_size").get<std::size_t>();
    rb.options_.seed = b.at("seed").get<std::uint64_t>();
    rb.options_.true_error = b.at("true_error").get<bool>();
    rb.options_.test_size = b.at("test_size").get<std::size_t>();
    rb.options_.test_seed = b.at("test_seed").get<std::uint64_t>();
    rb.velocity_offsets_ = c.meta.at("velocity_offsets").get<std::vector<Eigen::Index>>();
    rb.pressure_offsets_ = c.meta.at("pressure_offsets").get<std::vector<Eigen::Index>>();
    const Eigen::MatrixXd& snaps = c.get("snapshots");
    for (Eigen::Index j = 0; j < snaps.cols(); ++j) rb.snapshots_.emplace_back(snaps.col(j));
    const Eigen::MatrixXd& errors = c.get("history_errors");
    const auto& hist = c.meta.at("history");
    if (static_cast<Eigen::Index>(hist.size()) != errors.cols()) throw ArtifactError("reduced model history is inconsistent");
    for (std::size_t i = 0; i < hist.size(); ++i) {
      rb.history_.push_back({hist[i].at("n").get<int>(), errors(0, static_cast<Eigen::Index>(i)),
                             errors(1, static_cast<Eigen::Index>(i)), hist[i].at("picked").get<std::size_t>()});
    }
    rb.velocity_basis_ = c.get("velocity_basis");
    rb.pressure_basis_ = c.get("pressure_basis");
    rb.snapshot_coords_ = c.get("snapshot_coords");
    const auto& terms = c.meta.at("terms");
    for (std::size_t q = 0; q < terms.at("a").get<std::size_t>(); ++q) {
      rb.a_red_.push_back(c.get("a." + std::to_string(q)));
      rb.a_lift_red_.emplace_back(c.get("a_lift." + std::to_string(q)));
    }
    for (std::size_t q = 0; q < terms.at("b").get<std::size_t>(); ++q) {
      rb.b_red_.push_back(c.get("b." + std::to_string(q)));
      rb.b_lift_red_.emplace_back(c.get("b_lift." + std::to_string(q)));
    }
    for (std::size_t q = 0; q < terms.at("f").get<std::size_t>(); ++q) rb.f_red_.emplace_back(c.get("f." + std::to_string(q)));
    if (rb.snapshots_.size() != rb.velocity_offsets_.size() || rb.snapshots_.size() != rb.pressure_offsets_.size()) {
      throw ArtifactError("reduced model offsets are inconsistent");
    }
    if (context) *context = c.meta.value("context", json::object());
    return rb;
  }
};

void save_reduced_model(std::ostream& os, const ReducedModel& rb, const json& context) {
  ReducedModelAccess::save(os, rb, context);
}

ReducedModel load_reduced_model(std::istream& is, json* context) { return ReducedModelAccess::load(is, context); }

}  // namespace fsirb
