#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "fsirb/reduced_basis.hpp"

namespace fsirb {

// Container layout: 8-byte magic, u32 version, u64 metadata length, JSON
// metadata, then the arrays listed in metadata["arrays"] as raw
// little-endian doubles, column-major, in that order.
inline constexpr std::uint32_t kArtifactVersion = 1;

class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `context` is stored verbatim under "context" (mesh size, mask, ...), so
/// a loader can refuse artifacts built for a different discretization.
void save_tensor_eim(std::ostream& os, const TensorEim& eim, const nlohmann::json& context = nlohmann::json::object());
TensorEim load_tensor_eim(std::istream& is, const FfdLattice& lattice, nlohmann::json* context = nullptr);

void save_reduced_model(std::ostream& os, const ReducedModel& rb, const nlohmann::json& context = nlohmann::json::object());
ReducedModel load_reduced_model(std::istream& is, nlohmann::json* context = nullptr);

}  // namespace fsirb
