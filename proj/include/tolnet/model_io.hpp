#pragma once

#include <map>
#include <string>

#include "tolnet/network.hpp"

namespace tolnet {

// Versioned binary model file: magic "TNMF", format version, a JSON header
// describing the architecture and provenance, then raw little-endian 64-bit
// parameter blobs in layer order. Round-tripping preserves forward outputs
// bit for bit.
inline constexpr uint32_t kModelFormatVersion = 1;

using Provenance = std::map<std::string, std::string>;

void save_model(const std::string& path, const Network& net, const Provenance& provenance);

struct LoadedModel {
  Network net;
  Provenance provenance;
  uint32_t version = 0;
};

LoadedModel load_model(const std::string& path);

}  // namespace tolnet
