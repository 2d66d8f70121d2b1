#pragma once

#include <string>

#include "histosr/unet.hpp"

namespace histosr {

// Weights file layout, bit-exact across platforms:
//   bytes 0..3   magic "PSRW"
//   bytes 4..7   format version, u32 little-endian (currently 1)
//   bytes 8..11  header length, u32 little-endian
//   header       UTF-8 JSON: {"config": {...}, "layers": [{"name", "shape"}...]}
//   data         each tensor's raw 32-bit little-endian floats, in manifest
//                order; every kernel contributes <name>.w then <name>.b
// Loading validates magic, version, config, and every manifest shape against
// the config before reading a single float; any mismatch raises FormatError
// with the byte offset and no partial model escapes.
void save_weights(const ModelWeights& w, const std::string& path);
ModelWeights load_weights(const std::string& path);

}  // namespace histosr
