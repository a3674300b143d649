#pragma once

#include <optional>
#include <string>

#include "hkt/fields.hpp"

// HKTG field dump format. Layout, all little-endian:
//   bytes "HKTG", u32 version (= 1), u32 n, 4n x u32 axis sizes,
//   then float64 payload in row-major axis order. A scalar field stores one
//   value per point; a matrix field stores per point the 2n x 2n complex
//   matrix row-major with each entry as (re, im). The payload length decides
//   which of the two a file holds.

namespace hkt {

void write_scalar_hktg(const std::string& path, const ScalarField& field);
void write_herm_hktg(const std::string& path, const HermField& field);

struct HktgData {
  std::optional<ScalarField> scalar;
  std::optional<HermField> herm;
};

/// Throws ConfigError on a missing file, bad magic, unsupported version or a
/// payload that is neither scalar- nor matrix-sized.
HktgData read_hktg(const std::string& path);

}  // namespace hkt
