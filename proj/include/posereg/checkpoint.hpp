#pragma once

#include <string>

#include "posereg/model.hpp"

namespace posereg {

/// Model checkpoints reuse the versioned tensor container: a "meta" tensor
/// describing the architecture plus one flat float64 "params" tensor.
void save_checkpoint(const std::string& path, const TinyModel& model);
TinyModel load_checkpoint(const std::string& path);

} // namespace posereg
