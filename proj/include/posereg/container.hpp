#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "posereg/errors.hpp"

namespace posereg {

/// One named tensor inside a dump file. Values are held as doubles in memory;
/// `dtype` selects the on-disk encoding (0 = float32, 1 = float64), both
/// little endian.
struct NamedTensor {
    std::string name;
    std::vector<int64_t> dims;
    std::vector<double> data;
    uint8_t dtype = 0;

    size_t element_count() const {
        size_t n = 1;
        for (int64_t d : dims) n *= static_cast<size_t>(d);
        return n;
    }
};

/// Binary container: magic "PRTC", u32 version, u32 tensor count, then per
/// tensor: u32 name length + bytes, u8 dtype, u32 rank, u32 dims, payload.
void write_tensor_file(const std::string& path, std::span<const NamedTensor> tensors);
std::vector<NamedTensor> read_tensor_file(const std::string& path);

/// Lookup helper; throws MissingField when the name is absent.
const NamedTensor& find_tensor(std::span<const NamedTensor> tensors, const std::string& name);

} // namespace posereg
