// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "radtrack/tensor.hpp"

#include <string>
#include <vector>

namespace radtrack {

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

/// Binary checkpoint of named float64 arrays.
///
/// Layout: magic "RTRKCKPT" (8 bytes), u32 version = 1, u64 entry count,
/// then per entry: u32 name length, name bytes, u32 rank, u64 extents,
/// raw little-endian float64 data in row-major order.
void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& entries);
std::vector<NamedTensor> load_checkpoint(const std::string& path);

} // namespace radtrack
