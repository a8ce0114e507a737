#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ecg12r/tensor.hpp"

namespace ecg12r::ad {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Flat little-endian container:
///   u64 count
///   per tensor: u32 name_len, name bytes, u32 rank, u64 dims[rank], f64 data[prod(dims)]
std::vector<std::uint8_t> encode_tensors(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_tensors(const std::vector<std::uint8_t>& bytes);

void save_tensors(const std::vector<NamedTensor>& tensors, const std::filesystem::path& path);
std::vector<NamedTensor> load_tensors(const std::filesystem::path& path);

}  // namespace ecg12r::ad
