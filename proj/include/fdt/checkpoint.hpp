#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "fdt/network.hpp"

namespace fdt {

/// Little-endian binary layout:
///   magic "FDTK" | u32 version | u32 tensor count |
///   per tensor: u32 name length, name bytes, u32 rank, u32 dims[rank], f32 values[]
inline constexpr char kCheckpointMagic[4] = {'F', 'D', 'T', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { Io, BadMagic, VersionMismatch, MissingTensor, ShapeMismatch, Truncated };

  CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct NamedTensor {
  std::string name;
  Tensor<float> tensor;
};

std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_checkpoint(const std::vector<std::uint8_t>& bytes);

template <typename T>
std::vector<std::uint8_t> serialize_network(const Network<T>& net);

/// Builds a network for `spec` and fills it from the bytes. The head branch
/// count is taken from the checkpoint.
template <typename T>
Network<T> deserialize_network(const std::vector<std::uint8_t>& bytes, NetworkSpec spec);

template <typename T>
void save_checkpoint(const Network<T>& net, const std::filesystem::path& path);

template <typename T>
Network<T> load_checkpoint(const std::filesystem::path& path, NetworkSpec spec);

}  // namespace fdt
