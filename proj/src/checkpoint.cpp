#include "fdt/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

namespace fdt {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : bytes_(b) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  void raw(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw CheckpointError(CheckpointError::Kind::Truncated, "checkpoint is truncated");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedTensor>& tensors) {
  std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (int d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    const auto* p = reinterpret_cast<const std::uint8_t*>(t.data());
    out.insert(out.end(), p, p + t.size() * sizeof(float));
  }
  return out;
}

std::vector<NamedTensor> decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader in(bytes);
  char magic[4];
  in.raw(magic, 4);
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw CheckpointError(CheckpointError::Kind::BadMagic, "not a checkpoint file (bad magic)");
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion)
    throw CheckpointError(CheckpointError::Kind::VersionMismatch,
                          "checkpoint version " + std::to_string(version) + " unsupported (expected " +
                              std::to_string(kCheckpointVersion) + ")");
  const std::uint32_t count = in.u32();
  std::vector<NamedTensor> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor nt;
    nt.name.resize(in.u32());
    in.raw(nt.name.data(), nt.name.size());
    std::vector<int> shape(in.u32());
    std::size_t n = 1;
    for (int& d : shape) {
      d = static_cast<int>(in.u32());
      n *= static_cast<std::size_t>(d);
    }
    std::vector<float> values(n);
    in.raw(values.data(), n * sizeof(float));
    nt.tensor = Tensor<float>(std::move(shape), std::move(values));
    out.push_back(std::move(nt));
  }
  if (!in.done()) throw CheckpointError(CheckpointError::Kind::Truncated, "trailing bytes after last tensor");
  return out;
}

template <typename T>
std::vector<std::uint8_t> serialize_network(const Network<T>& net) {
  std::vector<NamedTensor> tensors;
  for (const Param<T>* p : net.named_params()) tensors.push_back({p->name, p->value.template cast<float>()});
  return encode_checkpoint(tensors);
}

template <typename T>
Network<T> deserialize_network(const std::vector<std::uint8_t>& bytes, NetworkSpec spec) {
  std::map<std::string, Tensor<float>> by_name;
  for (auto& nt : decode_checkpoint(bytes)) by_name[nt.name] = std::move(nt.tensor);
  int branches = 0;
  while (by_name.count("head." + std::to_string(branches) + ".weight")) ++branches;
  if (branches == 0) throw CheckpointError(CheckpointError::Kind::MissingTensor, "missing tensor 'head.0.weight'");
  spec.head_branches = branches;
  Network<T> net(std::move(spec));
  std::size_t used = 0;
  for (Param<T>* p : net.all_params()) {
    auto it = by_name.find(p->name);
    if (it == by_name.end())
      throw CheckpointError(CheckpointError::Kind::MissingTensor, "missing tensor '" + p->name + "'");
    if (it->second.shape() != p->value.shape())
      throw CheckpointError(CheckpointError::Kind::ShapeMismatch,
                            "tensor '" + p->name + "' has shape " + it->second.shape_str() + ", network expects " +
                                p->value.shape_str());
    p->value = it->second.template cast<T>();
    ++used;
  }
  if (used != by_name.size()) {
    for (const Param<T>* p : net.named_params()) by_name.erase(p->name);
    throw CheckpointError(CheckpointError::Kind::ShapeMismatch,
                          "layout mismatch: checkpoint holds tensor '" + by_name.begin()->first + "' unknown to this network");
  }
  return net;
}

template <typename T>
void save_checkpoint(const Network<T>& net, const std::filesystem::path& path) {
  const auto bytes = serialize_network(net);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError(CheckpointError::Kind::Io, "cannot write checkpoint " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw CheckpointError(CheckpointError::Kind::Io, "failed writing checkpoint " + path.string());
}

template <typename T>
Network<T> load_checkpoint(const std::filesystem::path& path, NetworkSpec spec) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError(CheckpointError::Kind::Io, "cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize_network<T>(bytes, std::move(spec));
}

template std::vector<std::uint8_t> serialize_network(const Network<float>&);
template std::vector<std::uint8_t> serialize_network(const Network<double>&);
template Network<float> deserialize_network(const std::vector<std::uint8_t>&, NetworkSpec);
template Network<double> deserialize_network(const std::vector<std::uint8_t>&, NetworkSpec);
template void save_checkpoint(const Network<float>&, const std::filesystem::path&);
template void save_checkpoint(const Network<double>&, const std::filesystem::path&);
template Network<float> load_checkpoint(const std::filesystem::path&, NetworkSpec);
template Network<double> load_checkpoint(const std::filesystem::path&, NetworkSpec);

}  // namespace fdt
