#include "haze/checkpoint.hpp"

#include <cstring>

#include "haze/image_io.hpp"

namespace haze::data {

namespace {

constexpr char kMagic[4] = {'H', 'A', 'Z', 'E'};

template <class T>
void put(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

template <class T>
T get(const std::vector<std::uint8_t>& in, std::size_t& at) {
  if (at + sizeof(T) > in.size())
    throw FormatError("checkpoint: truncated", static_cast<long long>(at));
  T v;
  std::memcpy(&v, in.data() + at, sizeof(T));
  at += sizeof(T);
  return v;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void Checkpoint::add(const std::string& name, const Tensor& t) {
  if (find(name)) throw UsageError("checkpoint: duplicate tensor name '" + name + "'");
  tensors.emplace_back(name, t);
}

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  for (std::size_t i = 0; i < ckpt.tensors.size(); ++i)
    for (std::size_t j = i + 1; j < ckpt.tensors.size(); ++j)
      if (ckpt.tensors[i].first == ckpt.tensors[j].first)
        throw UsageError("checkpoint: duplicate tensor name '" + ckpt.tensors[i].first + "'");

  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put<std::uint32_t>(out, Checkpoint::kVersion);
  put<std::int64_t>(out, ckpt.epoch);
  put<std::int32_t>(out, ckpt.phase);
  put<std::uint64_t>(out, ckpt.seed);
  put<std::uint64_t>(out, ckpt.config_digest);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape().size()));
    for (int e : t.shape()) put<std::uint32_t>(out, static_cast<std::uint32_t>(e));
    std::size_t bytes = t.data().size() * sizeof(double);
    std::size_t off = out.size();
    out.resize(off + bytes);
    std::memcpy(out.data() + off, t.data().data(), bytes);
  }
  write_file(path, out.data(), out.size());
}

Checkpoint load_checkpoint(const std::string& path) {
  std::vector<std::uint8_t> in = read_file(path);
  std::size_t at = 0;
  if (in.size() < 4 || std::memcmp(in.data(), kMagic, 4) != 0)
    throw FormatError("checkpoint: bad magic", 0);
  at = 4;
  auto version = get<std::uint32_t>(in, at);
  if (version != Checkpoint::kVersion)
    throw FormatError("checkpoint: unsupported version " + std::to_string(version), 4);
  Checkpoint ckpt;
  ckpt.epoch = get<std::int64_t>(in, at);
  ckpt.phase = get<std::int32_t>(in, at);
  ckpt.seed = get<std::uint64_t>(in, at);
  ckpt.config_digest = get<std::uint64_t>(in, at);
  auto count = get<std::uint32_t>(in, at);
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name_len = get<std::uint32_t>(in, at);
    if (at + name_len > in.size())
      throw FormatError("checkpoint: truncated name", static_cast<long long>(at));
    std::string name(reinterpret_cast<const char*>(in.data() + at), name_len);
    at += name_len;
    auto rank = get<std::uint32_t>(in, at);
    if (rank > 8) throw FormatError("checkpoint: implausible rank", static_cast<long long>(at));
    Shape shape;
    std::int64_t numel = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      auto e = get<std::uint32_t>(in, at);
      shape.push_back(static_cast<int>(e));
      numel *= e;
    }
    if (numel < 0 || at + static_cast<std::size_t>(numel) * sizeof(double) > in.size())
      throw FormatError("checkpoint: truncated tensor data", static_cast<long long>(at));
    std::vector<double> data(static_cast<std::size_t>(numel));
    std::memcpy(data.data(), in.data() + at, data.size() * sizeof(double));
    at += data.size() * sizeof(double);
    ckpt.add(name, Tensor::from_data(std::move(shape), std::move(data)));
  }
  return ckpt;
}

}  // namespace haze::data
