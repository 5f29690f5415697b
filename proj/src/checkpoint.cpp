#include "ninconv/checkpoint.hpp"

#include <bit>
#include <fmt/format.h>
#include <fstream>
#include <iterator>
#include <map>

#include "ninconv/error.hpp"

namespace ninconv {
namespace {

constexpr std::uint8_t kMagic[4] = {'N', 'I', 'N', 'C'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
  }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void text(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }

  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    if (in_.size() - pos_ < n) {
      throw Error(fmt::format("checkpoint truncated at byte {} reading {}", pos_, what));
    }
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint64_t uint(int bytes, const char* what) {
    auto s = take(static_cast<std::size_t>(bytes), what);
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(s[i]) << (8 * i);
    return v;
  }
  std::string text(const char* what) {
    const auto n = uint(4, what);
    auto s = take(n, what);
    return std::string(s.begin(), s.end());
  }
  bool done() const { return pos_ == in_.size(); }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const CheckpointFile& file) {
  Writer w;
  w.bytes(kMagic, 4);
  w.u16(kCheckpointVersion);
  w.text(file.metadata);
  w.u32(static_cast<std::uint32_t>(file.tensors.size()));
  for (const NamedTensor& t : file.tensors) {
    w.text(t.name);
    const Shape& s = t.value.shape();
    for (int d : {s.n, s.c, s.h, s.w}) w.u32(static_cast<std::uint32_t>(d));
    for (double v : t.value.data()) w.u64(std::bit_cast<std::uint64_t>(v));
  }
  return std::move(w.out);
}

CheckpointFile decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  auto magic = r.take(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), kMagic)) {
    throw Error("not a checkpoint (bad magic)");
  }
  const auto version = r.uint(2, "version");
  if (version != kCheckpointVersion) {
    throw Error(fmt::format("checkpoint version {} unsupported (expected {})", version,
                            kCheckpointVersion));
  }
  CheckpointFile file;
  file.metadata = r.text("metadata");
  const auto count = r.uint(4, "tensor count");
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.text("tensor name");
    Shape s;
    s.n = static_cast<int>(r.uint(4, "shape"));
    s.c = static_cast<int>(r.uint(4, "shape"));
    s.h = static_cast<int>(r.uint(4, "shape"));
    s.w = static_cast<int>(r.uint(4, "shape"));
    validate_shape(s);
    std::vector<double> values(s.numel());
    for (double& v : values) v = std::bit_cast<double>(r.uint(8, "tensor data"));
    t.value = Tensor(s, std::move(values));
    file.tensors.push_back(std::move(t));
  }
  if (!r.done()) throw Error(fmt::format("trailing bytes after checkpoint at {}", r.pos()));
  return file;
}

void save_checkpoint(const CheckpointFile& file, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(file);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(fmt::format("write failed for '{}'", path.string()));
}

CheckpointFile load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open checkpoint '{}'", path.string()));
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_checkpoint(bytes);
  } catch (const Error& e) {
    throw Error(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::vector<NamedTensor> export_parameters(const ParameterStore& params) {
  std::vector<NamedTensor> out;
  for (const ParamGroup& g : params.groups()) {
    out.push_back({g.name + ".weight", g.conv.kernel});
    out.push_back({g.name + ".bias",
                   Tensor(Shape{static_cast<int>(g.conv.bias.size()), 1, 1, 1}, g.conv.bias)});
  }
  return out;
}

void import_parameters(ParameterStore& params, std::span<const NamedTensor> tensors) {
  std::map<std::string, const Tensor*> by_name;
  for (const NamedTensor& t : tensors) by_name[t.name] = &t.value;
  auto find = [&](const std::string& name, const Shape& expected) -> const Tensor& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw Error(fmt::format("checkpoint lacks '{}'", name));
    if (!(it->second->shape() == expected)) {
      throw Error(fmt::format("checkpoint '{}' has shape {}, expected {}", name,
                              it->second->shape().str(), expected.str()));
    }
    return *it->second;
  };
  for (ParamGroup& g : params.groups()) {
    g.conv.kernel = find(g.name + ".weight", g.conv.kernel.shape());
    const Tensor& b =
        find(g.name + ".bias", Shape{static_cast<int>(g.conv.bias.size()), 1, 1, 1});
    g.conv.bias.assign(b.data().begin(), b.data().end());
  }
}

}  // namespace ninconv
