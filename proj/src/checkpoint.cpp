#include "swincap/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <limits>

#include "swincap/common.hpp"

namespace swincap {

namespace {

constexpr char kMagic[7] = {'S', 'W', 'C', 'A', 'P', '1', '\0'};

void put_u32(std::ostream& os, u64 v) {
  if (v > 0xffffffffULL) throw IoError("checkpoint field overflows u32");
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, u64 v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

u64 get_u32(std::istream& is, const char* what) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw IoError(std::string("checkpoint truncated reading ") + what);
  u64 v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<u64>(b[i]) << (8 * i);
  return v;
}

u64 get_u64(std::istream& is, const char* what) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw IoError(std::string("checkpoint truncated reading ") + what);
  u64 v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<u64>(b[i]) << (8 * i);
  return v;
}

std::string get_str(std::istream& is, u64 len, const char* what) {
  std::string s(len, '\0');
  is.read(s.data(), static_cast<std::streamsize>(len));
  if (!is) throw IoError(std::string("checkpoint truncated reading ") + what);
  return s;
}

void put_f32_le(std::ostream& os, const float* data, i64 count) {
  static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);
  // little-endian host: the raw bytes already match the format
  os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count) * 4);
}

}  // namespace

void save_checkpoint(const std::string& path, const Snapshot& snap) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write checkpoint " + path);
  os.write(kMagic, sizeof(kMagic));
  put_u32(os, kCheckpointVersion);
  put_u32(os, snap.tensors.size());
  for (const auto& [name, t] : snap.tensors) {
    if (!t.valid()) throw ShapeError("checkpoint tensor " + name + " is empty");
    put_u32(os, name.size());
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(os, static_cast<u64>(t.rank()));
    for (i64 d : t.shape()) put_u64(os, static_cast<u64>(d));
    put_f32_le(os, t.data(), t.numel());
  }
  if (snap.vocab.size() < 4) throw ConfigError("checkpoint vocabulary lacks the reserved ids");
  put_u32(os, static_cast<u64>(snap.vocab.size() - 4));
  for (i64 i = 4; i < snap.vocab.size(); ++i) {
    const std::string& w = snap.vocab.words[static_cast<size_t>(i)];
    put_u32(os, w.size());
    os.write(w.data(), static_cast<std::streamsize>(w.size()));
  }
  put_u32(os, snap.config_text.size());
  os.write(snap.config_text.data(), static_cast<std::streamsize>(snap.config_text.size()));
  if (!os) throw IoError("short write on checkpoint " + path);
}

Snapshot load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read checkpoint " + path);
  char magic[sizeof(kMagic)];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw IoError("bad checkpoint magic in " + path);
  u64 version = get_u32(is, "version");
  if (version != kCheckpointVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  Snapshot snap;
  u64 count = get_u32(is, "tensor count");
  snap.tensors.reserve(count);
  for (u64 ti = 0; ti < count; ++ti) {
    u64 name_len = get_u32(is, "tensor name length");
    std::string name = get_str(is, name_len, "tensor name");
    u64 rank = get_u32(is, "tensor rank");
    if (rank > 8) throw IoError("implausible tensor rank in " + path);
    std::vector<i64> shape;
    i64 numel = 1;
    for (u64 d = 0; d < rank; ++d) {
      u64 dim = get_u64(is, "tensor dim");
      if (dim == 0 || dim > (1ULL << 32)) throw IoError("implausible tensor dim in " + path);
      shape.push_back(static_cast<i64>(dim));
      numel *= static_cast<i64>(dim);
    }
    std::vector<float> data(static_cast<size_t>(numel));
    is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(numel) * 4);
    if (!is) throw IoError("checkpoint truncated reading tensor " + name);
    snap.tensors.emplace_back(name, TensorF::from_data(std::move(shape), std::move(data)));
  }
  u64 words = get_u32(is, "vocabulary size");
  std::vector<std::string> vocab_words;
  vocab_words.reserve(words);
  for (u64 wi = 0; wi < words; ++wi) {
    u64 len = get_u32(is, "word length");
    vocab_words.push_back(get_str(is, len, "word"));
  }
  snap.vocab = Vocabulary::from_words(std::move(vocab_words));
  u64 cfg_len = get_u32(is, "config length");
  snap.config_text = get_str(is, cfg_len, "config text");
  return snap;
}

}  // namespace swincap
