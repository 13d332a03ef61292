#include "swincap/corpus.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace swincap {

namespace {

void put_u32(std::ostream& os, u64 v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

u64 get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw IoError("truncated image file");
  return static_cast<u64>(b[0]) | static_cast<u64>(b[1]) << 8 | static_cast<u64>(b[2]) << 16 |
         static_cast<u64>(b[3]) << 24;
}

std::string relation(const Primitive& first, const Primitive& other) {
  i64 dx = first.cx - other.cx;
  i64 dy = first.cy - other.cy;
  if (std::abs(dx) >= std::abs(dy)) return dx < 0 ? "left of" : "right of";
  return dy < 0 ? "above" : "below";
}

void draw(std::vector<unsigned char>& rgb, i64 n, const Primitive& p) {
  const auto& col = kColorRgb[static_cast<size_t>(p.color)];
  auto paint = [&](i64 x, i64 y) {
    if (x < 0 || y < 0 || x >= n || y >= n) return;
    size_t at = static_cast<size_t>((y * n + x) * 3);
    rgb[at] = col[0];
    rgb[at + 1] = col[1];
    rgb[at + 2] = col[2];
  };
  const i64 s = p.size;
  switch (p.shape) {
    case 0: {  // rectangle, slightly wider than tall
      i64 hh = std::max<i64>(2, (2 * s) / 3);
      for (i64 y = p.cy - hh; y <= p.cy + hh; ++y)
        for (i64 x = p.cx - s; x <= p.cx + s; ++x) paint(x, y);
      break;
    }
    case 1: {  // circle
      for (i64 y = p.cy - s; y <= p.cy + s; ++y)
        for (i64 x = p.cx - s; x <= p.cx + s; ++x)
          if ((x - p.cx) * (x - p.cx) + (y - p.cy) * (y - p.cy) <= s * s) paint(x, y);
      break;
    }
    default: {  // upward triangle, apex at cy - s
      for (i64 y = p.cy - s; y <= p.cy + s; ++y) {
        i64 half = ((y - (p.cy - s)) * s) / (2 * s);
        for (i64 x = p.cx - half; x <= p.cx + half; ++x) paint(x, y);
      }
      break;
    }
  }
}

}  // namespace

std::vector<Primitive> sample_primitives(SplitMix64& rng, i64 image_size) {
  if (image_size < 16) throw ConfigError("corpus images need at least 16 pixels per side");
  i64 n = 1 + static_cast<i64>(rng.next_below(3));
  std::vector<Primitive> prims;
  for (i64 k = 0; k < n; ++k) {
    Primitive p;
    p.shape = static_cast<i64>(rng.next_below(3));
    p.color = static_cast<i64>(rng.next_below(6));
    i64 lo = std::max<i64>(2, image_size / 10);
    i64 hi = std::max<i64>(lo, image_size / 5);
    p.size = lo + static_cast<i64>(rng.next_below(static_cast<u64>(hi - lo + 1)));
    auto place = [&] {
      i64 span = image_size - 2 * p.size;
      p.cx = p.size + static_cast<i64>(rng.next_below(static_cast<u64>(span)));
      p.cy = p.size + static_cast<i64>(rng.next_below(static_cast<u64>(span)));
    };
    place();
    while (k > 0 && p.cx == prims[0].cx && p.cy == prims[0].cy) place();
    prims.push_back(p);
  }
  return prims;
}

std::string caption_for(const std::vector<Primitive>& prims) {
  if (prims.empty() || prims.size() > 3) throw ConfigError("caption needs 1 to 3 primitives");
  auto group = [](const Primitive& p) {
    return std::string("a ") + kColorNames[static_cast<size_t>(p.color)] + " " +
           kShapeNames[static_cast<size_t>(p.shape)];
  };
  std::string cap = group(prims[0]);
  for (size_t k = 1; k < prims.size(); ++k) {
    if (k > 1) cap += " and";
    cap += " " + relation(prims[0], prims[k]) + " " + group(prims[k]);
  }
  return cap;
}

std::vector<unsigned char> render(const std::vector<Primitive>& prims, i64 image_size) {
  std::vector<unsigned char> rgb(static_cast<size_t>(image_size * image_size * 3), kBackground);
  for (const Primitive& p : prims) draw(rgb, image_size, p);
  return rgb;
}

void write_img1(const std::string& path, i64 h, i64 w, const std::vector<unsigned char>& rgb) {
  if (static_cast<i64>(rgb.size()) != h * w * 3) throw ShapeError("image byte count mismatch");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path);
  os.write("IMG1", 4);
  put_u32(os, static_cast<u64>(h));
  put_u32(os, static_cast<u64>(w));
  os.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
  if (!os) throw IoError("short write on " + path);
}

std::vector<unsigned char> read_img1(const std::string& path, i64* h, i64* w) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != "IMG1") throw IoError("not an IMG1 file: " + path);
  i64 hh = static_cast<i64>(get_u32(is));
  i64 ww = static_cast<i64>(get_u32(is));
  if (hh <= 0 || ww <= 0 || hh > 1 << 16 || ww > 1 << 16)
    throw IoError("implausible image size in " + path);
  std::vector<unsigned char> rgb(static_cast<size_t>(hh * ww * 3));
  is.read(reinterpret_cast<char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
  if (!is) throw IoError("truncated image file " + path);
  *h = hh;
  *w = ww;
  return rgb;
}

template <class S>
std::vector<S> image_to_planes(const std::vector<unsigned char>& rgb, i64 h, i64 w) {
  if (static_cast<i64>(rgb.size()) != h * w * 3) throw ShapeError("image byte count mismatch");
  std::vector<S> planes(rgb.size());
  const S inv = S(1) / S(255);
  for (i64 y = 0; y < h; ++y)
    for (i64 x = 0; x < w; ++x)
      for (i64 c = 0; c < 3; ++c)
        planes[static_cast<size_t>((c * h + y) * w + x)] =
            static_cast<S>(rgb[static_cast<size_t>((y * w + x) * 3 + c)]) * inv;
  return planes;
}

template std::vector<float> image_to_planes<float>(const std::vector<unsigned char>&, i64, i64);
template std::vector<double> image_to_planes<double>(const std::vector<unsigned char>&, i64, i64);

void gen_corpus(const std::string& dir, u64 seed, i64 count, i64 image_size) {
  if (count < 1) throw ConfigError("corpus count must be positive");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  std::ofstream manifest(dir + "/manifest.jsonl", std::ios::trunc);
  if (!manifest) throw IoError("cannot write manifest in " + dir);
  SplitMix64 base(seed);
  for (i64 i = 0; i < count; ++i) {
    SplitMix64 rng = base.fork(static_cast<u64>(i));
    std::vector<Primitive> prims = sample_primitives(rng, image_size);
    char name[32];
    std::snprintf(name, sizeof(name), "img_%05lld.img1", static_cast<long long>(i));
    write_img1(dir + "/" + name, image_size, image_size, render(prims, image_size));
    nlohmann::json line;
    line["image"] = name;
    line["caption"] = caption_for(prims);
    manifest << line.dump() << "\n";
  }
  if (!manifest) throw IoError("short write on manifest in " + dir);
}

std::vector<Sample> load_manifest(const std::string& dir) {
  std::ifstream is(dir + "/manifest.jsonl");
  if (!is) throw IoError("cannot read manifest in " + dir);
  std::vector<Sample> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("image") || !j.contains("caption") ||
        !j["image"].is_string() || !j["caption"].is_string())
      throw IoError("malformed manifest line: " + line);
    out.push_back({dir + "/" + j["image"].get<std::string>(), j["caption"].get<std::string>()});
  }
  return out;
}

}  // namespace swincap
