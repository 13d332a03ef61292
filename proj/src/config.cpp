#include "swincap/config.hpp"

#include <charconv>
#include <set>
#include <sstream>

#include "swincap/common.hpp"

namespace swincap {

namespace {

std::string num(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw NumericError("cannot format float");
  return {buf, end};
}

std::string num(i64 v) { return std::to_string(v); }
std::string num(u64 v) { return std::to_string(v); }

std::string num(const std::array<i64, 4>& v) {
  std::string s;
  for (size_t i = 0; i < 4; ++i) {
    if (i) s.push_back(',');
    s += std::to_string(v[i]);
  }
  return s;
}

i64 parse_i64(const std::string& key, const std::string& v) {
  i64 out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("bad integer for " + key + ": " + v);
  return out;
}

u64 parse_u64(const std::string& key, const std::string& v) {
  u64 out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("bad unsigned integer for " + key + ": " + v);
  return out;
}

double parse_f64(const std::string& key, const std::string& v) {
  double out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("bad float for " + key + ": " + v);
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("bad bool for " + key + ": " + v);
}

std::array<i64, 4> parse_four(const std::string& key, const std::string& v) {
  std::array<i64, 4> out{};
  size_t start = 0;
  for (size_t i = 0; i < 4; ++i) {
    size_t comma = i < 3 ? v.find(',', start) : v.size();
    if (comma == std::string::npos) throw ConfigError(key + " needs four comma-separated values");
    out[i] = parse_i64(key, v.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::string normalize_model_name(const std::string& name) {
  if (name == "swinmlp" || name == "video-swinmlp") return "w_mlp";
  if (name == "swin") return "w_msa";
  mixer_kind_from_string(name);  // validates
  return name;
}

std::string to_text(const RunConfig& c) {
  std::ostringstream os;
  os << "model=" << c.model << "\n"
     << "image_size=" << num(c.image_size) << "\n"
     << "patch=" << num(c.patch) << "\n"
     << "embed_dim=" << num(c.embed_dim) << "\n"
     << "window=" << num(c.window) << "\n"
     << "depths=" << num(c.depths) << "\n"
     << "heads=" << num(c.heads) << "\n"
     << "clip_len=" << num(c.clip_len) << "\n"
     << "patch_t=" << num(c.patch_t) << "\n"
     << "window_t=" << num(c.window_t) << "\n"
     << "decoder_blocks=" << num(c.decoder_blocks) << "\n"
     << "decoder_heads=" << num(c.decoder_heads) << "\n"
     << "decoder_ffn=" << num(c.decoder_ffn) << "\n"
     << "max_len=" << num(c.max_len) << "\n"
     << "seed=" << num(c.seed) << "\n"
     << "epochs=" << num(c.epochs) << "\n"
     << "batch=" << num(c.batch) << "\n"
     << "lr=" << num(c.lr) << "\n"
     << "warmup=" << num(c.warmup) << "\n"
     << "clamp_window=" << (c.clamp_window ? "true" : "false") << "\n"
     << "attn_mask=" << (c.attn_mask ? "true" : "false") << "\n";
  return os.str();
}

RunConfig config_from_text(const std::string& text) {
  RunConfig c;
  std::set<std::string> seen;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line without '=': " + line);
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    if (!seen.insert(key).second) throw ConfigError("repeated config key: " + key);
    if (key == "model") {
      c.model = normalize_model_name(val);
    } else if (key == "image_size") {
      c.image_size = parse_i64(key, val);
    } else if (key == "patch") {
      c.patch = parse_i64(key, val);
    } else if (key == "embed_dim") {
      c.embed_dim = parse_i64(key, val);
    } else if (key == "window") {
      c.window = parse_i64(key, val);
    } else if (key == "depths") {
      c.depths = parse_four(key, val);
    } else if (key == "heads") {
      c.heads = parse_four(key, val);
    } else if (key == "clip_len") {
      c.clip_len = parse_i64(key, val);
    } else if (key == "patch_t") {
      c.patch_t = parse_i64(key, val);
    } else if (key == "window_t") {
      c.window_t = parse_i64(key, val);
    } else if (key == "decoder_blocks") {
      c.decoder_blocks = parse_i64(key, val);
    } else if (key == "decoder_heads") {
      c.decoder_heads = parse_i64(key, val);
    } else if (key == "decoder_ffn") {
      c.decoder_ffn = parse_i64(key, val);
    } else if (key == "max_len") {
      c.max_len = parse_i64(key, val);
    } else if (key == "seed") {
      c.seed = parse_u64(key, val);
    } else if (key == "epochs") {
      c.epochs = parse_i64(key, val);
    } else if (key == "batch") {
      c.batch = parse_i64(key, val);
    } else if (key == "lr") {
      c.lr = parse_f64(key, val);
    } else if (key == "warmup") {
      c.warmup = parse_i64(key, val);
    } else if (key == "clamp_window") {
      c.clamp_window = parse_bool(key, val);
    } else if (key == "attn_mask") {
      c.attn_mask = parse_bool(key, val);
    } else {
      throw ConfigError("unknown config key: " + key);
    }
  }
  return c;
}

EncoderSettings encoder_settings(const RunConfig& c) {
  EncoderSettings e;
  e.kind = mixer_kind_from_string(c.model);
  e.embed_dim = c.embed_dim;
  e.patch = c.patch;
  e.patch_t = c.patch_t;
  e.window = c.window;
  e.window_t = c.window_t;
  e.depths = c.depths;
  e.heads = c.heads;
  e.out_dim = 512;
  e.clamp_window = c.clamp_window;
  e.attn_mask = c.attn_mask;
  e.img_t = c.clip_len;
  e.img_h = c.image_size;
  e.img_w = c.image_size;
  return e;
}

DecoderSettings decoder_settings(const RunConfig& c, i64 vocab) {
  DecoderSettings d;
  d.blocks = c.decoder_blocks;
  d.model_dim = 512;
  d.heads = c.decoder_heads;
  d.ffn_dim = c.decoder_ffn;
  d.max_len = c.max_len;
  d.vocab = vocab;
  return d;
}

}  // namespace swincap
