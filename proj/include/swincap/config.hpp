#pragma once

#include <array>
#include <string>

#include "swincap/decoder.hpp"
#include "swincap/encoder.hpp"

namespace swincap {

/// Everything a training or inference run needs, round-trippable through a
/// canonical key=value text block so checkpoints carry their own recipe.
struct RunConfig {
  std::string model = "w_mlp";  // mixer kind
  i64 image_size = 64;
  i64 patch = 4;
  i64 embed_dim = 32;
  i64 window = 4;
  std::array<i64, 4> depths{1, 1, 2, 1};
  std::array<i64, 4> heads{4, 8, 16, 32};
  i64 clip_len = 1;  // frames per sample; 1 = image model
  i64 patch_t = 1;
  i64 window_t = 1;
  i64 decoder_blocks = 2;
  i64 decoder_heads = 8;
  i64 decoder_ffn = 2048;
  i64 max_len = 16;
  u64 seed = 1;
  i64 epochs = 100;
  i64 batch = 9;
  double lr = 3e-4;
  i64 warmup = 20000;
  bool clamp_window = true;
  bool attn_mask = false;
};

/// Fixed key order, one key=value per line, shortest float spelling.
std::string to_text(const RunConfig& cfg);

// Accepts mixer-kind names plus the model aliases swinmlp, swin and
// video-swinmlp; returns the canonical mixer-kind name.
std::string normalize_model_name(const std::string& name);
/// Missing keys keep defaults; unknown or repeated keys and bad values throw.
RunConfig config_from_text(const std::string& text);

EncoderSettings encoder_settings(const RunConfig& cfg);
DecoderSettings decoder_settings(const RunConfig& cfg, i64 vocab);

}  // namespace swincap
