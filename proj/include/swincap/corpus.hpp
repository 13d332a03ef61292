#pragma once

#include <array>
#include <string>
#include <vector>

#include "swincap/common.hpp"
#include "swincap/rng.hpp"

namespace swincap {

inline constexpr std::array<const char*, 3> kShapeNames{"rectangle", "circle", "triangle"};
inline constexpr std::array<const char*, 6> kColorNames{"red",    "green",  "blue",
                                                        "yellow", "purple", "orange"};
inline constexpr std::array<std::array<unsigned char, 3>, 6> kColorRgb{{{220, 40, 40},
                                                                        {40, 200, 60},
                                                                        {50, 90, 230},
                                                                        {235, 220, 50},
                                                                        {160, 60, 200},
                                                                        {240, 150, 40}}};
inline constexpr unsigned char kBackground = 12;

struct Primitive {
  i64 shape = 0;  // index into kShapeNames
  i64 color = 0;  // index into kColorNames
  i64 cx = 0, cy = 0;
  i64 size = 0;  // half extent in pixels
};

/// 1 to 3 primitives, fully inside the image, later centers distinct from the
/// first one so the spatial relation in the caption is well defined.
std::vector<Primitive> sample_primitives(SplitMix64& rng, i64 image_size);

/// "a red circle", "a red circle left of a blue rectangle and above a green
/// triangle": every relation describes the first primitive against the k-th,
/// horizontal wins when |dx| >= |dy|.
std::string caption_for(const std::vector<Primitive>& prims);

/// Rasterizes onto the dark background in listed order, [h*w*3] RGB.
std::vector<unsigned char> render(const std::vector<Primitive>& prims, i64 image_size);

void write_img1(const std::string& path, i64 h, i64 w, const std::vector<unsigned char>& rgb);
std::vector<unsigned char> read_img1(const std::string& path, i64* h, i64* w);

/// Channel-major float planes [3, h, w] scaled to [0, 1], the encoder's raw
/// input layout.
template <class S>
std::vector<S> image_to_planes(const std::vector<unsigned char>& rgb, i64 h, i64 w);

struct Sample {
  std::string image;  // resolved path
  std::string caption;
};

/// Writes count IMG1 images plus manifest.jsonl into dir. Sample i depends
/// only on (seed, i).
void gen_corpus(const std::string& dir, u64 seed, i64 count, i64 image_size);

/// Reads dir/manifest.jsonl; image paths come back resolved against dir.
std::vector<Sample> load_manifest(const std::string& dir);

}  // namespace swincap
