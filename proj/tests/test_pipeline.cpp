#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <swincap/checkpoint.hpp>
#include <swincap/config.hpp>
#include <swincap/corpus.hpp>
#include <swincap/optim.hpp>
#include <swincap/vocab.hpp>

using namespace swincap;

namespace {

std::string scratch_dir(const std::string& leaf) {
  std::filesystem::path p = std::filesystem::temp_directory_path() / "swincap_tests" / leaf;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

// Test-side caption parser: the inverse of caption_for over the grammar
//   a COLOR SHAPE (REL a COLOR SHAPE)? (and REL a COLOR SHAPE)?
struct Fact {
  i64 shape, color;
  std::string rel;  // empty for the first group
};

i64 find_name(const char* const* names, i64 n, const std::string& w) {
  for (i64 i = 0; i < n; ++i)
    if (w == names[i]) return i;
  return -1;
}

std::vector<Fact> parse_caption(const std::string& caption) {
  std::vector<std::string> ws = split_words(caption);
  std::vector<Fact> facts;
  size_t i = 0;
  auto group = [&](const std::string& rel) {
    REQUIRE(i + 2 < ws.size() + 1);
    REQUIRE(ws[i] == "a");
    Fact f;
    f.color = find_name(kColorNames.data(), 6, ws[i + 1]);
    f.shape = find_name(kShapeNames.data(), 3, ws[i + 2]);
    REQUIRE(f.color >= 0);
    REQUIRE(f.shape >= 0);
    f.rel = rel;
    facts.push_back(f);
    i += 3;
  };
  auto rel_word = [&]() -> std::string {
    if (ws[i] == "left" || ws[i] == "right") {
      std::string r = ws[i] + " of";
      REQUIRE(ws[i + 1] == "of");
      i += 2;
      return r;
    }
    REQUIRE((ws[i] == "above" || ws[i] == "below"));
    return ws[i++];
  };
  group("");
  if (i < ws.size()) group(rel_word());
  if (i < ws.size()) {
    REQUIRE(ws[i] == "and");
    ++i;
    group(rel_word());
  }
  REQUIRE(i == ws.size());
  return facts;
}

std::string expect_rel(const Primitive& first, const Primitive& other) {
  i64 dx = first.cx - other.cx;
  i64 dy = first.cy - other.cy;
  if (std::llabs(dx) >= std::llabs(dy)) return dx < 0 ? "left of" : "right of";
  return dy < 0 ? "above" : "below";
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("tokenizer lowercases and splits on punctuation") {
    CHECK(split_words("The grasper grasps tissue.") ==
          std::vector<std::string>{"the", "grasper", "grasps", "tissue"});
    CHECK(split_words("") == std::vector<std::string>{});
    CHECK(split_words("  a,b--c3 ") == std::vector<std::string>{"a", "b", "c3"});

    Vocabulary v = Vocabulary::build({"the grasper grasps tissue", "a b"});
    CHECK(v.size() == 4 + 6);
    CHECK(v.words[4] == "a");  // sorted, ids from 4
    CHECK(v.id("the") > v.id("grasper"));
    CHECK(v.encode("") == std::vector<i64>{});
    CHECK(v.encode("zebra")[0] == kUnk);
    std::vector<i64> ids = v.encode("The GRASPER grasps tissue.");
    CHECK(ids.size() == 4);
    for (i64 id : ids) CHECK(id >= 4);
    CHECK(v.decode(ids) == "the grasper grasps tissue");

    std::vector<i64> with_specials{kBos};
    with_specials.insert(with_specials.end(), ids.begin(), ids.end());
    with_specials.push_back(kEos);
    CHECK(v.decode(with_specials) == "the grasper grasps tissue");
    CHECK_THROWS_AS(v.decode({99}), ShapeError);
  }

  TEST_CASE("caption templating is invertible back to the drawn facts") {
    SplitMix64 base(2024);
    std::set<std::string> vocab_words;
    for (u64 i = 0; i < 300; ++i) {
      SplitMix64 rng = base.fork(i);
      std::vector<Primitive> prims = sample_primitives(rng, 64);
      std::string caption = caption_for(prims);
      for (const std::string& w : split_words(caption)) vocab_words.insert(w);
      std::vector<Fact> facts = parse_caption(caption);
      REQUIRE(facts.size() == prims.size());
      for (size_t k = 0; k < prims.size(); ++k) {
        CHECK(facts[k].shape == prims[k].shape);
        CHECK(facts[k].color == prims[k].color);
        if (k > 0) CHECK(facts[k].rel == expect_rel(prims[0], prims[k]));
      }
    }
    CHECK(vocab_words.size() <= 40);
  }

  TEST_CASE("rendering puts the sampled color at the primitive center") {
    Primitive p;
    p.shape = 1;
    p.color = 2;
    p.cx = 20;
    p.cy = 12;
    p.size = 5;
    std::vector<unsigned char> rgb = render({p}, 32);
    size_t at = static_cast<size_t>((p.cy * 32 + p.cx) * 3);
    CHECK(rgb[at] == kColorRgb[2][0]);
    CHECK(rgb[at + 1] == kColorRgb[2][1]);
    CHECK(rgb[at + 2] == kColorRgb[2][2]);
    CHECK(rgb[0] == kBackground);
    CHECK(rgb[1] == kBackground);

    auto planes = image_to_planes<float>(rgb, 32, 32);
    CHECK(planes[static_cast<size_t>(0 * 32 * 32 + p.cy * 32 + p.cx)] ==
          doctest::Approx(kColorRgb[2][0] / 255.0f));
    CHECK(planes[static_cast<size_t>(2 * 32 * 32 + p.cy * 32 + p.cx)] ==
          doctest::Approx(kColorRgb[2][2] / 255.0f));
  }

  TEST_CASE("image files round-trip and reject foreign data") {
    std::string dir = scratch_dir("img1");
    std::vector<unsigned char> rgb(16 * 8 * 3);
    for (size_t i = 0; i < rgb.size(); ++i) rgb[i] = static_cast<unsigned char>(i * 7);
    write_img1(dir + "/a.img1", 16, 8, rgb);
    i64 h = 0, w = 0;
    std::vector<unsigned char> back = read_img1(dir + "/a.img1", &h, &w);
    CHECK(h == 16);
    CHECK(w == 8);
    CHECK(back == rgb);

    std::ofstream bad(dir + "/bad.img1", std::ios::binary);
    bad << "JPEGnope";
    bad.close();
    CHECK_THROWS_AS(read_img1(dir + "/bad.img1", &h, &w), IoError);
    CHECK_THROWS_AS(read_img1(dir + "/missing.img1", &h, &w), IoError);
  }

  TEST_CASE("same seed regenerates a byte-identical corpus") {
    std::string d1 = scratch_dir("corpus1");
    std::string d2 = scratch_dir("corpus2");
    gen_corpus(d1, 99, 6, 32);
    gen_corpus(d2, 99, 6, 32);
    CHECK(slurp(d1 + "/manifest.jsonl") == slurp(d2 + "/manifest.jsonl"));
    for (int i = 0; i < 6; ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "/img_%05d.img1", i);
      CHECK(slurp(d1 + name) == slurp(d2 + name));
    }
    std::vector<Sample> samples = load_manifest(d1);
    REQUIRE(samples.size() == 6);
    for (const Sample& s : samples) {
      i64 h = 0, w = 0;
      read_img1(s.image, &h, &w);
      CHECK(h == 32);
      CHECK(w == 32);
      CHECK_FALSE(s.caption.empty());
    }

    std::string d3 = scratch_dir("corpus3");
    gen_corpus(d3, 100, 6, 32);
    CHECK(slurp(d1 + "/manifest.jsonl") != slurp(d3 + "/manifest.jsonl"));
  }

  TEST_CASE("config text round-trips through the parser") {
    RunConfig c;
    c.model = "w_msa";
    c.image_size = 224;
    c.embed_dim = 128;
    c.window = 14;
    c.depths = {2, 2, 18, 2};
    c.heads = {4, 8, 16, 32};
    c.clip_len = 4;
    c.patch_t = 2;
    c.window_t = 2;
    c.decoder_blocks = 6;
    c.max_len = 24;
    c.seed = 123456789012345ULL;
    c.lr = 3e-4;
    c.warmup = 500;
    c.clamp_window = false;
    c.attn_mask = true;
    std::string text = to_text(c);
    RunConfig back = config_from_text(text);
    CHECK(to_text(back) == text);
    CHECK(back.lr == c.lr);
    CHECK(back.seed == c.seed);
    CHECK(back.depths == c.depths);
    CHECK(back.clamp_window == false);
    CHECK(back.attn_mask == true);

    EncoderSettings e = encoder_settings(back);
    CHECK(e.kind == MixerKind::w_msa);
    CHECK(e.img_t == 4);
    CHECK(e.img_h == 224);
    CHECK(e.out_dim == 512);
    DecoderSettings d = decoder_settings(back, 21);
    CHECK(d.model_dim == 512);
    CHECK(d.vocab == 21);
    CHECK(d.max_len == 24);
  }

  TEST_CASE("config parser rejects what it does not know") {
    CHECK_THROWS_AS(config_from_text("mystery=1\n"), ConfigError);
    CHECK_THROWS_AS(config_from_text("batch=9\nbatch=9\n"), ConfigError);
    CHECK_THROWS_AS(config_from_text("batch=nine\n"), ConfigError);
    CHECK_THROWS_AS(config_from_text("clamp_window=yes\n"), ConfigError);
    CHECK_THROWS_AS(config_from_text("depths=1,2,3\n"), ConfigError);
    CHECK_THROWS_AS(config_from_text("model=resnet\n"), ConfigError);
    CHECK_THROWS_AS(config_from_text("batch\n"), ConfigError);
    CHECK(config_from_text("").batch == 9);
  }

  TEST_CASE("model aliases normalize to mixer kinds") {
    CHECK(config_from_text("model=swinmlp\n").model == "w_mlp");
    CHECK(config_from_text("model=swin\n").model == "w_msa");
    CHECK(config_from_text("model=video-swinmlp\n").model == "w_mlp");
    CHECK(config_from_text("model=pool\n").model == "pool");
    CHECK_THROWS_AS(normalize_model_name("swin-mlp"), ConfigError);

    // serialization emits the canonical name, so a second pass is stable
    RunConfig c = config_from_text("model=swin\nclip_len=2\n");
    std::string text = to_text(c);
    CHECK(text.find("model=w_msa\n") == 0);
    CHECK(to_text(config_from_text(text)) == text);
  }

  TEST_CASE("learning-rate schedule hits the pinned values") {
    CHECK(lr_schedule(20000, 3e-4, 20000) == doctest::Approx(3e-4).epsilon(1e-12));
    CHECK(lr_schedule(5000, 3e-4, 20000) == doctest::Approx(7.5e-5).epsilon(1e-12));
    CHECK(lr_schedule(80000, 3e-4, 20000) == doctest::Approx(1.5e-4).epsilon(1e-12));
    CHECK_THROWS_AS(lr_schedule(0, 3e-4, 20000), NumericError);

    // continuous and peaked at the warmup boundary
    double peak = lr_schedule(20000, 3e-4, 20000);
    double before = lr_schedule(19999, 3e-4, 20000);
    double after = lr_schedule(20001, 3e-4, 20000);
    CHECK(before < peak);
    CHECK(after < peak);
    CHECK(peak - before < 2 * 3e-4 / 20000);
    CHECK(peak - after < 2 * 3e-4 / 20000);
  }

  TEST_CASE("first optimizer step moves by minus lr") {
    TensorF p = TensorF::zeros({4});
    Adam opt({p}, 1e-3, 100);
    p.zero_grad();
    float* g = p.node()->grad_acc();
    std::fill(g, g + 4, 1.0f);
    opt.step();
    CHECK(opt.steps == 1);
    double lr1 = lr_schedule(1, 1e-3, 100);
    for (i64 i = 0; i < 4; ++i)
      CHECK(p.data()[i] == doctest::Approx(-lr1).epsilon(1e-6));
  }

  TEST_CASE("zero gradients leave parameters alone but advance the step") {
    TensorF p = TensorF::from_data({3}, {1.0f, -2.0f, 0.5f});
    std::vector<float> before(p.data(), p.data() + 3);
    Adam opt({p}, 3e-4, 10);
    opt.zero_grad();
    opt.step();
    opt.step();
    CHECK(opt.steps == 2);
    CHECK(std::memcmp(before.data(), p.data(), sizeof(float) * 3) == 0);
  }

  TEST_CASE("two optimizer steps match a hand-rolled reference") {
    const double b1 = 0.9, b2 = 0.98, eps = 1e-9, base_lr = 3e-4;
    const i64 warmup = 10;
    std::vector<float> w{0.5f, -1.25f, 2.0f};
    std::vector<std::vector<float>> grads{{0.3f, -0.7f, 1.1f}, {-0.2f, 0.4f, 0.9f}};

    TensorF p = TensorF::from_data({3}, std::vector<float>(w));
    Adam opt({p}, base_lr, warmup);
    for (const auto& gstep : grads) {
      p.zero_grad();
      float* g = p.node()->grad_acc();
      std::copy(gstep.begin(), gstep.end(), g);
      opt.step();
    }

    std::vector<double> rm(3, 0.0), rv(3, 0.0), rw(w.begin(), w.end());
    for (i64 t = 1; t <= 2; ++t) {
      double lr = base_lr * std::min(double(t) / warmup, std::sqrt(double(warmup) / t));
      for (i64 i = 0; i < 3; ++i) {
        double gi = grads[static_cast<size_t>(t - 1)][static_cast<size_t>(i)];
        rm[i] = b1 * rm[i] + (1 - b1) * gi;
        rv[i] = b2 * rv[i] + (1 - b2) * gi * gi;
        double mhat = rm[i] / (1 - std::pow(b1, double(t)));
        double vhat = rv[i] / (1 - std::pow(b2, double(t)));
        rw[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
    for (i64 i = 0; i < 3; ++i)
      CHECK(std::abs(p.data()[i] - rw[static_cast<size_t>(i)]) < 1e-7);
  }

  TEST_CASE("optimizer verifies gradient shapes") {
    TensorF p = TensorF::zeros({4});
    Adam opt({p}, 1e-3, 10);
    p.node()->grad.assign(2, 0.0f);  // simulate a corrupted gradient
    CHECK_THROWS_AS(opt.step(), ShapeError);
  }

  TEST_CASE("checkpoints survive a save, load, save cycle byte for byte") {
    std::string dir = scratch_dir("ckpt");
    SplitMix64 rng(7);
    Snapshot snap;
    snap.tensors.emplace_back("enc.w", trunc_normal<float>({3, 5}, 0.02, rng));
    snap.tensors.emplace_back("dec.b", uniform<float>({7}, -2.0, 2.0, rng));
    snap.tensors.emplace_back("opt.steps", TensorF::from_data({1}, {42.0f}));
    snap.vocab = Vocabulary::build({"a red circle left of a blue rectangle"});
    snap.config_text = to_text(RunConfig{});

    std::string p1 = dir + "/a.ckpt", p2 = dir + "/b.ckpt";
    save_checkpoint(p1, snap);
    Snapshot back = load_checkpoint(p1);
    save_checkpoint(p2, back);
    CHECK(slurp(p1) == slurp(p2));

    REQUIRE(back.tensors.size() == 3);
    CHECK(back.tensors[0].first == "enc.w");
    CHECK(back.tensors[0].second.shape() == std::vector<i64>{3, 5});
    CHECK(std::memcmp(back.tensors[0].second.data(), snap.tensors[0].second.data(),
                      sizeof(float) * 15) == 0);
    CHECK(back.vocab.words == snap.vocab.words);
    CHECK(back.config_text == snap.config_text);
    CHECK(config_from_text(back.config_text).batch == 9);
  }

  TEST_CASE("checkpoint loader rejects foreign and truncated files") {
    std::string dir = scratch_dir("ckpt_bad");
    std::ofstream(dir + "/zip.ckpt", std::ios::binary) << "PK\x03\x04 not ours";
    CHECK_THROWS_AS(load_checkpoint(dir + "/zip.ckpt"), IoError);
    CHECK_THROWS_AS(load_checkpoint(dir + "/missing.ckpt"), IoError);

    Snapshot snap;
    snap.tensors.emplace_back("w", TensorF::zeros({8}));
    snap.vocab = Vocabulary::build({"one word"});
    snap.config_text = "";
    save_checkpoint(dir + "/ok.ckpt", snap);
    std::string whole = slurp(dir + "/ok.ckpt");
    std::ofstream(dir + "/cut.ckpt", std::ios::binary)
        << whole.substr(0, whole.size() / 2);
    CHECK_THROWS_AS(load_checkpoint(dir + "/cut.ckpt"), IoError);
  }
}
