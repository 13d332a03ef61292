#include "swincap/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "swincap/checkpoint.hpp"
#include "swincap/metrics.hpp"
#include "swincap/optim.hpp"

namespace swincap {

namespace {

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw NumericError("cannot format number");
  return {buf, end};
}

std::string fmt(float v) { return fmt(static_cast<double>(v)); }

struct Prepared {
  std::vector<float> planes;
  std::vector<i64> ids;  // caption tokens, no specials
};

std::vector<Prepared> prepare(const RunConfig& cfg, const Vocabulary& vocab,
                              const std::vector<Sample>& samples) {
  std::vector<Prepared> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) {
    Prepared p;
    p.planes = sample_planes(cfg, s.image);
    p.ids = vocab.encode(s.caption);
    if (static_cast<i64>(p.ids.size()) + 1 > cfg.max_len)
      throw ConfigError("caption longer than max_len: " + s.caption);
    out.push_back(std::move(p));
  }
  return out;
}

void shuffle_indices(std::vector<i64>& order, SplitMix64 rng) {
  for (i64 i = static_cast<i64>(order.size()) - 1; i > 0; --i) {
    i64 j = static_cast<i64>(rng.next_below(static_cast<u64>(i + 1)));
    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
  }
}

Snapshot make_snapshot(const Captioner& model, const Adam& opt) {
  Snapshot snap;
  snap.tensors = model.parameters();
  const size_t n_params = snap.tensors.size();
  snap.tensors.reserve(3 * n_params + 1);
  for (size_t i = 0; i < n_params; ++i) {
    const auto& [name, t] = snap.tensors[i];
    snap.tensors.emplace_back(
        "opt.m." + name, TensorF::from_data(t.shape(), std::vector<float>(opt.m[i])));
  }
  for (size_t i = 0; i < n_params; ++i) {
    const auto& [name, t] = snap.tensors[i];
    snap.tensors.emplace_back(
        "opt.v." + name, TensorF::from_data(t.shape(), std::vector<float>(opt.v[i])));
  }
  snap.tensors.emplace_back("opt.steps",
                            TensorF::from_data({1}, {static_cast<float>(opt.steps)}));
  snap.vocab = model.vocab;
  snap.config_text = to_text(model.cfg);
  return snap;
}

void restore_weights(Captioner& model, const Snapshot& snap, Adam* opt) {
  std::unordered_map<std::string, const TensorF*> by_name;
  for (const auto& [name, t] : snap.tensors) by_name[name] = &t;
  auto fetch = [&](const std::string& name) -> const TensorF* {
    auto it = by_name.find(name);
    return it == by_name.end() ? nullptr : it->second;
  };
  auto named = model.parameters();
  for (size_t i = 0; i < named.size(); ++i) {
    auto& [name, t] = named[i];
    const TensorF* src = fetch(name);
    if (!src || src->numel() != t.numel())
      throw IoError("checkpoint does not match the configured model at " + name);
    std::copy(src->data(), src->data() + t.numel(), t.mutable_data());
    if (opt) {
      const TensorF* m = fetch("opt.m." + name);
      const TensorF* v = fetch("opt.v." + name);
      if (!m || !v || m->numel() != t.numel() || v->numel() != t.numel())
        throw IoError("checkpoint lacks optimizer state for " + name);
      std::copy(m->data(), m->data() + t.numel(), opt->m[i].data());
      std::copy(v->data(), v->data() + t.numel(), opt->v[i].data());
    }
  }
  if (opt) {
    const TensorF* steps = fetch("opt.steps");
    if (!steps) throw IoError("checkpoint lacks the optimizer step counter");
    opt->steps = static_cast<i64>(steps->item());
  }
}

}  // namespace

Captioner::Captioner(const RunConfig& c, Vocabulary v)
    : Captioner(c, std::move(v), SplitMix64(c.seed)) {}

Captioner::Captioner(const RunConfig& c, Vocabulary v, SplitMix64 rng)
    : cfg(c),
      vocab(std::move(v)),
      encoder(encoder_settings(c), rng),
      decoder(decoder_settings(c, vocab.size()), rng) {}

std::vector<std::pair<std::string, TensorF>> Captioner::parameters() const {
  std::vector<std::pair<std::string, TensorF>> out;
  encoder.collect("enc", out);
  decoder.collect("dec", out);
  return out;
}

TensorF Captioner::encode_image(const std::vector<float>& planes) const {
  const i64 want = 3 * cfg.clip_len * cfg.image_size * cfg.image_size;
  if (static_cast<i64>(planes.size()) != want)
    throw ShapeError("image planes do not match the configured input size");
  return encoder.encode(planes);
}

std::string Captioner::caption(const std::vector<float>& planes) const {
  NoGradGuard ng;
  return vocab.decode(decoder.greedy(encode_image(planes)));
}

std::vector<float> sample_planes(const RunConfig& cfg, const std::string& image_path) {
  i64 h = 0, w = 0;
  std::vector<unsigned char> rgb = read_img1(image_path, &h, &w);
  if (h != cfg.image_size || w != cfg.image_size)
    throw IoError("image " + image_path + " is " + std::to_string(h) + "x" + std::to_string(w) +
                  " but the config wants " + std::to_string(cfg.image_size));
  std::vector<float> frame = image_to_planes<float>(rgb, h, w);
  if (cfg.clip_len == 1) return frame;
  // clips replicate the still frame: [3, t, h, w] with identical time slices
  const i64 plane = h * w;
  std::vector<float> clip(static_cast<size_t>(3 * cfg.clip_len * plane));
  for (i64 c = 0; c < 3; ++c)
    for (i64 t = 0; t < cfg.clip_len; ++t)
      std::copy(frame.begin() + c * plane, frame.begin() + (c + 1) * plane,
                clip.begin() + (c * cfg.clip_len + t) * plane);
  return clip;
}

double training_bleu(const Captioner& model, const std::vector<Sample>& samples) {
  std::vector<EvalRecord> records;
  records.reserve(samples.size());
  for (const Sample& s : samples) {
    std::string cand = model.caption(sample_planes(model.cfg, s.image));
    records.push_back(make_record(cand, {s.caption}));
  }
  return bleu4(records);
}

Captioner captioner_from_checkpoint(const std::string& path) {
  Snapshot snap = load_checkpoint(path);
  RunConfig cfg = config_from_text(snap.config_text);
  Captioner model(cfg, snap.vocab);
  restore_weights(model, snap, nullptr);
  return model;
}

TrainResult train(const RunConfig& cfg_in, const std::string& data_dir,
                  const TrainOptions& opts) {
  if (opts.out_dir.empty()) throw ConfigError("training needs an output directory");
  std::error_code ec;
  std::filesystem::create_directories(opts.out_dir, ec);
  if (ec) throw IoError("cannot create " + opts.out_dir + ": " + ec.message());

  std::vector<Sample> samples = load_manifest(data_dir);
  if (samples.empty()) throw IoError("empty dataset in " + data_dir);

  Snapshot resume;
  const bool resuming = !opts.resume_from.empty();
  if (resuming) resume = load_checkpoint(opts.resume_from);
  const RunConfig cfg = resuming ? config_from_text(resume.config_text) : cfg_in;

  std::vector<std::string> captions;
  for (const Sample& s : samples) captions.push_back(s.caption);
  Vocabulary vocab = resuming ? resume.vocab : Vocabulary::build(captions);

  Captioner model(cfg, std::move(vocab));
  auto named = model.parameters();
  std::vector<TensorF> params;
  params.reserve(named.size());
  for (auto& [name, t] : named) params.push_back(t);
  Adam opt(std::move(params), cfg.lr, cfg.warmup);
  if (resuming) restore_weights(model, resume, &opt);

  std::vector<Prepared> data = prepare(cfg, model.vocab, samples);

  const i64 n = static_cast<i64>(data.size());
  const i64 batch = std::max<i64>(1, cfg.batch);
  const i64 steps_per_epoch = (n + batch - 1) / batch;
  const i64 start_epoch = opt.steps / steps_per_epoch;

  std::ofstream log(opts.out_dir + "/train_log.csv",
                    resuming ? std::ios::app : std::ios::trunc);
  if (!log) throw IoError("cannot write training log in " + opts.out_dir);
  auto emit = [&](const std::string& line) {
    log << line << "\n";
    if (opts.echo) *opts.echo << line << "\n";
  };
  if (!resuming) emit("step,epoch,lr,loss");

  TrainResult res;
  res.steps = opt.steps;
  res.best_epoch_loss = std::numeric_limits<double>::infinity();
  const std::string last_path = opts.out_dir + "/last.ckpt";
  const std::string best_path = opts.out_dir + "/best.ckpt";
  std::deque<double> recent;
  bool stop = false;

  // A checkpoint taken mid-epoch resumes at the interrupted batch; the
  // epoch-keyed shuffle makes the remaining order reproducible.
  const i64 skip = opt.steps % steps_per_epoch;
  auto keep_going = [&](i64 epoch) {
    return epoch < cfg.epochs || (opts.max_steps > 0 && opt.steps < opts.max_steps);
  };
  for (i64 epoch = start_epoch; keep_going(epoch) && !stop; ++epoch) {
    std::vector<i64> order(static_cast<size_t>(n));
    for (i64 i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    shuffle_indices(order, SplitMix64(cfg.seed).fork(0x5F5E100ULL + static_cast<u64>(epoch)));

    double epoch_loss = 0.0;
    i64 epoch_steps = 0;
    for (i64 b = epoch == start_epoch ? skip : 0; b < steps_per_epoch && !stop; ++b) {
      const i64 lo = b * batch, hi = std::min<i64>(n, lo + batch);
      i64 pad_to = 0;  // batch max caption length, plus eos
      for (i64 k = lo; k < hi; ++k)
        pad_to = std::max<i64>(
            pad_to, static_cast<i64>(data[static_cast<size_t>(order[static_cast<size_t>(k)])]
                                         .ids.size()) + 1);

      opt.zero_grad();
      TensorF total;
      for (i64 k = lo; k < hi; ++k) {
        const Prepared& s = data[static_cast<size_t>(order[static_cast<size_t>(k)])];
        std::vector<i64> in_ids{kBos};
        in_ids.insert(in_ids.end(), s.ids.begin(), s.ids.end());
        std::vector<i64> tgt_ids(s.ids);
        tgt_ids.push_back(kEos);
        while (static_cast<i64>(in_ids.size()) < pad_to) in_ids.push_back(kPad);
        while (static_cast<i64>(tgt_ids.size()) < pad_to) tgt_ids.push_back(kPad);

        TensorF memory = model.encoder.encode(s.planes);
        TensorF logits = model.decoder.forward(memory, in_ids);
        TensorF sample_loss = cross_entropy(logits, tgt_ids, kPad);
        total = total.valid() ? add(total, sample_loss) : sample_loss;
      }
      TensorF loss = scale(total, 1.0f / static_cast<float>(hi - lo));
      const float lv = loss.item();
      if (!std::isfinite(lv))
        throw NumericError("training diverged: non-finite loss at step " +
                           std::to_string(opt.steps + 1));
      backward(loss);
      opt.step();

      const double lr_now = lr_schedule(opt.steps, cfg.lr, cfg.warmup);
      emit(std::to_string(opt.steps) + "," + std::to_string(epoch) + "," + fmt(lr_now) + "," +
           fmt(lv));
      epoch_loss += static_cast<double>(lv);
      ++epoch_steps;
      res.steps = opt.steps;
      res.final_loss = static_cast<double>(lv);

      recent.push_back(static_cast<double>(lv));
      if (recent.size() > 10) recent.pop_front();
      if (opts.target_bleu > 0.0 && opts.eval_every > 0 && opt.steps % opts.eval_every == 0) {
        double avg = 0.0;
        for (double v : recent) avg += v;
        avg /= static_cast<double>(recent.size());
        if (avg < 0.5 || opt.steps % (10 * opts.eval_every) == 0) {
          res.bleu = training_bleu(model, samples);
          if (res.bleu >= opts.target_bleu) stop = true;
        }
      }
      if (opts.max_steps > 0 && opt.steps >= opts.max_steps) stop = true;
    }

    if (epoch_steps > 0) {
      const double mean = epoch_loss / static_cast<double>(epoch_steps);
      save_checkpoint(last_path, make_snapshot(model, opt));
      res.last_checkpoint = last_path;
      if (mean < res.best_epoch_loss) {
        res.best_epoch_loss = mean;
        save_checkpoint(best_path, make_snapshot(model, opt));
        res.best_checkpoint = best_path;
      }
    }
    res.epochs = epoch + 1;
  }

  if (res.last_checkpoint.empty()) {
    save_checkpoint(last_path, make_snapshot(model, opt));
    res.last_checkpoint = last_path;
  }
  if (!log) throw IoError("short write on training log");
  return res;
}

}  // namespace swincap
