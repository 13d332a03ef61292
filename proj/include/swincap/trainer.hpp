#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "swincap/config.hpp"
#include "swincap/corpus.hpp"
#include "swincap/decoder.hpp"
#include "swincap/encoder.hpp"
#include "swincap/vocab.hpp"

namespace swincap {

/// Encoder, decoder and vocabulary bound to one config. Parameter init draws
/// from a single stream: encoder first, then decoder.
struct Captioner {
  RunConfig cfg;
  Vocabulary vocab;
  Encoder<float> encoder;
  Decoder<float> decoder;

  Captioner(const RunConfig& cfg, Vocabulary vocab);
  Captioner(const RunConfig& cfg, Vocabulary vocab, SplitMix64 rng);

  std::vector<std::pair<std::string, TensorF>> parameters() const;  // enc.* then dec.*

  /// planes: [3, clip_len, image_size, image_size] floats in [0, 1].
  TensorF encode_image(const std::vector<float>& planes) const;
  std::string caption(const std::vector<float>& planes) const;
};

struct TrainOptions {
  std::string out_dir;          // checkpoints + train_log.csv land here
  std::string resume_from;      // checkpoint path; empty = fresh start
  i64 max_steps = 0;            // 0 = run the configured epochs
  double target_bleu = 0.0;     // > 0: stop once training-set BLEU-4 reaches it
  i64 eval_every = 0;           // step interval for the BLEU gate (0 = never)
  std::ostream* echo = nullptr; // optional mirror of the CSV log
};

struct TrainResult {
  i64 steps = 0;
  i64 epochs = 0;
  double final_loss = 0.0;
  double best_epoch_loss = 0.0;
  double bleu = -1.0;  // last training-set BLEU-4, -1 if never evaluated
  std::string last_checkpoint;
  std::string best_checkpoint;
};

/// Loads the manifest under data_dir and runs teacher-forced training per the
/// config. Writes train_log.csv ("step,epoch,lr,loss"), last.ckpt per epoch
/// and best.ckpt at new best epoch-mean loss. A non-finite loss aborts with
/// NumericError.
TrainResult train(const RunConfig& cfg, const std::string& data_dir, const TrainOptions& opts);

/// Greedy-decodes every sample and scores BLEU-4 against its caption.
double training_bleu(const Captioner& model, const std::vector<Sample>& samples);

/// Rebuilds a Captioner from a checkpoint (weights, vocab, config).
Captioner captioner_from_checkpoint(const std::string& path);

/// Loads a sample image and replicates it to the configured clip length.
std::vector<float> sample_planes(const RunConfig& cfg, const std::string& image_path);

}  // namespace swincap
