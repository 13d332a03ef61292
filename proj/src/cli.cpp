#include "swincap/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <ostream>

#include "swincap/checkpoint.hpp"
#include "swincap/config.hpp"
#include "swincap/corpus.hpp"
#include "swincap/cost.hpp"
#include "swincap/metrics.hpp"
#include "swincap/trainer.hpp"
#include "swincap/vocab.hpp"

namespace swincap {

namespace {

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw NumericError("cannot format number");
  return {buf, end};
}

std::string slurp_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

RunConfig load_config(const std::string& path) {
  return path.empty() ? RunConfig{} : config_from_text(slurp_file(path));
}

void cmd_gen_corpus(std::ostream& out, u64 seed, i64 count, i64 size, i64 patch,
                    const std::string& dir) {
  if (count < 1) throw ConfigError("count must be positive, got " + std::to_string(count));
  if (patch < 1) throw ConfigError("patch must be positive, got " + std::to_string(patch));
  if (size % (patch * 8) != 0)
    throw ConfigError("image size " + std::to_string(size) +
                      " is not divisible by patch*2^3 = " + std::to_string(patch * 8) +
                      " (the encoder halves the grid three times)");
  gen_corpus(dir, seed, count, size);
  std::vector<Sample> samples = load_manifest(dir);
  std::vector<std::string> captions;
  for (const Sample& s : samples) captions.push_back(s.caption);
  out << "manifest: " << dir << "/manifest.jsonl\n";
  out << "vocab: " << Vocabulary::build(captions).size() << "\n";
}

void cmd_train(std::ostream& out, const std::string& config_path, const std::string& data,
               const std::string& out_dir, const std::string& resume, i64 max_steps,
               double target_bleu, i64 eval_every) {
  RunConfig cfg = load_config(config_path);
  RunConfig shown = resume.empty() ? cfg : config_from_text(load_checkpoint(resume).config_text);
  out << to_text(shown);

  TrainOptions opts;
  opts.out_dir = out_dir;
  opts.resume_from = resume;
  opts.max_steps = max_steps;
  opts.target_bleu = target_bleu;
  opts.eval_every = eval_every;
  opts.echo = &out;
  TrainResult res = train(cfg, data, opts);

  out << "trained " << res.steps << " steps\n";
  out << "final loss " << fmt(res.final_loss) << "\n";
  out << "last checkpoint " << res.last_checkpoint << "\n";
  if (!res.best_checkpoint.empty()) out << "best checkpoint " << res.best_checkpoint << "\n";
  if (res.bleu >= 0) out << "training bleu4 " << fmt(res.bleu) << "\n";
}

void cmd_caption(std::ostream& out, const std::string& ckpt, const std::string& image) {
  Captioner model = captioner_from_checkpoint(ckpt);
  out << model.caption(sample_planes(model.cfg, image)) << "\n";
}

void cmd_eval(std::ostream& out, std::ostream& err, const std::string& ckpt,
              const std::string& data, const std::string& pairs, bool csv) {
  std::vector<EvalRecord> records;
  if (!pairs.empty()) {
    records = load_eval_records(pairs);
  } else {
    if (ckpt.empty() || data.empty())
      throw ConfigError("eval needs --pairs, or --checkpoint together with --data");
    Captioner model = captioner_from_checkpoint(ckpt);
    std::vector<Sample> samples = load_manifest(data);
    for (const Sample& s : samples) {
      std::string cand = model.caption(sample_planes(model.cfg, s.image));
      records.push_back(make_record(cand, {s.caption}));
    }
  }
  bool degenerate = false;
  const double b = bleu4(records);
  const double c = cider(records, &degenerate);
  if (degenerate)
    err << "note: single-record corpus, every idf is zero so CIDEr degenerates to 0\n";
  if (csv) {
    out << "metric,value\n";
    out << "bleu4," << fmt(b) << "\n";
    out << "cider," << fmt(c) << "\n";
  } else {
    out << "| metric | value |\n|---|---:|\n";
    out << "| BLEU-4 | " << fmt(b) << " |\n";
    out << "| CIDEr | " << fmt(c) << " |\n";
  }
}

void cmd_flops(std::ostream& out, const std::string& config_path, bool compare, bool csv,
               i64 vocab) {
  RunConfig cfg = load_config(config_path);
  if (!compare) {
    CostReport rep = model_report(cfg, vocab);
    out << (csv ? report_csv(rep) : report_markdown(rep));
    return;
  }
  const char* names[] = {"swin", "swinmlp"};
  CostReport reps[2];
  for (int i = 0; i < 2; ++i) {
    RunConfig c = cfg;
    c.model = normalize_model_name(names[i]);
    reps[i] = model_report(c, vocab);
  }
  if (csv) {
    out << "model,encoder_params,encoder_macs,total_params,total_macs\n";
    for (int i = 0; i < 2; ++i)
      out << names[i] << "," << reps[i].encoder_params << "," << reps[i].encoder_measured << ","
          << reps[i].total_params << "," << reps[i].total_measured << "\n";
  } else {
    out << "| model | encoder params | encoder MACs | total params | total MACs |\n";
    out << "|---|---:|---:|---:|---:|\n";
    for (int i = 0; i < 2; ++i)
      out << "| " << names[i] << " | " << reps[i].encoder_params << " | "
          << reps[i].encoder_measured << " | " << reps[i].total_params << " | "
          << reps[i].total_measured << " |\n";
  }
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Window-mixer image captioning: corpus generation, training, decoding,"
               " metrics and cost reports"};
  app.name("swincap");
  app.require_subcommand(1);

  u64 seed = 1;
  i64 count = 0, size = 64, patch = 4, max_steps = 0, eval_every = 0, vocab = 20;
  double target_bleu = 0.0;
  std::string out_dir, config_path, data_dir, resume, ckpt, image, pairs;
  bool csv = false, compare = false;

  CLI::App* gen = app.add_subcommand("gen-corpus", "Render a deterministic synthetic corpus");
  gen->add_option("--seed", seed, "RNG seed; the whole corpus derives from it");
  gen->add_option("--count", count, "number of samples")->required();
  gen->add_option("--size", size, "square image side in pixels");
  gen->add_option("--patch", patch, "patch size the corpus must stay divisible by");
  gen->add_option("--out", out_dir, "output directory")->required();

  CLI::App* tr = app.add_subcommand("train", "Train a captioner on a generated corpus");
  tr->add_option("--config", config_path, "key=value config file; defaults when omitted");
  tr->add_option("--data", data_dir, "corpus directory with manifest.jsonl")->required();
  tr->add_option("--out", out_dir, "directory for checkpoints and train_log.csv")->required();
  tr->add_option("--resume", resume, "checkpoint to continue from (its config wins)");
  tr->add_option("--max-steps", max_steps, "stop after this many optimizer steps (0 = epochs)");
  tr->add_option("--target-bleu", target_bleu, "stop once training-set BLEU-4 reaches this");
  tr->add_option("--eval-every", eval_every, "step interval for the BLEU stop check");

  CLI::App* cap = app.add_subcommand("caption", "Caption one image with a trained checkpoint");
  cap->add_option("--checkpoint", ckpt, "trained model checkpoint")->required();
  cap->add_option("--image", image, "raw RGB image file")->required();

  CLI::App* ev = app.add_subcommand("eval", "Score BLEU-4 and CIDEr");
  ev->add_option("--checkpoint", ckpt, "trained model checkpoint");
  ev->add_option("--data", data_dir, "corpus whose captions act as references");
  ev->add_option("--pairs", pairs, "JSONL of {candidate, references}; skips decoding");
  ev->add_flag("--csv", csv, "emit metric,value CSV instead of a table");

  CLI::App* fl = app.add_subcommand("flops", "Report per-module parameter and MAC counts");
  fl->add_option("--config", config_path, "key=value config file; defaults when omitted");
  fl->add_flag("--compare", compare, "run swin and swinmlp side by side at this config");
  fl->add_flag("--csv", csv, "emit CSV instead of a Markdown table");
  fl->add_option("--vocab", vocab, "vocabulary size used to size the decoder");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) cmd_gen_corpus(out, seed, count, size, patch, out_dir);
    if (tr->parsed())
      cmd_train(out, config_path, data_dir, out_dir, resume, max_steps, target_bleu, eval_every);
    if (cap->parsed()) cmd_caption(out, ckpt, image);
    if (ev->parsed()) cmd_eval(out, err, ckpt, data_dir, pairs, csv);
    if (fl->parsed()) cmd_flops(out, config_path, compare, csv, vocab);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {  // shape and numeric failures
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace swincap
