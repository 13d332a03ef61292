#pragma once

#include <string>
#include <vector>

#include "swincap/common.hpp"

namespace swincap {

struct EvalRecord {
  std::vector<std::string> candidate;
  std::vector<std::vector<std::string>> references;  // nonempty
};

/// Tokenizes with the training tokenizer so train and eval agree.
EvalRecord make_record(const std::string& candidate, const std::vector<std::string>& references);

/// Corpus-level BLEU-4: clipped modified n-gram precisions for n = 1..4,
/// geometric mean, brevity penalty exp(1 - r/c) when c < r with r summed from
/// the closest reference length per record (ties break shorter). Any zero
/// precision zeroes the score; no smoothing.
double bleu4(const std::vector<EvalRecord>& records);

/// tf-idf cosine over n-grams 1..4 against each reference with a Gaussian
/// length penalty exp(-(lc-lr)^2/72), averaged over references and over n,
/// scaled by 10, then averaged over the corpus. idf = log(N / max(df, 1))
/// where df counts reference sets containing the n-gram. A single-record
/// corpus is degenerate (every idf is zero); *degenerate flags it.
double cider(const std::vector<EvalRecord>& records, bool* degenerate = nullptr);

/// Reads JSON-lines {"candidate": str, "references": [str, ...]}.
std::vector<EvalRecord> load_eval_records(const std::string& path);

}  // namespace swincap
