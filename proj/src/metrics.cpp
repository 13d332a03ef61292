#include "swincap/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "swincap/vocab.hpp"

namespace swincap {

namespace {

using Counts = std::unordered_map<std::string, i64>;

// n-grams as joined strings; \x1f cannot appear in tokenizer output
Counts ngram_counts(const std::vector<std::string>& toks, i64 n) {
  Counts c;
  if (static_cast<i64>(toks.size()) < n) return c;
  for (size_t i = 0; i + static_cast<size_t>(n) <= toks.size(); ++i) {
    std::string key = toks[i];
    for (size_t j = 1; j < static_cast<size_t>(n); ++j) {
      key.push_back('\x1f');
      key += toks[i + j];
    }
    ++c[key];
  }
  return c;
}

void require_records(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw IoError("metric needs at least one record");
  for (const EvalRecord& r : records)
    if (r.references.empty()) throw IoError("every record needs at least one reference");
}

}  // namespace

EvalRecord make_record(const std::string& candidate, const std::vector<std::string>& references) {
  EvalRecord r;
  r.candidate = split_words(candidate);
  for (const std::string& ref : references) r.references.push_back(split_words(ref));
  return r;
}

double bleu4(const std::vector<EvalRecord>& records) {
  require_records(records);
  i64 clipped[4] = {0, 0, 0, 0};
  i64 total[4] = {0, 0, 0, 0};
  i64 cand_len = 0, ref_len = 0;
  for (const EvalRecord& r : records) {
    const i64 c = static_cast<i64>(r.candidate.size());
    cand_len += c;
    i64 best_ref = static_cast<i64>(r.references[0].size());
    for (const auto& ref : r.references) {
      const i64 rl = static_cast<i64>(ref.size());
      const i64 gap = std::abs(rl - c), best_gap = std::abs(best_ref - c);
      if (gap < best_gap || (gap == best_gap && rl < best_ref)) best_ref = rl;
    }
    ref_len += best_ref;
    for (i64 n = 1; n <= 4; ++n) {
      Counts cc = ngram_counts(r.candidate, n);
      Counts cap;  // max count across references
      for (const auto& ref : r.references)
        for (const auto& [key, cnt] : ngram_counts(ref, n))
          cap[key] = std::max(cap[key], cnt);
      for (const auto& [key, cnt] : cc) {
        total[n - 1] += cnt;
        auto it = cap.find(key);
        if (it != cap.end()) clipped[n - 1] += std::min(cnt, it->second);
      }
    }
  }
  double log_sum = 0.0;
  for (i64 n = 0; n < 4; ++n) {
    if (clipped[n] == 0 || total[n] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(clipped[n]) / static_cast<double>(total[n]));
  }
  double bp = 1.0;
  if (cand_len == 0) return 0.0;
  if (cand_len < ref_len)
    bp = std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
  return bp * std::exp(log_sum / 4.0);
}

double cider(const std::vector<EvalRecord>& records, bool* degenerate) {
  require_records(records);
  if (degenerate) *degenerate = records.size() < 2;
  const double n_docs = static_cast<double>(records.size());

  // document frequency per n-gram: in how many records' reference sets it occurs
  std::array<Counts, 4> df;
  for (const EvalRecord& r : records)
    for (i64 n = 1; n <= 4; ++n) {
      Counts seen;
      for (const auto& ref : r.references)
        for (const auto& [key, cnt] : ngram_counts(ref, n)) seen[key] = 1;
      for (const auto& [key, one] : seen) df[static_cast<size_t>(n - 1)][key] += 1;
    }
  auto idf = [&](i64 n, const std::string& key) {
    auto it = df[static_cast<size_t>(n - 1)].find(key);
    const i64 d = it == df[static_cast<size_t>(n - 1)].end() ? 0 : it->second;
    return std::log(n_docs / static_cast<double>(std::max<i64>(d, 1)));
  };

  double corpus = 0.0;
  for (const EvalRecord& r : records) {
    double record_score = 0.0;
    for (i64 n = 1; n <= 4; ++n) {
      Counts cc = ngram_counts(r.candidate, n);
      std::unordered_map<std::string, double> cv;
      double cnorm2 = 0.0;
      for (const auto& [key, cnt] : cc) {
        const double wgt = static_cast<double>(cnt) * idf(n, key);
        cv[key] = wgt;
        cnorm2 += wgt * wgt;
      }
      double level = 0.0;
      for (const auto& ref : r.references) {
        double dot = 0.0, rnorm2 = 0.0;
        for (const auto& [key, cnt] : ngram_counts(ref, n)) {
          const double wgt = static_cast<double>(cnt) * idf(n, key);
          rnorm2 += wgt * wgt;
          auto it = cv.find(key);
          if (it != cv.end()) dot += wgt * it->second;
        }
        double cos = 0.0;
        if (cnorm2 > 0.0 && rnorm2 > 0.0) cos = dot / (std::sqrt(cnorm2) * std::sqrt(rnorm2));
        const double dl = static_cast<double>(r.candidate.size()) - static_cast<double>(ref.size());
        level += cos * std::exp(-(dl * dl) / 72.0);
      }
      record_score += level / static_cast<double>(r.references.size());
    }
    corpus += 10.0 * record_score / 4.0;
  }
  return corpus / n_docs;
}

std::vector<EvalRecord> load_eval_records(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path);
  std::vector<EvalRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("candidate") || !j.contains("references") ||
        !j["candidate"].is_string() || !j["references"].is_array())
      throw IoError("malformed eval record: " + line);
    std::vector<std::string> refs;
    for (const auto& r : j["references"]) {
      if (!r.is_string()) throw IoError("malformed eval record: " + line);
      refs.push_back(r.get<std::string>());
    }
    out.push_back(make_record(j["candidate"].get<std::string>(), refs));
  }
  return out;
}

}  // namespace swincap
