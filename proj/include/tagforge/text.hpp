#pragma once

// Shallow text encoders.
//
// Tokens are maximal runs of ASCII letters and digits, lowercased; every
// other byte separates tokens. The vocabulary keeps the `vocab_size` terms
// with the highest document frequency, ties broken lexicographically, and
// is ordered that way. TF-IDF uses raw counts for tf and the smoothed
// idf = ln((1 + N) / (1 + df)) + 1; rows are L2-normalized (empty rows stay 0).

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tagforge/error.hpp"
#include "tagforge/tensor.hpp"

namespace tagforge {

inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 128 && std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

struct Vocabulary {
  std::vector<std::string> terms;
  std::vector<std::size_t> doc_freq;  // parallel to terms
  std::size_t num_docs = 0;

  std::unordered_map<std::string, std::size_t> index() const {
    std::unordered_map<std::string, std::size_t> idx;
    for (std::size_t k = 0; k < terms.size(); ++k) idx.emplace(terms[k], k);
    return idx;
  }
};

inline Vocabulary build_vocabulary(const std::vector<std::string>& corpus, std::size_t vocab_size) {
  if (corpus.empty()) throw DataError("text encoder: empty corpus");
  if (vocab_size == 0) throw ConfigError("text encoder: vocab_size must be positive");
  std::map<std::string, std::size_t> df;
  for (const auto& doc : corpus) {
    auto toks = tokenize(doc);
    std::sort(toks.begin(), toks.end());
    toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
    for (auto& t : toks) ++df[std::move(t)];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(df.begin(), df.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });  // map order breaks ties
  if (ranked.size() > vocab_size) ranked.resize(vocab_size);
  Vocabulary v;
  v.num_docs = corpus.size();
  for (auto& [term, f] : ranked) {
    v.terms.push_back(term);
    v.doc_freq.push_back(f);
  }
  return v;
}

struct TfidfResult {
  Tensor features;
  Vocabulary vocab;
  std::vector<double> idf;  // parallel to vocab.terms
};

inline TfidfResult tfidf(const std::vector<std::string>& corpus, std::size_t vocab_size) {
  TfidfResult r{{}, build_vocabulary(corpus, vocab_size), {}};
  const auto idx = r.vocab.index();
  const double n = static_cast<double>(corpus.size());
  auto& idf = r.idf;
  idf.resize(r.vocab.terms.size());
  for (std::size_t k = 0; k < idf.size(); ++k)
    idf[k] = std::log((1.0 + n) / (1.0 + static_cast<double>(r.vocab.doc_freq[k]))) + 1.0;

  r.features = Tensor(corpus.size(), r.vocab.terms.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto row = r.features.row(i);
    for (const auto& t : tokenize(corpus[i]))
      if (auto it = idx.find(t); it != idx.end()) row[it->second] += 1.0;
    double norm = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      row[k] *= idf[k];
      norm += row[k] * row[k];
    }
    if (norm > 0.0) {
      norm = std::sqrt(norm);
      for (auto& v : row) v /= norm;
    }
  }
  return r;
}

/// Binary keyword-presence matrix over the same vocabulary as tfidf().
inline Tensor word_binary(const std::vector<std::string>& corpus, std::size_t vocab_size) {
  const Vocabulary vocab = build_vocabulary(corpus, vocab_size);
  const auto idx = vocab.index();
  Tensor out(corpus.size(), vocab.terms.size());
  for (std::size_t i = 0; i < corpus.size(); ++i)
    for (const auto& t : tokenize(corpus[i]))
      if (auto it = idx.find(t); it != idx.end()) out(i, it->second) = 1.0;
  return out;
}

}  // namespace tagforge
