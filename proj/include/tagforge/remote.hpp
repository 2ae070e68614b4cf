#pragma once

// Client for a generic embedding service.
//
//   POST <endpoint>/embed   {"model": "<id>", "texts": ["...", ...]}
//   200                     {"embeddings": [[...], ...]}   one row per text
//
// Any other status, or a connection failure, is a transport failure and is
// retried with exponential backoff. Every returned vector is cached on disk
// as <cache_dir>/<sha256(model NUL text) hex>.emb (EMB1, one row), so a
// repeat call over the same texts sends no request.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <future>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <openssl/evp.h>

#include <httplib.h>
#include <json.hpp>

#include "tagforge/emb1.hpp"
#include "tagforge/error.hpp"
#include "tagforge/tensor.hpp"

namespace tagforge {

struct RemoteSpec {
  std::string endpoint;  // scheme://host[:port][/prefix]
  std::string model;
  std::size_t batch_size = 32;
  std::filesystem::path cache_dir;
  std::size_t max_attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
  std::size_t max_in_flight = 1;
  std::chrono::seconds timeout{60};
  std::string api_key;  // sent as a bearer token when non-empty
};

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out.push_back(kHex[digest[k] >> 4]);
    out.push_back(kHex[digest[k] & 0xF]);
  }
  return out;
}

/// On-disk cache of single embedding rows keyed by (model id, text).
class EmbeddingCache {
 public:
  explicit EmbeddingCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (dir_.empty()) throw ConfigError("embedding cache: no cache directory configured");
    std::filesystem::create_directories(dir_);
  }

  std::filesystem::path entry_path(const std::string& model, const std::string& text) const {
    std::string key = model;
    key.push_back('\0');
    key += text;
    return dir_ / (sha256_hex(key) + ".emb");
  }

  std::optional<std::vector<float>> get(const std::string& model, const std::string& text) const {
    const auto p = entry_path(model, text);
    if (!std::filesystem::exists(p)) return std::nullopt;
    const Matrix<float> m = load_embedding_file(p);
    if (m.rows() != 1) throw FormatError(p.string() + ": cache entry must hold one row");
    return std::vector<float>(m.values().begin(), m.values().end());
  }

  /// Entries are immutable: an existing entry is never rewritten.
  void put(const std::string& model, const std::string& text, const std::vector<float>& v) const {
    const auto p = entry_path(model, text);
    if (std::filesystem::exists(p)) return;
    detail::write_file_atomic(p, encode_emb1(Matrix<float>(1, v.size(), v)));
  }

 private:
  std::filesystem::path dir_;
};

namespace detail {

struct ParsedEndpoint {
  std::string origin;  // scheme://host:port
  std::string path;    // prefix + "/embed"
};

inline ParsedEndpoint parse_endpoint(const std::string& endpoint) {
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("remote endpoint needs a scheme: " + endpoint);
  const auto path_start = endpoint.find('/', scheme_end + 3);
  ParsedEndpoint p;
  p.origin = endpoint.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : endpoint.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  p.path = prefix + "/embed";
  return p;
}

/// One request with retries. Returns one vector per input text.
inline std::vector<std::vector<float>> post_batch(const RemoteSpec& spec, const std::vector<std::string>& texts) {
  const auto ep = parse_endpoint(spec.endpoint);
  httplib::Client client(ep.origin);
  client.set_connection_timeout(spec.timeout);
  client.set_read_timeout(spec.timeout);
  client.set_write_timeout(spec.timeout);
  httplib::Headers headers;
  if (!spec.api_key.empty()) headers.emplace("Authorization", "Bearer " + spec.api_key);

  const std::string body = nlohmann::json{{"model", spec.model}, {"texts", texts}}.dump();
  std::string last_error;
  auto backoff = spec.initial_backoff;
  for (std::size_t attempt = 1; attempt <= spec.max_attempts; ++attempt) {
    auto res = client.Post(ep.path, headers, body, "application/json");
    if (res && res->status == 200) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(res->body);
        auto rows = j.at("embeddings").get<std::vector<std::vector<float>>>();
        if (rows.size() != texts.size())
          throw FormatError(spec.endpoint + ": " + std::to_string(rows.size()) + " embeddings for " +
                            std::to_string(texts.size()) + " texts");
        return rows;
      } catch (const nlohmann::json::exception& e) {
        throw FormatError(spec.endpoint + ": malformed response: " + e.what());
      }
    }
    last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
    if (attempt < spec.max_attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw TransportError(spec.endpoint + ": " + last_error + " after " + std::to_string(spec.max_attempts) +
                       " attempts");
}

}  // namespace detail

/// Embeds `texts` through the service described by `spec`; row i of the
/// result belongs to texts[i]. Cached texts are not re-sent and duplicate
/// texts are sent once.
inline Matrix<float> remote_embed(const RemoteSpec& spec, const std::vector<std::string>& texts) {
  if (spec.endpoint.empty()) throw ConfigError("remote encoder: endpoint not set");
  if (spec.batch_size == 0) throw ConfigError("remote encoder: batch_size must be positive");
  const EmbeddingCache cache(spec.cache_dir);

  std::vector<std::vector<float>> rows(texts.size());
  std::vector<std::string> missing;
  std::unordered_map<std::string, std::vector<std::size_t>> where;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (auto hit = cache.get(spec.model, texts[i])) {
      rows[i] = std::move(*hit);
      continue;
    }
    auto& slots = where[texts[i]];
    if (slots.empty()) missing.push_back(texts[i]);
    slots.push_back(i);
  }

  std::vector<std::vector<std::string>> batches;
  for (std::size_t k = 0; k < missing.size(); k += spec.batch_size)
    batches.emplace_back(missing.begin() + static_cast<std::ptrdiff_t>(k),
                         missing.begin() + static_cast<std::ptrdiff_t>(std::min(missing.size(), k + spec.batch_size)));

  std::optional<std::size_t> dim;
  const auto check_dim = [&](std::size_t d) {
    if (d == 0) throw FormatError(spec.endpoint + ": empty embedding vector");
    if (dim && *dim != d)
      throw ShapeError("remote encoder: dimension mismatch (" + std::to_string(*dim) + " vs " + std::to_string(d) + ")");
    dim = d;
  };
  for (const auto& r : rows)
    if (!r.empty()) check_dim(r.size());

  const std::size_t width = std::max<std::size_t>(1, spec.max_in_flight);
  for (std::size_t start = 0; start < batches.size(); start += width) {
    const std::size_t stop = std::min(batches.size(), start + width);
    std::vector<std::future<std::vector<std::vector<float>>>> inflight;
    for (std::size_t b = start; b < stop; ++b)
      inflight.push_back(std::async(std::launch::async, detail::post_batch, std::cref(spec), std::cref(batches[b])));
    for (std::size_t b = start; b < stop; ++b) {
      auto got = inflight[b - start].get();
      for (std::size_t t = 0; t < got.size(); ++t) {
        check_dim(got[t].size());
        for (float v : got[t])
          if (!std::isfinite(v)) throw FormatError(spec.endpoint + ": non-finite embedding value");
        const std::string& text = batches[b][t];
        cache.put(spec.model, text, got[t]);
        for (std::size_t i : where[text]) rows[i] = got[t];
      }
    }
  }

  Matrix<float> out(texts.size(), dim.value_or(0));
  for (std::size_t i = 0; i < texts.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), out.row(i).begin());
  return out;
}

}  // namespace tagforge
