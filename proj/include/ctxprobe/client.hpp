#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <unordered_map>
#include <vector>

#include "ctxprobe/jsonl.hpp"
#include "ctxprobe/perturb.hpp"
#include "ctxprobe/prompt.hpp"
#include "ctxprobe/tokenizer.hpp"

namespace ctxprobe {

struct BackendConfig {
  std::string base_url = "http://127.0.0.1:8000";
  std::string api_key;  // read from the environment by the caller
  std::string model_id;
  double request_timeout_s = 120.0;
  int max_retries = 3;  // retries after the first attempt
  int max_parallel = 4;
  std::filesystem::path cache_dir;  // empty disables the response cache
  std::chrono::milliseconds retry_backoff{250};
  // Vocabulary for random context; when unset the backend's /vocab is asked.
  std::optional<std::size_t> vocab_size;
  std::vector<int> excluded_token_ids;

  void validate() const;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// Raised by transports for connection-level failures (retryable).
class TransportFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const std::string& path, const std::string& body) = 0;
};

/// HTTP(S) transport over cpp-httplib; one connection per request.
class HttpTransport final : public Transport {
 public:
  HttpTransport(std::string base_url, std::string api_key, double timeout_s);
  HttpResponse post(const std::string& path, const std::string& body) override;

 private:
  std::string base_url_;
  std::string api_key_;
  double timeout_s_;
};

struct DecodingParams {
  int max_tokens = 256;
  double temperature = 0.0;
  std::vector<std::string> stop = {"\n"};
};

struct GenerationResult {
  std::string text;
  std::string finish_reason;
  int tokens_used = 0;
  bool cached = false;
  int attempts = 0;  // network attempts; 0 on a cache hit
};

/// Forced-decode scores of a continuation, natural-log.
struct ScoredSequence {
  std::vector<std::string> tokens;
  std::vector<int> token_ids;  // -1 where the backend does not report ids
  std::vector<double> logprobs;
  double total_logprob = 0.0;

  /// Validates lengths and signs and sets total_logprob.
  static ScoredSequence make(std::vector<std::string> tokens, std::vector<int> ids, std::vector<double> logprobs);
};

json to_json(const ScoredSequence& s);
ScoredSequence scored_from_json(const json& j);

struct TokenOffset {
  int id;
  std::size_t begin;  // bytes
  std::size_t end;
};

/// Persistent response cache: cache_dir/<first two hex>/<sha256>.json plus a
/// manifest.jsonl index. Writes go through temp files and renames.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);
  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const std::string& endpoint, const std::string& body);
  std::size_t entry_count() const;
  std::filesystem::path path_for(const std::string& key) const;

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
};

std::string sha256_hex(std::string_view data);

struct ClientStats {
  std::atomic<std::size_t> cache_hits{0};
  std::atomic<std::size_t> cache_misses{0};
  std::atomic<std::size_t> network_attempts{0};
};

/// Completions-API client (OpenAI/vLLM wire format) for generation,
/// forced-decode scoring via echo+logprobs, and server-side tokenization.
/// Thread-safe; at most max_parallel requests are in flight.
class Client final : public TokenizerHandle {
 public:
  Client(BackendConfig config, std::shared_ptr<Transport> transport);

  GenerationResult generate(const RenderedPrompt& prompt, const DecodingParams& params);

  /// Scores `continuation` appended to the prompt text; only tokens that end
  /// past the prompt are returned.
  ScoredSequence score_continuation(const RenderedPrompt& prompt, const std::string& continuation);

  /// Scores `continuation` ids after `prefix` ids (token-level input).
  ScoredSequence score_ids(const std::vector<int>& prefix, const std::vector<int>& continuation);

  std::vector<int> tokenize(const std::string& text) override;
  std::string detokenize(const std::vector<int>& ids) override;
  std::vector<TokenOffset> tokenize_with_offsets(const std::string& text);
  Vocabulary vocabulary();

  /// Probes the backend once; throws CapabilityError when forced scoring or
  /// tokenization (as requested) is unsupported.
  void check_capabilities(bool need_scoring, bool need_tokenizer);

  const BackendConfig& config() const { return config_; }
  const ClientStats& stats() const { return stats_; }
  std::size_t cache_entries() const { return cache_ ? cache_->entry_count() : 0; }

 private:
  struct Reply {
    json body;
    bool cached = false;
    int attempts = 0;
  };
  Reply post_json(const std::string& path, const json& request);
  HttpResponse send_with_retries(const std::string& path, const std::string& body, int& attempts);
  std::string token_surface(int id);

  BackendConfig config_;
  std::shared_ptr<Transport> transport_;
  std::unique_ptr<ResponseCache> cache_;
  std::counting_semaphore<4096> in_flight_;
  ClientStats stats_;
  std::mutex surface_mu_;
  std::unordered_map<int, std::string> surface_memo_;
  std::optional<bool> scoring_ok_;
};

}  // namespace ctxprobe
