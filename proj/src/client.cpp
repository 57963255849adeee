#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "ctxprobe/client.hpp"

#include <cmath>
#include <fstream>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <openssl/evp.h>

#include "ctxprobe/error.hpp"
#include "ctxprobe/text.hpp"

namespace ctxprobe {

namespace fs = std::filesystem;

void BackendConfig::validate() const {
  if (model_id.empty()) throw ConfigError("must not be empty", "model_id");
  if (max_parallel < 1) throw ConfigError("must be >= 1", "backend.max_parallel");
  if (max_parallel > 4096) throw ConfigError("must be <= 4096", "backend.max_parallel");
  if (max_retries < 0) throw ConfigError("must be >= 0", "backend.max_retries");
  if (!(request_timeout_s > 0)) throw ConfigError("must be > 0", "backend.timeout_s");
  if (vocab_size && *vocab_size == 0) throw ConfigError("must be > 0", "backend.vocab_size");
}

HttpTransport::HttpTransport(std::string base_url, std::string api_key, double timeout_s)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)), timeout_s_(timeout_s) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
  if (base_url_.rfind("http://", 0) != 0 && base_url_.rfind("https://", 0) != 0)
    throw ConfigError("must start with http:// or https://", "backend.base_url");
}

HttpResponse HttpTransport::post(const std::string& path, const std::string& body) {
  const auto scheme_end = base_url_.find("://") + 3;
  const auto path_start = base_url_.find('/', scheme_end);
  const std::string origin = base_url_.substr(0, path_start);
  const std::string prefix = path_start == std::string::npos ? "" : base_url_.substr(path_start);

  httplib::Client cli(origin);
  const auto secs = static_cast<time_t>(timeout_s_);
  const auto usecs = static_cast<time_t>((timeout_s_ - double(secs)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto res = cli.Post(prefix + path, headers, body, "application/json");
  if (!res) throw TransportFailure(fmt::format("POST {}{}: {}", base_url_, path, httplib::to_string(res.error())));
  return {res->status, res->body};
}

ScoredSequence ScoredSequence::make(std::vector<std::string> tokens, std::vector<int> ids,
                                    std::vector<double> logprobs) {
  if (tokens.size() != logprobs.size() || ids.size() != tokens.size())
    throw BackendError("scored sequence has mismatched token and logprob counts");
  ScoredSequence s;
  for (double& lp : logprobs) {
    if (!std::isfinite(lp) && !(std::isinf(lp) && lp < 0)) throw BackendError("non-finite logprob");
    if (lp > 1e-6) throw BackendError(fmt::format("positive logprob {}", lp));
    lp = std::min(lp, 0.0);
    s.total_logprob += lp;
  }
  s.tokens = std::move(tokens);
  s.token_ids = std::move(ids);
  s.logprobs = std::move(logprobs);
  return s;
}

json to_json(const ScoredSequence& s) {
  return {{"tokens", s.tokens}, {"token_ids", s.token_ids}, {"logprobs", s.logprobs},
          {"total_logprob", s.total_logprob}};
}

ScoredSequence scored_from_json(const json& j) {
  return ScoredSequence::make(j.at("tokens").get<std::vector<std::string>>(),
                              j.at("token_ids").get<std::vector<int>>(),
                              j.at("logprobs").get<std::vector<double>>());
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

fs::path ResponseCache::path_for(const std::string& key) const {
  return dir_ / key.substr(0, 2) / (key + ".json");
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  const auto p = path_for(key);
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return s;
}

void ResponseCache::put(const std::string& key, const std::string& endpoint, const std::string& body) {
  const auto p = path_for(key);
  std::lock_guard lock(mu_);
  if (fs::exists(p)) return;
  fs::create_directories(p.parent_path());
  atomic_write(p, body);
  std::ofstream manifest(dir_ / "manifest.jsonl", std::ios::app | std::ios::binary);
  manifest << json{{"key", key}, {"endpoint", endpoint}, {"bytes", body.size()}}.dump() << '\n';
}

std::size_t ResponseCache::entry_count() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir_))
    if (e.is_regular_file() && e.path().extension() == ".json") ++n;
  return n;
}

Client::Client(BackendConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)), in_flight_(config_.max_parallel) {
  config_.validate();
  if (!transport_) throw ConfigError("no transport");
  if (!config_.cache_dir.empty()) cache_ = std::make_unique<ResponseCache>(config_.cache_dir);
}

HttpResponse Client::send_with_retries(const std::string& path, const std::string& body, int& attempts) {
  std::string last_error;
  for (attempts = 1;; ++attempts) {
    bool retryable = false;
    try {
      stats_.network_attempts++;
      in_flight_.acquire();
      HttpResponse res;
      try {
        res = transport_->post(path, body);
      } catch (...) {
        in_flight_.release();
        throw;
      }
      in_flight_.release();
      if (res.status >= 200 && res.status < 300) return res;
      if (res.status == 429 || res.status >= 500) {
        retryable = true;
        last_error = fmt::format("HTTP {} from {}", res.status, path);
      } else {
        throw RefusalError(fmt::format("{} rejected the request: {}", path, res.body.substr(0, 300)), res.status);
      }
    } catch (const TransportFailure& e) {
      retryable = true;
      last_error = e.what();
    }
    if (!retryable || attempts > config_.max_retries) break;
    const auto delay = config_.retry_backoff * (1LL << std::min(attempts - 1, 6));
    if (delay.count() > 0) std::this_thread::sleep_for(delay);
  }
  throw TransportError(last_error, attempts);
}

Client::Reply Client::post_json(const std::string& path, const json& request) {
  const std::string body = request.dump();
  std::string key;
  if (cache_) {
    key = sha256_hex(config_.base_url + "\n" + config_.model_id + "\n" + path + "\n" + body);
    if (auto hit = cache_->get(key)) {
      try {
        Reply r{json::parse(*hit), true, 0};
        stats_.cache_hits++;
        return r;
      } catch (const json::exception&) {
        // unreadable entry: refetch and overwrite below
        fs::remove(cache_->path_for(key));
      }
    }
  }
  stats_.cache_misses++;
  Reply r;
  const HttpResponse res = send_with_retries(path, body, r.attempts);
  try {
    r.body = json::parse(res.body);
  } catch (const json::exception&) {
    throw BackendError(fmt::format("{} returned invalid JSON", path));
  }
  if (cache_) cache_->put(key, path, res.body);
  return r;
}

GenerationResult Client::generate(const RenderedPrompt& prompt, const DecodingParams& params) {
  json req = {{"model", config_.model_id}, {"prompt", prompt.text}, {"max_tokens", params.max_tokens},
              {"temperature", params.temperature}};
  if (!params.stop.empty()) req["stop"] = params.stop;
  const Reply r = post_json("/v1/completions", req);
  GenerationResult g;
  try {
    const json& choice = r.body.at("choices").at(0);
    g.text = choice.at("text").get<std::string>();
    if (choice.contains("finish_reason") && choice["finish_reason"].is_string())
      g.finish_reason = choice["finish_reason"].get<std::string>();
    if (r.body.contains("usage") && r.body["usage"].contains("total_tokens"))
      g.tokens_used = r.body["usage"]["total_tokens"].get<int>();
  } catch (const json::exception& e) {
    throw BackendError(fmt::format("unexpected completion response: {}", e.what()));
  }
  g.cached = r.cached;
  g.attempts = r.attempts;
  return g;
}

namespace {

struct EchoLogprobs {
  std::vector<std::string> tokens;
  std::vector<json> logprobs;
  std::vector<std::size_t> offsets;
  std::vector<int> ids;
};

EchoLogprobs parse_echo(const json& body) {
  const json* lp = nullptr;
  try {
    lp = &body.at("choices").at(0).at("logprobs");
  } catch (const json::exception&) {
    throw CapabilityError("backend returned no logprobs for an echo request");
  }
  if (lp->is_null() || !lp->contains("token_logprobs") || !lp->contains("tokens"))
    throw CapabilityError("backend does not support prompt logprobs (echo)");
  EchoLogprobs out;
  out.tokens = lp->at("tokens").get<std::vector<std::string>>();
  out.logprobs = lp->at("token_logprobs").get<std::vector<json>>();
  if (lp->contains("text_offset")) out.offsets = lp->at("text_offset").get<std::vector<std::size_t>>();
  if (lp->contains("token_ids")) out.ids = lp->at("token_ids").get<std::vector<int>>();
  else out.ids.assign(out.tokens.size(), -1);
  if (out.logprobs.size() != out.tokens.size() || out.ids.size() != out.tokens.size() ||
      (!out.offsets.empty() && out.offsets.size() != out.tokens.size()))
    throw BackendError("echo logprobs arrays have inconsistent lengths");
  return out;
}

ScoredSequence tail_of(const EchoLogprobs& e, std::size_t first) {
  std::vector<std::string> toks;
  std::vector<int> ids;
  std::vector<double> lps;
  for (std::size_t i = first; i < e.tokens.size(); ++i) {
    if (!e.logprobs[i].is_number())
      throw CapabilityError("backend returned a null logprob inside the scored continuation");
    toks.push_back(e.tokens[i]);
    ids.push_back(e.ids[i]);
    lps.push_back(e.logprobs[i].get<double>());
  }
  return ScoredSequence::make(std::move(toks), std::move(ids), std::move(lps));
}

}  // namespace

ScoredSequence Client::score_continuation(const RenderedPrompt& prompt, const std::string& continuation) {
  if (continuation.empty()) return {};
  json req = {{"model", config_.model_id}, {"prompt", prompt.text + continuation}, {"max_tokens", 0},
              {"echo", true}, {"logprobs", 0}, {"temperature", 0}};
  const EchoLogprobs e = parse_echo(post_json("/v1/completions", req).body);
  if (e.offsets.empty()) throw CapabilityError("backend echo response lacks text_offset");
  const std::size_t prompt_cps = text::codepoint_count(prompt.text);
  // First token that ends past the prompt, including one straddling the boundary.
  std::size_t first = e.tokens.size();
  for (std::size_t i = 0; i < e.tokens.size(); ++i) {
    if (e.offsets[i] + text::codepoint_count(e.tokens[i]) > prompt_cps) {
      first = i;
      break;
    }
  }
  return tail_of(e, first);
}

ScoredSequence Client::score_ids(const std::vector<int>& prefix, const std::vector<int>& continuation) {
  if (continuation.empty()) return {};
  std::vector<int> all = prefix;
  all.insert(all.end(), continuation.begin(), continuation.end());
  json req = {{"model", config_.model_id}, {"prompt", all}, {"max_tokens", 0},
              {"echo", true}, {"logprobs", 0}, {"temperature", 0}};
  const EchoLogprobs e = parse_echo(post_json("/v1/completions", req).body);
  if (e.tokens.size() != all.size())
    throw BackendError(fmt::format("echo returned {} tokens for {} input ids", e.tokens.size(), all.size()));
  ScoredSequence s = tail_of(e, prefix.size());
  for (std::size_t i = 0; i < continuation.size(); ++i) s.token_ids[i] = continuation[i];
  return s;
}

std::vector<int> Client::tokenize(const std::string& text) {
  if (text.empty()) return {};
  const Reply r = post_json("/tokenize", {{"model", config_.model_id}, {"prompt", text}, {"add_special_tokens", false}});
  if (!r.body.contains("tokens")) throw CapabilityError("backend /tokenize response lacks tokens");
  return r.body["tokens"].get<std::vector<int>>();
}

std::string Client::detokenize(const std::vector<int>& ids) {
  if (ids.empty()) return {};
  const Reply r = post_json("/detokenize", {{"model", config_.model_id}, {"tokens", ids}});
  if (!r.body.contains("prompt")) throw CapabilityError("backend /detokenize response lacks prompt");
  return r.body["prompt"].get<std::string>();
}

std::string Client::token_surface(int id) {
  {
    std::lock_guard lock(surface_mu_);
    if (auto it = surface_memo_.find(id); it != surface_memo_.end()) return it->second;
  }
  std::string s = detokenize({id});
  std::lock_guard lock(surface_mu_);
  surface_memo_.emplace(id, s);
  return s;
}

std::vector<TokenOffset> Client::tokenize_with_offsets(const std::string& text) {
  const std::vector<int> ids = tokenize(text);
  std::vector<TokenOffset> out;
  out.reserve(ids.size());
  // Fast path: per-token surfaces concatenate to the text.
  std::size_t pos = 0;
  bool exact = true;
  for (int id : ids) {
    const std::string s = token_surface(id);
    if (text.compare(pos, s.size(), s) != 0) {
      exact = false;
      break;
    }
    out.push_back({id, pos, pos + s.size()});
    pos += s.size();
  }
  if (exact && pos == text.size()) return out;
  // Slow path: decoded prefix lengths, clamped to stay monotone.
  out.clear();
  std::size_t prev = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::vector<int> prefix(ids.begin(), ids.begin() + std::ptrdiff_t(i + 1));
    std::size_t end = std::min(detokenize(prefix).size(), text.size());
    end = std::max(end, prev);
    out.push_back({ids[i], prev, end});
    prev = end;
  }
  if (!out.empty()) out.back().end = text.size();
  return out;
}

Vocabulary Client::vocabulary() {
  Vocabulary v;
  if (config_.vocab_size) {
    v.size = *config_.vocab_size;
    v.excluded = config_.excluded_token_ids;
  } else {
    Reply r;
    try {
      r = post_json("/vocab", {{"model", config_.model_id}});
    } catch (const RefusalError& e) {
      throw CapabilityError(
          fmt::format("backend exposes no vocabulary endpoint; set backend.vocab_size ({})", e.what()));
    }
    v.size = r.body.at("size").get<std::size_t>();
    v.excluded = r.body.value("excluded", std::vector<int>{});
  }
  std::sort(v.excluded.begin(), v.excluded.end());
  v.excluded.erase(std::unique(v.excluded.begin(), v.excluded.end()), v.excluded.end());
  return v;
}

void Client::check_capabilities(bool need_scoring, bool need_tokenizer) {
  if (need_tokenizer) {
    std::vector<int> ids;
    try {
      ids = tokenize("Hello world");
    } catch (const RefusalError& e) {
      throw CapabilityError(fmt::format("backend has no tokenizer endpoint: {}", e.what()));
    }
    if (ids.empty()) throw CapabilityError("backend tokenizer returned no tokens");
    try {
      (void)detokenize(ids);
    } catch (const RefusalError& e) {
      throw CapabilityError(fmt::format("backend has no detokenizer endpoint: {}", e.what()));
    }
  }
  if (need_scoring && !scoring_ok_) {
    RenderedPrompt p;
    p.text = "Hello";
    ScoredSequence s;
    try {
      s = score_continuation(p, " world");
    } catch (const RefusalError& e) {
      throw CapabilityError(fmt::format("backend rejected a forced-scoring request: {}", e.what()));
    }
    if (s.tokens.empty()) throw CapabilityError("backend returned no scored continuation tokens");
    scoring_ok_ = true;
  }
}

}  // namespace ctxprobe
