#include "ctxprobe/mock_backend.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include <fmt/format.h>

#include "ctxprobe/error.hpp"
#include "ctxprobe/random.hpp"
#include "ctxprobe/text.hpp"

namespace ctxprobe {

namespace {

double hash_unit(std::uint64_t seed, std::string_view key) {
  return double(derive_seed(seed, key) >> 11) * 0x1.0p-53;
}

std::string surface_key(const Tokenizer& tok, int id) { return text::trim(tok.token_text(id)); }

HttpResponse error_response(int status, const std::string& message) {
  return {status, json{{"error", {{"message", message}, {"code", status}}}}.dump()};
}

}  // namespace

std::vector<double> MockModel::sequence_logprobs(std::span<const int> ids, const Tokenizer& tok) const {
  std::vector<double> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) out[i] = logprob(ids.first(i), ids[i], tok);
  return out;
}

std::string MockModel::generate(const std::string&) const { return {}; }

UniformModel::UniformModel(std::size_t vocab_size) {
  if (vocab_size == 0) throw ConfigError("uniform model needs a non-empty vocabulary");
  lp_ = -std::log(double(vocab_size));
}

TableModel::TableModel(std::map<std::string, double> probs, double default_prob) : probs_(std::move(probs)) {
  auto check = [](double p) {
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError(fmt::format("table probability {} not in (0, 1]", p));
  };
  check(default_prob);
  for (auto& [_, p] : probs_) check(p);
  default_lp_ = std::log(default_prob);
}

double TableModel::logprob(std::span<const int>, int token, const Tokenizer& tok) const {
  auto it = probs_.find(surface_key(tok, token));
  return it == probs_.end() ? default_lp_ : std::log(it->second);
}

namespace {

constexpr std::uint64_t kTokenMix = 0x9E3779B97F4A7C15ULL;

double random_lp(std::uint64_t state, int token) {
  const std::uint64_t v = splitmix64(state ^ (std::uint64_t(std::uint32_t(token)) * kTokenMix + 1));
  const double u = double((v >> 11) + 1) * 0x1.0p-53;  // (0, 1]
  return std::log(u);
}

std::uint64_t advance(std::uint64_t state, int token) {
  return splitmix64(state + std::uint64_t(std::uint32_t(token)) + 0x632BE59BD9B4E019ULL);
}

}  // namespace

double RandomScoreModel::logprob(std::span<const int> prefix, int token, const Tokenizer&) const {
  std::uint64_t h = splitmix64(seed_);
  for (int id : prefix) h = advance(h, id);
  return random_lp(h, token);
}

std::vector<double> RandomScoreModel::sequence_logprobs(std::span<const int> ids, const Tokenizer&) const {
  std::vector<double> out(ids.size());
  std::uint64_t h = splitmix64(seed_);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out[i] = random_lp(h, ids[i]);
    h = advance(h, ids[i]);
  }
  return out;
}

KeywordModel::KeywordModel(std::string keyword, std::set<std::string> targets, double p_present, double p_absent)
    : keyword_(std::move(keyword)), targets_(std::move(targets)) {
  if (!(p_present > 0 && p_present <= 1 && p_absent > 0 && p_absent <= 1))
    throw ConfigError("keyword model probabilities must be in (0, 1]");
  lp_present_ = std::log(p_present);
  lp_absent_ = std::log(p_absent);
}

double KeywordModel::logprob(std::span<const int> prefix, int token, const Tokenizer& tok) const {
  if (!targets_.count(text::to_lower(surface_key(tok, token)))) return 0.0;
  for (int id : prefix)
    if (surface_key(tok, id) == keyword_) return lp_present_;
  return lp_absent_;
}

DeskTranslatorModel::DeskTranslatorModel(std::unordered_map<std::string, std::vector<DeskEntry>> table, std::uint64_t seed)
    : table_(std::move(table)), seed_(seed), scorer_(seed) {}

double DeskTranslatorModel::logprob(std::span<const int> prefix, int token, const Tokenizer& tok) const {
  return scorer_.logprob(prefix, token, tok);
}

std::vector<double> DeskTranslatorModel::sequence_logprobs(std::span<const int> ids, const Tokenizer& tok) const {
  return scorer_.sequence_logprobs(ids, tok);
}

std::string DeskTranslatorModel::generate(const std::string& prompt) const {
  std::string body = prompt;
  const std::string user_open = "<|im_start|>user\n";
  if (auto open = body.find(user_open); open != std::string::npos) {
    auto close = body.rfind("<|im_end|>");
    if (close != std::string::npos && close > open)
      body = body.substr(open + user_open.size(), close - open - user_open.size());
  }
  const auto nl = body.rfind('\n');
  const std::string last = nl == std::string::npos ? body : body.substr(nl + 1);
  const std::string earlier = nl == std::string::npos ? std::string() : body.substr(0, nl);

  // Final line: "<src_lang>: <source> <tgt_lang>:"
  const auto cue = last.rfind(' ');
  const auto colon = last.find(": ");
  if (cue == std::string::npos || colon == std::string::npos || colon + 2 > cue) return {};
  const std::string src = last.substr(colon + 2, cue - colon - 2);

  auto it = table_.find(src);
  if (it == table_.end() || it->second.empty()) return src;
  const std::vector<DeskEntry>& entries = it->second;

  // Context target sentences sit between "<tgt_lang>: " and the end of a line.
  const std::string lines = earlier + "\n";
  const DeskEntry* match = nullptr;
  for (const auto& e : entries)
    if (!e.cue.empty() && lines.find(": " + e.cue + "\n") != std::string::npos) {
      match = &e;
      break;
    }
  const bool has_context = earlier.find(": ") != std::string::npos;
  const double rate = match ? 0.05 : (has_context ? 0.3 : 0.15);

  std::string chosen;
  if (match) {
    chosen = match->target;
  } else {
    std::vector<const std::string*> pool;
    for (const auto& e : entries) {
      pool.push_back(&e.target);
      for (const auto& a : e.alternatives) pool.push_back(&a);
    }
    const auto k = std::size_t(hash_unit(seed_, "pick\n" + prompt) * double(pool.size()));
    chosen = *pool[std::min(k, pool.size() - 1)];
  }
  const auto words = text::split_whitespace(chosen);
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (hash_unit(seed_, fmt::format("drop\n{}\n{}", i, prompt)) < rate) continue;
    if (!out.empty()) out += ' ';
    out += words[i];
  }
  if (out.empty() && !words.empty()) out = std::string(words.front());
  return out;
}

MockServer::MockServer(std::shared_ptr<const Tokenizer> tokenizer, std::shared_ptr<const MockModel> model,
                       std::string model_id, MockCapabilities caps)
    : tokenizer_(std::move(tokenizer)), model_(std::move(model)), model_id_(std::move(model_id)), caps_(caps) {
  if (!tokenizer_ || !model_) throw ConfigError("mock server needs a tokenizer and a model");
}

void MockServer::script_failures(std::vector<int> statuses) {
  std::lock_guard lock(mu_);
  failures_.insert(failures_.end(), statuses.begin(), statuses.end());
}

std::size_t MockServer::request_count(const std::string& path) const {
  std::lock_guard lock(mu_);
  auto it = per_path_.find(path);
  return it == per_path_.end() ? 0 : it->second;
}

void MockServer::reset_counters() {
  std::lock_guard lock(mu_);
  per_path_.clear();
  requests_ = 0;
  max_in_flight_ = 0;
}

HttpResponse MockServer::post(const std::string& path, const std::string& body) {
  requests_++;
  std::optional<int> scripted;
  {
    std::lock_guard lock(mu_);
    per_path_[path]++;
    if (!failures_.empty()) {
      scripted = failures_.front();
      failures_.pop_front();
    }
  }
  const int now = ++in_flight_;
  int seen = max_in_flight_.load();
  while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
  }
  struct Leave {
    std::atomic<int>& n;
    ~Leave() { --n; }
  } leave{in_flight_};
  if (latency_ms_ > 0) std::this_thread::sleep_for(std::chrono::milliseconds(latency_ms_));

  if (scripted) {
    if (*scripted == 0) throw TransportFailure("connection reset by mock");
    return error_response(*scripted, "scripted failure");
  }
  json req;
  try {
    req = json::parse(body);
  } catch (const json::exception&) {
    return error_response(400, "request body is not JSON");
  }
  try {
    return handle(path, req);
  } catch (const std::exception& e) {
    return error_response(400, e.what());
  }
}

HttpResponse MockServer::handle(const std::string& path, const json& req) const {
  if (req.value("model", std::string()) != model_id_)
    return error_response(404, fmt::format("model '{}' does not exist", req.value("model", std::string())));
  const std::size_t vocab = tokenizer_->vocabulary().size;
  auto check_ids = [&](const std::vector<int>& ids) {
    for (int id : ids)
      if (id < 0 || std::size_t(id) >= vocab) throw DataError(fmt::format("token id {} out of range", id));
  };

  if (path == "/v1/completions") return completions(req);
  if (path == "/tokenize") {
    if (!caps_.tokenizer) return error_response(404, "not found");
    const auto ids = tokenizer_->encode(req.at("prompt").get<std::string>());
    return {200, json{{"tokens", ids}, {"count", ids.size()}}.dump()};
  }
  if (path == "/detokenize") {
    if (!caps_.tokenizer) return error_response(404, "not found");
    const auto ids = req.at("tokens").get<std::vector<int>>();
    check_ids(ids);
    return {200, json{{"prompt", tokenizer_->decode(ids)}}.dump()};
  }
  if (path == "/vocab") {
    if (!caps_.vocab) return error_response(404, "not found");
    const Vocabulary v = tokenizer_->vocabulary();
    return {200, json{{"size", v.size}, {"excluded", v.excluded}}.dump()};
  }
  return error_response(404, "not found");
}

HttpResponse MockServer::completions(const json& req) const {
  std::vector<int> ids;
  std::string prompt_text;
  const json& p = req.at("prompt");
  if (p.is_string()) {
    prompt_text = p.get<std::string>();
    ids = tokenizer_->encode(prompt_text);
  } else {
    ids = p.get<std::vector<int>>();
    for (int id : ids)
      if (id < 0 || std::size_t(id) >= tokenizer_->vocabulary().size)
        throw DataError(fmt::format("token id {} out of range", id));
    prompt_text = tokenizer_->decode(ids);
  }
  const bool echo = req.value("echo", false);
  const bool want_logprobs = req.contains("logprobs") && !req["logprobs"].is_null();
  const int max_tokens = req.value("max_tokens", 16);
  if (max_tokens < 0) throw DataError("max_tokens must be >= 0");

  std::string generated;
  std::string finish = "stop";
  if (max_tokens > 0) {
    generated = model_->generate(prompt_text);
    if (req.contains("stop")) {
      std::size_t cut = generated.size();
      for (const auto& s : req["stop"]) {
        const auto stop = s.get<std::string>();
        if (stop.empty()) continue;
        cut = std::min(cut, generated.find(stop));
      }
      generated.resize(std::min(cut, generated.size()));
    }
    try {
      const auto gen_ids = tokenizer_->encode(generated);
      if (gen_ids.size() > std::size_t(max_tokens)) {
        generated = tokenizer_->decode(std::span(gen_ids).first(std::size_t(max_tokens)));
        finish = "length";
      }
    } catch (const DataError&) {
      // text outside the mock vocabulary: leave untruncated
    }
  } else {
    finish = "length";
  }

  json choice = {{"index", 0}, {"text", echo ? prompt_text + generated : generated}, {"finish_reason", finish},
                 {"logprobs", nullptr}};
  if (echo && want_logprobs && caps_.logprobs) {
    const auto lps = model_->sequence_logprobs(ids, *tokenizer_);
    json tokens = json::array(), token_lps = json::array(), offsets = json::array();
    std::size_t off = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const std::string t = tokenizer_->token_text(ids[i]);
      tokens.push_back(t);
      if (i == 0) token_lps.push_back(nullptr);
      else token_lps.push_back(lps[i]);
      offsets.push_back(off);
      off += text::codepoint_count(t);
    }
    json lp = {{"tokens", tokens}, {"token_logprobs", token_lps}, {"text_offset", offsets}, {"top_logprobs", nullptr}};
    if (caps_.token_ids) lp["token_ids"] = ids;
    choice["logprobs"] = lp;
  }
  std::size_t gen_tokens = 0;
  try {
    gen_tokens = tokenizer_->encode(generated).size();
  } catch (const DataError&) {
    gen_tokens = text::split_whitespace(generated).size();
  }
  json res = {{"id", "cmpl-mock"},
              {"object", "text_completion"},
              {"model", model_id_},
              {"choices", json::array({choice})},
              {"usage",
               {{"prompt_tokens", ids.size()},
                {"completion_tokens", gen_tokens},
                {"total_tokens", ids.size() + gen_tokens}}}};
  return {200, res.dump()};
}

}  // namespace ctxprobe
