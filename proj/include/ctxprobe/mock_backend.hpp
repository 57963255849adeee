#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ctxprobe/client.hpp"
#include "ctxprobe/tokenizer.hpp"

namespace ctxprobe {

/// Scoring and generation behavior behind the in-process mock server.
class MockModel {
 public:
  virtual ~MockModel() = default;

  /// Natural-log probability of `token` given the tokens before it.
  virtual double logprob(std::span<const int> prefix, int token, const Tokenizer& tok) const = 0;

  /// Conditional log-probability of every token; entry 0 is conditioned on
  /// the empty prefix.
  virtual std::vector<double> sequence_logprobs(std::span<const int> ids, const Tokenizer& tok) const;

  /// Completion text for a prompt. The default produces nothing.
  virtual std::string generate(const std::string& prompt) const;
};

/// Every token has probability 1/V.
class UniformModel final : public MockModel {
 public:
  explicit UniformModel(std::size_t vocab_size);
  double logprob(std::span<const int>, int, const Tokenizer&) const override { return lp_; }

 private:
  double lp_;
};

/// Echoes the prompt as its completion; scores uniformly.
class EchoModel final : public MockModel {
 public:
  explicit EchoModel(std::size_t vocab_size) : uniform_(vocab_size) {}
  double logprob(std::span<const int> p, int t, const Tokenizer& k) const override { return uniform_.logprob(p, t, k); }
  std::string generate(const std::string& prompt) const override { return prompt; }

 private:
  UniformModel uniform_;
};

/// Fixed per-token probabilities keyed by the token's trimmed surface text.
class TableModel final : public MockModel {
 public:
  TableModel(std::map<std::string, double> probs, double default_prob);
  double logprob(std::span<const int>, int token, const Tokenizer& tok) const override;

 private:
  std::map<std::string, double> probs_;
  double default_lp_;
};

/// Pseudo-random conditional scores derived from a hash of the prefix and
/// token: sequences of equal length that differ anywhere get exchangeable
/// totals, so no candidate is favored.
class RandomScoreModel final : public MockModel {
 public:
  explicit RandomScoreModel(std::uint64_t seed) : seed_(seed) {}
  double logprob(std::span<const int> prefix, int token, const Tokenizer& tok) const override;
  std::vector<double> sequence_logprobs(std::span<const int> ids, const Tokenizer& tok) const override;

 private:
  std::uint64_t seed_;
};

/// Tokens whose lowercased surface is in `targets` get probability
/// `p_present` when a token with surface `keyword` occurs anywhere before
/// them and `p_absent` otherwise; all other tokens get probability 1.
class KeywordModel final : public MockModel {
 public:
  KeywordModel(std::string keyword, std::set<std::string> targets, double p_present, double p_absent);
  double logprob(std::span<const int> prefix, int token, const Tokenizer& tok) const override;

 private:
  std::string keyword_;
  std::set<std::string> targets_;
  double lp_present_;
  double lp_absent_;
};

struct DeskEntry {
  std::string target;
  // Context target sentence that disambiguates this entry: the preceding
  // sentence for corpus lines, the antecedent sentence for pronoun examples.
  std::string cue;
  std::vector<std::string> alternatives;  // plausible wrong translations
};

/// Lookup translator for end-to-end runs. A source sentence may have several
/// entries; the one whose cue appears as a context target line is produced
/// with light word dropout. Without a matching cue, a target or alternative
/// of any entry is picked and more words are dropped. Unknown sources are
/// copied. Scores come from a RandomScoreModel.
class DeskTranslatorModel final : public MockModel {
 public:
  DeskTranslatorModel(std::unordered_map<std::string, std::vector<DeskEntry>> table, std::uint64_t seed);
  double logprob(std::span<const int> prefix, int token, const Tokenizer& tok) const override;
  std::vector<double> sequence_logprobs(std::span<const int> ids, const Tokenizer& tok) const override;
  std::string generate(const std::string& prompt) const override;

 private:
  std::unordered_map<std::string, std::vector<DeskEntry>> table_;
  std::uint64_t seed_;
  RandomScoreModel scorer_;
};

struct MockCapabilities {
  bool logprobs = true;
  bool tokenizer = true;
  bool vocab = true;
  bool token_ids = true;  // report token_ids alongside echo logprobs
};

/// In-process server speaking the same completions, tokenize, detokenize and
/// vocab wire format as the HTTP backend.
class MockServer final : public Transport {
 public:
  MockServer(std::shared_ptr<const Tokenizer> tokenizer, std::shared_ptr<const MockModel> model,
             std::string model_id, MockCapabilities caps = {});

  HttpResponse post(const std::string& path, const std::string& body) override;

  /// Queues statuses returned by the next requests; 0 simulates a
  /// connection failure.
  void script_failures(std::vector<int> statuses);
  void set_latency_ms(int ms) { latency_ms_ = ms; }

  std::size_t request_count() const { return requests_.load(); }
  std::size_t request_count(const std::string& path) const;
  int max_in_flight() const { return max_in_flight_.load(); }
  void reset_counters();

  const Tokenizer& tokenizer() const { return *tokenizer_; }

 private:
  HttpResponse handle(const std::string& path, const json& req) const;
  HttpResponse completions(const json& req) const;

  std::shared_ptr<const Tokenizer> tokenizer_;
  std::shared_ptr<const MockModel> model_;
  std::string model_id_;
  MockCapabilities caps_;
  int latency_ms_ = 0;

  mutable std::mutex mu_;
  std::deque<int> failures_;
  std::map<std::string, std::size_t> per_path_;
  std::atomic<std::size_t> requests_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
};

}  // namespace ctxprobe
