#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ctxprobe/attribution.hpp"
#include "ctxprobe/client.hpp"
#include "ctxprobe/corpus.hpp"
#include "ctxprobe/error.hpp"
#include "ctxprobe/jsonl.hpp"
#include "ctxprobe/mock_backend.hpp"
#include "ctxprobe/perturb.hpp"
#include "ctxprobe/prompt.hpp"

namespace ctxprobe {

struct MockSettings {
  std::string model = "desk";      // desk | uniform | random | echo
  std::string tokenizer = "word";  // word | char
  std::uint64_t seed = 0;
};

struct RunConfig {
  std::filesystem::path config_dir;  // relative paths resolve against this
  json raw;                          // the config as loaded, after overrides

  std::string run_id;
  std::filesystem::path output_dir = "reports";
  std::uint64_t seed = 0;

  std::string src_lang = "en";
  std::string tgt_lang = "de";
  std::string src_name = "English";
  std::string tgt_name = "German";
  std::string model_id;

  std::string backend_kind = "mock";  // mock | http
  std::string api_key_env;
  BackendConfig backend;
  MockSettings mock;

  std::optional<std::filesystem::path> corpus;
  CorpusFormat corpus_format = CorpusFormat::kJsonl;
  std::optional<std::filesystem::path> corpus_reference;
  std::optional<std::filesystem::path> contrastive;
  ContrastiveFormat contrastive_format = ContrastiveFormat::kJsonl;
  ContrastiveLoadOptions contrastive_options;
  std::optional<std::filesystem::path> lexicon;
  std::vector<std::string> pronoun_classes;

  std::vector<PromptKind> translate_kinds = {PromptKind::kSentence, PromptKind::kGeneric, PromptKind::kExplicit};
  std::vector<ContextCondition> translate_conditions = {ContextCondition::kRandom, ContextCondition::kPerturbed,
                                                        ContextCondition::kGold};
  std::size_t translate_context_size = 5;
  std::size_t translate_limit = 0;  // 0 = all sentences

  PromptKind pronoun_kind = PromptKind::kGeneric;
  std::vector<ContextCondition> pronoun_conditions = {ContextCondition::kNone, ContextCondition::kRandom,
                                                      ContextCondition::kPerturbed, ContextCondition::kGold};
  std::size_t pronoun_context_size = 5;
  std::size_t pronoun_subset = 0;  // 0 = all accepted examples
  bool swap_source_side = false;

  PromptKind attribution_kind = PromptKind::kGeneric;
  std::vector<ContextCondition> attribution_conditions = {ContextCondition::kGold};
  std::size_t attribution_context_size = 2;
  std::size_t attribution_subset = 100;
  ErasureOptions erasure;
  ApAggregation aggregation = ApAggregation::kMeanOfAps;
  std::vector<std::filesystem::path> attribution_imports;

  bool chat_wrap = false;
  PromptTemplates templates;
  DecodingParams decoding;
  std::optional<std::filesystem::path> comet_scores;

  std::filesystem::path run_dir() const { return output_dir / run_id; }
  std::string language_pair() const { return src_lang + "-" + tgt_lang; }
};

/// Command-line overrides of config fields.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> base_url;
  std::optional<std::string> model_id;
  std::optional<int> max_parallel;
  std::optional<std::string> cache_dir;
  std::optional<std::string> output_dir;
};

/// Parses a JSON config. Unknown keys and bad values raise ConfigError
/// naming the field.
RunConfig parse_config(const json& j, const std::filesystem::path& config_dir, const ConfigOverrides& overrides = {});
RunConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

struct StageSummary {
  std::string stage;
  std::size_t total = 0;
  std::size_t skipped = 0;  // already present from an earlier run
  std::size_t processed = 0;
};

/// Raised when a stage halts part way; the completed prefix is on disk and
/// `resume.json` in the run directory describes what remains.
class StageHalted : public BackendError {
 public:
  StageHalted(const std::string& message, std::string stage, std::size_t completed)
      : BackendError(message), stage_(std::move(stage)), completed_(completed) {}
  const std::string& stage() const { return stage_; }
  std::size_t completed() const { return completed_; }

 private:
  std::string stage_;
  std::size_t completed_;
};

/// Run directory layout:
///   instances.jsonl
///   prepare.json
///   judgments/{translations,contrast,attributions,pronoun_judgments}.jsonl
///   tables/{translation,chrf,pronoun}.{md,csv}
///   figures/attribution.csv
///   run.json
class Pipeline {
 public:
  explicit Pipeline(RunConfig config);
  ~Pipeline();

  /// Materializes instances for every configured (task, prompt kind,
  /// condition) cell.
  std::size_t prepare();
  StageSummary translate();
  StageSummary contrast();
  StageSummary attribute();
  void score();

  const RunConfig& config() const { return config_; }
  std::filesystem::path run_dir() const { return config_.run_dir(); }

  /// The backend client, created on first use. Exposed for tests.
  Client& client();
  /// The in-process mock server, when backend.kind is mock.
  MockServer* mock_server() { return mock_.get(); }

 private:
  struct Data;
  const Data& data();
  std::vector<json> load_instances() const;

  RunConfig config_;
  std::unique_ptr<Data> data_;
  std::shared_ptr<MockServer> mock_;
  std::unique_ptr<Client> client_;
};

}  // namespace ctxprobe
