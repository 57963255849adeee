#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ctxprobe/jsonl.hpp"
#include "ctxprobe/perturb.hpp"

namespace ctxprobe {

enum class PromptKind { kSentence, kGeneric, kExplicit };

std::string_view to_string(PromptKind k);
PromptKind parse_prompt_kind(std::string_view s);

/// Template text with {src_lang} {tgt_lang} {src} {tgt} placeholders.
struct PromptTemplates {
  std::string sentence_instruction = "Translate the following {src_lang} source text to {tgt_lang}:";
  std::string explicit_instruction =
      "Given the provided parallel sentence pairs, translate the following {src_lang} sentence to {tgt_lang}:";
  std::string pair_line = "{src_lang}: {src} {tgt_lang}: {tgt}";
  std::string final_line = "{src_lang}: {src} {tgt_lang}:";

  /// Overrides fields present in `j`; unknown keys are a ConfigError.
  static PromptTemplates from_json(const json& j);
};

struct ChatMarkers {
  std::string user_prefix = "<|im_start|>user\n";
  std::string user_suffix = "<|im_end|>\n";
  std::string assistant_prefix = "<|im_start|>assistant\n";
};

struct PromptSpec {
  PromptKind kind = PromptKind::kSentence;
  std::string src_lang_name = "English";
  std::string tgt_lang_name = "German";
  bool chat_wrap = false;
  PromptTemplates templates;
  ChatMarkers markers;
};

enum class SegmentKind { kContextSource, kContextTarget, kSourceSentence };

/// Byte range of substituted content inside the rendered text.
struct PromptSegment {
  SegmentKind kind;
  int pair_index = -1;  // context pair, -1 for the source sentence
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct RenderedPrompt {
  std::string text;
  std::size_t cue_offset = 0;  // start of the trailing "<tgt_lang>:" cue
  std::vector<PromptSegment> segments;
  bool chat_wrapped = false;
};

/// Renders the prompt for `src_sentence`. Context is ignored for the sentence
/// format; context pairs are rendered oldest first, one pair per line. The
/// text ends right after the target-language cue.
RenderedPrompt render(const PromptSpec& spec, const ContextWindow& context, const std::string& src_sentence);

/// Wraps the prompt in the instruct chat markers. Throws if already wrapped.
RenderedPrompt wrap_chat(const RenderedPrompt& rendered, const ChatMarkers& markers = {});

/// render() followed by wrap_chat() when spec.chat_wrap is set.
RenderedPrompt build_prompt(const PromptSpec& spec, const ContextWindow& context, const std::string& src_sentence);

json to_json(const RenderedPrompt& p);
RenderedPrompt prompt_from_json(const json& j);

}  // namespace ctxprobe
