#include "ctxprobe/prompt.hpp"

#include <fmt/format.h>

#include "ctxprobe/error.hpp"

namespace ctxprobe {

std::string_view to_string(PromptKind k) {
  switch (k) {
    case PromptKind::kSentence: return "sentence";
    case PromptKind::kGeneric: return "generic";
    case PromptKind::kExplicit: return "explicit";
  }
  return "sentence";
}

PromptKind parse_prompt_kind(std::string_view s) {
  if (s == "sentence") return PromptKind::kSentence;
  if (s == "generic") return PromptKind::kGeneric;
  if (s == "explicit") return PromptKind::kExplicit;
  throw ConfigError(fmt::format("unknown prompt kind '{}'", s), "prompt_kinds");
}

PromptTemplates PromptTemplates::from_json(const json& j) {
  PromptTemplates t;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_string()) throw ConfigError("template must be a string", "prompt.templates." + key);
    if (key == "sentence_instruction") t.sentence_instruction = value;
    else if (key == "explicit_instruction") t.explicit_instruction = value;
    else if (key == "pair_line") t.pair_line = value;
    else if (key == "final_line") t.final_line = value;
    else throw ConfigError("unknown template", "prompt.templates." + key);
  }
  return t;
}

namespace {

struct Slots {
  const std::string& src_lang;
  const std::string& tgt_lang;
  const std::string* src = nullptr;
  const std::string* tgt = nullptr;
};

// Single left-to-right pass so placeholder-like text inside slot values is
// never substituted again. Records where {src} and {tgt} landed.
void expand(std::string& out, std::string_view tmpl, const Slots& slots, std::size_t* src_range,
            std::size_t* tgt_range) {
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        const std::string_view name = tmpl.substr(i + 1, close - i - 1);
        const std::string* value = nullptr;
        std::size_t* range = nullptr;
        if (name == "src_lang") value = &slots.src_lang;
        else if (name == "tgt_lang") value = &slots.tgt_lang;
        else if (name == "src") value = slots.src, range = src_range;
        else if (name == "tgt") value = slots.tgt, range = tgt_range;
        if (value != nullptr) {
          if (range != nullptr) range[0] = out.size();
          out += *value;
          if (range != nullptr) range[1] = out.size();
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
}

}  // namespace

RenderedPrompt render(const PromptSpec& spec, const ContextWindow& context, const std::string& src_sentence) {
  RenderedPrompt p;
  std::string& out = p.text;
  const std::string empty;

  if (spec.kind == PromptKind::kSentence) {
    expand(out, spec.templates.sentence_instruction, {spec.src_lang_name, spec.tgt_lang_name}, nullptr, nullptr);
    out += '\n';
  } else {
    for (std::size_t i = 0; i < context.pairs.size(); ++i) {
      const auto& pair = context.pairs[i];
      std::size_t src_r[2] = {0, 0}, tgt_r[2] = {0, 0};
      expand(out, spec.templates.pair_line,
             {spec.src_lang_name, spec.tgt_lang_name, &pair.src, pair.tgt ? &*pair.tgt : &empty}, src_r, tgt_r);
      out += '\n';
      p.segments.push_back({SegmentKind::kContextSource, int(i), src_r[0], src_r[1]});
      p.segments.push_back({SegmentKind::kContextTarget, int(i), tgt_r[0], tgt_r[1]});
    }
    if (spec.kind == PromptKind::kExplicit) {
      expand(out, spec.templates.explicit_instruction, {spec.src_lang_name, spec.tgt_lang_name}, nullptr, nullptr);
      out += '\n';
    }
  }
  std::size_t src_r[2] = {0, 0};
  const std::size_t final_start = out.size();
  expand(out, spec.templates.final_line, {spec.src_lang_name, spec.tgt_lang_name, &src_sentence, nullptr}, src_r,
         nullptr);
  p.segments.push_back({SegmentKind::kSourceSentence, -1, src_r[0], src_r[1]});
  const std::string cue = spec.tgt_lang_name + ":";
  const auto cue_pos = out.rfind(cue);
  p.cue_offset = cue_pos != std::string::npos && cue_pos >= final_start ? cue_pos : out.size();
  return p;
}

RenderedPrompt wrap_chat(const RenderedPrompt& rendered, const ChatMarkers& markers) {
  if (rendered.chat_wrapped || rendered.text.starts_with(markers.user_prefix)) {
    throw Error("prompt is already chat-wrapped");
  }
  RenderedPrompt p;
  const std::size_t shift = markers.user_prefix.size();
  p.text = markers.user_prefix + rendered.text + markers.user_suffix + markers.assistant_prefix;
  p.cue_offset = rendered.cue_offset + shift;
  p.segments = rendered.segments;
  for (auto& s : p.segments) {
    s.begin += shift;
    s.end += shift;
  }
  p.chat_wrapped = true;
  return p;
}

RenderedPrompt build_prompt(const PromptSpec& spec, const ContextWindow& context, const std::string& src_sentence) {
  RenderedPrompt p = render(spec, context, src_sentence);
  return spec.chat_wrap ? wrap_chat(p, spec.markers) : p;
}

namespace {

std::string_view to_string(SegmentKind k) {
  switch (k) {
    case SegmentKind::kContextSource: return "context_source";
    case SegmentKind::kContextTarget: return "context_target";
    case SegmentKind::kSourceSentence: return "source_sentence";
  }
  return "source_sentence";
}

SegmentKind parse_segment_kind(std::string_view s) {
  if (s == "context_source") return SegmentKind::kContextSource;
  if (s == "context_target") return SegmentKind::kContextTarget;
  if (s == "source_sentence") return SegmentKind::kSourceSentence;
  throw DataError(fmt::format("unknown prompt segment kind '{}'", s));
}

}  // namespace

json to_json(const RenderedPrompt& p) {
  json segs = json::array();
  for (const auto& s : p.segments) {
    segs.push_back({{"kind", to_string(s.kind)}, {"pair", s.pair_index}, {"begin", s.begin}, {"end", s.end}});
  }
  return {{"text", p.text}, {"cue_offset", p.cue_offset}, {"segments", std::move(segs)}, {"chat_wrapped", p.chat_wrapped}};
}

RenderedPrompt prompt_from_json(const json& j) {
  RenderedPrompt p;
  p.text = j.at("text").get<std::string>();
  p.cue_offset = j.at("cue_offset").get<std::size_t>();
  p.chat_wrapped = j.value("chat_wrapped", false);
  for (const auto& s : j.at("segments")) {
    p.segments.push_back({parse_segment_kind(s.at("kind").get<std::string>()), s.at("pair").get<int>(),
                          s.at("begin").get<std::size_t>(), s.at("end").get<std::size_t>()});
  }
  return p;
}

}  // namespace ctxprobe
