#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ctxprobe/error.hpp"
#include "ctxprobe/pipeline.hpp"

namespace {

using ctxprobe::ExitCode;

int code(ExitCode c) { return static_cast<int>(c); }

void print_summary(const ctxprobe::StageSummary& s) {
  std::cout << fmt::format("{}: {} instances, {} already done, {} processed\n", s.stage, s.total, s.skipped,
                           s.processed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ctxprobe: probe how translation models use document context"};
  app.require_subcommand(1);

  std::string config_path;
  ctxprobe::ConfigOverrides ov;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> base_url, model, cache_dir, output_dir;
  std::optional<int> max_parallel;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run configuration (JSON)")->required();
    sub->add_option("--seed", seed, "Override the base seed");
    sub->add_option("--base-url", base_url, "Override backend.base_url");
    sub->add_option("--model", model, "Override model_id");
    sub->add_option("--max-parallel", max_parallel, "Override backend.max_parallel");
    sub->add_option("--cache-dir", cache_dir, "Override backend.cache_dir");
    sub->add_option("--output-dir", output_dir, "Override output_dir");
  };
  CLI::App* prepare = app.add_subcommand("prepare", "Build prompt instances for every configured condition");
  CLI::App* translate = app.add_subcommand("translate", "Generate translations");
  CLI::App* contrast = app.add_subcommand("contrast", "Score contrastive pronoun variants");
  CLI::App* attribute = app.add_subcommand("attribute", "Erasure attribution over the prompt input");
  CLI::App* score = app.add_subcommand("score", "Compute metrics and write tables and figure data");
  for (CLI::App* s : {prepare, translate, contrast, attribute, score}) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : code(ExitCode::kConfig);
  }
  ov.seed = seed;
  ov.base_url = base_url;
  ov.model_id = model;
  ov.max_parallel = max_parallel;
  ov.cache_dir = cache_dir;
  ov.output_dir = output_dir;

  try {
    ctxprobe::Pipeline pipeline(ctxprobe::load_config(config_path, ov));
    if (prepare->parsed()) {
      const auto n = pipeline.prepare();
      std::cout << fmt::format("prepare: {} instances -> {}\n", n, (pipeline.run_dir() / "instances.jsonl").string());
    } else if (translate->parsed()) {
      print_summary(pipeline.translate());
    } else if (contrast->parsed()) {
      print_summary(pipeline.contrast());
    } else if (attribute->parsed()) {
      print_summary(pipeline.attribute());
    } else if (score->parsed()) {
      pipeline.score();
      std::cout << fmt::format("score: wrote {}\n", pipeline.run_dir().string());
    }
  } catch (const ctxprobe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return code(ExitCode::kConfig);
  } catch (const ctxprobe::BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return code(ExitCode::kBackend);
  } catch (const ctxprobe::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return code(ExitCode::kData);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return code(ExitCode::kData);
  }
  return code(ExitCode::kOk);
}
