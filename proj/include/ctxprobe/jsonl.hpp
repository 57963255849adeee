#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace ctxprobe {

using json = nlohmann::json;

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it over `path`.
void atomic_write(const std::filesystem::path& path, const std::string& contents);

/// Calls `fn(record, line_number)` for each non-empty line. Parse failures
/// raise DataError naming the file and 1-based line number. A trailing line
/// without a newline is treated as a torn write and skipped when
/// `skip_torn_tail` is set.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const json&, std::size_t)>& fn,
                    bool skip_torn_tail = false);

std::vector<json> read_jsonl(const std::filesystem::path& path, bool skip_torn_tail = false);

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& records);

/// Append-only JSONL sink: each record goes out as one write followed by a flush.
class JsonlAppender {
 public:
  explicit JsonlAppender(const std::filesystem::path& path);
  void append(const json& record);

 private:
  std::ofstream out_;
};

/// Drops a torn (newline-less) final line left by an interrupted writer.
void repair_jsonl_tail(const std::filesystem::path& path);

}  // namespace ctxprobe
