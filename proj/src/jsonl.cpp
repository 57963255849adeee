#include "ctxprobe/jsonl.hpp"

#include <sstream>

#include "ctxprobe/error.hpp"

namespace ctxprobe {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void atomic_write(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(contents.data(), std::streamsize(contents.size()));
    out.flush();
    if (!out) throw Error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

void for_each_jsonl(const fs::path& path, const std::function<void(const json&, std::size_t)>& fn,
                    bool skip_torn_tail) {
  const std::string data = read_file(path);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < data.size()) {
    std::size_t nl = data.find('\n', pos);
    const bool torn = nl == std::string::npos;
    if (torn) nl = data.size();
    ++line_no;
    std::string_view line(data.data() + pos, nl - pos);
    pos = nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    if (torn && skip_torn_tail) break;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed JSON: " +
                      e.what());
    }
    fn(record, line_no);
  }
}

std::vector<json> read_jsonl(const fs::path& path, bool skip_torn_tail) {
  std::vector<json> out;
  for_each_jsonl(path, [&](const json& j, std::size_t) { out.push_back(j); }, skip_torn_tail);
  return out;
}

void write_jsonl(const fs::path& path, const std::vector<json>& records) {
  std::string body;
  for (const auto& r : records) {
    body += r.dump();
    body += '\n';
  }
  atomic_write(path, body);
}

JsonlAppender::JsonlAppender(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | std::ios::app);
  if (!out_) throw Error("cannot open " + path.string() + " for append");
}

void JsonlAppender::append(const json& record) {
  const std::string line = record.dump() + "\n";
  out_.write(line.data(), std::streamsize(line.size()));
  out_.flush();
  if (!out_) throw Error("append failed");
}

void repair_jsonl_tail(const fs::path& path) {
  if (!fs::exists(path)) return;
  const std::string data = read_file(path);
  if (data.empty() || data.back() == '\n') return;
  const std::size_t last_nl = data.rfind('\n');
  fs::resize_file(path, last_nl == std::string::npos ? 0 : last_nl + 1);
}

}  // namespace ctxprobe
