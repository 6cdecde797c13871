#include "hallucheck/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "hallucheck/errors.hpp"

namespace hallucheck {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const Json&, std::size_t)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json record;
    try {
      record = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw IngestError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    if (!record.is_object()) {
      throw IngestError("expected a JSON object", line_no);
    }
    try {
      fn(record, line_no);
    } catch (const Json::exception& e) {
      throw IngestError(std::string("schema mismatch: ") + e.what(), line_no);
    }
  }
}

void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  auto partial = path;
  partial += ".partial";
  {
    std::ofstream out(partial, std::ios::binary | std::ios::trunc);
    if (!out) throw HarnessError("cannot write " + partial.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw HarnessError("write failed for " + partial.string());
  }
  std::filesystem::rename(partial, path);
}

std::string to_jsonl(const std::vector<OrderedJson>& records) {
  std::string out;
  for (const auto& r : records) {
    out += r.dump(-1, ' ', false, OrderedJson::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

}  // namespace hallucheck
