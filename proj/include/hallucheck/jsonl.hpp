#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace hallucheck {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

/// Calls `fn(record, line_number)` for every non-blank line of a JSON-lines
/// file. Throws IngestError naming the line on malformed JSON.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const Json&, std::size_t)>& fn);

std::string read_text_file(const std::filesystem::path& path);

/// Writes `contents` to `path` through `path.partial`, renaming on success.
/// A failed write leaves the `.partial` file behind for inspection.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents);

/// Serializes each record on one line, each line terminated by '\n'.
std::string to_jsonl(const std::vector<OrderedJson>& records);

}  // namespace hallucheck
