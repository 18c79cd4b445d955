#pragma once

// Line-oriented "[section]" / "key = value" text shared by config and
// scenario files. Grammar in docs/config_format.md.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hexastack::harness {

struct Entry {
  std::string key;
  std::string value;
  int line = 0;
};

struct Section {
  std::string name;
  int line = 0;
  std::vector<Entry> entries;
};

struct Document {
  std::string source;  // file name for messages
  std::vector<Section> sections;

  const Section* find(std::string_view name) const;
};

/// Throws ParseError naming the source and line.
Document parse_sectioned_text(std::string_view text, std::string_view source = "<input>");

/// Throws ParseError when the file cannot be read.
Document load_sectioned_file(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace hexastack::harness
