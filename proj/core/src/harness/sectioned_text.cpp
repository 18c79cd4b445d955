#include "hexastack/harness/sectioned_text.hpp"

#include <fstream>
#include <sstream>

#include "hexastack/errors.hpp"

namespace hexastack::harness {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool is_name_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
         c == '.' || c == '-' || c == '+';
}

bool valid_name(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!is_name_char(c)) return false;
  }
  return true;
}

[[noreturn]] void fail(std::string_view source, int line, const std::string& what) {
  throw ParseError(std::string(source) + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

const Section* Document::find(std::string_view name) const {
  for (const auto& s : sections) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

Document parse_sectioned_text(std::string_view text, std::string_view source) {
  Document doc;
  doc.source = source;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    // '#' starts a comment anywhere on the line.
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail(source, line_no, "unterminated section header");
      const auto name = trim(line.substr(1, line.size() - 2));
      if (!valid_name(name)) fail(source, line_no, "invalid section name '" + std::string(name) + "'");
      if (doc.find(name) != nullptr) fail(source, line_no, "duplicate section [" + std::string(name) + "]");
      doc.sections.push_back({std::string(name), line_no, {}});
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(source, line_no, "expected 'key = value'");
    if (doc.sections.empty()) fail(source, line_no, "key outside of any [section]");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (!valid_name(key)) fail(source, line_no, "invalid key '" + std::string(key) + "'");
    if (value.empty()) fail(source, line_no, "missing value for '" + std::string(key) + "'");
    doc.sections.back().entries.push_back({std::string(key), std::string(value), line_no});
  }
  return doc;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Document load_sectioned_file(const std::filesystem::path& path) {
  return parse_sectioned_text(read_text_file(path), path.string());
}

}  // namespace hexastack::harness
