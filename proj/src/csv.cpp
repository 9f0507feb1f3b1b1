#include <fstream>
#include <sstream>
#include <unordered_map>

#include "dtc/data.hpp"
#include "dtc/error.hpp"
#include "strings.hpp"

namespace dtc {

namespace {

struct Record {
  std::vector<std::string> cells;
  std::size_t line = 0;
};

// Splits CSV text into records. Quoted fields may contain delimiters, newlines
// and doubled quotes. Blank lines are skipped.
std::vector<Record> tokenize(std::string_view text, char delimiter, const std::string& source) {
  std::vector<Record> records;
  Record current;
  std::string cell;
  std::size_t line = 1;
  current.line = 1;
  bool in_quotes = false;
  bool cell_was_quoted = false;
  bool record_has_content = false;

  auto finish_cell = [&] {
    current.cells.push_back(std::move(cell));
    cell.clear();
    cell_was_quoted = false;
  };
  auto finish_record = [&] {
    if (record_has_content || !current.cells.empty()) {
      finish_cell();
      records.push_back(std::move(current));
    }
    current = Record{};
    cell.clear();
    record_has_content = false;
    cell_was_quoted = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        cell.push_back(c);
      }
      continue;
    }
    if (c == '"' && cell.empty() && !cell_was_quoted) {
      in_quotes = true;
      cell_was_quoted = true;
      record_has_content = true;
    } else if (c == delimiter) {
      finish_cell();
      record_has_content = true;
    } else if (c == '\n' || c == '\r') {
      finish_record();
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      ++line;
      current.line = line;
    } else {
      cell.push_back(c);
      record_has_content = true;
    }
  }
  if (in_quotes) {
    throw Error(Errc::Format, source + ": line " + std::to_string(current.line) +
                                  ": unterminated quoted field");
  }
  finish_record();
  return records;
}

}  // namespace

std::optional<int> RawTable::column(std::string_view name) const {
  const auto wanted = detail::trim(name);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == wanted) return static_cast<int>(i);
  }
  return std::nullopt;
}

RawTable parse_flow_csv(std::string_view text, std::string source_path, const CsvOptions& options) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  auto records = tokenize(text, options.delimiter, source_path);
  if (records.empty()) {
    throw Error(Errc::Format, source_path + ": empty file, a header row is required");
  }

  RawTable table;
  table.source_path = std::move(source_path);
  std::unordered_map<std::string, int> seen;
  for (auto& name : records.front().cells) {
    std::string trimmed(detail::trim(name));
    // CICFlowMeter exports repeat "Fwd Header Length"; disambiguate the way
    // common dataframe readers do.
    if (auto it = seen.find(trimmed); it != seen.end()) {
      std::string candidate;
      do {
        candidate = trimmed + "." + std::to_string(++it->second);
      } while (seen.contains(candidate));
      seen.emplace(candidate, 0);
      table.header.push_back(std::move(candidate));
    } else {
      seen.emplace(trimmed, 0);
      table.header.push_back(std::move(trimmed));
    }
  }

  const auto width = table.header.size();
  table.rows.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    auto& rec = records[r];
    if (rec.cells.size() != width) {
      throw Error(Errc::Format, table.source_path + ": line " + std::to_string(rec.line) +
                                    ": expected " + std::to_string(width) + " cells, found " +
                                    std::to_string(rec.cells.size()));
    }
    table.rows.push_back(std::move(rec.cells));
  }
  return table;
}

RawTable load_flow_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw Error(Errc::Io, "read failure on " + path.string());
  return parse_flow_csv(buffer.str(), path.string(), options);
}

}  // namespace dtc
