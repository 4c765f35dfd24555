#include "shine/log/export.hpp"

#include <stdexcept>

namespace shine::log {

using nlohmann::json;

std::optional<ExportFormat> export_format_from_string(std::string_view s) {
  if (s == "jsonl") return ExportFormat::jsonl;
  if (s == "csv") return ExportFormat::csv;
  return std::nullopt;
}

std::string_view content_type(ExportFormat f) {
  return f == ExportFormat::csv ? "text/csv; charset=utf-8" : "application/x-ndjson";
}

std::string to_jsonl(const std::vector<LogEvent>& events) {
  std::string out;
  for (const auto& e : events) {
    out += to_json(e).dump();
    out += '\n';
  }
  return out;
}

namespace {

constexpr std::string_view kCsvHeader = "sessionId,seq,tMs,wallTime,type,payloadJson";

void csv_field(std::string& out, std::string_view v) {
  bool quote = v.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!quote) {
    out += v;
    return;
  }
  out += '"';
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}

/// RFC 4180 records: quoted fields may hold separators, doubled quotes and
/// line breaks. Accepts LF or CRLF line ends.
std::vector<std::vector<std::string>> csv_records(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, was_quoted = false;
  std::size_t line = 1;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    was_quoted = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"') {
      if (!field.empty() || was_quoted) throw std::invalid_argument("stray quote on csv line " + std::to_string(line));
      quoted = was_quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      continue;
    } else if (c == '\n') {
      end_field();
      rows.push_back(std::move(row));
      row.clear();
      ++line;
    } else {
      field += c;
    }
  }
  if (quoted) throw std::invalid_argument("unterminated quoted field in csv");
  if (!field.empty() || !row.empty() || was_quoted) {
    end_field();
    rows.push_back(std::move(row));
  }
  return rows;
}

std::int64_t to_int(const std::string& s, std::size_t line) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw std::invalid_argument("bad integer on csv line " + std::to_string(line));
  return v;
}

}  // namespace

std::string to_csv(const std::vector<LogEvent>& events) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& e : events) {
    csv_field(out, e.sessionId);
    out += ',' + std::to_string(e.seq) + ',' + std::to_string(e.tMs) + ',';
    csv_field(out, e.wallTime);
    out += ',';
    out += to_string(e.type);
    out += ',';
    csv_field(out, e.payload.dump());
    out += '\n';
  }
  return out;
}

std::string export_events(const std::vector<LogEvent>& events, ExportFormat f) {
  return f == ExportFormat::csv ? to_csv(events) : to_jsonl(events);
}

std::vector<LogEvent> parse_jsonl(std::string_view text) {
  std::vector<LogEvent> out;
  std::size_t line = 0, pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view row = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line;
    if (row.empty()) continue;
    json j = json::parse(row.begin(), row.end(), nullptr, false);
    if (j.is_discarded()) throw std::invalid_argument("invalid JSON on jsonl line " + std::to_string(line));
    try {
      out.push_back(event_from_json(j));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(std::string(e.what()) + " on jsonl line " + std::to_string(line));
    }
  }
  return out;
}

std::vector<LogEvent> parse_csv(std::string_view text) {
  auto rows = csv_records(text);
  if (rows.empty()) throw std::invalid_argument("csv export has no header");
  std::string header;
  for (std::size_t i = 0; i < rows[0].size(); ++i) header += (i ? "," : "") + rows[0][i];
  if (header != kCsvHeader) throw std::invalid_argument("unexpected csv header '" + header + "'");
  std::vector<LogEvent> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 6) throw std::invalid_argument("csv record " + std::to_string(r) + " has wrong column count");
    LogEvent e;
    e.sessionId = row[0];
    e.seq = to_int(row[1], r);
    e.tMs = to_int(row[2], r);
    e.wallTime = row[3];
    auto type = event_type_from_string(row[4]);
    if (!type) throw std::invalid_argument("unknown event type on csv record " + std::to_string(r));
    e.type = *type;
    e.payload = json::parse(row[5], nullptr, false);
    if (e.payload.is_discarded() || !e.payload.is_object()) {
      throw std::invalid_argument("bad payload on csv record " + std::to_string(r));
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::string export_session(const StorageDriver& storage, const std::string& sessionId, ExportFormat f) {
  auto events = storage.read_session(sessionId);
  if (events.empty() && !storage.get_session(sessionId)) throw UnknownSession(sessionId);
  return export_events(events, f);
}

}  // namespace shine::log
