#pragma once

#include "shine/log/event.hpp"
#include "shine/log/storage.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace shine::log {

enum class ExportFormat { jsonl, csv };
std::optional<ExportFormat> export_format_from_string(std::string_view s);
std::string_view content_type(ExportFormat f);

/// One compact JSON object per line, each line newline-terminated.
std::string to_jsonl(const std::vector<LogEvent>& events);
/// Header `sessionId,seq,tMs,wallTime,type,payloadJson`, RFC 4180 quoting.
std::string to_csv(const std::vector<LogEvent>& events);
std::string export_events(const std::vector<LogEvent>& events, ExportFormat f);

/// Inverses of the writers. Throw std::invalid_argument with a line number.
std::vector<LogEvent> parse_jsonl(std::string_view text);
std::vector<LogEvent> parse_csv(std::string_view text);

class UnknownSession : public std::runtime_error {
 public:
  explicit UnknownSession(const std::string& id) : std::runtime_error("unknown session " + id) {}
};

/// Throws UnknownSession when the store has neither a record nor events.
std::string export_session(const StorageDriver& storage, const std::string& sessionId, ExportFormat f);

}  // namespace shine::log
