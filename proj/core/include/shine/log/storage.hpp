#pragma once

#include "shine/log/event.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace shine::log {

/// An append whose seq is not last + 1. Indicates a serialization bug in
/// the caller, so it is never caught on the session path.
class SeqConflict : public std::logic_error {
 public:
  SeqConflict(const std::string& sessionId, std::int64_t expected, std::int64_t got);
  std::int64_t expected() const { return expected_; }

 private:
  std::int64_t expected_;
};

class StorageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SessionRecord {
  std::string sessionId;
  std::string scenarioId;
  std::string participantId;
  std::string status;  // active, completed, expired
  std::string createdAt;
  nlohmann::json summary;  // null until the session ends

  bool operator==(const SessionRecord&) const = default;
};

nlohmann::json to_json(const SessionRecord& r);
SessionRecord record_from_json(const nlohmann::json& j);

struct SessionFilter {
  std::optional<std::string> scenarioId;
  std::optional<std::string> status;
  bool matches(const SessionRecord& r) const;
};

/// Storage contract. Implementations tolerate concurrent calls for
/// different sessions; appends for one session arrive already ordered.
class StorageDriver {
 public:
  virtual ~StorageDriver() = default;
  /// Returns the stored seq once the event is durable.
  virtual std::int64_t append(const LogEvent& event) = 0;
  /// Events in seq order; empty for unknown sessions.
  virtual std::vector<LogEvent> read_session(const std::string& sessionId) const = 0;
  virtual void put_session(const SessionRecord& record) = 0;
  virtual std::optional<SessionRecord> get_session(const std::string& sessionId) const = 0;
  /// Ordered by session id.
  virtual std::vector<SessionRecord> list_sessions(const SessionFilter& filter = {}) const = 0;
};

class MemoryStorage : public StorageDriver {
 public:
  std::int64_t append(const LogEvent& event) override;
  std::vector<LogEvent> read_session(const std::string& sessionId) const override;
  void put_session(const SessionRecord& record) override;
  std::optional<SessionRecord> get_session(const std::string& sessionId) const override;
  std::vector<SessionRecord> list_sessions(const SessionFilter& filter) const override;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::vector<LogEvent>> events_;
  std::map<std::string, SessionRecord> records_;
};

/// File-backed document store: `<root>/<sessionId>.events.jsonl` plus
/// `<root>/<sessionId>.session.json`. Every append is fsync'd before it
/// returns; record writes go through a rename so readers never see a torn
/// document. Survives process restarts.
class DocStore : public StorageDriver {
 public:
  explicit DocStore(std::filesystem::path root);
  ~DocStore() override;

  std::int64_t append(const LogEvent& event) override;
  std::vector<LogEvent> read_session(const std::string& sessionId) const override;
  void put_session(const SessionRecord& record) override;
  std::optional<SessionRecord> get_session(const std::string& sessionId) const override;
  std::vector<SessionRecord> list_sessions(const SessionFilter& filter) const override;

  const std::filesystem::path& root() const { return root_; }

 private:
  struct Stream {
    int fd = -1;
    std::int64_t last = 0;
    std::mutex mu;
  };
  Stream& stream(const std::string& sessionId);
  std::filesystem::path events_path(const std::string& sessionId) const;
  std::filesystem::path record_path(const std::string& sessionId) const;

  std::filesystem::path root_;
  mutable std::mutex mu_;
  std::map<std::string, std::unique_ptr<Stream>> streams_;
};

/// Driver named by `kind` ("memory" or "docstore"); `url` is the docstore
/// directory, optionally as a file:// URL. Throws std::invalid_argument.
std::shared_ptr<StorageDriver> make_storage(const std::string& kind, const std::string& url);
/// Same, from SHINE_STORAGE / SHINE_STORAGE_URL (memory when unset).
std::shared_ptr<StorageDriver> make_storage_from_env();

}  // namespace shine::log
