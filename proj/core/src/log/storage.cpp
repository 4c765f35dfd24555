#include "shine/log/storage.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>

namespace shine::log {

using nlohmann::json;
namespace fs = std::filesystem;

SeqConflict::SeqConflict(const std::string& sessionId, std::int64_t expected, std::int64_t got)
    : std::logic_error("seq conflict in session " + sessionId + ": expected " + std::to_string(expected) +
                       ", got " + std::to_string(got)),
      expected_(expected) {}

json to_json(const SessionRecord& r) {
  return json{{"sessionId", r.sessionId}, {"scenarioId", r.scenarioId}, {"participantId", r.participantId},
              {"status", r.status},       {"createdAt", r.createdAt},   {"summary", r.summary}};
}

SessionRecord record_from_json(const json& j) {
  SessionRecord r;
  r.sessionId = j.at("sessionId").get<std::string>();
  r.scenarioId = j.at("scenarioId").get<std::string>();
  r.participantId = j.at("participantId").get<std::string>();
  r.status = j.at("status").get<std::string>();
  r.createdAt = j.at("createdAt").get<std::string>();
  r.summary = j.value("summary", json());
  return r;
}

bool SessionFilter::matches(const SessionRecord& r) const {
  return (!scenarioId || r.scenarioId == *scenarioId) && (!status || r.status == *status);
}

// ---------------------------------------------------------------------------

std::int64_t MemoryStorage::append(const LogEvent& event) {
  std::lock_guard lock(mu_);
  auto& log = events_[event.sessionId];
  std::int64_t expected = log.empty() ? 1 : log.back().seq + 1;
  if (event.seq != expected) throw SeqConflict(event.sessionId, expected, event.seq);
  log.push_back(event);
  return event.seq;
}

std::vector<LogEvent> MemoryStorage::read_session(const std::string& sessionId) const {
  std::lock_guard lock(mu_);
  auto it = events_.find(sessionId);
  return it == events_.end() ? std::vector<LogEvent>{} : it->second;
}

void MemoryStorage::put_session(const SessionRecord& record) {
  std::lock_guard lock(mu_);
  records_[record.sessionId] = record;
}

std::optional<SessionRecord> MemoryStorage::get_session(const std::string& sessionId) const {
  std::lock_guard lock(mu_);
  auto it = records_.find(sessionId);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

std::vector<SessionRecord> MemoryStorage::list_sessions(const SessionFilter& filter) const {
  std::lock_guard lock(mu_);
  std::vector<SessionRecord> out;
  for (const auto& [_, r] : records_) {
    if (filter.matches(r)) out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

bool safe_id(const std::string& id) {
  if (id.empty() || id.size() > 128) return false;
  for (char c : id) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
    if (!ok) return false;
  }
  return true;
}

void check_id(const std::string& id) {
  if (!safe_id(id)) throw StorageError("session id '" + id + "' is not storable");
}

std::string errno_text(const std::string& what) { return what + ": " + std::strerror(errno); }

void write_all(int fd, const std::string& data, const fs::path& path) {
  const char* p = data.data();
  std::size_t left = data.size();
  while (left > 0) {
    ssize_t n = ::write(fd, p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw StorageError(errno_text("write " + path.string()));
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
}

std::vector<LogEvent> read_jsonl_file(const fs::path& path) {
  std::vector<LogEvent> out;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    // A torn final line (crash mid-write, before fsync acknowledged) is dropped.
    if (j.is_discarded()) break;
    out.push_back(event_from_json(j));
  }
  return out;
}

/// Cuts an unterminated last line so the next append starts on a fresh one.
void drop_torn_tail(const fs::path& path) {
  std::error_code ec;
  auto size = fs::file_size(path, ec);
  if (ec || size == 0) return;
  std::ifstream in(path, std::ios::binary);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.back() == '\n') return;
  auto keep = data.rfind('\n');
  fs::resize_file(path, keep == std::string::npos ? 0 : keep + 1, ec);
  if (ec) throw StorageError("truncate " + path.string() + ": " + ec.message());
}

}  // namespace

DocStore::DocStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec || !fs::is_directory(root_)) throw StorageError("cannot use " + root_.string() + " as document store");
}

DocStore::~DocStore() {
  for (auto& [_, s] : streams_) {
    if (s->fd >= 0) ::close(s->fd);
  }
}

fs::path DocStore::events_path(const std::string& id) const { return root_ / (id + ".events.jsonl"); }
fs::path DocStore::record_path(const std::string& id) const { return root_ / (id + ".session.json"); }

DocStore::Stream& DocStore::stream(const std::string& sessionId) {
  std::lock_guard lock(mu_);
  auto& slot = streams_[sessionId];
  if (!slot) {
    auto s = std::make_unique<Stream>();
    auto path = events_path(sessionId);
    drop_torn_tail(path);
    auto existing = read_jsonl_file(path);
    s->last = existing.empty() ? 0 : existing.back().seq;
    s->fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (s->fd < 0) throw StorageError(errno_text("open " + path.string()));
    slot = std::move(s);
  }
  return *slot;
}

std::int64_t DocStore::append(const LogEvent& event) {
  check_id(event.sessionId);
  Stream& s = stream(event.sessionId);
  std::lock_guard lock(s.mu);
  if (event.seq != s.last + 1) throw SeqConflict(event.sessionId, s.last + 1, event.seq);
  std::string line = to_json(event).dump() + "\n";
  write_all(s.fd, line, events_path(event.sessionId));
  if (::fdatasync(s.fd) != 0) throw StorageError(errno_text("fdatasync " + events_path(event.sessionId).string()));
  s.last = event.seq;
  return event.seq;
}

std::vector<LogEvent> DocStore::read_session(const std::string& sessionId) const {
  if (!safe_id(sessionId)) return {};
  return read_jsonl_file(events_path(sessionId));
}

void DocStore::put_session(const SessionRecord& record) {
  check_id(record.sessionId);
  auto path = record_path(record.sessionId);
  auto tmp = path;
  tmp += ".tmp";
  std::string body = to_json(record).dump(2) + "\n";
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw StorageError(errno_text("open " + tmp.string()));
  try {
    write_all(fd, body, tmp);
    if (::fsync(fd) != 0) throw StorageError(errno_text("fsync " + tmp.string()));
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw StorageError("rename " + tmp.string() + ": " + ec.message());
}

std::optional<SessionRecord> DocStore::get_session(const std::string& sessionId) const {
  if (!safe_id(sessionId)) return std::nullopt;
  std::ifstream in(record_path(sessionId));
  if (!in) return std::nullopt;
  std::stringstream buf;
  buf << in.rdbuf();
  json j = json::parse(buf.str(), nullptr, false);
  if (j.is_discarded()) throw StorageError("corrupt session record " + record_path(sessionId).string());
  return record_from_json(j);
}

std::vector<SessionRecord> DocStore::list_sessions(const SessionFilter& filter) const {
  static constexpr std::string_view kSuffix = ".session.json";
  std::vector<SessionRecord> out;
  for (const auto& entry : fs::directory_iterator(root_)) {
    std::string name = entry.path().filename().string();
    if (name.size() <= kSuffix.size() || name.compare(name.size() - kSuffix.size(), kSuffix.size(), kSuffix) != 0) {
      continue;
    }
    if (auto r = get_session(name.substr(0, name.size() - kSuffix.size())); r && filter.matches(*r)) {
      out.push_back(*r);
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.sessionId < b.sessionId; });
  return out;
}

// ---------------------------------------------------------------------------

std::shared_ptr<StorageDriver> make_storage(const std::string& kind, const std::string& url) {
  if (kind.empty() || kind == "memory") return std::make_shared<MemoryStorage>();
  if (kind == "docstore") {
    std::string path = url;
    if (path.rfind("file://", 0) == 0) path = path.substr(7);
    if (path.empty()) path = "shine-data";
    return std::make_shared<DocStore>(path);
  }
  throw std::invalid_argument("unknown storage driver '" + kind + "' (expected memory or docstore)");
}

std::shared_ptr<StorageDriver> make_storage_from_env() {
  const char* kind = std::getenv("SHINE_STORAGE");
  const char* url = std::getenv("SHINE_STORAGE_URL");
  return make_storage(kind ? kind : "", url ? url : "");
}

}  // namespace shine::log
