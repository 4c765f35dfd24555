#include "shine/session/manager.hpp"

#include <cstdio>

namespace shine::session {

SessionManager::SessionManager(std::map<std::string, std::shared_ptr<const CompiledScenario>> scenarios,
                               std::shared_ptr<log::StorageDriver> storage, ManagerOptions options)
    : scenarios_(std::move(scenarios)),
      storage_(std::move(storage)),
      options_(std::move(options)),
      rng_(options_.seed ? *options_.seed : std::random_device{}()),
      base_url_(options_.publicBaseUrl) {
  if (!storage_) throw std::invalid_argument("session manager needs a storage driver");
}

SessionManager::~SessionManager() { stop_ticker(); }

std::string SessionManager::random_hex(std::size_t bytes) {
  std::lock_guard lock(rng_mu_);
  std::string out;
  char buf[3];
  for (std::size_t i = 0; i < bytes; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", static_cast<unsigned>(rng_() & 0xff));
    out += buf;
  }
  return out;
}

CreatedSession SessionManager::create(const std::string& scenarioId, const std::string& participantId,
                                      const std::string& contextParam) {
  SessionContextParams params;
  try {
    params = decode_context_param(contextParam);
  } catch (const ContextParamError& e) {
    throw SessionError(SessionError::Kind::bad_request, e.what());
  }
  return create(scenarioId, participantId, params);
}

CreatedSession SessionManager::create(const std::string& scenarioId, const std::string& participantId,
                                      const SessionContextParams& params) {
  auto scenario = this->scenario(scenarioId);
  if (!scenario) throw SessionError(SessionError::Kind::not_found, "unknown scenario '" + scenarioId + "'");
  if (participantId.empty()) throw SessionError(SessionError::Kind::bad_request, "participantId must not be empty");

  SessionConfig cfg;
  cfg.participantId = participantId;
  cfg.token = random_hex(16);
  cfg.params = params;
  cfg.cascadeDepthLimit = options_.cascadeDepthLimit;
  cfg.storage = storage_;
  cfg.steadyNow = options_.steadyNow;
  if (const auto& ep = scenario->spec().explanationConfig.engineEndpoint; ep && options_.engineFactory) {
    cfg.engine = options_.engineFactory(*ep);
  }
  if (options_.liveClock) {
    auto origin = options_.steadyNow();
    auto steady = options_.steadyNow;
    cfg.virtualNow = [origin, steady] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(steady() - origin).count();
    };
    cfg.wallTime = [](std::int64_t) {
      auto now = std::chrono::system_clock::now().time_since_epoch();
      return log::iso8601_utc(std::chrono::duration_cast<std::chrono::milliseconds>(now).count());
    };
  } else {
    auto base = options_.manualWallBaseMs;
    cfg.wallTime = [base](std::int64_t tMs) { return log::iso8601_utc(base + tMs); };
  }

  {
    // Reserve a fresh id; the slot stays empty (invisible to find) until the
    // session is initialized outside the lock.
    std::unique_lock lock(mu_);
    do {
      cfg.sessionId = "s-" + random_hex(8);
    } while (sessions_.count(cfg.sessionId) || storage_->get_session(cfg.sessionId));
    sessions_[cfg.sessionId] = nullptr;
  }
  std::shared_ptr<Session> session;
  try {
    session = Session::start(scenario, cfg);
  } catch (...) {
    std::unique_lock lock(mu_);
    sessions_.erase(cfg.sessionId);
    throw;
  }
  {
    std::unique_lock lock(mu_);
    sessions_[cfg.sessionId] = session;
  }
  std::string base;
  {
    std::shared_lock lock(mu_);
    base = base_url_;
  }
  return {session->id(), base + "/ws/sessions/" + session->id() + "?token=" + session->token(), session->token(),
          session};
}

std::shared_ptr<Session> SessionManager::find(const std::string& sessionId) const {
  std::shared_lock lock(mu_);
  auto it = sessions_.find(sessionId);
  return it == sessions_.end() ? nullptr : it->second;
}

std::shared_ptr<Session> SessionManager::get(const std::string& sessionId) const {
  auto s = find(sessionId);
  if (!s) throw SessionError(SessionError::Kind::not_found, "unknown session '" + sessionId + "'");
  return s;
}

std::vector<std::shared_ptr<Session>> SessionManager::sessions() const {
  std::shared_lock lock(mu_);
  std::vector<std::shared_ptr<Session>> out;
  for (const auto& [_, s] : sessions_) {
    if (s) out.push_back(s);
  }
  return out;
}

std::shared_ptr<const CompiledScenario> SessionManager::scenario(const std::string& scenarioId) const {
  auto it = scenarios_.find(scenarioId);
  return it == scenarios_.end() ? nullptr : it->second;
}

std::vector<std::string> SessionManager::scenario_ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : scenarios_) out.push_back(id);
  return out;
}

std::size_t SessionManager::tick() {
  std::size_t expired = 0;
  for (const auto& s : sessions()) {
    if (s->status() != SessionStatus::active) continue;
    if (s->idle_for(options_.inactivityLimit)) {
      if (s->expire()) ++expired;
    } else {
      s->tick();
    }
  }
  return expired;
}

void SessionManager::start_ticker() {
  std::lock_guard lock(ticker_mu_);
  if (ticker_.joinable()) return;
  ticker_stop_ = false;
  ticker_ = std::thread([this] {
    std::unique_lock lk(ticker_mu_);
    while (!ticker_stop_) {
      ticker_cv_.wait_for(lk, options_.tickInterval, [this] { return ticker_stop_; });
      if (ticker_stop_) break;
      lk.unlock();
      tick();
      lk.lock();
    }
  });
}

void SessionManager::stop_ticker() {
  {
    std::lock_guard lock(ticker_mu_);
    ticker_stop_ = true;
  }
  ticker_cv_.notify_all();
  if (ticker_.joinable()) ticker_.join();
}

void SessionManager::set_public_base_url(std::string url) {
  std::unique_lock lock(mu_);
  base_url_ = std::move(url);
}

}  // namespace shine::session
