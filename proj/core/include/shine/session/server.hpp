#pragma once

#include "shine/session/rest.hpp"

#include <memory>
#include <string>

namespace shine::session {

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 0;  // 0 asks the OS for a free port
  int threads = 4;
  RestOptions rest;
};

/// HTTP + WebSocket front end over a SessionManager. REST requests go
/// through handle_rest; `/ws/sessions/{id}?token=...` upgrades to the event
/// socket, which starts with a full state_update and then streams the
/// session's server events.
class Server {
 public:
  Server(SessionManager& manager, ServerOptions options);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts the worker threads. Throws boost::system::system_error when
  /// the address is unavailable.
  void start();
  void stop();
  /// The bound port, valid after start().
  unsigned short port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace shine::session
