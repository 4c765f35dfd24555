#include "cli.hpp"

#include "shine/bot/runner.hpp"
#include "shine/log/export.hpp"
#include "shine/scenario/catalog.hpp"
#include "shine/scenario/parser.hpp"
#include "shine/scenario/validate.hpp"
#include "shine/session/server.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>

namespace shinectl {

using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kBadInput = 2;

int cmd_validate(const std::string& path, bool as_json, std::ostream& out, std::ostream& err) {
  shine::ScenarioSpec spec;
  try {
    spec = shine::load_scenario_file(path);
  } catch (const shine::ParseError& e) {
    if (as_json) {
      json pe{{"kind", shine::to_string(e.kind())}, {"path", e.path()}, {"message", e.what()}};
      if (e.byte_offset()) pe["offset"] = *e.byte_offset();
      out << json{{"ok", false}, {"parseError", pe}}.dump(2) << "\n";
    } else {
      err << path << ": " << shine::to_string(e.kind()) << " error";
      if (!e.path().empty()) err << " at " << e.path();
      if (e.byte_offset()) err << " (byte " << *e.byte_offset() << ")";
      err << ": " << e.what() << "\n";
    }
    return kBadInput;
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return kBadInput;
  }
  auto report = shine::validate_scenario(spec);
  if (as_json) {
    out << shine::to_json(report).dump(2) << "\n";
  } else {
    out << shine::to_text(report);
  }
  return report.ok ? kOk : kFailed;
}

std::shared_ptr<shine::log::StorageDriver> open_storage(const std::string& kind, const std::string& url) {
  if (kind.empty() && url.empty()) return shine::log::make_storage_from_env();
  const char* envUrl = std::getenv("SHINE_STORAGE_URL");
  return shine::log::make_storage(kind, url.empty() && envUrl ? envUrl : url);
}

struct SimulateArgs {
  std::string scenario, bot, out, format = "jsonl", mode, storage, storageUrl;
  std::uint64_t seed = 1;
  bool viaNetwork = false;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  std::shared_ptr<const shine::CompiledScenario> scenario;
  shine::bot::BotScript script;
  std::shared_ptr<shine::log::StorageDriver> storage;
  auto format = shine::log::export_format_from_string(a.format);
  if (!format) {
    err << "--format must be jsonl or csv\n";
    return kBadInput;
  }
  try {
    scenario = shine::load_compiled(a.scenario);
    script = shine::bot::load_bot_script(a.bot);
    if (!a.mode.empty()) {
      auto m = shine::delivery_mode_from_string(a.mode);
      if (!m) throw std::invalid_argument("--mode must be push, pull or interactive");
      script.context.deliveryMode = m;
    }
    storage = a.storage.empty() ? std::make_shared<shine::log::MemoryStorage>() : open_storage(a.storage, a.storageUrl);
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return kBadInput;
  }

  shine::bot::RunOptions opts;
  opts.seed = a.seed;
  opts.storage = storage;
  opts.viaNetwork = a.viaNetwork;
  auto result = shine::bot::run_bot(scenario, script, opts);

  if (!a.out.empty() && !result.sessionId.empty()) {
    std::ofstream f(a.out, std::ios::binary | std::ios::trunc);
    f << shine::log::export_events(storage->read_session(result.sessionId), *format);
    if (!f) {
      err << "cannot write " << a.out << "\n";
      return kBadInput;
    }
  }
  json report{{"sessionId", result.sessionId},
              {"passed", result.passed},
              {"finalState", shine::sim::to_json(result.finalState)},
              {"summary", result.summary}};
  if (!result.passed) report["failure"] = result.message;
  if (result.failedStep) report["failedStep"] = *result.failedStep;
  out << report.dump(2) << "\n";
  if (!result.passed) {
    err << "FAIL " << (script.name.empty() ? a.bot : script.name) << ": " << result.message << "\n";
    return kFailed;
  }
  err << "PASS " << (script.name.empty() ? a.bot : script.name) << " (" << result.received.size()
      << " server events, session " << result.sessionId << ")\n";
  return kOk;
}

int cmd_export(const std::string& id, const std::string& fmt, const std::string& outPath, const std::string& kind,
               const std::string& url, std::ostream& out, std::ostream& err) {
  auto format = shine::log::export_format_from_string(fmt);
  if (!format) {
    err << "--format must be jsonl or csv\n";
    return kBadInput;
  }
  std::string body;
  try {
    body = shine::log::export_session(*open_storage(kind, url), id, *format);
  } catch (const shine::log::UnknownSession& e) {
    err << e.what() << "\n";
    return kFailed;
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return kBadInput;
  }
  if (outPath.empty()) {
    out << body;
    return kOk;
  }
  std::ofstream f(outPath, std::ios::binary | std::ios::trunc);
  f << body;
  if (!f) {
    err << "cannot write " << outPath << "\n";
    return kBadInput;
  }
  return kOk;
}

struct ServeArgs {
  std::string scenarioDir = "scenarios", address = "127.0.0.1", storage, storageUrl, publicUrl;
  unsigned short port = 8080;
  int threads = 4;
};

int cmd_serve(const ServeArgs& a, std::ostream& out, std::ostream& err) {
  auto catalog = shine::load_scenario_dir(a.scenarioDir);
  for (const auto& w : catalog.warnings) err << "warning: " << w << "\n";
  if (catalog.scenarios.empty()) {
    err << "no valid scenarios in " << a.scenarioDir << "\n";
    return kBadInput;
  }
  std::shared_ptr<shine::log::StorageDriver> storage;
  try {
    storage = open_storage(a.storage, a.storageUrl);
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return kBadInput;
  }

  // Block the stop signals before any thread starts so only sigwait sees them.
  sigset_t stop;
  sigemptyset(&stop);
  sigaddset(&stop, SIGINT);
  sigaddset(&stop, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop, nullptr);

  shine::session::SessionManager manager(catalog.scenarios, storage);
  shine::session::ServerOptions so;
  so.address = a.address;
  so.port = a.port;
  so.threads = a.threads;
  so.rest = shine::session::rest_options_from_env();
  shine::session::Server server(manager, so);
  try {
    server.start();
  } catch (const std::exception& e) {
    err << "cannot listen on " << a.address << ":" << a.port << ": " << e.what() << "\n";
    return kBadInput;
  }
  manager.set_public_base_url(a.publicUrl.empty() ? "ws://" + a.address + ":" + std::to_string(server.port())
                                                  : a.publicUrl);
  manager.start_ticker();
  out << "listening on http://" << a.address << ":" << server.port() << " with " << catalog.scenarios.size()
      << " scenario(s)" << std::endl;
  if (!so.rest.researchToken) err << "warning: SHINE_RESEARCH_TOKEN is unset; log export is disabled\n";

  int sig = 0;
  sigwait(&stop, &sig);
  out << "shutting down" << std::endl;
  manager.stop_ticker();
  server.stop();
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Virtual smart-home study server and tools", "shinectl"};
  app.require_subcommand(1);

  std::string vPath;
  bool vJson = false;
  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("path", vPath, "Scenario .scenario.json")->required();
  validate->add_flag("--json", vJson, "Print the report as JSON");

  ServeArgs s;
  auto* serve = app.add_subcommand("serve", "Run the REST + WebSocket study server");
  serve->add_option("--scenario-dir", s.scenarioDir, "Directory of *.scenario.json")->capture_default_str();
  serve->add_option("--port", s.port, "TCP port; 0 picks a free one")->capture_default_str();
  serve->add_option("--address", s.address, "Bind address")->capture_default_str();
  serve->add_option("--storage", s.storage, "memory | docstore (default: SHINE_STORAGE)");
  serve->add_option("--storage-url", s.storageUrl, "Docstore directory (default: SHINE_STORAGE_URL)");
  serve->add_option("--threads", s.threads, "I/O threads")->capture_default_str();
  serve->add_option("--public-url", s.publicUrl, "ws:// base advertised in wsUrl");

  SimulateArgs m;
  auto* simulate = app.add_subcommand("simulate", "Run a bot script headless under virtual time");
  simulate->add_option("scenario", m.scenario, "Scenario file")->required();
  simulate->add_option("bot", m.bot, "Bot script (.bot.json)")->required();
  simulate->add_option("--seed", m.seed, "Seed for session id and token")->capture_default_str();
  simulate->add_option("--out", m.out, "Write the session log here");
  simulate->add_option("--format", m.format, "jsonl | csv")->capture_default_str();
  simulate->add_option("--mode", m.mode, "Override the delivery mode");
  simulate->add_option("--storage", m.storage, "memory | docstore (default: memory)");
  simulate->add_option("--storage-url", m.storageUrl, "Docstore directory");
  simulate->add_flag("--via-network", m.viaNetwork, "Drive the session over REST + WebSocket");

  std::string eId, eFormat = "jsonl", eOut, eStorage, eUrl;
  auto* exportCmd = app.add_subcommand("export", "Export one session's event log");
  exportCmd->add_option("session", eId, "Session id")->required();
  exportCmd->add_option("--format", eFormat, "jsonl | csv")->capture_default_str();
  exportCmd->add_option("--out", eOut, "Output file (default: stdout)");
  exportCmd->add_option("--storage", eStorage, "memory | docstore (default: SHINE_STORAGE)");
  exportCmd->add_option("--storage-url", eUrl, "Docstore directory (default: SHINE_STORAGE_URL)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << "run 'shinectl --help' for usage\n";
    return kBadInput;
  }

  if (validate->parsed()) return cmd_validate(vPath, vJson, out, err);
  if (simulate->parsed()) return cmd_simulate(m, out, err);
  if (exportCmd->parsed()) return cmd_export(eId, eFormat, eOut, eStorage, eUrl, out, err);
  if (serve->parsed()) return cmd_serve(s, out, err);
  return kBadInput;
}

}  // namespace shinectl
