#include "fixtures.hpp"

#include "cli.hpp"

#include "shine/log/export.hpp"

#include <boost/process.hpp>
#include <gtest/gtest.h>
#include <httplib.h>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#ifndef SHINECTL_PATH
#error "SHINECTL_PATH must name the shinectl binary"
#endif

namespace {

namespace fs = std::filesystem;
namespace bp = boost::process;
using nlohmann::json;

struct Run {
  int code;
  std::string out, err;
};

Run shinectl(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = shinectl::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("shine-cli-" + std::to_string(::getpid()) + "-" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    auto p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

  fs::path dir_;
  const std::string scenario_ = shine::testing::default_scenario_path();
};

TEST_F(CliTest, ValidateBundledScenario) {
  auto r = shinectl({"validate", scenario_});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "OK (0 error(s), 0 warning(s))\n");
  auto j = shinectl({"validate", scenario_, "--json"});
  EXPECT_EQ(j.code, 0);
  EXPECT_TRUE(json::parse(j.out)["ok"].get<bool>());
}

TEST_F(CliTest, ValidateReportsSemanticErrors) {
  auto doc = shine::testing::default_scenario_json();
  doc["rules"][1]["actions"][0]["deviceId"] = "toaster";
  auto r = shinectl({"validate", write("bad.scenario.json", doc.dump()), "--json"});
  EXPECT_EQ(r.code, 1);
  auto report = json::parse(r.out);
  EXPECT_FALSE(report["ok"].get<bool>());
  EXPECT_NE(report.dump().find("rules[1].actions[0].deviceId"), std::string::npos) << report.dump(2);
}

TEST_F(CliTest, ValidateParseAndIoErrors) {
  auto broken = shinectl({"validate", write("broken.scenario.json", "{\"id\": ")});
  EXPECT_EQ(broken.code, 2);
  EXPECT_FALSE(broken.err.empty());
  EXPECT_EQ(shinectl({"validate", (dir_ / "missing.json").string()}).code, 2);
  EXPECT_EQ(shinectl({"validate"}).code, 2);
  EXPECT_EQ(shinectl({}).code, 2);
  EXPECT_EQ(shinectl({"frobnicate"}).code, 2);
}

TEST_F(CliTest, SimulatePassingBot) {
  auto out = (dir_ / "log.csv").string();
  auto r = shinectl({"simulate", scenario_, shine::testing::bot_dir() + "/walkthrough.bot.json", "--out", out,
                     "--format", "csv"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.err.rfind("PASS walkthrough", 0), 0u) << r.err;
  auto report = json::parse(r.out);
  EXPECT_TRUE(report["passed"].get<bool>());
  EXPECT_EQ(report["summary"]["status"], "completed");
  std::ifstream in(out);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto events = shine::log::parse_csv(text);
  ASSERT_FALSE(events.empty());
  EXPECT_EQ(events.front().sessionId, report["sessionId"]);
}

TEST_F(CliTest, SimulateFailingBotNamesTheStep) {
  auto bot = write("fail.bot.json", R"({"name": "doomed", "steps": [
      {"op": "interact", "deviceId": "window", "property": "open", "value": true},
      {"op": "expect_task", "taskId": "make_coffee", "status": "completed"},
      {"op": "complete"}]})");
  auto r = shinectl({"simulate", scenario_, bot});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("FAIL doomed"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("step 1"), std::string::npos) << r.err;
  auto report = json::parse(r.out);
  EXPECT_EQ(report["failedStep"], 1);
}

TEST_F(CliTest, SimulateBadInputs) {
  auto bot = shine::testing::bot_dir() + "/empty.bot.json";
  EXPECT_EQ(shinectl({"simulate", scenario_, write("x.bot.json", "{\"steps\": 1}")}).code, 2);
  EXPECT_EQ(shinectl({"simulate", (dir_ / "nope.json").string(), bot}).code, 2);
  EXPECT_EQ(shinectl({"simulate", scenario_, bot, "--format", "xml"}).code, 2);
  EXPECT_EQ(shinectl({"simulate", scenario_, bot, "--mode", "shout"}).code, 2);
}

TEST_F(CliTest, SimulateModeOverrideAndSeed) {
  auto bot = shine::testing::bot_dir() + "/delivery_modes.bot.json";
  auto a = shinectl({"simulate", scenario_, bot, "--mode", "pull", "--seed", "5"});
  auto b = shinectl({"simulate", scenario_, bot, "--mode", "pull", "--seed", "5"});
  EXPECT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(json::parse(a.out)["summary"]["deliveryMode"], "pull");
}

TEST_F(CliTest, ExportFromADocStore) {
  auto store = (dir_ / "store").string();
  auto sim = shinectl({"simulate", scenario_, shine::testing::bot_dir() + "/three_tasks.bot.json", "--storage",
                       "docstore", "--storage-url", store});
  ASSERT_EQ(sim.code, 0) << sim.err;
  const std::string id = json::parse(sim.out)["sessionId"];
  auto jsonl = shinectl({"export", id, "--storage", "docstore", "--storage-url", store});
  EXPECT_EQ(jsonl.code, 0) << jsonl.err;
  auto events = shine::log::parse_jsonl(jsonl.out);
  ASSERT_FALSE(events.empty());
  EXPECT_EQ(events.back().type, shine::log::EventType::SESSION_END);

  auto file = (dir_ / "out.csv").string();
  EXPECT_EQ(shinectl({"export", id, "--format", "csv", "--out", file, "--storage", "docstore", "--storage-url", store})
                .code,
            0);
  EXPECT_TRUE(fs::file_size(file) > 0);
  EXPECT_EQ(shinectl({"export", "s-nobody", "--storage", "docstore", "--storage-url", store}).code, 1);
  EXPECT_EQ(shinectl({"export", id, "--format", "xml", "--storage", "docstore", "--storage-url", store}).code, 2);
  EXPECT_EQ(shinectl({"export", id, "--storage", "carrier-pigeon"}).code, 2);
}

TEST_F(CliTest, ServeBinaryAnswersAndStopsOnSigterm) {
  bp::ipstream out;
  bp::child server(SHINECTL_PATH, "serve", "--port", "0", "--scenario-dir", shine::testing::scenario_dir(),
                   bp::std_out > out, bp::std_err > bp::null);
  std::string line;
  ASSERT_TRUE(std::getline(out, line));
  std::smatch m;
  ASSERT_TRUE(std::regex_match(line, m, std::regex(R"(listening on http://127\.0\.0\.1:(\d+) with 1 scenario\(s\))")))
      << line;
  int port = std::stoi(m[1]);

  httplib::Client http("127.0.0.1", port);
  auto health = http.Get("/healthz");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  auto created = http.Post("/api/sessions", R"({"scenarioId":"default","participantId":"smoke"})",
                           "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  auto ws = json::parse(created->body)["wsUrl"].get<std::string>();
  EXPECT_EQ(ws.rfind("ws://127.0.0.1:" + std::to_string(port) + "/ws/sessions/", 0), 0u) << ws;

  ::kill(server.id(), SIGTERM);
  server.wait();
  EXPECT_EQ(server.exit_code(), 0);
}

TEST_F(CliTest, ServeWithoutScenariosRefusesToStart) {
  auto r = shinectl({"serve", "--port", "0", "--scenario-dir", dir_.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("no valid scenarios"), std::string::npos);
}

}  // namespace
