// Copyright 2026 The pgzone Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include <gtest/gtest.h>

#include <netinet/in.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "fixtures.hpp"
#include "pg/client.hpp"
#include "pg/gateway.hpp"

namespace {

using nlohmann::json;

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream b;
  b << in.rdbuf();
  return b.str();
}

int free_port() {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in a{};
  a.sin_family = AF_INET;
  a.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&a), sizeof(a));
  socklen_t len = sizeof(a);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&a), &len);
  ::close(fd);
  return ntohs(a.sin_port);
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    pg::ZoneConfig cfg;
    cfg.journal_dir = "";
    cfg.admin_secret = "rods-secret";
    zone = std::make_unique<pg::Zone>(cfg);
    server = std::make_unique<pg::Server>(*zone);
    port = server->start("127.0.0.1", 0);
    zone->catalog().create_user("rods", "alice", pg::Role::user, "alice-secret");
    zone->catalog().set_acl("rods", "/home", "alice", pg::Perm::write);
  }
  void TearDown() override { server->stop(); }

  Result pg(const std::vector<std::string>& args, const std::string& token = "admin") {
    std::string cmd = "PG_ADDR=127.0.0.1:" + std::to_string(port) +
                      " PG_TOKEN_FILE=" + quote((dir.path() / (token + ".token")).string()) + " " +
                      quote(PG_CLI_PATH);
    for (const auto& a : args) cmd += " " + quote(a);
    const auto out = dir.path() / "stdout";
    const auto err = dir.path() / "stderr";
    cmd += " >" + quote(out.string()) + " 2>" + quote(err.string()) + " </dev/null";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  void login(const std::string& user, const std::string& token) {
    const Result r = pg({"login", user, "--secret", user + "-secret"}, token);
    ASSERT_EQ(r.code, 0) << r.err;
  }

  std::string write_local(const std::string& name, const std::string& bytes) {
    const auto p = dir.path() / name;
    std::ofstream(p, std::ios::binary) << bytes;
    return p.string();
  }

  pgtest::TempDir dir;
  std::unique_ptr<pg::Zone> zone;
  std::unique_ptr<pg::Server> server;
  int port = 0;
};

TEST_F(CliTest, PutGetRoundTrip) {
  login("rods", "admin");
  ASSERT_EQ(pg({"admin", "mkresc", "disk1", "mem", "disk1"}).code, 0);
  const std::string local = write_local("local.bin", std::string("bin\0ary\xff", 8));
  Result r = pg({"put", "/home/f", local, "--resc", "disk1"});
  EXPECT_EQ(r.code, 0) << r.err;
  r = pg({"get", "/home/f"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, std::string("bin\0ary\xff", 8));
  r = pg({"stat", "/home/f", "--json"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(json::parse(r.out).at("replicas").at(0).at("resource"), "disk1");
}

TEST_F(CliTest, ArchiveRuleDeniesRemoval) {
  login("rods", "admin");
  const std::string rules = write_local("deletion.rule", R"(
rule archive_no_delete priority 10 on pep.data.remove.pre
  when $obj.path matches "/archive/*" do deny("permanent")
)");
  ASSERT_EQ(pg({"rule", "add", rules}).code, 0);
  ASSERT_EQ(pg({"mkdir", "/archive"}).code, 0);
  ASSERT_EQ(pg({"put", "/archive/f", write_local("f", "keep me")}).code, 0);
  const Result r = pg({"rm", "/archive/f"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("permanent"), std::string::npos) << r.err;
  EXPECT_TRUE(zone->catalog().object("/archive/f"));
}

TEST_F(CliTest, RuleListJson) {
  login("rods", "admin");
  ASSERT_EQ(pg({"rule", "add", write_local("a.rule", "rule r1 on pep.data.get.pre do allow()")}).code, 0);
  const Result r = pg({"rule", "list", "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j.at("version"), zone->engine().list_rules().version);
  ASSERT_EQ(j.at("rules").size(), 1u);
  EXPECT_EQ(j.at("rules").at(0).at("name"), "r1");
}

TEST_F(CliTest, ExitCodes) {
  Result r = pg({"get", "/home/x"}, "nobody");
  EXPECT_EQ(r.code, 2) << "not logged in";
  r = pg({"login", "rods", "--secret", "wrong"});
  EXPECT_EQ(r.code, 2);
  login("alice", "alice");
  r = pg({"get", "/home/missing"}, "alice");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("NoSuchObject"), std::string::npos);
  r = pg({"admin", "adduser", "eve", "--secret", "s"}, "alice");
  EXPECT_EQ(r.code, 2);
  r = pg({"no-such-command"});
  EXPECT_EQ(r.code, 1);
  r = pg({"rule", "add", write_local("bad.rule", "rule on")});
  EXPECT_EQ(r.code, 2) << "the admin token file is still empty";
  login("rods", "admin");
  r = pg({"rule", "add", write_local("bad.rule", "rule on")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("SyntaxError"), std::string::npos);
}

TEST_F(CliTest, MetadataAndWorkflows) {
  login("alice", "alice");
  ASSERT_EQ(pg({"put", "/home/d", write_local("d", "x")}, "alice").code, 0);
  ASSERT_EQ(pg({"meta", "add", "/home/d", "kind", "raw"}, "alice").code, 0);
  Result r = pg({"--json", "meta", "query", "name = \"kind\" && value = \"raw\""}, "alice");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out).at("paths"), json::array({"/home/d"}));

  ASSERT_EQ(pg({"mkdir", "/home/wf", "--kind", "workflow"}, "alice").code, 0);
  const auto proc = write_local("double.proc", "procedure double($n) { put_int(\"out\", $n * 2) }");
  r = pg({"--json", "wf", "attach", "/home/wf", proc}, "alice");
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string id = json::parse(r.out).at("workflow_id");
  r = pg({"--json", "wf", "run", id, "-b", "n=21"}, "alice");
  ASSERT_EQ(r.code, 0) << r.err;
  const json run = json::parse(r.out);
  EXPECT_EQ(run.at("status"), "ok");
  r = pg({"--json", "wf", "rerun", run.at("run_id"), "-b", "n=22"}, "alice");
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string second = json::parse(r.out).at("run_id");
  r = pg({"--json", "wf", "diff", run.at("run_id"), second}, "alice");
  ASSERT_EQ(r.code, 0) << r.err;
  const json diff = json::parse(r.out);
  int differing = 0;
  for (const auto& c : diff.at("outputs")) differing += c.at("kind") != "identical";
  EXPECT_EQ(differing, 1);
}

TEST(CliServe, ServesAndFlushesOnSignal) {
  pgtest::TempDir dir;
  const int port = free_port();
  const std::string addr = "127.0.0.1:" + std::to_string(port);
  auto launch = [&] {
    pid_t pid = ::fork();
    if (pid == 0) {
      ::setenv("PG_JOURNAL_DIR", (dir.path() / "zone").c_str(), 1);
      ::setenv("PG_ADMIN_SECRET", "rods-secret", 1);
      ::setenv("PG_CONFIG", "/dev/null", 1);
      const int devnull = ::open("/dev/null", O_WRONLY);
      ::dup2(devnull, 1);
      ::execl(PG_CLI_PATH, "pg", "serve", "--bind", addr.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    return pid;
  };
  auto wait_ready = [&] {
    for (int i = 0; i < 200; ++i) {
      try {
        pg::Client c(addr);
        c.health();
        return true;
      } catch (const pg::Error&) {
        std::this_thread::sleep_for(std::chrono::milliseconds(25));
      }
    }
    return false;
  };
  auto stop = [](pid_t pid) {
    ::kill(pid, SIGTERM);
    int status = 0;
    ::waitpid(pid, &status, 0);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };

  pid_t pid = launch();
  ASSERT_TRUE(wait_ready());
  {
    pg::Client c(addr);
    c.set_token(c.login("rods", "rods-secret"));
    c.put("/home/kept", "survives restarts");
  }
  EXPECT_EQ(stop(pid), 0);

  pid = launch();
  ASSERT_TRUE(wait_ready());
  {
    pg::Client c(addr);
    c.set_token(c.login("rods", "rods-secret"));
    EXPECT_EQ(c.get("/home/kept"), "survives restarts");
  }
  EXPECT_EQ(stop(pid), 0);
}

}  // namespace
