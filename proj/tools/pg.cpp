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
// pg: command-line client for a pgzone data grid, plus `pg serve`.
//
// Exit codes: 0 success, 1 user error, 2 denied, 3 server or internal error.

#include <signal.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pg/client.hpp"
#include "pg/gateway.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::string addr;
  std::string token_file;
  bool json_out = false;
};

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

std::string default_token_file() {
  return env_or("PG_TOKEN_FILE", env_or("HOME", ".") + "/.pgzone/token");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw pg::Error(pg::Errc::Io, "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw pg::Error(pg::Errc::Io, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::unique_ptr<pg::Client> connect(const Globals& g, bool with_token = true) {
  auto c = std::make_unique<pg::Client>(g.addr);
  if (with_token) {
    std::error_code ec;
    if (!fs::exists(g.token_file, ec))
      throw pg::Error(pg::Errc::Unauthenticated, "not logged in; run `pg login <user>` first");
    std::string token = read_file(g.token_file);
    while (!token.empty() && (token.back() == '\n' || token.back() == '\r')) token.pop_back();
    c->set_token(token);
  }
  return c;
}

/// k=v pairs; values that parse as JSON keep their type, anything else is a string.
json parse_bindings(const std::vector<std::string>& pairs) {
  json out = json::object();
  for (const auto& p : pairs) {
    auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0)
      throw pg::Error(pg::Errc::InvalidArgument, "binding must be name=value, got '" + p + "'");
    std::string name = p.substr(0, eq);
    if (name[0] == '$') name.erase(0, 1);
    json v = json::parse(p.substr(eq + 1), nullptr, false);
    out[name] = v.is_discarded() ? json(p.substr(eq + 1)) : v;
  }
  return out;
}

void print(const Globals& g, const json& j, const std::function<void()>& human) {
  if (g.json_out)
    std::cout << j.dump(2) << "\n";
  else
    human();
}

int serve(const std::string& config_path, const std::string& bind_override) {
  pg::ZoneConfig cfg;
  std::string path = config_path.empty() ? env_or("PG_CONFIG", "") : config_path;
  if (path.empty() && fs::exists("pgzone.toml")) path = "pgzone.toml";
  if (!path.empty()) cfg = pg::load_config(path);
  pg::apply_env_overrides(cfg);
  if (!bind_override.empty()) cfg.bind = bind_override;

  // Block termination signals before any thread starts so sigwait() sees them.
  sigset_t sigs;
  sigemptyset(&sigs);
  sigaddset(&sigs, SIGINT);
  sigaddset(&sigs, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &sigs, nullptr);

  pg::Zone zone(cfg);
  pg::Server server(zone);
  auto [host, port] = pg::split_host_port(cfg.bind);
  int bound = server.start(host, port);
  std::cout << "pg serve: zone " << cfg.zone_name << " listening on " << host << ":" << bound
            << std::endl;
  int sig = 0;
  sigwait(&sigs, &sig);
  server.stop();
  std::cout << "pg serve: stopped" << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pg: client for a policy-governed data grid zone"};
  app.require_subcommand(1);
  // Global flags may also follow the subcommand: `pg rule list --json`.
  app.fallthrough();
  Globals g;
  g.addr = env_or("PG_ADDR", "127.0.0.1:1247");
  g.token_file = default_token_file();
  app.add_option("--addr", g.addr, "Zone address host:port (env PG_ADDR)");
  app.add_option("--token-file", g.token_file, "Where the session token is kept (env PG_TOKEN_FILE)");
  app.add_flag("--json", g.json_out, "Machine-readable output");

  std::function<void()> action;

  // login ------------------------------------------------------------------
  auto* login = app.add_subcommand("login", "Start a session");
  std::string user, secret;
  login->add_option("user", user)->required();
  login->add_option("--secret", secret, "Secret (default: env PG_SECRET, else first stdin line)");
  login->callback([&] {
    action = [&] {
      if (secret.empty()) secret = env_or("PG_SECRET", "");
      if (secret.empty()) std::getline(std::cin, secret);
      auto c = connect(g, false);
      std::string token = c->login(user, secret);
      fs::path tf(g.token_file);
      if (tf.has_parent_path()) fs::create_directories(tf.parent_path());
      write_file(g.token_file, token + "\n");
      fs::permissions(tf, fs::perms::owner_read | fs::perms::owner_write);
      print(g, {{"user", user}, {"token_file", g.token_file}},
            [&] { std::cout << "logged in as " << user << "\n"; });
    };
  });

  auto* health = app.add_subcommand("health", "Check that the zone answers");
  health->callback([&] {
    action = [&] {
      json j = connect(g, false)->health();
      print(g, j, [&] { std::cout << j.dump() << "\n"; });
    };
  });

  // data -------------------------------------------------------------------
  std::string path, local, resc, from, to;
  auto* put = app.add_subcommand("put", "Store a local file as a data object");
  put->add_option("path", path)->required();
  put->add_option("local", local)->required();
  put->add_option("--resc", resc, "Target resource");
  put->callback([&] {
    action = [&] {
      json obj = connect(g)->put(path, read_file(local), resc);
      print(g, obj, [&] {
        std::cout << path << " version " << obj.value("version", 0) << "\n";
      });
    };
  });

  auto* get = app.add_subcommand("get", "Fetch a data object");
  get->add_option("path", path)->required();
  get->add_option("local", local, "Output file (default: stdout)");
  get->callback([&] {
    action = [&] {
      pg::Bytes b = connect(g)->get(path);
      if (local.empty() || local == "-")
        std::cout.write(b.data(), static_cast<std::streamsize>(b.size()));
      else
        write_file(local, b);
    };
  });

  auto* rm = app.add_subcommand("rm", "Remove a data object");
  rm->add_option("path", path)->required();
  rm->callback([&] { action = [&] { connect(g)->remove(path); }; });

  std::string kind, owner;
  auto* mkdir = app.add_subcommand("mkdir", "Create a collection");
  mkdir->add_option("path", path)->required();
  mkdir->add_option("--kind", kind, "plain, stream or workflow")->default_val("plain");
  mkdir->add_option("--owner", owner, "Owner (admins only)");
  mkdir->callback([&] { action = [&] { connect(g)->mkdir(path, kind, owner); }; });

  auto* ls = app.add_subcommand("ls", "List a collection");
  ls->add_option("path", path)->required();
  ls->callback([&] {
    action = [&] {
      json j = connect(g)->list(path);
      print(g, j, [&] {
        for (const auto& c : j["collections"]) std::cout << c.get<std::string>() << "/\n";
        for (const auto& o : j["objects"]) std::cout << o.get<std::string>() << "\n";
      });
    };
  });

  auto* stat = app.add_subcommand("stat", "Show a data object's replicas and metadata");
  stat->add_option("path", path)->required();
  stat->callback([&] {
    action = [&] {
      json j = connect(g)->stat(path);
      print(g, j, [&] {
        std::cout << j["path"].get<std::string>() << " owner " << j["owner"].get<std::string>()
                  << " version " << j["version"] << "\n";
        for (const auto& r : j["replicas"])
          std::cout << "  " << r["resource"].get<std::string>() << " " << r["status"].get<std::string>()
                    << " " << r["size"] << " " << r["checksum"].get<std::string>() << "\n";
      });
    };
  });

  auto* replicate = app.add_subcommand("replicate", "Copy a data object to another resource");
  replicate->add_option("path", path)->required();
  replicate->add_option("resource", resc)->required();
  replicate->callback([&] {
    action = [&] {
      json r = connect(g)->replicate(path, resc);
      print(g, r, [&] { std::cout << path << " -> " << resc << "\n"; });
    };
  });

  auto* stage = app.add_subcommand("stage", "Copy a replica to a cache resource");
  stage->add_option("path", path)->required();
  stage->add_option("--from", from)->required();
  stage->add_option("--to", to)->required();
  stage->callback([&] {
    action = [&] {
      json r = connect(g)->stage(path, from, to);
      print(g, r, [&] { std::cout << path << ": " << from << " -> " << to << "\n"; });
    };
  });

  auto* archive = app.add_subcommand("archive", "Copy a data object to an archive resource");
  archive->add_option("path", path)->required();
  archive->add_option("resource", resc)->required();
  archive->callback([&] {
    action = [&] {
      json r = connect(g)->archive(path, resc);
      print(g, r, [&] { std::cout << path << " -> " << resc << "\n"; });
    };
  });

  auto* verify = app.add_subcommand("verify", "Re-checksum every replica of a data object");
  verify->add_option("path", path)->required();
  verify->callback([&] {
    action = [&] {
      json r = connect(g)->verify(path);
      print(g, r, [&] {
        for (const auto& s : r["suspect"]) std::cout << "suspect: " << s.get<std::string>() << "\n";
      });
    };
  });

  std::string principal, perm;
  auto* acl = app.add_subcommand("acl", "Grant or revoke access (perm: none, read, write, own)");
  acl->add_option("path", path)->required();
  acl->add_option("principal", principal)->required();
  acl->add_option("perm", perm)->required();
  acl->callback([&] { action = [&] { connect(g)->set_acl(path, principal, perm); }; });

  // meta -------------------------------------------------------------------
  auto* meta = app.add_subcommand("meta", "Attribute-value-unit metadata");
  meta->require_subcommand(1);
  std::string name, value, comment, predicate;
  auto* meta_add = meta->add_subcommand("add", "Attach a triple");
  meta_add->add_option("path", path)->required();
  meta_add->add_option("name", name)->required();
  meta_add->add_option("value", value)->required();
  meta_add->add_option("comment", comment);
  meta_add->callback([&] { action = [&] { connect(g)->meta_add(path, name, value, comment); }; });
  auto* meta_query = meta->add_subcommand("query", "Find paths, e.g. 'name = \"a\" and value like \"x*\"'");
  meta_query->add_option("predicate", predicate)->required();
  meta_query->callback([&] {
    action = [&] {
      json j = connect(g)->meta_query(predicate);
      print(g, j, [&] {
        for (const auto& p : j["paths"]) std::cout << p.get<std::string>() << "\n";
      });
    };
  });
  auto* meta_ls = meta->add_subcommand("ls", "List the triples on a path");
  meta_ls->add_option("path", path)->required();
  meta_ls->callback([&] {
    action = [&] {
      json j = connect(g)->meta_list(path);
      print(g, j, [&] {
        for (const auto& t : j["avus"])
          std::cout << t["name"].get<std::string>() << " = " << t["value"].get<std::string>()
                    << (t["comment"].get<std::string>().empty() ? "" : "  # " + t["comment"].get<std::string>())
                    << "\n";
      });
    };
  });

  // rule -------------------------------------------------------------------
  auto* rule = app.add_subcommand("rule", "Rule base");
  rule->require_subcommand(1);
  std::string file;
  auto* rule_add = rule->add_subcommand("add", "Install rules from a .rule file");
  rule_add->add_option("file", file)->required();
  rule_add->callback([&] {
    action = [&] {
      json j = connect(g)->rule_add(read_file(file));
      print(g, j, [&] {
        for (const auto& n : j["added"]) std::cout << "added " << n.get<std::string>() << "\n";
        std::cout << "rule base version " << j["version"] << "\n";
      });
    };
  });
  auto* rule_rm = rule->add_subcommand("rm", "Remove a rule");
  rule_rm->add_option("name", name)->required();
  rule_rm->callback([&] { action = [&] { connect(g)->rule_remove(name); }; });
  auto* rule_list = rule->add_subcommand("list", "Show the rule base");
  rule_list->callback([&] {
    action = [&] {
      json j = connect(g)->rule_list();
      print(g, j, [&] {
        std::cout << "# rule base version " << j["version"] << "\n";
        for (const auto& r : j["rules"]) std::cout << r["source"].get<std::string>() << "\n";
      });
    };
  });

  // wf ---------------------------------------------------------------------
  auto* wf = app.add_subcommand("wf", "Workflows and runs");
  wf->require_subcommand(1);
  std::string coll, id, other;
  std::vector<std::string> binds;
  bool snapshot = false;
  auto* wf_attach = wf->add_subcommand("attach", "Attach a .proc file to a workflow collection");
  wf_attach->add_option("collection", coll)->required();
  wf_attach->add_option("file", file)->required();
  wf_attach->callback([&] {
    action = [&] {
      json j = connect(g)->wf_attach(coll, read_file(file));
      print(g, j, [&] { std::cout << j["workflow_id"].get<std::string>() << "\n"; });
    };
  });
  auto* wf_list = wf->add_subcommand("list", "List the workflow versions of a collection");
  wf_list->add_option("collection", coll)->required();
  wf_list->callback([&] {
    action = [&] {
      json j = connect(g)->wf_list(coll);
      print(g, j, [&] {
        for (const auto& w : j["workflows"])
          std::cout << w["workflow_id"].get<std::string>() << " " << w["procedure"].get<std::string>()
                    << "\n";
      });
    };
  });
  auto print_run = [&](const json& r) {
    print(g, r, [&] {
      std::cout << "run " << r["run_id"].get<std::string>() << " " << r["status"].get<std::string>();
      if (!r.value("detail", "").empty()) std::cout << ": " << r["detail"].get<std::string>();
      std::cout << "\n";
      for (const auto& [p, c] : r["outputs"].items()) std::cout << "  out " << p << " " << c.get<std::string>() << "\n";
    });
  };
  auto* wf_run = wf->add_subcommand("run", "Run a workflow version");
  wf_run->add_option("workflow_id", id)->required();
  wf_run->add_option("--bind,-b", binds, "name=value");
  wf_run->add_flag("--snapshot", snapshot, "Copy inputs into the run collection");
  wf_run->callback([&] {
    action = [&] { print_run(connect(g)->wf_run(id, parse_bindings(binds), snapshot)); };
  });
  auto* wf_rerun = wf->add_subcommand("rerun", "Re-execute a run, optionally overriding bindings");
  wf_rerun->add_option("run_id", id)->required();
  wf_rerun->add_option("--bind,-b", binds, "name=value");
  wf_rerun->add_flag("--snapshot", snapshot, "Copy inputs into the run collection");
  wf_rerun->callback([&] {
    action = [&] { print_run(connect(g)->wf_rerun(id, parse_bindings(binds), snapshot)); };
  });
  auto* wf_show = wf->add_subcommand("show", "Show a run record");
  wf_show->add_option("run_id", id)->required();
  wf_show->callback([&] { action = [&] { print_run(connect(g)->run_get(id)); }; });
  auto* wf_diff = wf->add_subcommand("diff", "Compare two runs");
  wf_diff->add_option("a", id)->required();
  wf_diff->add_option("b", other)->required();
  wf_diff->callback([&] {
    action = [&] {
      json d = connect(g)->diff(id, other);
      print(g, d, [&] {
        if (d["workflow_mismatch"].get<bool>()) std::cout << "workflow differs\n";
        for (const char* section : {"inputs", "outputs"})
          for (const auto& c : d[section])
            std::cout << section << " " << c["kind"].get<std::string>() << " " << c["path"].get<std::string>()
                      << "\n";
        for (const auto& b : d["bindings"])
          std::cout << "binding " << b["name"].get<std::string>() << ": " << b["a"].dump() << " -> "
                    << b["b"].dump() << "\n";
      });
    };
  });

  // stream -----------------------------------------------------------------
  auto* stream = app.add_subcommand("stream", "Time-indexed stream collections");
  stream->require_subcommand(1);
  std::uint64_t t_from = 0, t_to = 0;
  auto* s_ingest = stream->add_subcommand("ingest", "Ingest a framed segment file");
  s_ingest->add_option("collection", coll)->required();
  s_ingest->add_option("file", file)->required();
  s_ingest->add_option("--resc", resc);
  s_ingest->callback([&] {
    action = [&] {
      json j = connect(g)->stream_ingest(coll, read_file(file), resc);
      print(g, j, [&] {
        std::cout << "segment " << j["segment_id"] << " [" << j["t_min"] << ", " << j["t_max"] << "] "
                  << j["record_count"] << " records\n";
      });
    };
  });
  auto* s_read = stream->add_subcommand("read", "Write records with from <= t < to as framed bytes");
  s_read->add_option("collection", coll)->required();
  s_read->add_option("--from", t_from, "µs, inclusive")->required();
  s_read->add_option("--to", t_to, "µs, exclusive")->required();
  s_read->add_option("--out,-o", local, "Output file (default: stdout)");
  s_read->callback([&] {
    action = [&] {
      pg::Bytes b = connect(g)->stream_read(coll, t_from, t_to);
      if (local.empty() || local == "-")
        std::cout.write(b.data(), static_cast<std::streamsize>(b.size()));
      else
        write_file(local, b);
    };
  });
  auto* s_stat = stream->add_subcommand("stat", "Record and segment counts");
  s_stat->add_option("collection", coll)->required();
  s_stat->callback([&] {
    action = [&] {
      json j = connect(g)->stream_stat(coll);
      print(g, j, [&] {
        std::cout << j["record_count"] << " records in " << j["segment_count"] << " segments";
        if (j.contains("t_min")) std::cout << ", t in [" << j["t_min"] << ", " << j["t_max"] << "]";
        std::cout << "\n";
      });
    };
  });

  // admin ------------------------------------------------------------------
  auto* admin = app.add_subcommand("admin", "Zone administration");
  admin->require_subcommand(1);
  std::string role, root, driver, type, event, actor, resc_kind;
  std::int64_t a_from = 0, a_to = INT64_MAX;
  auto* adduser = admin->add_subcommand("adduser", "Create a user");
  adduser->add_option("name", name)->required();
  adduser->add_option("--role", role)->default_val("user");
  adduser->add_option("--secret", secret, "Secret (default: env PG_NEW_SECRET, else first stdin line)");
  adduser->callback([&] {
    action = [&] {
      if (secret.empty()) secret = env_or("PG_NEW_SECRET", "");
      if (secret.empty()) std::getline(std::cin, secret);
      connect(g)->add_user(name, role, secret);
    };
  });
  auto* group = admin->add_subcommand("group", "Add a user to a group");
  group->add_option("user", user)->required();
  group->add_option("group", name)->required();
  group->callback([&] { action = [&] { connect(g)->add_to_group(user, name); }; });
  auto* mkresc = admin->add_subcommand("mkresc", "Register a storage resource");
  mkresc->add_option("name", name)->required();
  mkresc->add_option("driver", driver)->required();
  mkresc->add_option("root", root)->required();
  mkresc->add_option("--kind", resc_kind, "cache or archive")->default_val("cache");
  mkresc->callback([&] { action = [&] { connect(g)->add_resource(name, driver, root, resc_kind); }; });
  auto* adddriver = admin->add_subcommand("adddriver", "Register a driver instance of a built-in type");
  adddriver->add_option("name", name)->required();
  adddriver->add_option("type", type, "localfs, mem or archive")->required();
  adddriver->callback([&] { action = [&] { connect(g)->add_driver(name, type); }; });
  auto* drivers = admin->add_subcommand("drivers", "List registered drivers");
  drivers->callback([&] {
    action = [&] {
      json j = connect(g)->drivers();
      print(g, j, [&] {
        for (const auto& d : j["drivers"]) std::cout << d.get<std::string>() << "\n";
      });
    };
  });
  auto* orphans = admin->add_subcommand("orphans", "Replicas a driver could not unlink");
  orphans->callback([&] {
    action = [&] {
      json j = connect(g)->orphans();
      print(g, j, [&] {
        for (const auto& o : j["orphans"])
          std::cout << o["path"].get<std::string>() << " " << o["resource"].get<std::string>() << "\n";
      });
    };
  });
  auto* audit = admin->add_subcommand("audit", "Query the audit trail");
  audit->add_option("--from", a_from, "µs, inclusive");
  audit->add_option("--to", a_to, "µs, exclusive");
  audit->add_option("--event", event);
  audit->add_option("--actor", actor);
  audit->callback([&] {
    action = [&] {
      json j = connect(g)->audit(a_from, a_to, event, actor);
      print(g, j, [&] {
        for (const auto& e : j["entries"])
          std::cout << e["seq"] << " " << e["when"] << " " << e["actor"].get<std::string>() << " "
                    << e["event"].get<std::string>() << " " << e["detail"].get<std::string>() << "\n";
      });
    };
  });

  // serve ------------------------------------------------------------------
  auto* serve_cmd = app.add_subcommand("serve", "Run a zone server in the foreground");
  std::string config_path, bind;
  serve_cmd->add_option("--config", config_path, "Config file (env PG_CONFIG, default ./pgzone.toml)");
  serve_cmd->add_option("--bind", bind, "host:port, overrides the config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (serve_cmd->parsed()) return serve(config_path, bind);
    if (action) action();
    return 0;
  } catch (const pg::Error& e) {
    std::cerr << "pg: " << pg::errc_name(e.code()) << ": " << e.what() << "\n";
    return pg::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "pg: " << e.what() << "\n";
    return 3;
  }
}
