// rwre — random walks in i.i.d. random environments on Cayley trees.
//
// Usage:
//   rwre <simulate|speed|clt|branching|l1-tail|oracle-check>
//        --config <file> [--set key=value]... [--workers N]
//
// Exit codes: 0 success, 1 statistical-check failure, 2 usage error.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rwre/config.hpp"
#include "rwre/runner.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"random walk in random environment on Cayley trees"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  int workers = -1;

  const std::vector<std::string> commands = {"simulate",  "speed",
                                             "clt",       "branching",
                                             "l1-tail",   "oracle-check"};
  for (const auto& name : commands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("-c,--config", config_path, "key=value config file")
        ->required();
    sub->add_option("--set", overrides,
                    "override a config entry, e.g. --set walk.n_traj=10");
    sub->add_option("--workers", workers, "worker thread count override");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    std::string text = read_file(config_path);
    for (const auto& o : overrides) text += "\n" + o + "\n";
    // overrides replace earlier entries: strip duplicates keeping the last
    // by reparsing with later lines winning is not supported by the strict
    // parser, so apply overrides as a rewrite pass
    if (!overrides.empty()) {
      std::vector<std::string> keys;
      for (const auto& o : overrides)
        keys.push_back(o.substr(0, o.find('=')));
      std::istringstream in(read_file(config_path));
      std::ostringstream out;
      std::string line;
      while (std::getline(in, line)) {
        const auto eq = line.find('=');
        bool overridden = false;
        if (eq != std::string::npos) {
          std::string key = line.substr(0, eq);
          key.erase(key.find_last_not_of(" \t") + 1);
          for (const auto& k : keys)
            if (k == key) overridden = true;
        }
        if (!overridden) out << line << "\n";
      }
      for (const auto& o : overrides) out << o << "\n";
      text = out.str();
    }

    auto parsed = rwre::parse_config(text);
    if (!parsed.ok()) {
      for (const auto& err : parsed.errors) {
        std::cerr << "config error";
        if (err.line > 0) std::cerr << " (line " << err.line << ")";
        std::cerr << ": " << err.message << "\n";
      }
      return 2;
    }
    rwre::RunConfig cfg = *parsed.config;
    if (workers >= 0) cfg.workers = workers;

    const std::string command = app.get_subcommands().front()->get_name();
    const auto outcome = rwre::run_command(command, cfg);
    if (!outcome.summary.is_null())
      std::cout << outcome.summary.dump() << "\n";
    return outcome.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
