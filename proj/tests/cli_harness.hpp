#pragma once

// Drives the interactmove executable through the shell and compares the
// files it writes.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace cli {

namespace fs = std::filesystem;

inline std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

// Exit status of `interactmove args...`, run from `cwd` with output captured
// to cwd/<log>.
inline int run(const fs::path& cwd, const std::vector<std::string>& args, const std::string& log = "cli.log") {
  std::string cmd = "cd " + quote(cwd.string()) + " && " + quote(INTERACTMOVE_CLI);
  for (const auto& a : args) cmd += " " + quote(a);
  cmd += " >" + quote(log) + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Relative path -> bytes for every regular file under `root`.
inline std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  if (fs::is_regular_file(root)) {
    out[root.filename().string()] = slurp(root);
    return out;
  }
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return out;
}

inline fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

inline std::string fixture(const std::string& name) { return (fs::path(INTERACTMOVE_FIXTURES) / name).string(); }

// One invocation per subcommand, each run twice into separate directories
// under `work`. Returns subcommand -> (identical, exit codes ok).
struct DeterminismCase {
  std::string name;
  bool ok = false;
  bool identical = false;
  std::size_t files = 0;
};

inline std::vector<DeterminismCase> determinism_suite(const fs::path& work) {
  const std::string cfg = fixture("quick.json");
  std::vector<DeterminismCase> out;
  auto twice = [&](const std::string& name, const std::vector<std::string>& args, const std::string& product) {
    DeterminismCase c{name};
    std::map<std::string, std::string> first;
    c.ok = true;
    for (int round = 0; round < 2; ++round) {
      const fs::path dir = work / (name + "_" + std::to_string(round));
      fs::create_directories(dir);
      std::vector<std::string> a = args;
      for (auto& s : a) {
        if (s.rfind("@", 0) == 0) s = (work / s.substr(1)).string();
      }
      c.ok = c.ok && run(dir, a) == 0;
      const fs::path p = product.empty() ? dir / "cli.log" : dir / product;
      c.ok = c.ok && fs::exists(p);
      if (!c.ok) break;
      auto t = tree(p);
      if (round == 0) {
        first = std::move(t);
        c.files = first.size();
      } else {
        c.identical = t == first;
      }
    }
    out.push_back(c);
  };
  // shared inputs for the downstream commands
  fs::create_directories(work / "shared");
  const int prep = run(work / "shared", {"synthesize", "--config", cfg, "--seed", "4", "--out", "ds"}) |
                   run(work / "shared", {"train", "--config", cfg, "--dataset", "ds", "--model", "affordance", "--out", "aff.ckpt", "--seed", "4"}) |
                   run(work / "shared", {"train", "--config", cfg, "--dataset", "ds", "--model", "interaction", "--out", "int.ckpt", "--seed", "4"});
  if (prep != 0) return out;
  std::string text, scene;
  {
    const std::string manifest = slurp(work / "shared" / "ds" / "manifest.json");
    const auto k = manifest.find("\"text\": \"");
    if (k == std::string::npos) return out;
    text = manifest.substr(k + 9, manifest.find('"', k + 9) - (k + 9));
    scene = (work / "shared" / "ds" / "scenes" / "sample_0.json").string();
  }
  const std::string ds = "@shared/ds";
  twice("synthesize", {"synthesize", "--config", cfg, "--seed", "7", "--out", "out"}, "out");
  twice("ground", {"ground", "--scene", scene, "--text", text, "--out", "g.json"}, "g.json");
  twice("affordance compute", {"affordance", "compute", "--config", cfg, "--dataset", ds, "--out", "out"}, "out");
  twice("affordance generate", {"affordance", "generate", "--config", cfg, "--model", "@shared/aff.ckpt", "--scene", scene, "--text", text,
                                "--out", "a.imar", "--seed", "7"},
        "a.imar");
  twice("train", {"train", "--config", cfg, "--dataset", ds, "--model", "interaction", "--out", "m.ckpt", "--seed", "7"}, "m.ckpt");
  twice("generate", {"generate", "--config", cfg, "--scene", scene, "--text", text, "--affordance-model", "@shared/aff.ckpt",
                     "--interaction-model", "@shared/int.ckpt", "--out", "out", "--seed", "7"},
        "out");
  twice("eval", {"eval", "--config", cfg, "--dataset", ds, "--affordance-model", "@shared/aff.ckpt", "--interaction-model",
                 "@shared/int.ckpt", "--seed", "7", "--out", "r.json"},
        "r.json");
  twice("export", {"export", "--dataset", ds, "--record", "sample_1", "--out", "out"}, "out");
  return out;
}

}  // namespace cli
