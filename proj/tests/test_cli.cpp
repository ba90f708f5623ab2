#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include "roadlift/io.hpp"

using namespace roadlift;
namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("roadlift_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

// Runs the CLI with `args`; stdout and stderr go to `log`.
int run(const std::string& args, const std::string& log) {
  const std::string cmd = std::string(ROADLIFT_CLI) + " " + args + " >" + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Relative path -> contents for every regular file below `root`.
std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

// Line endpoints of each <g data-id="..."> group in a rendered frame.
std::map<std::string, std::vector<double>> groups(const std::string& svg) {
  std::map<std::string, std::vector<double>> out;
  const std::regex group(R"re(data-id="([a-z]+-\d+)">([\s\S]*?)</g>)re");
  const std::regex number(R"re(="(-?[0-9.]+)")re");
  for (std::sregex_iterator g(svg.begin(), svg.end(), group), end; g != end; ++g) {
    const std::string body = (*g)[2];
    auto& v = out[(*g)[1]];
    for (std::sregex_iterator n(body.begin(), body.end(), number); n != end; ++n) v.push_back(std::stod((*n)[1]));
  }
  return out;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit 1, help exits 0") {
  Scratch s;
  CHECK(run("", s / "log") == 1);
  CHECK(run("bogus", s / "log") == 1);
  CHECK(run("lift --dataset " + s / "missing" + " --out " + s / "x", s / "log") == 1);
  CHECK(run("generate --out " + s / "d" + " --profile hill", s / "log") == 1);
  CHECK(run("--help", s / "log") == 0);
  CHECK(slurp(s / "log").find("generate") != std::string::npos);
}

TEST_CASE("generate is deterministic and lift-eval closes the loop") {
  Scratch s;
  REQUIRE(run("generate --out " + s / "a" + " --scenes-per-pose 1 --profile grade", s / "log") == 0);
  REQUIRE(run("generate --out " + s / "b" + " --scenes-per-pose 1 --profile grade", s / "log") == 0);
  const auto ta = tree(s / "a"), tb = tree(s / "b");
  CHECK(ta.size() == 1 + 7 * 4);
  CHECK(ta == tb);
  REQUIRE(run("generate --out " + s / "c" + " --scenes-per-pose 1 --profile grade --seed 8", s / "log") == 0);
  CHECK_FALSE(tree(s / "c") == ta);

  CHECK(run("eval --dataset " + s / "a" + " --self-check", s / "log") == 0);
  CHECK(slurp(s / "log").find("0 issues") != std::string::npos);

  REQUIRE(run("lift --dataset " + s / "a" + " --out " + s / "l.jsonl", s / "log") == 0);
  CHECK(slurp(s / "log").find("lifted 70 of 70") != std::string::npos);
  REQUIRE(run("eval --dataset " + s / "a" + " --lifted " + s / "l.jsonl" + " --out-prefix " + s / "ev", s / "log") == 0);
  const std::string report = slurp(s / "ev.txt");
  CHECK(report.find("AP pooled: 100.000%") != std::string::npos);
  CHECK(fs::exists(s / "ev.csv"));

  // reruns reproduce every output byte for byte, whatever the worker count
  REQUIRE(run("--workers 3 lift --dataset " + s / "a" + " --out " + s / "l3.jsonl", s / "log") == 0);
  CHECK(slurp(s / "l3.jsonl") == slurp(s / "l.jsonl"));
}

TEST_CASE("detections files: empty input, corrupt lines") {
  Scratch s;
  REQUIRE(run("generate --out " + s / "d" + " --scenes-per-pose 1", s / "log") == 0);
  {
    std::ofstream(s / "empty.txt");
  }
  REQUIRE(run("lift --dataset " + s / "d" + " --descriptor file --detections " + s / "empty.txt" + " --out " +
                  s / "e.jsonl",
              s / "log") == 0);
  nlohmann::json header;
  CHECK(parseLifted(slurp(s / "e.jsonl"), &header).empty());
  CHECK(header.at("descriptor") == "file");

  const auto scenes = readDataset(s / "d");
  std::vector<Detection> dets;
  for (const auto& sc : scenes)
    for (const auto& d : oracleDescriptor(sc.frame, {})) dets.push_back(d);
  std::string text = emitDetections({DescriptorLayout::Full, "perfect"}, dets);
  writeFileAtomic(s / "dets.txt", text);
  REQUIRE(run("lift --dataset " + s / "d" + " --descriptor file --detections " + s / "dets.txt" + " --out " +
                  s / "f.jsonl",
              s / "log") == 0);
  REQUIRE(run("lift --dataset " + s / "d" + " --out " + s / "p.jsonl", s / "log") == 0);
  // the file path reproduces the in-memory oracle apart from the header
  const auto body = [](const std::string& t) { return t.substr(t.find('\n')); };
  CHECK(body(slurp(s / "f.jsonl")) == body(slurp(s / "p.jsonl")));

  // break the fourth line
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) pos = text.find('\n', pos) + 1;
  text.insert(pos, "{not json");
  writeFileAtomic(s / "bad.txt", text);
  CHECK(run("lift --dataset " + s / "d" + " --descriptor file --detections " + s / "bad.txt" + " --out " +
                s / "g.jsonl",
            s / "log") == 2);
  CHECK(slurp(s / "log").find("line 4") != std::string::npos);
  CHECK_FALSE(fs::exists(s / "g.jsonl"));
}

TEST_CASE("unwritable output leaves no partial dataset") {
  Scratch s;
  {
    std::ofstream(s / "blocker") << "x";
  }
  CHECK(run("generate --out " + s / "blocker" + " --scenes-per-pose 1", s / "log") != 0);
  CHECK(fs::is_regular_file(s / "blocker"));
  CHECK(run("generate --out " + s / "blocker/sub" + " --scenes-per-pose 1", s / "log") != 0);
  CHECK_FALSE(fs::exists(s / "blocker/sub/manifest.json"));
}

TEST_CASE("inspect-net prints the parameter count and round-trips weights") {
  Scratch s;
  REQUIRE(run("inspect-net --write-random " + s / "w.bin" + " --seed 4", s / "log") == 0);
  CHECK(slurp(s / "log").find("total trainable parameters: 673902") != std::string::npos);
  CHECK(fs::file_size(s / "w.bin") < 3u * 1024 * 1024);
  CHECK(run("inspect-net --weights " + s / "w.bin", s / "log") == 0);
  {
    std::ofstream(s / "junk.bin") << "not weights";
  }
  CHECK(run("inspect-net --weights " + s / "junk.bin", s / "log") == 2);
  CHECK(run("inspect-net --layout bottom", s / "log") == 0);
  CHECK(slurp(s / "log").find("9x64") != std::string::npos);
}

TEST_CASE("render: perfect lifts coincide with ground truth") {
  Scratch s;
  REQUIRE(run("generate --out " + s / "d" + " --scenes-per-pose 1 --profile banked", s / "log") == 0);
  REQUIRE(run("lift --dataset " + s / "d" + " --out " + s / "l.jsonl", s / "log") == 0);
  REQUIRE(run("render --dataset " + s / "d" + " --lifted " + s / "l.jsonl" + " --out " + s / "r --scale 1", s / "log") ==
          0);
  int frames = 0;
  for (const auto& e : fs::directory_iterator(s / "r")) {
    ++frames;
    const auto g = groups(slurp(e.path()));
    int pairs = 0;
    for (const auto& [id, gt] : g) {
      if (id.rfind("gt-", 0) != 0) continue;
      const auto pred = g.find("pred-" + id.substr(3));
      REQUIRE(pred != g.end());
      REQUIRE(pred->second.size() == gt.size());
      REQUIRE(gt.size() == 12u * 4);
      for (std::size_t i = 0; i < gt.size(); ++i) CHECK(std::abs(pred->second[i] - gt[i]) <= 1.0);
      ++pairs;
    }
    CHECK(pairs == 10);
  }
  CHECK(frames == 7);

  REQUIRE(run("render --dataset " + s / "d" + " --out " + s / "gt --frame 2", s / "log") == 0);
  const auto only = groups(slurp(fs::path(s / "gt") / "frame_0002.svg"));
  CHECK(only.size() == 10u);
  for (const auto& [id, v] : only) CHECK(id.rfind("gt-", 0) == 0);
}

}
