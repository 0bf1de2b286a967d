// Runs the prism-audit binary end to end and checks exit codes and outputs.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "prism/codec.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = PRISM_FIXTURES_DIR;
const fs::path kWork = fs::path(PRISM_TEST_WORKDIR) / "cli";

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result audit(const std::string& args) {
  fs::create_directories(kWork);
  const fs::path out = kWork / "stdout.txt", err = kWork / "stderr.txt";
  const std::string cmd = std::string("\"") + PRISM_AUDIT_EXE + "\" " + args + " >\"" + out.string() +
                          "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, prism::codec::read_file(out),
          prism::codec::read_file(err)};
}

std::string minimal_args(const fs::path& run) {
  return "--config \"" + (kFixtures / "minimal.ini").string() + "\" --run \"" + run.string() + "\"";
}

fs::path fresh_run(const std::string& name) {
  const fs::path p = kWork / name;
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(audit("").code, 1);
  EXPECT_EQ(audit("frobnicate --config x").code, 1);
  EXPECT_EQ(audit("simulate").code, 1);
  EXPECT_EQ(audit("test --config \"" + (kFixtures / "minimal.ini").string() + "\" --metric pearson").code, 1);
  const Result r = audit("simulate --config \"" + (kFixtures / "bad_key.ini").string() + "\"");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("bad_key.ini:5:"), std::string::npos) << r.err;
  EXPECT_EQ(audit("simulate --config /nonexistent/run.ini").code, 1);
}

TEST(Cli, VersionAndHelpExitZero) {
  EXPECT_EQ(audit("--version").code, 0);
  EXPECT_EQ(audit("--help").code, 0);
}

TEST(Cli, InvalidPstatsExitsTwoWithErrorLine) {
  const Result r = audit("score --config \"" + (kFixtures / "minimal.ini").string() + "\" --pstats \"" +
                         (kFixtures / "bad_sigma.pstats").string() + "\"");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("ERROR 3 d0002 sigma ", 0), 0u) << r.err;
}

TEST(Cli, MissingRunExitsTwo) {
  EXPECT_EQ(audit("test " + minimal_args(fresh_run("absent"))).code, 2);
}

TEST(Cli, FullRunIsDeterministic) {
  const fs::path a = fresh_run("det-a"), b = fresh_run("det-b");
  for (const fs::path& run : {a, b}) {
    ASSERT_EQ(audit("simulate " + minimal_args(run)).code, 0);
    ASSERT_EQ(audit("distill " + minimal_args(run)).code, 0);
    const Result t = audit("test " + minimal_args(run));
    ASSERT_EQ(t.code, 0) << t.err;
    EXPECT_NE(t.out.find("verdict"), std::string::npos);
  }
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file() || entry.path().filename() == "timings.json") continue;
    const fs::path rel = fs::relative(entry.path(), a);
    EXPECT_EQ(prism::codec::read_file(entry.path()), prism::codec::read_file(b / rel)) << rel;
  }

  // A constant reference score vector makes the correlation undefined.
  const std::string suspect = prism::codec::read_file(
      a / "scores" / "reference.suspect.minkpp-k20-orig.jsonl");
  ASSERT_FALSE(suspect.empty());
  std::string flat;
  std::size_t pos = 0;
  while (pos < suspect.size()) {
    const std::size_t end = suspect.find('\n', pos);
    std::string line = suspect.substr(pos, end - pos);
    const std::size_t score = line.find("\"score\":");
    if (score != std::string::npos) {
      const std::size_t stop = line.find_first_of(",}", score);
      line = line.substr(0, score) + "\"score\":-1" + line.substr(stop);
    }
    flat += line + "\n";
    pos = end + 1;
  }
  prism::codec::write_file(kWork / "flat.jsonl", flat);
  const Result d = audit("test " + minimal_args(a) + " --target clean --scores-r \"" +
                         (kWork / "flat.jsonl").string() + "\"");
  EXPECT_EQ(d.code, 3) << d.err;
}
