#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const std::string kCli = XRSCHED_CLI_PATH;
const std::string kSource = XRSCHED_SOURCE_DIR;

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + kCli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

fs::path write_temp(const std::string& name, const std::string& text) {
  const auto p = fs::temp_directory_path() / ("xrsched_cli_" + name);
  std::ofstream(p) << text;
  return p;
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("xrsched_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run("") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("simulate") == 2);
  CHECK(run("simulate --config " + kSource + "/configs/smoke.cfg --workers 0") == 2);
  CHECK(run("--help") == 0);
}

TEST_CASE("validate-config") {
  CHECK(run("validate-config " + kSource + "/configs/default.cfg") == 0);
  CHECK(run("validate-config " + kSource + "/configs/smoke.cfg") == 0);
  CHECK(run("validate-config " + write_temp("neg.cfg", "psdb_ms = -1\n").string()) == 2);
  CHECK(run("validate-config " + write_temp("unknown.cfg", "colour = 1\n").string()) == 2);
  CHECK(run("validate-config " + write_temp("type.cfg", "drops = \"x\"\n").string()) == 2);
  CHECK(run("validate-config /nonexistent/none.cfg") == 3);
}

TEST_CASE("oracle") {
  CHECK(run("oracle --instance " + kSource + "/configs/mini_instance.json") == 0);
  CHECK(run("oracle --instance /nonexistent/none.json") == 3);
  CHECK(run("oracle --instance " + write_temp("bad.json", "{\"num_slots\": 1}").string()) == 4);
  CHECK(run("oracle --instance " +
            write_temp("big.json", "{\"num_slots\": 9, \"num_prbs\": 4, \"embb_ues\": "
                                   "[{\"bits_per_prb\": 100}]}")
                .string()) == 4);
}

TEST_CASE("simulate writes to --out, then the environment, then the config") {
  const auto cfg = kSource + "/configs/smoke.cfg";
  const auto out = fresh_dir("out");
  const auto env = fresh_dir("env");
  const std::string env_prefix = "XRSCHED_OUTPUT_DIR=" + env.string();

  CHECK(run("simulate --config " + cfg + " --out " + out.string() + " --workers 1", env_prefix) == 0);
  CHECK(fs::exists(out / "fig2_satisfaction.csv"));
  CHECK(fs::exists(out / "summary.json"));
  CHECK_FALSE(fs::exists(env));

  CHECK(run("simulate --config " + cfg + " --workers 1", env_prefix) == 0);
  CHECK(fs::exists(env / "fig3_capacity.csv"));

  fs::remove_all(out);
  fs::remove_all(env);
}

TEST_CASE("simulate reports an unwritable output directory as an I/O error") {
  CHECK(run("simulate --config " + kSource + "/configs/smoke.cfg --out /proc/xrsched_nope") == 3);
  CHECK(run("simulate --config /nonexistent/none.cfg") == 3);
  CHECK(run("simulate --config " + write_temp("bad_sim.cfg", "drops = 0\n").string()) == 2);
}
