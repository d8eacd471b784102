#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "gallop/io.hpp"

namespace fs = std::filesystem;
namespace io = gallop::io;

namespace {

int run_cli(const std::string& args) {
  const int rc = std::system((std::string(GALLOP_CLI) + " " + args + " > /dev/null 2>&1").c_str());
  return WEXITSTATUS(rc);
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gallop_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("identical configs give byte-identical CSV", "[cli]") {
  const fs::path a = scratch("a"), b = scratch("b");
  REQUIRE(run_cli("ramp --v0 0.9375 --out " + a.string()) == 0);
  REQUIRE(run_cli("ramp --v0 0.9375 --out " + b.string()) == 0);
  for (const char* f : {"ramp_summary.csv", "ramp_envelope.csv", "ramp_run0.csv"}) {
    CHECK(io::read_file((a / f).string()) == io::read_file((b / f).string()));
  }
}

TEST_CASE("manifest config re-runs to identical outputs", "[cli]") {
  const fs::path a = scratch("c"), b = scratch("d");
  REQUIRE(run_cli("normal-form --n-w 5 --n-p 5 --out " + a.string()) == 0);
  REQUIRE(run_cli("normal-form --config " + (a / "normal-form_manifest.json").string() + " --out " + b.string()) == 0);
  for (const char* f : {"normal_form.csv", "normal_form_S.csv"}) {
    CHECK(io::read_file((a / f).string()) == io::read_file((b / f).string()));
  }
}

TEST_CASE("flags override config values", "[cli]") {
  const fs::path a = scratch("e"), b = scratch("f");
  REQUIRE(run_cli("hopf --r 0.2 --out " + a.string()) == 0);
  REQUIRE(run_cli("hopf --config " + (a / "hopf_manifest.json").string() + " --r 0.1 --out " + b.string()) == 0);
  CHECK(io::read_file((b / "hopf.csv").string()).find(",1.875,") != std::string::npos);
}

TEST_CASE("exit codes", "[cli]") {
  const fs::path a = scratch("g");
  fs::create_directories(a);
  io::write_file((a / "bad.json").string(), "{\"no_such_key\": 1}");
  CHECK(run_cli("hopf --config " + (a / "bad.json").string() + " --out " + a.string()) == 2);
  CHECK(run_cli("hopf --r -1 --out " + a.string()) == 2);
  CHECK(run_cli("hopf --unknown-flag") == 2);
  CHECK(run_cli("basin --mode sideways --out " + a.string()) == 2);
  CHECK(run_cli("portrait --locate homoclinic-left --v-lo 0.3 --v-hi 0.4 --out " + a.string()) == 3);
  CHECK(run_cli("hopf --out " + a.string()) == 0);
}
