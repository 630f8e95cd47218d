// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "test_util.hpp"
#include "voxcap/config.hpp"

using namespace voxcap;

TEST_CASE("parsing sections, comments, and typed values") {
  const std::string text = R"(# experiment setup
[run]
mode = ours
budget = 6.5
iterations = 12
save_images = true

[scene]
kind = composite   # trailing comment
seed = 18446744073709551615
)";
  const Config cfg = Config::parse(text);
  CHECK(cfg.get_str("run.mode", "") == "ours");
  CHECK(cfg.get_real("run.budget", 0.0) == doctest::Approx(6.5).epsilon(1e-15));
  CHECK(cfg.get_int("run.iterations", 0) == 12);
  CHECK(cfg.get_bool("run.save_images", false));
  CHECK(cfg.get_str("scene.kind", "") == "composite");
  CHECK(cfg.get_u64("scene.seed", 0) == 18446744073709551615ull);
  CHECK(cfg.has("run.mode"));
  CHECK_FALSE(cfg.has("run.missing"));
  // Fallbacks apply only to absent keys.
  CHECK(cfg.get_int("run.missing", 42) == 42);
  CHECK(cfg.require_str("run.mode") == "ours");
  CHECK_THROWS_AS(cfg.require_str("run.missing"), ConfigError);
}

TEST_CASE("bad parses raise errors that name the problem") {
  CHECK_THROWS_AS(Config::parse("[run]\nbudget\n"), ConfigError);
  try {
    Config::parse("[run]\nok = 1\nbroken\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 3") != std::string::npos);
  }

  const Config cfg = Config::parse("[run]\nbudget = soon\nflag = maybe\n");
  try {
    cfg.get_real("run.budget", 0.0);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("run.budget") != std::string::npos);
  }
  CHECK_THROWS_AS(cfg.get_bool("run.flag", false), ConfigError);
  CHECK_THROWS_AS(cfg.get_int("run.budget", 0), ConfigError);
}

TEST_CASE("duplicate keys: the last assignment wins") {
  const Config cfg = Config::parse("[run]\nbudget = 1\nbudget = 2\n[run]\nbudget = 3\n");
  CHECK(cfg.get_int("run.budget", 0) == 3);
}

TEST_CASE("keys before any section keep their bare name") {
  const Config cfg = Config::parse("orphan = 1\n[run]\nmode = ours\n");
  CHECK(cfg.get_int("orphan", 0) == 1);
  CHECK_FALSE(cfg.has("run.orphan"));
}

TEST_CASE("dump and parse round-trip, including exact reals") {
  Config cfg;
  cfg.set("run.mode", "ours");
  cfg.set_int("run.iterations", -3);
  cfg.set_u64("scene.seed", 18446744073709551615ull);
  cfg.set_real("cost.lambda", 0.1);  // not representable in binary; must survive
  cfg.set_real("cost.alpha1", 1.0 / 3.0);
  cfg.set_bool("run.save_images", true);
  cfg.set_bool("run.warm", false);

  const std::string text = cfg.dump();
  const Config back = Config::parse(text);
  CHECK(back.get_str("run.mode", "") == "ours");
  CHECK(back.get_int("run.iterations", 0) == -3);
  CHECK(back.get_u64("scene.seed", 0) == 18446744073709551615ull);
  CHECK(back.get_real("cost.lambda", 0.0) == 0.1);
  CHECK(back.get_real("cost.alpha1", 0.0) == 1.0 / 3.0);
  CHECK(back.get_bool("run.save_images", false) == true);
  CHECK(back.get_bool("run.warm", true) == false);
  // Dump is stable: dumping the reparse gives identical text.
  CHECK(back.dump() == text);
}

TEST_CASE("load reads a file and reports a missing one") {
  const std::string dir = testutil::scratch_dir("config");
  const std::string path = dir + "/a.txt";
  {
    std::ofstream out(path);
    out << "[run]\nmode = random\n";
  }
  const Config cfg = Config::load(path);
  CHECK(cfg.get_str("run.mode", "") == "random");
  CHECK_THROWS_AS(Config::load(dir + "/nope.txt"), ConfigError);
  std::filesystem::remove(path);
}
