#include "doctest.h"

#include "stresscal/config.hpp"
#include "support.hpp"

using namespace stresscal;
using testing::error_kind;

TEST_CASE("config parsing") {
  const auto c = ConfigFile::parse(
      "# comment\n"
      "[run]\n"
      "seed = 7   # trailing\n"
      "out_dir = \"results # not a comment\"\n"
      "\n"
      "[model]\n"
      "algorithm = extratrees\n");
  CHECK(c.get("run.seed") == "7");
  CHECK(c.get("run.out_dir") == "results # not a comment");
  CHECK(c.get("model.algorithm") == "extratrees");
  CHECK_FALSE(c.get("model.n_trees").has_value());
  CHECK(ConfigFile::parse(c.to_toml()).entries() == c.entries());

  CHECK(error_kind([] { ConfigFile::parse("[run\nseed=1\n"); }) == ErrorKind::config);
  CHECK(error_kind([] { ConfigFile::parse("[run]\nseed\n"); }) == ErrorKind::config);
  CHECK(error_kind([] { ConfigFile::parse("[run]\nseed=1\nseed=2\n"); }) == ErrorKind::config);
  CHECK(error_kind([] { ConfigFile::parse("[run]\nout_dir = \"open\n"); }) == ErrorKind::config);
}

TEST_CASE("resolved defaults") {
  const auto r = RunConfig::resolve(ConfigFile{});
  CHECK(r.seed == 0);
  CHECK(r.threads == 1);
  CHECK(r.folds == 10);
  CHECK(r.calibration.q == 4);
  CHECK(r.calibration.sizes == std::vector<std::size_t>{0, 1, 2, 5, 10, 20, 50, 100});
  const auto rf = r.hyperparams(Algorithm::random_forest, TaskKind::classification);
  CHECK(rf.n_trees == 1000);
  CHECK(rf.max_depth == 2);
  const auto et = r.hyperparams(Algorithm::extra_trees, TaskKind::classification);
  CHECK(et.max_depth == 16);
  CHECK_FALSE(et.bootstrap);
}

TEST_CASE("overrides and validation") {
  ConfigFile f;
  f.set("run.seed", "99");
  f.set("model.algorithm", "extratrees");
  f.set("model.n_trees", "10");
  f.set("calibration.sizes", "0,10,100");
  const auto r = RunConfig::resolve(f);
  const auto h = r.hyperparams(Algorithm::random_forest, TaskKind::regression);
  CHECK(h.algorithm == Algorithm::extra_trees);
  CHECK(h.n_trees == 10);
  CHECK(h.max_depth == 16);
  CHECK(h.seed == 99);
  CHECK(h.task == TaskKind::regression);
  CHECK(r.calibration.sizes == std::vector<std::size_t>{0, 10, 100});

  auto bad = [](const std::string& key, const std::string& value) {
    ConfigFile c;
    c.set(key, value);
    return error_kind([&] { RunConfig::resolve(c); });
  };
  CHECK(bad("run.colour", "red") == ErrorKind::config);
  CHECK(bad("run.seed", "-1") == ErrorKind::config);
  CHECK(bad("model.n_trees", "0") == ErrorKind::config);
  CHECK(bad("model.algorithm", "svm") == ErrorKind::config);
  CHECK(bad("protocol.name", "holdout") == ErrorKind::config);
  CHECK(bad("calibration.sizes", "10,5") == ErrorKind::config);
  CHECK(bad("calibration.fraction", "1") == ErrorKind::config);
  CHECK(bad("signal.filter_order", "3") == ErrorKind::config);
  CHECK(bad("transform.enabled", "maybe") == ErrorKind::config);
}

TEST_CASE("config files on disk") {
  const auto dir = testing::scratch_dir("config_disk");
  CHECK(error_kind([&] { ConfigFile::load(dir / "absent.toml"); }) == ErrorKind::config);
}
