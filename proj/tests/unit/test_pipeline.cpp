#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "puzzlemeasure/pipeline.hpp"

using namespace puzzlemeasure;
using nlohmann::json;

namespace {

RunConfig quick(Cx c, const std::string& dir) {
  RunConfig cfg;
  cfg.c = c;
  cfg.has_c = true;
  cfg.partition_depth = 4;
  cfg.max_depth = 4;
  cfg.figures = false;
  cfg.output_dir = (std::filesystem::temp_directory_path() / ("puzzlemeasure_unit_" + dir)).string();
  return cfg;
}

bool has_flag(const json& r, const char* flag) {
  for (const auto& f : r["classification"]["flags"]) {
    if (f == flag) return true;
  }
  return false;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::kInvalidArgument;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("config parsing") {
    const auto cfg = config_from_json(json::parse(R"({"l": 4, "c": [0.1, -0.2], "seed": 9, "T_max": 7})"));
    CHECK(cfg.degree == 4);
    CHECK(cfg.c == Cx(0.1, -0.2));
    CHECK(cfg.has_c);
    CHECK(cfg.seed == 9);
    CHECK(cfg.t_max == 7);
    CHECK(config_from_json(json::parse(R"({"c": {"re": -2}})")).c == Cx(-2, 0));
    CHECK(kind_of([] { config_from_json(json::parse(R"({"colour": 1})")); }) == ErrorKind::kConfig);
    CHECK(kind_of([] { config_from_json(json::parse(R"({"l": "two"})")); }) == ErrorKind::kConfig);
    CHECK(kind_of([] { config_from_json(json::parse("[1, 2]")); }) == ErrorKind::kConfig);
  }

  TEST_CASE("validation") {
    CHECK(kind_of([] { validate(config_from_json(json::object())); }) == ErrorKind::kConfig);
    auto cfg = quick(0.0, "v");
    CHECK_NOTHROW(validate(cfg));
    cfg.degree = 3;
    CHECK(kind_of([&] { validate(cfg); }) == ErrorKind::kConfig);
    cfg.degree = 2;
    cfg.horizon = 0;
    CHECK(kind_of([&] { validate(cfg); }) == ErrorKind::kConfig);
    cfg.horizon = 10;
    cfg.rays = {"1/7", "x"};
    CHECK(kind_of([&] { validate(cfg); }) == ErrorKind::kConfig);
  }

  TEST_CASE("config hash ignores the output directory only") {
    auto a = quick(Cx(0, 1), "h1");
    auto b = quick(Cx(0, 1), "h2");
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);
    b.seed = 2;
    CHECK(config_hash(a) != config_hash(b));
  }

  TEST_CASE("explicit stars reach the puzzle") {
    auto cfg = quick(Cx(0, 1), "stars");
    cfg.stars = {{"1/7", "2/7", "4/7"}};
    const auto r = cmd_puzzle(cfg);
    CHECK(r["puzzle"]["depth0_angles"] == json({"1/7", "2/7", "4/7"}));
    CHECK(config_hash(cfg) != config_hash(quick(Cx(0, 1), "stars")));
    cfg.stars = {{}};
    CHECK(kind_of([&] { validate(cfg); }) == ErrorKind::kConfig);
    std::filesystem::remove_all(quick(Cx(0, 1), "stars").output_dir);
  }

  TEST_CASE("angles") {
    CHECK(parse_angle("2/6") == Angle::make(1, 3));
    CHECK(parse_angle("0/1") == Angle::make(0, 1));
    for (const char* bad : {"1/0", "1", "a/b", "1/2x", "-1/3"}) CHECK(kind_of([&] { parse_angle(bad); }) == ErrorKind::kConfig);
  }

  TEST_CASE("classify flags") {
    const auto para = cmd_classify(quick(0.25, "c1"));
    CHECK(has_flag(para, "parabolic-detected"));
    CHECK(has_flag(para, "real-unimodal"));
    const auto ci = cmd_classify(quick(Cx(0, 1), "c2"));
    CHECK(has_flag(ci, "repelling-only"));
    CHECK_FALSE(has_flag(ci, "likely-renormalizable"));
    CHECK_FALSE(has_flag(ci, "real-unimodal"));
    CHECK(has_flag(cmd_classify(quick(-1.0, "c3")), "likely-renormalizable"));
    CHECK(ci["schema_version"] == kSchemaVersion);
    CHECK(ci["config_hash"] == config_hash(quick(Cx(0, 1), "c2")));
  }

  TEST_CASE("measure writes a report and a table") {
    const auto cfg = quick(-2.0, "m");
    const auto r = cmd_measure(cfg);
    CHECK(r["summary"]["atoms"] == 17);
    CHECK(r["summary"].contains("conformality_residual"));
    CHECK(hard_checks_pass(r));
    CHECK(std::filesystem::exists(std::filesystem::path(cfg.output_dir) / "atoms.csv"));
    CHECK(std::filesystem::exists(std::filesystem::path(cfg.output_dir) / "measure.json"));
    std::filesystem::remove_all(cfg.output_dir);
  }

  TEST_CASE("stage labels") {
    auto cfg = quick(0.0, "s");
    cfg.partition_depth = 60;
    try {
      cmd_measure(cfg);
      FAIL("expected a stage error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("stage partition") != std::string::npos);
    }
    std::filesystem::remove_all(cfg.output_dir);
  }

  TEST_CASE("hard checks") {
    CHECK(hard_checks_pass(json::object()));
    CHECK(hard_checks_pass(json{{"checks", {{{"hard", false}, {"pass", false}}}}}));
    CHECK_FALSE(hard_checks_pass(json{{"checks", {{{"hard", true}, {"pass", false}}}}}));
  }
}
