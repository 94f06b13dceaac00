#include "drm/experiments.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace drm;

TEST(FormatNumber, RoundTrips) {
  for(double x: {0.1, 1.0 / 3.0, 2.0, -1e-300, 6.02214076e23, std::nextafter(1.0, 2.0)}) {
    EXPECT_EQ(std::strtod(format_number(x).c_str(), nullptr), x);
  }
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
}

TEST(CsvTable, RowsAndWidth) {
  CsvTable t({"a", "b", "c"});
  t.add({1, 0.5, "x"});
  t.add({std::size_t{2}, true, -2.0});
  EXPECT_EQ(t.str(), "a,b,c\n1,0.5,x\n2,true,-2\n");
  EXPECT_THROW(t.add({1, 2}), std::logic_error);
}

TEST(RunReport, VerdictsAndMargins) {
  RunReport r("identities", json::object(), 5);
  EXPECT_TRUE(r.check("a", 1.0, "<=", 2.0).pass);
  EXPECT_DOUBLE_EQ(r.verdicts().back().margin(), 1.0);
  EXPECT_FALSE(r.check("b", 3.0, "<", 3.0).pass);
  EXPECT_DOUBLE_EQ(r.verdicts().back().margin(), 0.0);
  EXPECT_FALSE(r.pass());
  RunReport soft("identities", json::object(), 5);
  soft.check("c", -1.0, ">=", 0.0, "", false);
  EXPECT_TRUE(soft.pass());
  EXPECT_THROW(r.check("nan", std::nan(""), "<=", 1.0), NumericalAbort);
  EXPECT_THROW(r.check("bad", 1.0, "~", 1.0), std::logic_error);
}

TEST(RunReport, JsonWithoutTimingIsStable) {
  const json cfg = {{"x", 1}};
  RunReport a("contact", cfg, 9);
  RunReport b("contact", cfg, 9);
  for(auto* r: {&a, &b}) {
    r->check("v", 0.25, "<=", 1.0, "note");
    r->results()["k"] = 3;
    r->table("t", {"x"}).add({1.5});
  }
  b.section_time("extra", 1.0);
  EXPECT_EQ(a.to_json(false).dump(), b.to_json(false).dump());
  const auto j = a.to_json(true);
  EXPECT_TRUE(j.contains("timing"));
  EXPECT_EQ(j.at("verdicts")[0].at("tolerance"), 1.0);
  EXPECT_EQ(j.at("verdicts")[0].at("margin"), 0.75);
  EXPECT_EQ(j.at("tables")[0], "t.csv");
  EXPECT_EQ(j.at("metadata").at("config_hash"), "fnv1a64:" + hex64(fnv1a64(cfg.dump())));
}

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

namespace {

json small_contact() {
  const json grid = {{"mark_window", {0.2, 3.0}}, {"mark_nodes", 1}, {"box", {0.0, 1.0}}, {"space_nodes", 3}};
  return {{"grid", grid},
          {"kernels",
           {{"m", {{"form", "constant"}, {"value", 1.0}}},
            {"q", {{"form", "constant"}, {"value", 0.5}}},
            {"a", {{"form", "constant"}, {"value", 1.0}}}}},
          {"duality", {{"samples", 3}, {"n_max", 3}}}};
}

} // namespace

TEST(RunExperiment, ConfigErrors) {
  auto cfg = small_contact();
  EXPECT_NO_THROW(run_experiment("contact", cfg));
  EXPECT_THROW(run_experiment("nonsense", cfg), ConfigError);
  EXPECT_THROW(run_experiment("identities", json{{"command", "contact"}}), ConfigError);
  auto extra = cfg;
  extra["duality"]["unknown"] = 1;
  EXPECT_THROW(run_experiment("contact", extra), ConfigError);
  auto missing = cfg;
  missing.erase("kernels");
  EXPECT_THROW(run_experiment("contact", missing), ConfigError);
  auto negative = cfg;
  negative["kernels"]["m"]["value"] = -1.0;
  EXPECT_THROW(run_experiment("contact", negative), ConfigError);
  EXPECT_THROW(run_experiment("identities", json::object()), ConfigError);
}

TEST(RunExperiment, SeedOverrideChangesSamplesOnly) {
  auto cfg = small_contact();
  cfg["seed"] = 3;
  const auto a = run_experiment("contact", cfg);
  const auto b = run_experiment("contact", cfg);
  const auto c = run_experiment("contact", cfg, 4);
  EXPECT_EQ(a.to_json(false).dump(), b.to_json(false).dump());
  EXPECT_EQ(c.seed(), 4u);
  EXPECT_NE(a.tables().at("duality").str(), c.tables().at("duality").str());
  EXPECT_TRUE(a.pass());
}
