#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "cli_app.hpp"
#include "nhproj/scenarios.hpp"

using namespace nhproj;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<double>> parse_csv(const std::string& text, std::string* header = nullptr) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (header) *header = line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("nhproj_test_" + std::to_string(::getpid()) + "_" + name);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

TEST(CliSimulate, SleighMatchesReducedOracle) {
  const auto r = run({"simulate", "--scenario", "sleigh", "--param", "r=1", "--param", "J=2", "--init",
                      "theta=0,u=1,omega=1", "--t-end", "5", "--h", "1e-3"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::string header;
  const auto rows = parse_csv(r.out, &header);
  EXPECT_EQ(header, "t,z0,z1,z2,v0,v1,v2,energy,constraint_residual0");
  ASSERT_EQ(rows.size(), 5001u);
  EXPECT_EQ(rows.front()[0], 0.0);
  EXPECT_EQ(rows.back()[0], 5.0);
  const auto& last = rows.back();
  const double th = last[3];
  const double u = last[4] * std::cos(th) + last[5] * std::sin(th);
  const auto oracle = scenarios::sleigh_reduced_oracle({1.0, 2.0}, 1.0, 1.0, 5.0, 1e-3);
  EXPECT_NEAR(u, oracle.states.back().u, 1e-6);
  EXPECT_NEAR(last[6], oracle.states.back().omega, 1e-6);
}

TEST(CliSimulate, NumbersUseSeventeenSignificantDigits) {
  const auto r = run({"simulate", "--scenario", "heisenberg", "--init", "v=(1,0,0)", "--t-end", "0.1", "--h", "0.05"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  EXPECT_EQ(line.substr(0, line.find(',')), "0.0000000000000000e+00");
}

TEST(CliSimulate, HeisenbergStraightLineKeepsY) {
  const auto r = run({"simulate", "--scenario", "heisenberg", "--init", "v=(1,0,0)", "--t-end", "2", "--h", "0.01"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out);
  for (const auto& row : rows) EXPECT_EQ(row[2], 0.0);
}

TEST(CliSimulate, MissingParamIsConfigErrorWithoutOutput) {
  const auto path = temp_path("missing.csv");
  fs::remove(path);
  const auto r = run({"simulate", "--scenario", "sleigh", "--param", "r=1", "--init", "u=1", "--t-end", "1", "--h",
                      "0.1", "--out", path.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("J"), std::string::npos);
  EXPECT_FALSE(fs::exists(path));
}

TEST(CliSimulate, ConfigErrors) {
  EXPECT_EQ(run({"simulate", "--scenario", "nope", "--t-end", "1", "--h", "0.1"}).code, 2);
  EXPECT_EQ(run({"simulate", "--scenario", "heisenberg", "--t-end", "1"}).code, 2);
  EXPECT_EQ(run({"simulate", "--scenario", "heisenberg", "--t-end", "1", "--h", "-1"}).code, 2);
  EXPECT_EQ(run({"simulate", "--scenario", "heisenberg", "--t-end", "1", "--h", "0.1", "--format", "xml"}).code, 2);
  EXPECT_EQ(run({"simulate", "--scenario", "heisenberg", "--t-end", "1", "--h", "0.1", "--init", "v=(1,0)"}).code, 2);
  EXPECT_EQ(run({"simulate", "--scenario", "heisenberg", "--t-end", "1", "--h", "0.1", "--param", "r"}).code, 2);
  EXPECT_EQ(run({"simulate", "--bogus"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
}

TEST(CliSimulate, OffConstraintStartNeedsProjectFlag) {
  const std::vector<std::string> base = {"simulate", "--scenario", "heisenberg", "--init", "z=(0,1,0),v=(1,0,0)",
                                         "--t-end", "0.5", "--h", "0.1"};
  const auto rejected = run(base);
  EXPECT_EQ(rejected.code, 2);
  EXPECT_NE(rejected.err.find("--project-init"), std::string::npos);
  auto args = base;
  args.push_back("--project-init");
  const auto ok = run(args);
  ASSERT_EQ(ok.code, 0) << ok.err;
  const auto rows = parse_csv(ok.out);
  EXPECT_LT(std::abs(rows.front().back()), 1e-12);
}

TEST(CliSimulate, IdenticalConfigGivesIdenticalFiles) {
  const auto a = temp_path("a.csv"), b = temp_path("b.csv");
  for (const auto& p : {a, b}) {
    const auto r = run({"simulate", "--scenario", "sleigh", "--param", "r=0.5", "--param", "J=1.5", "--init",
                        "theta=0.3,u=0.2,omega=1", "--t-end", "2", "--h", "0.01", "--out", p.string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_FALSE(slurp(a).empty());
  fs::remove(a);
  fs::remove(b);
}

TEST(CliSimulate, JsonFormat) {
  const auto r = run({"simulate", "--scenario", "heisenberg", "--init", "v=(1,1,0)", "--t-end", "0.5", "--h", "0.1",
                      "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc["columns"].size(), 9u);
  EXPECT_EQ(doc["rows"].size(), 6u);
  EXPECT_EQ(doc["rows"][0][0].get<double>(), 0.0);
}

TEST(CliSimulate, InlineSystemWithOffset) {
  // Unit mass in the plane with xdot = -0.5 (A = (1, 0), B = 0.5).
  const auto r = run({"simulate", "--scenario", "inline", "--param", "n=2", "--param", "A_0_0=1", "--param", "B_0=0.5",
                      "--init", "v=(-0.5,1)", "--t-end", "1", "--h", "0.1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out);
  EXPECT_NEAR(rows.back()[1], -0.5, 1e-12);
  EXPECT_NEAR(rows.back()[2], 1.0, 1e-12);
}

TEST(CliSimulate, IntegrationFailureKeepsPartialOutput) {
  const auto r = run({"simulate", "--scenario", "sleigh", "--param", "r=1", "--param", "J=2", "--init",
                      "omega=1e60", "--t-end", "10", "--h", "1"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("integration failure"), std::string::npos);
  const auto rows = parse_csv(r.out);
  ASSERT_GE(rows.size(), 1u);
  EXPECT_LT(rows.size(), 11u);
  EXPECT_EQ(rows.front()[0], 0.0);
}

TEST(CliSimulate, SingularMetricIsDegenerate) {
  const auto r = run({"simulate", "--scenario", "inline", "--param", "n=2", "--param", "g_1=0", "--t-end", "1",
                      "--h", "0.1"});
  EXPECT_EQ(r.code, 4);
}

TEST(CliSimulate, ConfigFileWithFlagOverride) {
  const auto cfg = temp_path("run.ini");
  {
    std::ofstream f(cfg);
    f << "[simulate]\nscenario=sleigh\nparam=[\"r=1\",\"J=2\"]\ninit=\"theta=0,u=1,omega=1\"\nt-end=1\nh=0.1\n";
  }
  const auto from_file = run({"--config", cfg.string(), "simulate"});
  ASSERT_EQ(from_file.code, 0) << from_file.err;
  EXPECT_EQ(parse_csv(from_file.out).size(), 11u);
  const auto overridden = run({"--config", cfg.string(), "simulate", "--h", "0.5"});
  ASSERT_EQ(overridden.code, 0) << overridden.err;
  EXPECT_EQ(parse_csv(overridden.out).size(), 3u);
  fs::remove(cfg);
}

TEST(CliCheck, SleighSuitePasses) {
  const auto r = run({"check", "--scenario", "sleigh", "--param", "r=1", "--param", "J=2", "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.out << r.err;
  std::istringstream in(r.out);
  std::string line;
  bool found = false;
  while (std::getline(in, line)) {
    if (line.rfind("projector.P_idempotent,", 0) == 0) {
      found = true;
      const auto v = std::stod(line.substr(line.find(',') + 1));
      EXPECT_LT(v, 1e-12);
      EXPECT_NE(line.find(",pass"), std::string::npos);
    }
  }
  EXPECT_TRUE(found);
}

TEST(CliCheck, RankDeficientInlineConstraints) {
  const auto r = run({"check", "--scenario", "inline", "--param", "n=3", "--param", "A_0_0=1", "--param", "A_0_1=2",
                      "--param", "A_1_0=1", "--param", "A_1_1=2"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("DegenerateConstraints"), std::string::npos);
}

TEST(CliCheck, HeisenbergJacobiatorIsInformational) {
  const auto r = run({"check", "--scenario", "heisenberg"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("pseudo_poisson.jacobiator,"), std::string::npos);
  const auto pos = r.out.find("pseudo_poisson.jacobiator,");
  const auto eol = r.out.find('\n', pos);
  EXPECT_NE(r.out.substr(pos, eol - pos).find("informational"), std::string::npos);
}

TEST(CliCheck, CanonicalDiracSuite) {
  const auto r = run({"check", "--scenario", "canonical"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("dirac.jacobiator,"), std::string::npos);
}

TEST(CliCheck, SameSeedSameReport) {
  const std::vector<std::string> args = {"check", "--scenario", "heisenberg", "--seed", "11"};
  EXPECT_EQ(run(args).out, run(args).out);
}

TEST(CliPoisson, CanonicalSecondClassBlock) {
  const auto r = run({"poisson", "--scenario", "canonical", "--init", "point=(0.3,-0.2,0.5,0.1)"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  ASSERT_EQ(doc.size(), 1u);
  const auto& e = doc[0];
  for (const char* key : {"point", "Pi_W", "Pi_S", "Pi_M", "pseudo", "lambda"}) EXPECT_TRUE(e.contains(key)) << key;
  // Dirac bracket with q2 = p2 = 0 removed: only {q1, p1} = 1 survives.
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const double expected = (i == 0 && j == 1) ? 1.0 : (i == 1 && j == 0) ? -1.0 : 0.0;
      EXPECT_EQ(e["Pi_M"][i][j].get<double>(), expected) << i << j;
    }
  }
  EXPECT_EQ(e["lambda"][0][1].get<double>(), 1.0);
  EXPECT_TRUE(e["pseudo"].is_null());
}

TEST(CliPoisson, NoConstraintsGivesFullTensor) {
  const auto r = run({"poisson", "--scenario", "canonical", "--param", "constrained_pairs=0", "--param", "samples=3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  ASSERT_EQ(doc.size(), 3u);
  for (const auto& e : doc) {
    EXPECT_EQ(e["Pi_M"], e["Pi_W"]);
    EXPECT_TRUE(e["lambda"].is_null());
  }
}

TEST(CliPoisson, HeisenbergPseudoAtOrigin) {
  const auto r = run({"poisson", "--scenario", "heisenberg", "--init", "z=(0,0,0),p=(0,0,0)"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = nlohmann::json::parse(r.out)[0]["pseudo"];
  const double p0[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 0}};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      EXPECT_EQ(t[i][j].get<double>(), 0.0);
      EXPECT_EQ(t[i][j + 3].get<double>(), p0[j][i]);
      EXPECT_EQ(t[i + 3][j].get<double>(), -p0[i][j]);
      EXPECT_NEAR(t[i + 3][j + 3].get<double>(), 0.0, 1e-15);
    }
  }
}

TEST(CliPoisson, FirstClassConstraintsExitFour) {
  const auto r = run({"poisson", "--scenario", "canonical", "--param", "first_class=1"});
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("FirstClassConstraint"), std::string::npos);
}
