#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "rdfluct/config.hpp"
#include "rdfluct/csv.hpp"

namespace rdfluct {
namespace {

TEST(Config, DefaultsMatchReferenceParameters) {
  const auto c = parse_config("");
  EXPECT_EQ(c.system.diffusivity, (std::array<double, 3>{1.0, 0.5, 0.1}));
  EXPECT_EQ(c.system.lambda, 1.0);
  EXPECT_EQ(c.system.mu, 0.05);
  EXPECT_EQ(c.system.epsilon, 1.0 / 128.0);
  EXPECT_EQ(c.numerics.voxels, 1024u);
  EXPECT_EQ(c.numerics.modes, 512u);
  EXPECT_EQ(c.numerics.basis_modes, 30u);
  EXPECT_EQ(c.numerics.dt, 1e-3);
  EXPECT_EQ(c.numerics.save_times().size(), 21u);
}

TEST(Config, ParsesSections) {
  const auto c = parse_config(R"(
[species]
D_A = 2
[reaction]
gamma = 500
[numerics]
voxels = 256
modes = 128
[ensemble]
gammas = 250, 500,1000
workers = 3
[output]
snapshots = true
)");
  EXPECT_EQ(c.system.diffusivity[0], 2.0);
  EXPECT_EQ(c.system.gamma, 500.0);
  EXPECT_EQ(c.numerics.voxels, 256u);
  EXPECT_EQ(c.ensemble.gammas, (std::vector<double>{250, 500, 1000}));
  EXPECT_EQ(c.ensemble.workers, 3u);
  EXPECT_TRUE(c.output.snapshots);
}

TEST(Config, CanonicalTextRoundTrips) {
  auto c = parse_config("[reaction]\nepsilon = 0.0123456789012345\n[numerics]\ndt = 0.0005\n");
  c.ensemble.gammas = {1.5, 1e4};
  const auto again = parse_config(to_ini(c));
  EXPECT_EQ(to_ini(again), to_ini(c));
  EXPECT_EQ(again.system.epsilon, c.system.epsilon);
  EXPECT_EQ(again.ensemble.gammas, c.ensemble.gammas);
  EXPECT_EQ(config_hash(again), config_hash(c));
  EXPECT_EQ(config_hash(c).size(), 16u);
  c.ensemble.master_seed += 1;
  EXPECT_NE(config_hash(again), config_hash(c));
}

TEST(Config, RejectsInvalidInput) {
  EXPECT_THROW(parse_config("[reaction]\nlambda = fast\n"), ConfigError);
  EXPECT_THROW(parse_config("[reaction]\nkappa = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[colors]\nred = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[numerics]\ndt = -1\n"), ConfigError);
  EXPECT_THROW(parse_config("[numerics]\ndt = 0.03\n"), ConfigError);
  EXPECT_THROW(parse_config("[domain]\nlength = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[reaction]\ngamma = 0\n"), ConfigError);
  EXPECT_THROW(parse_config("[numerics\n"), ConfigError);
  EXPECT_THROW(parse_config("[ensemble]\ngammas = 1,,2\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.ini"), ConfigError);
}

TEST(Csv, EscapingAndParsing) {
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  const auto t = parse_csv("x,y\r\n1,\"a,\"\"b\"\"\"\n2,\"multi\nline\"");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][1], "a,\"b\"");
  EXPECT_EQ(t.rows[1][1], "multi\nline");
  EXPECT_EQ(t.numeric_column("x"), (std::vector<double>{1, 2}));
}

TEST(Csv, MissingColumnNamesTheColumn) {
  const auto t = parse_csv("a,b\n1,2\n");
  try {
    t.column("density");
    FAIL() << "expected CsvError";
  } catch (const CsvError& e) {
    EXPECT_NE(std::string(e.what()).find("density"), std::string::npos);
  }
  EXPECT_THROW(parse_csv("a,b\n1\n"), CsvError);
  EXPECT_THROW(parse_csv("a\n\"open\n"), CsvError);
}

TEST(Csv, WriterRoundTripsDoubles) {
  const auto path = std::filesystem::temp_directory_path() / "rdfluct_csv_roundtrip.csv";
  const std::vector<double> values{0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23};
  {
    CsvWriter w(path, {"v", "label"});
    for (double v : values) w.row({format_double(v), "x,y"});
    EXPECT_THROW(w.row({"1"}), CsvError);
    w.close();
  }
  const auto t = read_csv(path);
  EXPECT_EQ(t.numeric_column("v"), values);
  EXPECT_EQ(t.rows[0][1], "x,y");
  std::ifstream raw(path, std::ios::binary);
  std::string text((std::istreambuf_iterator<char>(raw)), std::istreambuf_iterator<char>());
  EXPECT_EQ(text.find('\r'), std::string::npos);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace rdfluct
