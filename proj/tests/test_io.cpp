#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <string>

#include "gsum/io.hpp"

using namespace gsum;

TEST(Io, Distribution1DRoundTrip) {
  const auto d = parse_distribution_1d(R"({"atoms":[{"x":0.05,"p":0.5},{"x":-0.05,"p":0.5}]})");
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.atoms()[0].x, -0.05);
  const auto back = parse_distribution_1d(to_json(d));
  EXPECT_EQ(back.atoms()[1].x, d.atoms()[1].x);
  EXPECT_EQ(back.atoms()[1].p, d.atoms()[1].p);
}

TEST(Io, DistributionDiagnostics) {
  try {
    parse_distribution_1d("{\n  \"atoms\": [\n    {\"x\": 1,, \"p\": 1}\n  ]\n}", "S.json");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("S.json:3:"), std::string::npos);
  }
  EXPECT_THROW(parse_distribution_1d(R"({"atoms":[{"x":0,"p":1,"q":2}]})"), InputError);
  EXPECT_THROW(parse_distribution_1d(R"({"atoms":[{"x":0,"p":0.5}]})"), InputError);
  EXPECT_THROW(parse_distribution_1d(R"({"points":[]})"), InputError);
}

TEST(Io, VectorDistribution) {
  const auto d = parse_distribution_vec(R"({"dim":2,"atoms":[{"x":[1,0],"p":0.5},{"x":[-1,0],"p":0.5}]})");
  EXPECT_EQ(d.dim(), 2u);
  EXPECT_EQ(parse_distribution_vec(to_json(d)).atoms()[1].x[0], -1.0);
  EXPECT_THROW(parse_distribution_vec(R"({"dim":3,"atoms":[{"x":[1,0],"p":1}]})"), InputError);
}

TEST(Io, CsvVectorsAndMatrix) {
  const auto v = parse_vectors_csv("# header\n0.1, 0.2\n\n-0.3,0.4\n");
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[1][0], -0.3);
  EXPECT_EQ(parse_vectors_csv(vectors_to_csv(v))[0][1], 0.2);
  try {
    parse_vectors_csv("1,2\n3,x\n", "v.csv");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_vectors_csv("1,2\n3\n"), InputError);
  EXPECT_EQ(parse_matrix_csv("1,2\n3,4\n")(1, 0), 3.0);
}

TEST(Io, IntervalsWithInfiniteEnds) {
  const auto iv = parse_intervals(R"({"intervals":[["-inf",0.5],[1,"inf"]]})");
  ASSERT_EQ(iv.size(), 2u);
  EXPECT_TRUE(std::isinf(iv[0].lo));
  EXPECT_TRUE(std::isinf(iv[1].hi));
  EXPECT_THROW(parse_intervals(R"({"intervals":[[2,1]]})"), InputError);
}

TEST(Io, PartitionCertificateIsBitExact) {
  RandomSource r(3);
  std::vector<Eigen::VectorXd> v;
  for (int i = 0; i < 8; ++i) {
    Eigen::VectorXd x(3);
    for (auto& c : x) c = r.normal();
    v.push_back(x / x.norm() * 0.5 * (1 + r.uniform()) * 0.6);
  }
  const auto res = mss_partition(v, 2);
  const auto file = parse_partition(to_json(PartitionFile{v, res}));
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(file.vectors[i], v[i]);
  EXPECT_EQ(file.result.per_part_norm, res.per_part_norm);
  EXPECT_TRUE(verify_partition(file.vectors, file.result));
}

TEST(Io, AtomicWrite) {
  const auto dir = std::filesystem::temp_directory_path() / "gsum_io_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "out.txt").string();
  write_file_atomic(path, "one");
  write_file_atomic(path, "two");
  EXPECT_EQ(read_text_file(path), "two");
  EXPECT_FALSE(std::filesystem::exists(path + ".tmp"));
  EXPECT_THROW(read_text_file((dir / "missing").string()), InputError);
  std::filesystem::remove_all(dir);
}
