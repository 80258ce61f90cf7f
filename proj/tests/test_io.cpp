#include <gtest/gtest.h>

#include <sstream>

#include "locallearn/csv.hpp"
#include "locallearn/dataset.hpp"
#include "locallearn/json_io.hpp"

using namespace locallearn;

TEST(Csv, ShortestRoundTripNumbers) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(format_number(-2.5e-7), "-2.5e-07");
  EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_EQ(format_number(std::nan("")), "nan");
}

TEST(Csv, WriterQuotesAndUsesCrlf) {
  std::ostringstream out;
  CsvWriter w(out);
  w.row("a", 1, 2.5, true);
  w.row(std::vector<std::string>{"x,y", "say \"hi\""});
  EXPECT_EQ(out.str(), "a,1,2.5,true\r\n\"x,y\",\"say \"\"hi\"\"\"\r\n");
}

TEST(Json, CheckKeysRejectsUnknown) {
  const json ok = json::parse(R"({"a":1,"b":2})");
  EXPECT_NO_THROW(check_keys(ok, {"a", "b", "c"}, "cfg"));
  EXPECT_THROW(check_keys(ok, {"a"}, "cfg"), Error);
  EXPECT_THROW(check_keys(json::array(), {"a"}, "cfg"), Error);
}

TEST(Json, GetOrReportsBadTypes) {
  const json j = json::parse(R"({"n":"three"})");
  EXPECT_EQ(get_or<int>(j, "m", 4), 4);
  EXPECT_THROW(get_or<int>(j, "n", 4), Error);
}

namespace {

std::string be32(std::uint32_t v) {
  return {char(v >> 24), char((v >> 16) & 0xFF), char((v >> 8) & 0xFF), char(v & 0xFF)};
}

}  // namespace

TEST(Idx, ReadsUnsignedBytes) {
  std::string bytes = std::string("\0\0\x08\x03", 4) + be32(2) + be32(2) + be32(3);
  for (int i = 0; i < 12; ++i) bytes += char(i * 20);
  std::istringstream in(bytes);
  const IdxArray a = read_idx(in);
  ASSERT_EQ(a.dims, (std::vector<std::uint32_t>{2, 2, 3}));
  EXPECT_EQ(a.count(), 2u);
  EXPECT_EQ(a.item_size(), 6u);
  EXPECT_DOUBLE_EQ(a.data[11], 220.0);
}

TEST(Idx, ReadsBigEndianFloatsAndInts) {
  std::string bytes = std::string("\0\0\x0C\x01", 4) + be32(2) + be32(0xFFFFFFFE) + be32(7);
  std::istringstream in(bytes);
  const IdxArray a = read_idx(in);
  EXPECT_DOUBLE_EQ(a.data[0], -2.0);
  EXPECT_DOUBLE_EQ(a.data[1], 7.0);
}

TEST(Idx, RejectsMalformedInput) {
  std::istringstream bad_magic(std::string("\1\0\x08\x01", 4) + be32(1) + "x");
  EXPECT_THROW(read_idx(bad_magic), Error);
  std::istringstream truncated(std::string("\0\0\x08\x01", 4) + be32(5) + "ab");
  EXPECT_THROW(read_idx(truncated), Error);
  std::istringstream bad_type(std::string("\0\0\x07\x01", 4) + be32(1) + "a");
  EXPECT_THROW(read_idx(bad_type), Error);
  EXPECT_THROW(read_idx_file("/nonexistent/file.idx"), Error);
}

TEST(Dataset, WithBiasPrependsOnes) {
  TrainingSet ts;
  ts.inputs = Mat::Constant(3, 2, 0.5);
  const auto b = with_bias(ts);
  EXPECT_EQ(b.input_dim(), 3);
  EXPECT_TRUE((b.inputs.col(0).array() == 1.0).all());
  EXPECT_TRUE((b.inputs.col(2).array() == 0.5).all());
}

TEST(Dataset, GaussianIsSeeded) {
  GaussianSpec s;
  s.n = 4;
  s.m = 50;
  EXPECT_TRUE(gaussian(s, 7).inputs.isApprox(gaussian(s, 7).inputs));
  EXPECT_FALSE(gaussian(s, 7).inputs.isApprox(gaussian(s, 8).inputs));
}

TEST(Dataset, BooleanTableEnumeratesRows) {
  const TrainingSet ts = boolean_table(2, 0b1000);
  ASSERT_EQ(ts.size(), 4);
  EXPECT_EQ(ts.targets->col(0).sum(), -2.0);
  for (Eigen::Index r = 0; r < 4; ++r)
    EXPECT_TRUE((ts.inputs.row(r).array().abs() == 1.0).all());
}

TEST(Dataset, ClusteredTargetsEqualInputs) {
  ClusteredSpec s{3, 5, 12, 0.1, 2};
  const auto d = clustered_binary(s, 3);
  EXPECT_EQ(d.train.size(), 15);
  EXPECT_EQ(d.test.size(), 6);
  EXPECT_TRUE(d.train.inputs.isApprox(*d.train.targets));
}
