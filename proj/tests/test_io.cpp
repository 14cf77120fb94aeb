#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <sstream>
#include <string>

#include "sls/io.hpp"
#include "test_helpers.hpp"

using namespace sls;
using sls::testing::random_fir;
using sls::testing::random_matrix;
using sls::testing::test_rng;

TEST_CASE("matrix serialization round-trips exactly") {
  auto rng = test_rng(201);
  const Eigen::MatrixXd m = random_matrix(rng, 4, 3);
  std::stringstream ss;
  write_matrix(ss, m);
  const Eigen::MatrixXd back = read_matrix(ss);
  REQUIRE(back.rows() == 4);
  REQUIRE(back.cols() == 3);
  REQUIRE((back - m).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("matrix reader rejects malformed input") {
  std::stringstream bad_header("0 2\n");
  REQUIRE_THROWS_AS(read_matrix(bad_header), std::runtime_error);
  std::stringstream truncated("2 2\n1.0 2.0\n3.0\n");
  REQUIRE_THROWS_AS(read_matrix(truncated), std::runtime_error);
  std::stringstream garbage("2 2\n1.0 2.0\nx 4.0\n");
  REQUIRE_THROWS_AS(read_matrix(garbage), std::runtime_error);
}

TEST_CASE("fir serialization uses the four-field header and round-trips") {
  auto rng = test_rng(202);
  const FirTransferMatrix x = random_fir(rng, 3, 2, 1, 4);
  std::stringstream ss;
  write_fir(ss, x);

  std::string header;
  std::getline(ss, header);
  REQUIRE(header == "3 2 1 4");

  ss.seekg(0);
  const FirTransferMatrix back = read_fir(ss);
  REQUIRE(back.rows == 3);
  REQUIRE(back.cols == 2);
  REQUIRE(back.start == 1);
  REQUIRE(back.horizon == 4);
  for (int k = 1; k <= 4; ++k) REQUIRE((back.at(k) - x.at(k)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fir serialization handles start 0 and rejects bad headers") {
  auto rng = test_rng(203);
  const FirTransferMatrix x = random_fir(rng, 2, 2, 0, 2);
  std::stringstream ss;
  write_fir(ss, x);
  const FirTransferMatrix back = read_fir(ss);
  REQUIRE(back.start == 0);
  REQUIRE(back.horizon == 2);

  std::stringstream bad("2 2 1 0\n");
  REQUIRE_THROWS_AS(read_fir(bad), std::runtime_error);
  std::stringstream negative("2 2 -1 1\n");
  REQUIRE_THROWS_AS(read_fir(negative), std::runtime_error);

  REQUIRE_THROWS_AS(write_fir(ss, fir_shifted(x, -1)), std::invalid_argument);
}

TEST_CASE("mask serialization writes 0/1 entries and round-trips") {
  const Topology topo = chain_topology(4, {2, 4});
  const SparsityMask mask = delay_mask(topo, 1.0, 3);
  std::stringstream ss;
  write_mask(ss, mask);

  const std::string text = ss.str();
  for (const char c : text)
    REQUIRE((c == '0' || c == '1' || c == ' ' || c == '\n' || c == '2' || c == '3' || c == '4'));

  ss.seekg(0);
  const SparsityMask back = read_mask(ss);
  REQUIRE(back.horizon == 3);
  for (int k = 1; k <= 3; ++k) {
    REQUIRE((back.pattern_R(k).array() == mask.pattern_R(k).array()).all());
    REQUIRE((back.pattern_M(k).array() == mask.pattern_M(k).array()).all());
  }
}

TEST_CASE("file helpers report unopenable paths") {
  const std::string missing = "/nonexistent-dir/value.txt";
  REQUIRE_THROWS_WITH(read_matrix_file(missing), "cannot open for reading: " + missing);
  REQUIRE_THROWS_WITH(write_matrix_file(missing, Eigen::MatrixXd::Zero(1, 1)),
                      "cannot open for writing: " + missing);

  auto rng = test_rng(204);
  const std::string path = "io_roundtrip_tmp.txt";
  const FirTransferMatrix x = random_fir(rng, 2, 3, 1, 2);
  write_fir_file(path, x);
  const FirTransferMatrix back = read_fir_file(path);
  REQUIRE((back.at(2) - x.at(2)).cwiseAbs().maxCoeff() == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("key-value parser strips comments and rejects malformed lines") {
  std::stringstream good("# heading\n n = 10\nT=20  # trailing\n\nname = chain a\n");
  const auto kv = parse_key_values(good);
  REQUIRE(kv.size() == 3);
  REQUIRE(kv.at("n") == "10");
  REQUIRE(kv.at("T") == "20");
  REQUIRE(kv.at("name") == "chain a");

  std::stringstream no_eq("just words\n");
  REQUIRE_THROWS_AS(parse_key_values(no_eq), std::runtime_error);
  std::stringstream empty_key(" = 3\n");
  REQUIRE_THROWS_AS(parse_key_values(empty_key), std::runtime_error);
  std::stringstream dup("a = 1\na = 2\n");
  REQUIRE_THROWS_AS(parse_key_values(dup), std::runtime_error);
}

TEST_CASE("scalar parsers are strict about their value grammar") {
  REQUIRE(parse_double("2.5", "x") == 2.5);
  REQUIRE_THROWS_AS(parse_double("2.5abc", "x"), std::runtime_error);
  REQUIRE_THROWS_AS(parse_double("", "x"), std::runtime_error);

  REQUIRE(parse_int("-7", "k") == -7);
  REQUIRE_THROWS_AS(parse_int("7.5", "k"), std::runtime_error);

  REQUIRE(parse_bool("true", "f"));
  REQUIRE(parse_bool("1", "f"));
  REQUIRE_FALSE(parse_bool("off", "f"));
  REQUIRE_THROWS_AS(parse_bool("yes", "f"), std::runtime_error);
}

TEST_CASE("integer lists accept values and inclusive ranges") {
  REQUIRE(parse_int_list("2,5:8", "list") == std::vector<int>{2, 5, 6, 7, 8});
  REQUIRE(parse_int_list(" 3 ", "list") == std::vector<int>{3});
  REQUIRE_THROWS_AS(parse_int_list("8:5", "list"), std::runtime_error);
  REQUIRE_THROWS_AS(parse_int_list("", "list"), std::runtime_error);
  REQUIRE_THROWS_AS(parse_int_list("1,,2", "list"), std::runtime_error);
}
