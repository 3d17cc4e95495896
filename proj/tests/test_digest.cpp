#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "simcurate/digest.hpp"
#include "simcurate/errors.hpp"

using namespace simcurate;

namespace {
std::vector<std::uint8_t> bytes(std::string_view s) { return {s.begin(), s.end()}; }
}  // namespace

TEST(Digest, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(bytes("")), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex(bytes("abc")), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Digest, FileDigestMatchesBufferDigest) {
  testkit::TempDir dir;
  const auto path = dir / "blob.bin";
  std::ofstream(path, std::ios::binary) << "abc";
  EXPECT_EQ(sha256_file(path), sha256_hex(bytes("abc")));
  EXPECT_THROW(sha256_file(dir / "missing.bin"), IoError);
}

TEST(Digest, Base64KnownVectors) {
  EXPECT_EQ(base64_encode(bytes("Man")), "TWFu");
  EXPECT_EQ(base64_encode(bytes("Ma")), "TWE=");
  EXPECT_EQ(base64_encode(bytes("M")), "TQ==");
  EXPECT_EQ(base64_encode(bytes("")), "");
  EXPECT_EQ(base64_decode("TWE="), bytes("Ma"));
  EXPECT_EQ(base64_decode("TQ=="), bytes("M"));
}

TEST(Digest, Base64RoundTripsRandomBuffers) {
  std::mt19937_64 rng(3);
  for (int n = 0; n < 200; ++n) {
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(n));
    for (auto& b : buf) b = static_cast<std::uint8_t>(rng());
    EXPECT_EQ(base64_decode(base64_encode(buf)), buf) << "length " << n;
  }
}

TEST(Digest, Base64RejectsMalformedInput) {
  EXPECT_THROW(base64_decode("abc"), FormatError);
  EXPECT_THROW(base64_decode("ab!d"), FormatError);
}
