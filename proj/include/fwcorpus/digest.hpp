#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fwcorpus/bytes.hpp"
#include "fwcorpus/manifest.hpp"

namespace fwcorpus::digest {

// Lowercase hex SHA-256.
std::string sha256_hex(ByteView data);
std::string sha256_hex(std::istream& in);  // throws IoError on read failure
std::string sha256_file(const std::string& path);

// Incremental SHA-256 for streaming callers.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(ByteView data);
  std::string final_hex();

 private:
  struct Impl;
  Impl* impl_;
};

inline constexpr std::size_t kDefaultBlockSize = 4096;
inline constexpr std::size_t kMinBlockSize = 1024;
inline constexpr std::size_t kMaxBlockSize = 65536;

// Fixed-block piecewise digest: one 64-bit value per block, taken from the
// first eight bytes (big-endian) of the block's SHA-256.
struct FuzzyDigest {
  std::size_t block_size = kDefaultBlockSize;
  std::vector<std::uint64_t> block_hashes;

  std::string encode() const;  // "blk:<block_size>:<16 hex per block>"
  static std::optional<FuzzyDigest> decode(std::string_view text);

  friend bool operator==(const FuzzyDigest&, const FuzzyDigest&) = default;
};

bool is_valid_block_size(std::size_t block_size);

// Throws ValidationError for block sizes outside 1 KiB..64 KiB or not a
// power of two.
FuzzyDigest block_digest(ByteView data, std::size_t block_size = kDefaultBlockSize);

// |multiset intersection| / max(|a|, |b|); 1.0 when both are empty.
// Throws ValidationError on block size mismatch.
double fuzzy_similarity(const FuzzyDigest& a, const FuzzyDigest& b);

struct DuplicateGroup {
  std::string sha256;
  std::vector<manifest::FirmwareRecord> members;  // input order, first = representative
};

struct DedupResult {
  std::vector<manifest::FirmwareRecord> unique;
  std::vector<DuplicateGroup> duplicate_groups;  // ordered by first occurrence
};

// First occurrence in input order represents each sha256. Throws
// ValidationError naming the record when a sha256 is missing.
DedupResult dedup(const std::vector<manifest::FirmwareRecord>& records);

}  // namespace fwcorpus::digest
