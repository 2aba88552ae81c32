#include "fwcorpus/digest.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <unordered_map>

#include "fwcorpus/error.hpp"

namespace fwcorpus::digest {

namespace {

constexpr char kHex[] = "0123456789abcdef";

std::string to_hex(const unsigned char* p, std::size_t n) {
  std::string out(n * 2, '0');
  for (std::size_t i = 0; i < n; ++i) {
    out[2 * i] = kHex[p[i] >> 4];
    out[2 * i + 1] = kHex[p[i] & 0xF];
  }
  return out;
}

std::array<unsigned char, 32> sha256_raw(ByteView data) {
  std::array<unsigned char, 32> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  return md;
}

}  // namespace

struct Sha256::Impl {
  EVP_MD_CTX* ctx = nullptr;
};

Sha256::Sha256() : impl_(new Impl) {
  impl_->ctx = EVP_MD_CTX_new();
  if (!impl_->ctx || EVP_DigestInit_ex(impl_->ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(impl_->ctx);
    delete impl_;
    throw Error("SHA-256 init failed");
  }
}

Sha256::~Sha256() {
  EVP_MD_CTX_free(impl_->ctx);
  delete impl_;
}

void Sha256::update(ByteView data) {
  if (EVP_DigestUpdate(impl_->ctx, data.data(), data.size()) != 1) throw Error("SHA-256 update failed");
}

std::string Sha256::final_hex() {
  unsigned char md[32];
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(impl_->ctx, md, &len) != 1) throw Error("SHA-256 final failed");
  EVP_DigestInit_ex(impl_->ctx, EVP_sha256(), nullptr);
  return to_hex(md, len);
}

std::string sha256_hex(ByteView data) {
  const auto md = sha256_raw(data);
  return to_hex(md.data(), md.size());
}

std::string sha256_hex(std::istream& in) {
  Sha256 h;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    const auto n = in.gcount();
    if (n > 0) h.update({reinterpret_cast<const std::byte*>(buf.data()), static_cast<std::size_t>(n)});
  }
  if (in.bad()) throw IoError("read failed while hashing");
  return h.final_hex();
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return sha256_hex(in);
}

bool is_valid_block_size(std::size_t block_size) {
  return block_size >= kMinBlockSize && block_size <= kMaxBlockSize && (block_size & (block_size - 1)) == 0;
}

FuzzyDigest block_digest(ByteView data, std::size_t block_size) {
  if (!is_valid_block_size(block_size)) {
    throw ValidationError("invalid block size " + std::to_string(block_size) +
                          ": must be a power of two between 1 KiB and 64 KiB");
  }
  FuzzyDigest d;
  d.block_size = block_size;
  d.block_hashes.reserve((data.size() + block_size - 1) / block_size);
  for (std::size_t off = 0; off < data.size(); off += block_size) {
    const auto md = sha256_raw(data.subspan(off, std::min(block_size, data.size() - off)));
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | md[i];
    d.block_hashes.push_back(v);
  }
  return d;
}

std::string FuzzyDigest::encode() const {
  std::string out = "blk:" + std::to_string(block_size) + ":";
  out.reserve(out.size() + block_hashes.size() * 16);
  for (auto h : block_hashes) {
    for (int shift = 60; shift >= 0; shift -= 4) out += kHex[(h >> shift) & 0xF];
  }
  return out;
}

std::optional<FuzzyDigest> FuzzyDigest::decode(std::string_view text) {
  if (!text.starts_with("blk:")) return std::nullopt;
  text.remove_prefix(4);
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  FuzzyDigest d;
  auto [p, ec] = std::from_chars(text.data(), text.data() + colon, d.block_size);
  if (ec != std::errc{} || p != text.data() + colon || !is_valid_block_size(d.block_size)) return std::nullopt;
  const auto hex = text.substr(colon + 1);
  if (hex.size() % 16 != 0) return std::nullopt;
  for (std::size_t i = 0; i < hex.size(); i += 16) {
    std::uint64_t v = 0;
    auto [q, ec2] = std::from_chars(hex.data() + i, hex.data() + i + 16, v, 16);
    if (ec2 != std::errc{} || q != hex.data() + i + 16) return std::nullopt;
    d.block_hashes.push_back(v);
  }
  return d;
}

double fuzzy_similarity(const FuzzyDigest& a, const FuzzyDigest& b) {
  if (a.block_size != b.block_size) {
    throw ValidationError("block size mismatch: " + std::to_string(a.block_size) + " vs " +
                          std::to_string(b.block_size));
  }
  const auto denom = std::max(a.block_hashes.size(), b.block_hashes.size());
  if (denom == 0) return 1.0;
  std::unordered_map<std::uint64_t, std::size_t> counts;
  for (auto h : a.block_hashes) ++counts[h];
  std::size_t common = 0;
  for (auto h : b.block_hashes) {
    auto it = counts.find(h);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  return static_cast<double>(common) / static_cast<double>(denom);
}

DedupResult dedup(const std::vector<manifest::FirmwareRecord>& records) {
  DedupResult out;
  std::unordered_map<std::string, std::size_t> group_of;  // sha256 -> index into groups
  std::vector<DuplicateGroup> groups;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.sha256.empty()) {
      throw ValidationError("record " + std::to_string(i) + " (" + r.manufacturer + " " + r.model +
                            ") has no sha256");
    }
    auto [it, inserted] = group_of.try_emplace(r.sha256, groups.size());
    if (inserted) {
      groups.push_back({r.sha256, {r}});
      out.unique.push_back(r);
    } else {
      groups[it->second].members.push_back(r);
    }
  }
  for (auto& g : groups) {
    if (g.members.size() > 1) out.duplicate_groups.push_back(std::move(g));
  }
  return out;
}

}  // namespace fwcorpus::digest
