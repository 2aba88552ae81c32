#include <zlib.h>

#include <algorithm>
#include <array>
#include <optional>
#include <charconv>
#include <cstring>

#include "fwcorpus/error.hpp"
#include "fwcorpus/unpack.hpp"

namespace fwcorpus::unpack {

namespace {

const unsigned char* u8(ByteView v) { return reinterpret_cast<const unsigned char*>(v.data()); }

bool has_magic(ByteView head, std::size_t offset, std::string_view magic) {
  if (head.size() < offset + magic.size()) return false;
  return std::memcmp(head.data() + offset, magic.data(), magic.size()) == 0;
}

std::uint16_t le16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

// zlib inflate into a byte vector. window_bits selects gzip / raw mode.
// Returns the number of input bytes consumed.
std::size_t inflate_into(ByteView in, int window_bits, std::uint64_t budget, Bytes& out,
                         std::size_t expected_size = 0) {
  z_stream zs{};
  if (inflateInit2(&zs, window_bits) != Z_OK) throw ParseError("inflateInit2 failed");
  zs.next_in = const_cast<Bytef*>(u8(in));
  zs.avail_in = static_cast<uInt>(std::min<std::size_t>(in.size(), UINT32_MAX));
  if (expected_size > 0 && expected_size <= budget) out.reserve(out.size() + expected_size);
  std::array<unsigned char, 1 << 16> buf;
  int rc = Z_OK;
  while (true) {
    zs.next_out = buf.data();
    zs.avail_out = buf.size();
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw ParseError(std::string("inflate failed: ") + (zs.msg ? zs.msg : "corrupt stream"));
    }
    const std::size_t produced = buf.size() - zs.avail_out;
    if (out.size() + produced > budget) {
      inflateEnd(&zs);
      throw BudgetExceeded();
    }
    const auto* b = reinterpret_cast<const std::byte*>(buf.data());
    out.insert(out.end(), b, b + produced);
    if (rc == Z_STREAM_END) break;
    if (zs.avail_in == 0 && produced == 0) {
      inflateEnd(&zs);
      throw ParseError("truncated deflate stream");
    }
  }
  const std::size_t consumed = in.size() - zs.avail_in;
  inflateEnd(&zs);
  return consumed;
}

// ---------------------------------------------------------------------------

class GzipUnpacker : public Unpacker {
 public:
  std::string id() const override { return "gzip"; }
  bool matches(ByteView head, std::uint64_t) const override {
    return detect_container(head, head.size()) == ContainerFormat::Gzip;
  }

  std::vector<RawEntry> unpack(ByteView data, std::uint64_t budget) const override {
    RawEntry entry;
    entry.path = member_name(data);
    std::size_t offset = 0;
    // Concatenated members decompress to one stream.
    while (offset + 2 <= data.size() && u8(data)[offset] == 0x1F && u8(data)[offset + 1] == 0x8B) {
      offset += inflate_into(data.subspan(offset), 16 + MAX_WBITS, budget, entry.data);
    }
    if (offset == 0) throw ParseError("not a gzip stream");
    std::vector<RawEntry> out;
    out.push_back(std::move(entry));
    return out;
  }

 private:
  // FNAME from the header when present.
  static std::string member_name(ByteView data) {
    const auto* p = u8(data);
    if (data.size() < 10 || !(p[3] & 0x08)) return "gunzipped";
    std::size_t pos = 10;
    if (p[3] & 0x04) {  // FEXTRA
      if (pos + 2 > data.size()) return "gunzipped";
      pos += 2 + le16(p + pos);
    }
    std::string name;
    while (pos < data.size() && p[pos] != 0 && name.size() < 255) name += static_cast<char>(p[pos++]);
    return name.empty() ? "gunzipped" : name;
  }
};

// ---------------------------------------------------------------------------

class TarUnpacker : public Unpacker {
 public:
  std::string id() const override { return "tar"; }
  bool matches(ByteView head, std::uint64_t) const override {
    return detect_container(head, head.size()) == ContainerFormat::Tar;
  }

  std::vector<RawEntry> unpack(ByteView data, std::uint64_t budget) const override {
    std::vector<RawEntry> out;
    std::uint64_t used = 0;
    std::string long_name;
    std::size_t pos = 0;
    while (pos + 512 <= data.size()) {
      const auto* h = u8(data) + pos;
      if (std::all_of(h, h + 512, [](unsigned char c) { return c == 0; })) break;
      if (!checksum_ok(h)) throw ParseError("bad tar header checksum at offset " + std::to_string(pos));

      const std::uint64_t size = parse_number(h + 124, 12);
      const char type = static_cast<char>(h[156]);
      const std::size_t data_pos = pos + 512;
      if (size > data.size() - data_pos) throw ParseError("tar member exceeds archive size");
      const auto payload = data.subspan(data_pos, static_cast<std::size_t>(size));
      pos = data_pos + static_cast<std::size_t>((size + 511) / 512 * 512);

      std::string name = field(h, 100);
      if (std::memcmp(h + 257, "ustar", 5) == 0) {
        const auto prefix = field(h + 345, 155);
        if (!prefix.empty()) name = prefix + "/" + name;
      }
      if (!long_name.empty()) {
        name = std::move(long_name);
        long_name.clear();
      }

      switch (type) {
        case 'L':  // GNU long name for the next member
          long_name = std::string(as_chars(payload).substr(0, as_chars(payload).find('\0')));
          break;
        case 'x':  // pax extended header
          long_name = pax_path(as_chars(payload));
          break;
        case '0':
        case '\0':
        case '7':
          used += size;
          if (used > budget) throw BudgetExceeded();
          out.push_back({std::move(name), Bytes(payload.begin(), payload.end())});
          break;
        default:  // directories, links, devices, global headers
          break;
      }
    }
    return out;
  }

 private:
  static std::string field(const unsigned char* p, std::size_t n) {
    const auto* end = static_cast<const unsigned char*>(std::memchr(p, 0, n));
    return std::string(reinterpret_cast<const char*>(p), end ? static_cast<std::size_t>(end - p) : n);
  }

  static std::uint64_t parse_number(const unsigned char* p, std::size_t n) {
    if (p[0] & 0x80) {  // base-256
      std::uint64_t v = p[0] & 0x7F;
      for (std::size_t i = 1; i < n; ++i) v = (v << 8) | p[i];
      return v;
    }
    std::uint64_t v = 0;
    std::size_t i = 0;
    while (i < n && (p[i] == ' ' || p[i] == 0)) ++i;
    for (; i < n && p[i] >= '0' && p[i] <= '7'; ++i) v = v * 8 + (p[i] - '0');
    return v;
  }

  static bool checksum_ok(const unsigned char* h) {
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < 512; ++i) sum += (i >= 148 && i < 156) ? ' ' : h[i];
    return sum == parse_number(h + 148, 8);
  }

  static std::string pax_path(std::string_view records) {
    // "<len> key=value\n" records
    while (!records.empty()) {
      std::size_t len = 0;
      auto [p, ec] = std::from_chars(records.data(), records.data() + records.size(), len);
      if (ec != std::errc{} || len == 0 || len > records.size()) break;
      auto rec = records.substr(0, len);
      records.remove_prefix(len);
      const auto sp = rec.find(' ');
      if (sp == std::string_view::npos) continue;
      rec.remove_prefix(sp + 1);
      if (rec.starts_with("path=")) {
        rec.remove_prefix(5);
        if (!rec.empty() && rec.back() == '\n') rec.remove_suffix(1);
        return std::string(rec);
      }
    }
    return {};
  }
};

// ---------------------------------------------------------------------------

class CpioUnpacker : public Unpacker {
 public:
  std::string id() const override { return "cpio_newc"; }
  bool matches(ByteView head, std::uint64_t) const override {
    return detect_container(head, head.size()) == ContainerFormat::CpioNewc || has_magic(head, 0, "070702");
  }

  std::vector<RawEntry> unpack(ByteView data, std::uint64_t budget) const override {
    constexpr std::size_t kHeader = 110;
    std::vector<RawEntry> out;
    std::uint64_t used = 0;
    std::size_t pos = 0;
    while (true) {
      if (pos + kHeader > data.size()) throw ParseError("truncated cpio header");
      const auto h = as_chars(data.subspan(pos, kHeader));
      if (!h.starts_with("070701") && !h.starts_with("070702")) throw ParseError("bad cpio magic");
      const auto mode = hex_field(h, 1);
      const auto file_size = hex_field(h, 6);
      const auto name_size = hex_field(h, 11);
      if (name_size == 0 || name_size > data.size() - pos - kHeader) throw ParseError("bad cpio name size");
      std::string name(as_chars(data.subspan(pos + kHeader, name_size - 1)));
      const std::size_t data_pos = align4(pos + kHeader + name_size);
      if (name == "TRAILER!!!") break;
      if (data_pos > data.size() || file_size > data.size() - data_pos) throw ParseError("cpio member exceeds archive");
      if ((mode & 0170000) == 0100000) {
        used += file_size;
        if (used > budget) throw BudgetExceeded();
        const auto payload = data.subspan(data_pos, file_size);
        out.push_back({std::move(name), Bytes(payload.begin(), payload.end())});
      }
      pos = align4(data_pos + file_size);
    }
    return out;
  }

 private:
  static std::size_t align4(std::size_t v) { return (v + 3) & ~std::size_t{3}; }

  // Field i (0-based) of the 13 eight-digit hex fields after the magic.
  static std::uint64_t hex_field(std::string_view h, std::size_t i) {
    const auto f = h.substr(6 + i * 8, 8);
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v, 16);
    if (ec != std::errc{} || p != f.data() + f.size()) throw ParseError("bad cpio header field");
    return v;
  }
};

// ---------------------------------------------------------------------------

class ZipUnpacker : public Unpacker {
 public:
  std::string id() const override { return "zip"; }
  bool matches(ByteView head, std::uint64_t) const override {
    return detect_container(head, head.size()) == ContainerFormat::Zip;
  }

  std::vector<RawEntry> unpack(ByteView data, std::uint64_t budget) const override {
    const auto* p = u8(data);
    const auto eocd = find_eocd(data);
    if (!eocd) throw ParseError("zip end of central directory not found");
    const std::size_t count = le16(p + *eocd + 10);
    const std::size_t cd_offset = le32(p + *eocd + 16);
    if (cd_offset == 0xFFFFFFFFu) throw ParseError("zip64 archives are not supported");

    std::vector<RawEntry> out;
    std::uint64_t used = 0;
    std::size_t pos = cd_offset;
    for (std::size_t i = 0; i < count; ++i) {
      if (pos + 46 > data.size() || le32(p + pos) != 0x02014b50) throw ParseError("bad zip central directory");
      const auto flags = le16(p + pos + 8);
      const auto method = le16(p + pos + 10);
      const std::size_t csize = le32(p + pos + 20);
      const std::size_t usize = le32(p + pos + 24);
      const std::size_t name_len = le16(p + pos + 28);
      const std::size_t extra_len = le16(p + pos + 30);
      const std::size_t comment_len = le16(p + pos + 32);
      const std::size_t local = le32(p + pos + 42);
      if (pos + 46 + name_len > data.size()) throw ParseError("bad zip central directory");
      std::string name(as_chars(data.subspan(pos + 46, name_len)));
      pos += 46 + name_len + extra_len + comment_len;

      if (!name.empty() && name.back() == '/') continue;
      if (flags & 0x1) throw ParseError("encrypted zip member: " + name);
      if (local + 30 > data.size() || le32(p + local) != 0x04034b50) throw ParseError("bad zip local header");
      const std::size_t data_pos = local + 30 + le16(p + local + 26) + le16(p + local + 28);
      if (data_pos > data.size() || csize > data.size() - data_pos) throw ParseError("zip member exceeds archive");
      const auto payload = data.subspan(data_pos, csize);

      RawEntry e{std::move(name), {}};
      if (method == 0) {
        used += csize;
        if (used > budget) throw BudgetExceeded();
        e.data.assign(payload.begin(), payload.end());
      } else if (method == 8) {
        inflate_into(payload, -MAX_WBITS, budget - used, e.data, usize);
        used += e.data.size();
      } else {
        throw ParseError("unsupported zip compression method " + std::to_string(method));
      }
      out.push_back(std::move(e));
    }
    return out;
  }

 private:
  static std::optional<std::size_t> find_eocd(ByteView data) {
    if (data.size() < 22) return std::nullopt;
    const auto* p = u8(data);
    const std::size_t lowest = data.size() > 22 + 65535 ? data.size() - 22 - 65535 : 0;
    for (std::size_t i = data.size() - 22 + 1; i-- > lowest;) {
      if (le32(p + i) == 0x06054b50) return i;
    }
    return std::nullopt;
  }
};

}  // namespace

std::string_view to_string(ContainerFormat f) {
  switch (f) {
    case ContainerFormat::Gzip: return "gzip";
    case ContainerFormat::Zip: return "zip";
    case ContainerFormat::Tar: return "tar";
    case ContainerFormat::CpioNewc: return "cpio_newc";
    case ContainerFormat::Directory: return "directory";
    case ContainerFormat::Unknown: return "unknown";
  }
  return "unknown";
}

ContainerFormat detect_container(ByteView head, std::uint64_t total_length) {
  const auto limit = static_cast<std::size_t>(std::min<std::uint64_t>(head.size(), total_length));
  head = head.first(limit);
  if (head.size() >= 2 && u8(head)[0] == 0x1F && u8(head)[1] == 0x8B) return ContainerFormat::Gzip;
  if (has_magic(head, 0, "PK\x03\x04")) return ContainerFormat::Zip;
  if (has_magic(head, 257, "ustar")) return ContainerFormat::Tar;
  if (has_magic(head, 0, "070701")) return ContainerFormat::CpioNewc;
  return ContainerFormat::Unknown;
}

std::unique_ptr<Unpacker> make_gzip_unpacker() { return std::make_unique<GzipUnpacker>(); }
std::unique_ptr<Unpacker> make_zip_unpacker() { return std::make_unique<ZipUnpacker>(); }
std::unique_ptr<Unpacker> make_tar_unpacker() { return std::make_unique<TarUnpacker>(); }
std::unique_ptr<Unpacker> make_cpio_unpacker() { return std::make_unique<CpioUnpacker>(); }

}  // namespace fwcorpus::unpack
