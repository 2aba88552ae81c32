#include <algorithm>
#include <cstring>
#include <optional>

#include "fwcorpus/error.hpp"
#include "fwcorpus/identify.hpp"

namespace fwcorpus::identify {

namespace {

constexpr std::uint16_t kEtRel = 1;
constexpr std::uint16_t kEtExec = 2;
constexpr std::uint16_t kEtDyn = 3;
constexpr std::uint16_t kEtCore = 4;

constexpr std::uint32_t kShtSymtab = 2;
constexpr std::uint32_t kShtDynsym = 11;

constexpr std::uint64_t kDtNull = 0;
constexpr std::uint64_t kDtStrtab = 5;
constexpr std::uint64_t kDtStrsz = 10;
constexpr std::uint64_t kDtBindNow = 24;
constexpr std::uint64_t kDtFlags = 30;
constexpr std::uint64_t kDtFlags1 = 0x6ffffffb;
constexpr std::uint64_t kDfBindNow = 0x8;
constexpr std::uint64_t kDf1Now = 0x1;
constexpr std::uint64_t kDf1Pie = 0x08000000;

// Upper bound on table entries we are willing to walk.
constexpr std::uint64_t kMaxEntries = 1u << 22;

class Reader {
 public:
  Reader(ByteView data, bool big_endian, bool is64) : data_(data), be_(big_endian), is64_(is64) {}

  bool in_bounds(std::uint64_t off, std::uint64_t len) const {
    return off <= data_.size() && len <= data_.size() - off;
  }

  std::optional<std::uint64_t> uint(std::uint64_t off, std::size_t width) const {
    if (!in_bounds(off, width)) return std::nullopt;
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i) {
      const auto b = std::to_integer<std::uint64_t>(data_[off + (be_ ? i : width - 1 - i)]);
      v = (v << 8) | b;
    }
    return v;
  }
  std::optional<std::uint64_t> u16(std::uint64_t off) const { return uint(off, 2); }
  std::optional<std::uint64_t> u32(std::uint64_t off) const { return uint(off, 4); }
  // Address-sized field.
  std::optional<std::uint64_t> addr(std::uint64_t off) const { return uint(off, is64_ ? 8 : 4); }

  // NUL-terminated string at `off`, bounded by `limit` (absolute end).
  std::optional<std::string> cstr(std::uint64_t off, std::uint64_t limit) const {
    limit = std::min<std::uint64_t>(limit, data_.size());
    if (off >= limit) return std::nullopt;
    const auto* begin = reinterpret_cast<const char*>(data_.data()) + off;
    const auto* end = static_cast<const char*>(std::memchr(begin, 0, limit - off));
    if (!end) return std::nullopt;
    return std::string(begin, end);
  }

  bool is64() const { return is64_; }
  std::size_t size() const { return data_.size(); }

 private:
  ByteView data_;
  bool be_;
  bool is64_;
};

struct Section {
  std::uint32_t type = 0;
  std::uint64_t offset = 0;
  std::uint64_t size = 0;
  std::uint32_t link = 0;
  std::uint64_t entsize = 0;
};

struct Segment {
  std::uint32_t type = 0;
  std::uint32_t flags = 0;
  std::uint64_t offset = 0;
  std::uint64_t vaddr = 0;
  std::uint64_t filesz = 0;
};

std::optional<std::uint64_t> vaddr_to_offset(const std::vector<Segment>& segs, std::uint64_t vaddr) {
  for (const auto& s : segs) {
    if (s.type == kPtLoad && vaddr >= s.vaddr && vaddr - s.vaddr < s.filesz) return s.offset + (vaddr - s.vaddr);
  }
  return std::nullopt;
}

void read_symbols(const Reader& r, const std::vector<Section>& sections, const Section& symtab,
                  std::vector<std::string>& out, bool& truncated) {
  if (symtab.link >= sections.size()) {
    truncated = true;
    return;
  }
  const auto& strtab = sections[symtab.link];
  if (!r.in_bounds(strtab.offset, strtab.size) || !r.in_bounds(symtab.offset, symtab.size)) {
    truncated = true;
    return;
  }
  const std::uint64_t entsize = r.is64() ? 24 : 16;
  const auto count = std::min(symtab.size / entsize, kMaxEntries);
  for (std::uint64_t i = 1; i < count; ++i) {
    const auto name_off = r.u32(symtab.offset + i * entsize);
    if (!name_off) {
      truncated = true;
      return;
    }
    if (*name_off == 0) continue;
    auto name = r.cstr(strtab.offset + *name_off, strtab.offset + strtab.size);
    if (!name) {
      truncated = true;
      continue;
    }
    if (!name->empty()) out.push_back(std::move(*name));
  }
}

ElfSummary parse_ar(ByteView data) {
  ElfSummary s;
  s.is_ar_archive = true;
  s.e_type = ElfType::Other;
  // Borrow machine facts from the first ELF member.
  std::size_t pos = 8;
  while (pos + 60 <= data.size()) {
    const std::string_view header(reinterpret_cast<const char*>(data.data()) + pos, 60);
    std::uint64_t size = 0;
    bool digits = false;
    for (char c : header.substr(48, 10)) {
      if (c < '0' || c > '9') break;
      size = size * 10 + static_cast<std::uint64_t>(c - '0');
      digits = true;
    }
    if (!digits || header.substr(58, 2) != "`\n") {
      s.truncated = true;
      break;
    }
    const std::size_t body = pos + 60;
    if (size > data.size() - body) {
      s.truncated = true;
      break;
    }
    const auto member = data.subspan(body, size);
    if (looks_like_elf(member)) {
      try {
        const auto inner = parse_elf(member);
        s.elf_class = inner.elf_class;
        s.big_endian = inner.big_endian;
        s.machine = inner.machine;
        s.isa = inner.isa;
      } catch (const ParseError&) {
        s.truncated = true;
      }
      break;
    }
    pos = body + size + (size & 1);
  }
  if (s.elf_class == 0) s.isa = Isa{IsaLabel::Other, "unknown"};
  return s;
}

}  // namespace

std::string_view to_string(ElfType t) {
  switch (t) {
    case ElfType::Rel: return "REL";
    case ElfType::Exec: return "EXEC";
    case ElfType::Dyn: return "DYN";
    case ElfType::Core: return "CORE";
    case ElfType::Other: break;
  }
  return "OTHER";
}

bool looks_like_elf(ByteView data) {
  return data.size() >= 4 && data[0] == std::byte{0x7f} && data[1] == std::byte{'E'} &&
         data[2] == std::byte{'L'} && data[3] == std::byte{'F'};
}

namespace {
bool looks_like_ar(ByteView data) { return as_chars(data.first(std::min<std::size_t>(8, data.size()))) == "!<arch>\n"; }
}  // namespace

ElfSummary parse_elf(ByteView data) {
  if (looks_like_ar(data)) return parse_ar(data);
  if (!looks_like_elf(data)) throw ParseError("not an ELF file");
  if (data.size() < 16) throw ParseError("truncated ELF identification");

  const auto cls = std::to_integer<int>(data[4]);
  const auto enc = std::to_integer<int>(data[5]);
  if (cls != 1 && cls != 2) throw ParseError("unsupported ELF class " + std::to_string(cls));
  if (enc != 1 && enc != 2) throw ParseError("unsupported ELF data encoding " + std::to_string(enc));

  ElfSummary s;
  s.elf_class = cls == 1 ? 32 : 64;
  s.big_endian = enc == 2;
  const bool is64 = cls == 2;
  const Reader r(data, s.big_endian, is64);

  const std::size_t header_size = is64 ? 64 : 52;
  if (data.size() < header_size) {
    s.truncated = true;
    if (auto t = r.u16(16)) {
      s.e_type = *t == kEtRel ? ElfType::Rel : *t == kEtExec ? ElfType::Exec : *t == kEtDyn ? ElfType::Dyn
               : *t == kEtCore ? ElfType::Core : ElfType::Other;
    }
    if (auto m = r.u16(18)) {
      s.machine = static_cast<std::uint16_t>(*m);
      s.isa = isa_from_elf_machine(s.machine, s.big_endian, is64);
    }
    return s;
  }

  switch (*r.u16(16)) {
    case kEtRel: s.e_type = ElfType::Rel; break;
    case kEtExec: s.e_type = ElfType::Exec; break;
    case kEtDyn: s.e_type = ElfType::Dyn; break;
    case kEtCore: s.e_type = ElfType::Core; break;
    default: s.e_type = ElfType::Other; break;
  }
  s.machine = static_cast<std::uint16_t>(*r.u16(18));
  s.isa = isa_from_elf_machine(s.machine, s.big_endian, is64);

  const std::uint64_t phoff = *r.addr(is64 ? 32 : 28);
  const std::uint64_t shoff = *r.addr(is64 ? 40 : 32);
  const std::uint64_t phentsize = *r.u16(is64 ? 54 : 42);
  const std::uint64_t phnum = *r.u16(is64 ? 56 : 44);
  const std::uint64_t shentsize = *r.u16(is64 ? 58 : 46);
  const std::uint64_t shnum = *r.u16(is64 ? 60 : 48);

  // Program headers
  std::vector<Segment> segments;
  const std::uint64_t min_ph = is64 ? 56 : 32;
  if (phnum > 0) {
    if (phentsize < min_ph) {
      s.truncated = true;
    } else {
      for (std::uint64_t i = 0; i < phnum; ++i) {
        const auto base = phoff + i * phentsize;
        if (!r.in_bounds(base, min_ph)) {
          s.truncated = true;
          break;
        }
        Segment seg;
        seg.type = static_cast<std::uint32_t>(*r.u32(base));
        if (is64) {
          seg.flags = static_cast<std::uint32_t>(*r.u32(base + 4));
          seg.offset = *r.addr(base + 8);
          seg.vaddr = *r.addr(base + 16);
          seg.filesz = *r.addr(base + 32);
        } else {
          seg.offset = *r.addr(base + 4);
          seg.vaddr = *r.addr(base + 8);
          seg.filesz = *r.addr(base + 16);
          seg.flags = static_cast<std::uint32_t>(*r.u32(base + 24));
        }
        segments.push_back(seg);
        s.program_headers.push_back({seg.type, seg.flags});
        if (seg.type == kPtInterp) s.has_interp = true;
      }
    }
  }

  // Dynamic section
  std::optional<std::uint64_t> dt_strtab, dt_strsz;
  for (const auto& seg : segments) {
    if (seg.type != kPtDynamic) continue;
    const std::uint64_t entsize = is64 ? 16 : 8;
    if (!r.in_bounds(seg.offset, seg.filesz)) s.truncated = true;
    const auto count = std::min(seg.filesz / entsize, kMaxEntries);
    for (std::uint64_t i = 0; i < count; ++i) {
      const auto tag = r.addr(seg.offset + i * entsize);
      const auto val = r.addr(seg.offset + i * entsize + entsize / 2);
      if (!tag || !val) {
        s.truncated = true;
        break;
      }
      if (*tag == kDtNull) break;
      if (*tag == kDtBindNow) s.dynamic_flags.insert(DynamicFlag::BindNow);
      if (*tag == kDtFlags && (*val & kDfBindNow)) s.dynamic_flags.insert(DynamicFlag::BindNow);
      if (*tag == kDtFlags1) {
        if (*val & kDf1Now) s.dynamic_flags.insert(DynamicFlag::BindNow);
        if (*val & kDf1Pie) s.dynamic_flags.insert(DynamicFlag::Pie);
      }
      if (*tag == kDtStrtab) dt_strtab = *val;
      if (*tag == kDtStrsz) dt_strsz = *val;
    }
    break;
  }

  // Section headers
  std::vector<Section> sections;
  const std::uint64_t min_sh = is64 ? 64 : 40;
  if (shnum > 0 && shoff != 0) {
    if (shentsize < min_sh) {
      s.truncated = true;
    } else {
      for (std::uint64_t i = 0; i < shnum; ++i) {
        const auto base = shoff + i * shentsize;
        if (!r.in_bounds(base, min_sh)) {
          s.truncated = true;
          sections.clear();
          break;
        }
        Section sec;
        sec.type = static_cast<std::uint32_t>(*r.u32(base + 4));
        if (is64) {
          sec.offset = *r.addr(base + 24);
          sec.size = *r.addr(base + 32);
          sec.link = static_cast<std::uint32_t>(*r.u32(base + 40));
          sec.entsize = *r.addr(base + 56);
        } else {
          sec.offset = *r.addr(base + 16);
          sec.size = *r.addr(base + 20);
          sec.link = static_cast<std::uint32_t>(*r.u32(base + 24));
          sec.entsize = *r.addr(base + 36);
        }
        sections.push_back(sec);
      }
    }
  }

  bool have_dynsym = false;
  for (const auto& sec : sections) {
    if (sec.type == kShtDynsym) {
      have_dynsym = true;
      read_symbols(r, sections, sec, s.dynamic_symbols, s.truncated);
    } else if (sec.type == kShtSymtab) {
      read_symbols(r, sections, sec, s.static_symbols, s.truncated);
    }
  }

  // Section headers stripped: take every string of the dynamic string table.
  if (!have_dynsym && dt_strtab && dt_strsz) {
    if (const auto off = vaddr_to_offset(segments, *dt_strtab); off && r.in_bounds(*off, *dt_strsz)) {
      std::uint64_t pos = *off;
      const std::uint64_t end = *off + *dt_strsz;
      while (pos < end) {
        auto str = r.cstr(pos, end);
        if (!str) break;
        pos += str->size() + 1;
        if (!str->empty()) s.dynamic_symbols.push_back(std::move(*str));
      }
    } else {
      s.truncated = true;
    }
  }
  return s;
}

// ---------------------------------------------------------------------------

std::string_view to_string(MimeClass c) {
  switch (c) {
    case MimeClass::Executable: return "x-executable";
    case MimeClass::PieExecutable: return "x-pie-executable";
    case MimeClass::SharedLib: return "x-sharedlib";
    case MimeClass::Archive: return "x-archive";
    case MimeClass::Object: return "x-object";
    case MimeClass::Unknown: break;
  }
  return "unknown";
}

MimeClass classify_elf(const ElfSummary& s) {
  if (s.is_ar_archive) return MimeClass::Archive;
  switch (s.e_type) {
    case ElfType::Exec: return MimeClass::Executable;
    case ElfType::Dyn:
      if (s.has_interp || s.dynamic_flags.count(DynamicFlag::Pie)) return MimeClass::PieExecutable;
      return MimeClass::SharedLib;
    case ElfType::Rel: return MimeClass::Object;
    default: return MimeClass::Unknown;
  }
}

MimeGroup mime_group(MimeClass c) {
  switch (c) {
    case MimeClass::Executable:
    case MimeClass::PieExecutable: return MimeGroup::Execs;
    case MimeClass::SharedLib:
    case MimeClass::Archive: return MimeGroup::Libs;
    case MimeClass::Object: return MimeGroup::Objs;
    case MimeClass::Unknown: break;
  }
  throw ValidationError("unknown MIME class has no group");
}

std::string_view to_string(MimeGroup g) {
  switch (g) {
    case MimeGroup::Execs: return "Execs";
    case MimeGroup::Libs: return "Libs";
    case MimeGroup::Objs: break;
  }
  return "Objs";
}

}  // namespace fwcorpus::identify
