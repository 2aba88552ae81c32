#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fwcorpus/bytes.hpp"
#include "fwcorpus/manifest.hpp"
#include "fwcorpus/unpack.hpp"

namespace fwcorpus::identify {

// ---------------------------------------------------------------------------
// Kernel banners

struct KernelBannerFinding {
  std::string version;  // "4.4.60"
  std::uint64_t offset = 0;
  std::string source_path;
  std::string raw_banner;  // starts with "Linux version "
};

struct BannerFilter {
  // A finding is dropped when this token occurs in the source path or within
  // `context_bytes` before or after the banner.
  std::vector<std::string> false_positive_tokens = {"pptp"};
  std::size_t context_bytes = 64;
};

std::vector<KernelBannerFinding> scan_kernel_banners(const std::string& path, ByteView data,
                                                     const BannerFilter& filter = {});
std::vector<KernelBannerFinding> scan_kernel_banners(const std::vector<unpack::FileBlob>& files,
                                                     const BannerFilter& filter = {});

// ---------------------------------------------------------------------------
// Instruction set architectures

enum class IsaLabel { Arm, Arm64, Mips32el, Mips32eb, Mips64, X86, X86_64, Ppc, Other };
enum class IsaFamily { Arm, Mips, X86, Other };
enum class IsaEvidence { ElfHeader, DeviceTree, KernelConfig };

struct Isa {
  IsaLabel label = IsaLabel::Other;
  std::string other_name;  // set only for IsaLabel::Other, from other_isa_names()

  std::string name() const;  // "arm64", "mips32el", "other(sh)"
  IsaFamily family() const;
  friend auto operator<=>(const Isa&, const Isa&) = default;
};

std::string_view to_string(IsaFamily f);
std::string_view to_string(IsaEvidence e);

// Names an Isa{Other} may carry.
const std::vector<std::string>& other_isa_names();
// Every label detect_isas can emit, rendered with Isa::name().
bool is_documented_isa(const Isa& isa);

// e_machine mapping; `big_endian`/`is64` disambiguate MIPS.
Isa isa_from_elf_machine(std::uint16_t machine, bool big_endian, bool is64);

struct IsaFinding {
  Isa isa;
  IsaEvidence evidence = IsaEvidence::ElfHeader;
  std::string source_path;
};

std::vector<IsaFinding> detect_isas(const std::string& path, ByteView data);
std::vector<IsaFinding> detect_isas(const std::vector<unpack::FileBlob>& files);

// ---------------------------------------------------------------------------
// ELF

enum class ElfType { Rel, Exec, Dyn, Core, Other };
enum class DynamicFlag { BindNow, Pie };

std::string_view to_string(ElfType t);

inline constexpr std::uint32_t kPtLoad = 1;
inline constexpr std::uint32_t kPtDynamic = 2;
inline constexpr std::uint32_t kPtInterp = 3;
inline constexpr std::uint32_t kPtGnuStack = 0x6474e551;
inline constexpr std::uint32_t kPtGnuRelro = 0x6474e552;
inline constexpr std::uint32_t kPfX = 1;
inline constexpr std::uint32_t kPfW = 2;
inline constexpr std::uint32_t kPfR = 4;

struct ProgramHeader {
  std::uint32_t type = 0;
  std::uint32_t flags = 0;
  friend bool operator==(const ProgramHeader&, const ProgramHeader&) = default;
};

struct ElfSummary {
  int elf_class = 0;  // 32 or 64; 0 for ar archives
  bool big_endian = false;
  ElfType e_type = ElfType::Other;
  std::uint16_t machine = 0;
  Isa isa;
  bool has_interp = false;
  std::set<DynamicFlag> dynamic_flags;
  std::vector<ProgramHeader> program_headers;
  std::vector<std::string> dynamic_symbols;
  std::vector<std::string> static_symbols;
  bool is_ar_archive = false;
  bool truncated = false;  // some table pointed outside the file
};

// Throws ParseError for inputs without ELF or ar magic. Never reads out of
// bounds; damaged tables set `truncated`.
ElfSummary parse_elf(ByteView data);

bool looks_like_elf(ByteView data);

enum class MimeClass { Executable, PieExecutable, SharedLib, Archive, Object, Unknown };

std::string_view to_string(MimeClass c);  // "x-executable", ...

MimeClass classify_elf(const ElfSummary& s);

// Table V groups.
enum class MimeGroup { Execs, Libs, Objs };
MimeGroup mime_group(MimeClass c);
std::string_view to_string(MimeGroup g);

// ---------------------------------------------------------------------------
// Corpus-wide ELF inventory

struct FirmwareContents {
  std::string firmware_sha256;
  std::vector<unpack::FileBlob> files;
};

struct InventoryEntry {
  std::string sha256;
  ElfSummary summary;
  MimeClass mime_class = MimeClass::Unknown;
  std::vector<std::string> origin_firmware;  // sorted, distinct
  std::size_t occurrences = 0;
};

struct InventoryCell {
  std::size_t raw = 0;
  std::size_t deduplicated = 0;
};

struct ElfInventory {
  std::vector<InventoryEntry> entries;  // sorted by sha256
  std::map<std::pair<IsaFamily, MimeGroup>, InventoryCell> counts;
  std::size_t excluded_kernel_objects = 0;
  std::size_t excluded_kernel_images = 0;

  InventoryCell total() const;
  InventoryCell family_total(IsaFamily f) const;
  InventoryCell group_total(MimeGroup g) const;
};

// Skips *.ko files and any file carrying a kernel banner, then deduplicates
// ELF files by sha256 across all images.
ElfInventory elf_inventory(const std::vector<FirmwareContents>& corpus,
                           const BannerFilter& filter = {});

// CSV: sha256,mime_class,isa_family,origin_firmware_sha256,release_year
// (one row per origin firmware).
std::string inventory_csv(const ElfInventory& inv, const manifest::CorpusManifest& m);
std::string inventory_table(const ElfInventory& inv);

}  // namespace fwcorpus::identify
