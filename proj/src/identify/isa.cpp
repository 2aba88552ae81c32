#include <algorithm>
#include <array>

#include "fwcorpus/identify.hpp"

namespace fwcorpus::identify {

namespace {

struct OtherMachine {
  std::uint16_t machine;
  const char* name;
};

// e_machine values outside the main families that show up in embedded images.
constexpr std::array<OtherMachine, 12> kOtherMachines{{
    {0x02, "sparc"},
    {0x2B, "sparc"},
    {0x04, "m68k"},
    {0x2A, "sh"},
    {0x5D, "arc"},
    {0xC3, "arc"},
    {0x5E, "xtensa"},
    {0xF3, "riscv"},
    {0x16, "s390"},
    {0x5C, "openrisc"},
    {0x6A, "blackfin"},
    {0x71, "nios2"},
}};

bool starts_with_at(std::string_view hay, std::size_t pos, std::string_view needle) {
  return hay.substr(pos, needle.size()) == needle;
}

// True if `line` occurs at the start of a line in `text`.
bool has_line(std::string_view text, std::string_view line) {
  std::size_t pos = 0;
  while ((pos = text.find(line, pos)) != std::string_view::npos) {
    const bool at_start = pos == 0 || text[pos - 1] == '\n';
    const auto end = pos + line.size();
    const bool at_end = end == text.size() || text[end] == '\n' || text[end] == '\r';
    if (at_start && at_end) return true;
    pos = end;
  }
  return false;
}

Isa from_device_tree(std::string_view blob) {
  // CPU compatible strings carry the architecture; everything else is opaque.
  if (blob.find("arm,cortex-a53") != std::string_view::npos || blob.find("arm,cortex-a55") != std::string_view::npos ||
      blob.find("arm,cortex-a57") != std::string_view::npos || blob.find("arm,cortex-a72") != std::string_view::npos ||
      blob.find("arm,armv8") != std::string_view::npos)
    return {IsaLabel::Arm64, ""};
  if (blob.find("arm,cortex-a") != std::string_view::npos || blob.find("arm,arm11") != std::string_view::npos ||
      blob.find("arm,arm9") != std::string_view::npos)
    return {IsaLabel::Arm, ""};
  if (blob.find("fsl,e500") != std::string_view::npos || blob.find("PowerPC,") != std::string_view::npos)
    return {IsaLabel::Ppc, ""};
  if (blob.find("riscv") != std::string_view::npos) return {IsaLabel::Other, "riscv"};
  return {IsaLabel::Other, "unknown"};
}

}  // namespace

std::string Isa::name() const {
  switch (label) {
    case IsaLabel::Arm: return "arm";
    case IsaLabel::Arm64: return "arm64";
    case IsaLabel::Mips32el: return "mips32el";
    case IsaLabel::Mips32eb: return "mips32eb";
    case IsaLabel::Mips64: return "mips64";
    case IsaLabel::X86: return "x86";
    case IsaLabel::X86_64: return "x86_64";
    case IsaLabel::Ppc: return "ppc";
    case IsaLabel::Other: break;
  }
  return "other(" + other_name + ")";
}

IsaFamily Isa::family() const {
  switch (label) {
    case IsaLabel::Arm:
    case IsaLabel::Arm64: return IsaFamily::Arm;
    case IsaLabel::Mips32el:
    case IsaLabel::Mips32eb:
    case IsaLabel::Mips64: return IsaFamily::Mips;
    case IsaLabel::X86:
    case IsaLabel::X86_64: return IsaFamily::X86;
    default: return IsaFamily::Other;
  }
}

std::string_view to_string(IsaFamily f) {
  switch (f) {
    case IsaFamily::Arm: return "ARM";
    case IsaFamily::Mips: return "MIPS";
    case IsaFamily::X86: return "x86";
    case IsaFamily::Other: break;
  }
  return "Other";
}

std::string_view to_string(IsaEvidence e) {
  switch (e) {
    case IsaEvidence::ElfHeader: return "elf_header";
    case IsaEvidence::DeviceTree: return "device_tree";
    case IsaEvidence::KernelConfig: break;
  }
  return "kernel_config";
}

const std::vector<std::string>& other_isa_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& m : kOtherMachines) n.emplace_back(m.name);
    n.emplace_back("unknown");
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
    return n;
  }();
  return names;
}

bool is_documented_isa(const Isa& isa) {
  if (isa.label != IsaLabel::Other) return isa.other_name.empty();
  const auto& names = other_isa_names();
  return std::binary_search(names.begin(), names.end(), isa.other_name);
}

Isa isa_from_elf_machine(std::uint16_t machine, bool big_endian, bool is64) {
  switch (machine) {
    case 0x28: return {IsaLabel::Arm, ""};
    case 0xB7: return {IsaLabel::Arm64, ""};
    case 0x08:
      if (is64) return {IsaLabel::Mips64, ""};
      return {big_endian ? IsaLabel::Mips32eb : IsaLabel::Mips32el, ""};
    case 0x0A: return {IsaLabel::Mips32el, ""};  // EM_MIPS_RS3_LE
    case 0x03: return {IsaLabel::X86, ""};
    case 0x3E: return {IsaLabel::X86_64, ""};
    case 0x14:
    case 0x15: return {IsaLabel::Ppc, ""};
    default: break;
  }
  for (const auto& m : kOtherMachines) {
    if (m.machine == machine) return {IsaLabel::Other, m.name};
  }
  return {IsaLabel::Other, "unknown"};
}

std::vector<IsaFinding> detect_isas(const std::string& path, ByteView data) {
  std::vector<IsaFinding> out;
  const auto text = as_chars(data);

  if (looks_like_elf(data) && data.size() >= 20) {
    const auto cls = std::to_integer<int>(data[4]);
    const auto enc = std::to_integer<int>(data[5]);
    const std::size_t header_size = cls == 2 ? 64 : 52;
    if ((cls == 1 || cls == 2) && (enc == 1 || enc == 2) && data.size() >= header_size) {
      const auto lo = std::to_integer<std::uint16_t>(data[enc == 2 ? 19 : 18]);
      const auto hi = std::to_integer<std::uint16_t>(data[enc == 2 ? 18 : 19]);
      out.push_back({isa_from_elf_machine(static_cast<std::uint16_t>(hi << 8 | lo), enc == 2, cls == 2),
                     IsaEvidence::ElfHeader, path});
    }
    return out;
  }

  if (starts_with_at(text, 0, "\xD0\x0D\xFE\xED")) {
    out.push_back({from_device_tree(text), IsaEvidence::DeviceTree, path});
    return out;
  }

  if (text.find("CONFIG_") != std::string_view::npos) {
    std::vector<Isa> found;
    if (has_line(text, "CONFIG_ARM64=y")) found.push_back({IsaLabel::Arm64, ""});
    if (has_line(text, "CONFIG_ARM=y")) found.push_back({IsaLabel::Arm, ""});
    if (has_line(text, "CONFIG_MIPS=y")) {
      if (has_line(text, "CONFIG_64BIT=y")) found.push_back({IsaLabel::Mips64, ""});
      else if (has_line(text, "CONFIG_CPU_LITTLE_ENDIAN=y")) found.push_back({IsaLabel::Mips32el, ""});
      else found.push_back({IsaLabel::Mips32eb, ""});
    }
    if (has_line(text, "CONFIG_X86=y")) {
      found.push_back({has_line(text, "CONFIG_X86_64=y") ? IsaLabel::X86_64 : IsaLabel::X86, ""});
    }
    if (has_line(text, "CONFIG_PPC=y")) found.push_back({IsaLabel::Ppc, ""});
    for (auto& isa : found) out.push_back({std::move(isa), IsaEvidence::KernelConfig, path});
  }
  return out;
}

std::vector<IsaFinding> detect_isas(const std::vector<unpack::FileBlob>& files) {
  std::vector<IsaFinding> out;
  for (const auto& f : files) {
    auto part = detect_isas(f.path, f.data);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

}  // namespace fwcorpus::identify
