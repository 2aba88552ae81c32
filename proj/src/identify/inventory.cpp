#include <algorithm>
#include <array>
#include <unordered_map>

#include "fwcorpus/error.hpp"
#include "fwcorpus/identify.hpp"
#include "fwcorpus/text_table.hpp"

namespace fwcorpus::identify {

namespace {

constexpr std::array<IsaFamily, 4> kFamilies{IsaFamily::Arm, IsaFamily::Mips, IsaFamily::X86, IsaFamily::Other};
constexpr std::array<MimeGroup, 3> kGroups{MimeGroup::Execs, MimeGroup::Libs, MimeGroup::Objs};

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

void add(InventoryCell& into, const InventoryCell& c) {
  into.raw += c.raw;
  into.deduplicated += c.deduplicated;
}

}  // namespace

InventoryCell ElfInventory::total() const {
  InventoryCell t;
  for (const auto& [key, cell] : counts) add(t, cell);
  return t;
}

InventoryCell ElfInventory::family_total(IsaFamily f) const {
  InventoryCell t;
  for (const auto& [key, cell] : counts) {
    if (key.first == f) add(t, cell);
  }
  return t;
}

InventoryCell ElfInventory::group_total(MimeGroup g) const {
  InventoryCell t;
  for (const auto& [key, cell] : counts) {
    if (key.second == g) add(t, cell);
  }
  return t;
}

ElfInventory elf_inventory(const std::vector<FirmwareContents>& corpus, const BannerFilter& filter) {
  ElfInventory inv;
  std::unordered_map<std::string, InventoryEntry> by_sha;

  for (const auto& fw : corpus) {
    for (const auto& file : fw.files) {
      const ByteView data(file.data);
      const bool is_ar = as_chars(data.first(std::min<std::size_t>(8, data.size()))) == "!<arch>\n";
      if (!looks_like_elf(data) && !is_ar) continue;
      if (ends_with(file.path, ".ko")) {
        ++inv.excluded_kernel_objects;
        continue;
      }
      if (!scan_kernel_banners(file.path, data, filter).empty()) {
        ++inv.excluded_kernel_images;
        continue;
      }

      auto it = by_sha.find(file.sha256);
      if (it == by_sha.end()) {
        ElfSummary summary;
        try {
          summary = parse_elf(data);
        } catch (const ParseError&) {
          continue;
        }
        const auto mime = classify_elf(summary);
        if (mime == MimeClass::Unknown) continue;
        InventoryEntry entry;
        entry.sha256 = file.sha256;
        entry.summary = std::move(summary);
        entry.mime_class = mime;
        it = by_sha.emplace(file.sha256, std::move(entry)).first;
      }
      auto& entry = it->second;
      ++entry.occurrences;
      entry.origin_firmware.push_back(fw.firmware_sha256);
      ++inv.counts[{entry.summary.isa.family(), mime_group(entry.mime_class)}].raw;
    }
  }

  inv.entries.reserve(by_sha.size());
  for (auto& [sha, entry] : by_sha) {
    std::sort(entry.origin_firmware.begin(), entry.origin_firmware.end());
    entry.origin_firmware.erase(std::unique(entry.origin_firmware.begin(), entry.origin_firmware.end()),
                                entry.origin_firmware.end());
    ++inv.counts[{entry.summary.isa.family(), mime_group(entry.mime_class)}].deduplicated;
    inv.entries.push_back(std::move(entry));
  }
  std::sort(inv.entries.begin(), inv.entries.end(),
            [](const InventoryEntry& a, const InventoryEntry& b) { return a.sha256 < b.sha256; });
  return inv;
}

std::string inventory_csv(const ElfInventory& inv, const manifest::CorpusManifest& m) {
  std::unordered_map<std::string, std::string> year_of;
  for (const auto& r : m.records) {
    year_of.emplace(r.sha256, r.release_date ? std::to_string(r.release_date->year) : std::string("unknown"));
  }
  std::string out = csv_line({"sha256", "mime_class", "isa_family", "origin_firmware_sha256", "release_year"});
  for (const auto& e : inv.entries) {
    for (const auto& origin : e.origin_firmware) {
      const auto y = year_of.find(origin);
      out += csv_line({e.sha256, std::string(to_string(e.mime_class)), std::string(to_string(e.summary.isa.family())),
                       origin, y == year_of.end() ? "unknown" : y->second});
    }
  }
  return out;
}

std::string inventory_table(const ElfInventory& inv) {
  std::vector<std::string> header{"Arch"};
  for (const char* part : {"raw", "dedup"}) {
    for (auto g : kGroups) header.push_back(std::string(to_string(g)) + " " + part);
    header.push_back(std::string("Total ") + part);
  }
  TextTable t(header);

  auto row = [&](const std::string& label, auto cell_of, const InventoryCell& total) {
    std::vector<std::string> cells{label};
    for (auto g : kGroups) cells.push_back(std::to_string(cell_of(g).raw));
    cells.push_back(std::to_string(total.raw));
    for (auto g : kGroups) cells.push_back(std::to_string(cell_of(g).deduplicated));
    cells.push_back(std::to_string(total.deduplicated));
    t.add_row(cells);
  };

  for (auto f : kFamilies) {
    row(std::string(to_string(f)),
        [&](MimeGroup g) {
          auto it = inv.counts.find({f, g});
          return it == inv.counts.end() ? InventoryCell{} : it->second;
        },
        inv.family_total(f));
  }
  t.add_rule();
  row("Total", [&](MimeGroup g) { return inv.group_total(g); }, inv.total());
  return t.render();
}

}  // namespace fwcorpus::identify
