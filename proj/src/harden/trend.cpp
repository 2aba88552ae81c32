#include <set>
#include <unordered_map>

#include "fwcorpus/error.hpp"
#include "fwcorpus/harden.hpp"
#include "fwcorpus/text_table.hpp"

namespace fwcorpus::harden {

const TrendCell* TrendTable::find(const std::string& year, const std::string& key) const {
  auto it = rows.find({year, key});
  return it == rows.end() ? nullptr : &it->second;
}

TrendTable hardening_trend(const identify::ElfInventory& inventory, const manifest::CorpusManifest& m,
                           TrendMode mode) {
  std::unordered_map<std::string, const manifest::FirmwareRecord*> by_sha;
  for (const auto& r : m.records) by_sha.emplace(r.sha256, &r);

  std::set<std::string> orphans;
  for (const auto& e : inventory.entries) {
    for (const auto& o : e.origin_firmware) {
      if (!by_sha.count(o)) orphans.insert(o);
    }
  }
  if (!orphans.empty()) {
    std::string list;
    for (const auto& o : orphans) list += (list.empty() ? "" : ", ") + o;
    throw ValidationError("inventory origins missing from manifest: " + list);
  }

  TrendTable t;
  t.mode = mode;
  for (const auto& e : inventory.entries) {
    if (e.summary.is_ar_archive) continue;
    if (e.summary.e_type != identify::ElfType::Exec && e.summary.e_type != identify::ElfType::Dyn) continue;
    const auto flags = checksec(e.summary);

    // One contribution per year, however many images of that year carry the file.
    std::set<std::string> years;
    for (const auto& o : e.origin_firmware) {
      const auto* r = by_sha.at(o);
      years.insert(r->release_date ? std::to_string(r->release_date->year) : std::string(kUnknownYear));
    }

    for (const auto& year : years) {
      auto bump = [&](const std::string& key, bool enabled) {
        auto& cell = t.rows[{year, key}];
        ++cell.total;
        if (enabled) ++cell.enabled;
      };
      if (mode == TrendMode::ByMethod) {
        bump("canary", flags.canary);
        bump("nx", flags.nx);
        bump("relro", flags.relro != Relro::None);
        bump("pic", flags.pic);
        bump("fortify", flags.fortify);
      } else {
        bump(std::string(identify::to_string(e.summary.isa.family())), flags.nx);
      }
    }
  }
  return t;
}

std::string trend_csv(const TrendTable& t) {
  std::string out = csv_line({"year", "key", "enabled", "total", "fraction"});
  for (const auto& [key, cell] : t.rows) {
    out += csv_line({key.first, key.second, std::to_string(cell.enabled), std::to_string(cell.total),
                     format_fixed(cell.fraction(), 4)});
  }
  return out;
}

std::string trend_table(const TrendTable& t) {
  TextTable table({"Year", t.mode == TrendMode::ByMethod ? "Method" : "Arch", "Enabled", "Total", "Share"});
  std::string last_year;
  for (const auto& [key, cell] : t.rows) {
    if (!last_year.empty() && key.first != last_year) table.add_rule();
    last_year = key.first;
    table.add_row({key.first, key.second, std::to_string(cell.enabled), std::to_string(cell.total),
                   format_percent(cell.fraction())});
  }
  return table.render();
}

}  // namespace fwcorpus::harden
