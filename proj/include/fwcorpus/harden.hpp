#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "fwcorpus/identify.hpp"
#include "fwcorpus/manifest.hpp"

namespace fwcorpus::harden {

enum class Relro { None, Partial, Full };

std::string_view to_string(Relro r);

struct HardeningFlags {
  bool canary = false;
  bool nx = false;
  Relro relro = Relro::None;
  bool pic = false;
  bool fortify = false;

  friend bool operator==(const HardeningFlags&, const HardeningFlags&) = default;
};

// Header-level hardening detection. Throws ValidationError for anything other
// than an executable or shared object.
HardeningFlags checksec(const identify::ElfSummary& s);

enum class TrendMode { ByMethod, NxByIsa };

inline constexpr std::string_view kUnknownYear = "unknown";

struct TrendCell {
  std::size_t enabled = 0;
  std::size_t total = 0;
  double fraction() const { return total == 0 ? 0.0 : static_cast<double>(enabled) / total; }
};

// Row key: (year or "unknown", method name or ISA family).
struct TrendTable {
  TrendMode mode = TrendMode::ByMethod;
  std::map<std::pair<std::string, std::string>, TrendCell> rows;

  const TrendCell* find(const std::string& year, const std::string& key) const;
};

// Method keys: canary, nx, relro (partial or full), pic, fortify.
// Throws ValidationError listing inventory origins missing from the manifest.
TrendTable hardening_trend(const identify::ElfInventory& inventory,
                           const manifest::CorpusManifest& m, TrendMode mode);

// CSV: year,key,enabled,total,fraction
std::string trend_csv(const TrendTable& t);
std::string trend_table(const TrendTable& t);

}  // namespace fwcorpus::harden
