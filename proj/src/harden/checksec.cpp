#include <algorithm>

#include "fwcorpus/error.hpp"
#include "fwcorpus/harden.hpp"

namespace fwcorpus::harden {

using identify::DynamicFlag;
using identify::ElfType;

namespace {

bool is_canary_symbol(const std::string& s) { return s == "__stack_chk_fail" || s == "__stack_chk_guard"; }

// Versioned names ("__memcpy_chk@GLIBC_2.3.4") are reduced to the bare symbol.
std::string_view bare(std::string_view s) {
  const auto at = s.find('@');
  return at == std::string_view::npos ? s : s.substr(0, at);
}

bool is_fortified(std::string_view s) {
  s = bare(s);
  return s.size() > 6 && s.substr(0, 2) == "__" && s.substr(s.size() - 4) == "_chk" &&
         s != "__stack_chk_fail" && s != "__stack_chk_guard";
}

}  // namespace

std::string_view to_string(Relro r) {
  switch (r) {
    case Relro::None: return "none";
    case Relro::Partial: return "partial";
    case Relro::Full: break;
  }
  return "full";
}

HardeningFlags checksec(const identify::ElfSummary& s) {
  if (s.is_ar_archive || (s.e_type != ElfType::Exec && s.e_type != ElfType::Dyn)) {
    throw ValidationError("checksec needs an executable or shared object, got " +
                          std::string(s.is_ar_archive ? "archive" : identify::to_string(s.e_type)));
  }
  HardeningFlags f;
  auto canary = [](const std::string& n) { return is_canary_symbol(std::string(bare(n))); };
  f.canary = std::any_of(s.dynamic_symbols.begin(), s.dynamic_symbols.end(), canary) ||
             std::any_of(s.static_symbols.begin(), s.static_symbols.end(), canary);

  const auto stack = std::find_if(s.program_headers.begin(), s.program_headers.end(),
                                  [](const auto& p) { return p.type == identify::kPtGnuStack; });
  f.nx = stack != s.program_headers.end() && (stack->flags & identify::kPfX) == 0;

  const bool relro = std::any_of(s.program_headers.begin(), s.program_headers.end(),
                                 [](const auto& p) { return p.type == identify::kPtGnuRelro; });
  if (relro) f.relro = s.dynamic_flags.count(DynamicFlag::BindNow) ? Relro::Full : Relro::Partial;

  f.pic = s.e_type == ElfType::Dyn;
  f.fortify = std::any_of(s.dynamic_symbols.begin(), s.dynamic_symbols.end(),
                          [](const std::string& n) { return is_fortified(n); });
  return f;
}

}  // namespace fwcorpus::harden
