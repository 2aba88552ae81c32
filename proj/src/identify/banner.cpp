#include <algorithm>
#include <cctype>

#include "fwcorpus/identify.hpp"

namespace fwcorpus::identify {

namespace {

constexpr std::string_view kPrefix = "Linux version ";
constexpr std::size_t kMaxBanner = 256;

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::size_t digits_at(std::string_view s, std::size_t pos) {
  std::size_t n = 0;
  while (pos + n < s.size() && is_digit(s[pos + n])) ++n;
  return n;
}

bool contains_icase(std::string_view hay, std::string_view needle) {
  if (needle.empty()) return true;
  auto it = std::search(hay.begin(), hay.end(), needle.begin(), needle.end(), [](char a, char b) {
    return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
  });
  return it != hay.end();
}

}  // namespace

std::vector<KernelBannerFinding> scan_kernel_banners(const std::string& path, ByteView data,
                                                     const BannerFilter& filter) {
  std::vector<KernelBannerFinding> out;
  for (const auto& token : filter.false_positive_tokens) {
    if (contains_icase(path, token)) return out;
  }

  const auto text = as_chars(data);
  std::size_t pos = 0;
  while ((pos = text.find(kPrefix, pos)) != std::string_view::npos) {
    const std::size_t start = pos;
    pos += kPrefix.size();

    // <major>.<minor>[.<patch>]
    std::size_t v = pos;
    const auto major = digits_at(text, v);
    if (major == 0 || v + major >= text.size() || text[v + major] != '.') continue;
    v += major + 1;
    const auto minor = digits_at(text, v);
    if (minor == 0) continue;
    v += minor;
    if (v + 1 < text.size() && text[v] == '.' && is_digit(text[v + 1])) v += 1 + digits_at(text, v + 1);

    std::size_t end = v;
    while (end < text.size() && end - start < kMaxBanner && std::isprint(static_cast<unsigned char>(text[end]))) ++end;

    const auto lo = start > filter.context_bytes ? start - filter.context_bytes : 0;
    const auto hi = std::min(text.size(), end + filter.context_bytes);
    const auto window = text.substr(lo, hi - lo);
    const bool false_positive = std::any_of(filter.false_positive_tokens.begin(), filter.false_positive_tokens.end(),
                                            [&](const std::string& t) { return contains_icase(window, t); });
    if (!false_positive) {
      out.push_back({std::string(text.substr(pos, v - pos)), start, path, std::string(text.substr(start, end - start))});
    }
    pos = v;
  }
  return out;
}

std::vector<KernelBannerFinding> scan_kernel_banners(const std::vector<unpack::FileBlob>& files,
                                                     const BannerFilter& filter) {
  std::vector<KernelBannerFinding> out;
  for (const auto& f : files) {
    auto part = scan_kernel_banners(f.path, f.data, filter);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

}  // namespace fwcorpus::identify
