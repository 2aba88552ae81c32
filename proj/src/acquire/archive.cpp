#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "fwcorpus/acquire.hpp"
#include "fwcorpus/manifest.hpp"

namespace fwcorpus::acquire {

namespace {

std::string trim_slash(std::string s) {
  while (!s.empty() && s.back() == '/') s.pop_back();
  return s;
}

}  // namespace

WaybackClient::WaybackClient(HttpClient& http, std::string base_url) : http_(http), base_(trim_slash(std::move(base_url))) {}

std::string WaybackClient::cdx_query_url(const std::string& base, const std::string& original_url) {
  return trim_slash(base) + "/cdx/search/cdx?url=" + percent_encode(original_url) +
         "&output=json&fl=timestamp,original,statuscode&filter=statuscode:200";
}

std::vector<CdxRow> WaybackClient::parse_cdx_json(std::string_view body) {
  std::vector<CdxRow> rows;
  const auto j = nlohmann::json::parse(body.begin(), body.end(), nullptr, false);
  if (j.is_discarded() || !j.is_array()) return rows;
  for (const auto& row : j) {
    if (!row.is_array() || row.size() < 3 || !row[0].is_string() || !row[1].is_string()) continue;
    const auto ts = row[0].get<std::string>();
    if (ts == "timestamp") continue;  // header row
    CdxRow r;
    r.timestamp = ts;
    r.original = row[1].get<std::string>();
    if (row[2].is_string()) {
      const auto code = row[2].get<std::string>();
      r.status = std::all_of(code.begin(), code.end(), [](char c) { return c >= '0' && c <= '9'; }) && !code.empty() &&
                         code.size() < 5
                     ? std::stoi(code)
                     : 0;
    } else if (row[2].is_number_integer()) {
      r.status = row[2].get<int>();
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::optional<std::vector<CdxRow>> WaybackClient::cdx_query(const std::string& original_url) {
  const auto res = http_.get(cdx_query_url(base_, original_url));
  if (res.status != 200) return std::nullopt;
  const auto body = as_chars(res.body);
  // An empty body is how the index says "no captures".
  if (body.find_first_not_of(" \r\n\t") == std::string_view::npos) return std::vector<CdxRow>{};
  return parse_cdx_json(body);
}

std::string WaybackClient::snapshot_url(const CdxRow& row) const {
  return base_ + "/web/" + row.timestamp + "id_/" + row.original;
}

HttpResponse WaybackClient::fetch(const std::string& snapshot_url) { return http_.get(snapshot_url); }

std::optional<std::string> wayback_lookup(const std::string& original_url, ArchiveClient& archive,
                                          std::string* diagnostic) {
  const auto rows = archive.cdx_query(original_url);
  if (!rows) {
    if (diagnostic) *diagnostic = "capture index unreachable";
    return std::nullopt;
  }
  const CdxRow* best = nullptr;
  for (const auto& r : *rows) {
    if (r.status != 200) continue;
    if (!best || r.timestamp > best->timestamp) best = &r;
  }
  if (!best) {
    if (diagnostic) *diagnostic = rows->empty() ? "no captures" : "no capture with status 200";
    return std::nullopt;
  }
  return archive.snapshot_url(*best);
}

HttpHashLookupClient::HttpHashLookupClient(HttpClient& http, std::string url_template)
    : http_(http), template_(std::move(url_template)) {}

std::optional<Bytes> HttpHashLookupClient::lookup(const std::string& sha256) {
  std::string url = template_;
  const std::string key = "{sha256}";
  if (const auto pos = url.find(key); pos != std::string::npos) url.replace(pos, key.size(), sha256);
  auto res = http_.get(url);
  if (res.status != 200) return std::nullopt;
  return std::move(res.body);
}

LocalStoreHashLookup::LocalStoreHashLookup(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::optional<Bytes> LocalStoreHashLookup::lookup(const std::string& sha256) {
  if (!manifest::is_sha256_hex(sha256)) return std::nullopt;
  const auto path = dir_ / sha256;
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) return std::nullopt;
  try {
    return read_file(path);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace fwcorpus::acquire
