#include "fwcorpus/manifest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>

#include <json.hpp>

#include "fwcorpus/error.hpp"

namespace fwcorpus::manifest {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 12> kFieldNames = {
    "manufacturer", "model",      "device_class",  "firmware_version",
    "release_date", "download_url", "sha256",      "size_bytes",
    "fuzzy_digest", "firmware_type", "unpack_status", "notes"};

bool is_known_field(std::string_view key) {
  return std::find(kFieldNames.begin(), kFieldNames.end(), key) != kFieldNames.end();
}

constexpr ReleaseDate kDateFloor{1990, 1, 1, DatePrecision::Day};

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

struct LineError {
  std::string field;
  std::string detail;
};

std::string required_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw LineError{key, "missing field"};
  if (!it->is_string()) throw LineError{key, "expected string"};
  return it->get<std::string>();
}

std::optional<std::string> nullable_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw LineError{key, "expected string or null"};
  return it->get<std::string>();
}

FirmwareRecord record_from_json(const json& obj) {
  FirmwareRecord r;
  r.manufacturer = required_string(obj, "manufacturer");
  r.model = required_string(obj, "model");
  r.device_class = required_string(obj, "device_class");
  r.firmware_version = required_string(obj, "firmware_version");
  if (auto d = nullable_string(obj, "release_date")) {
    auto parsed = ReleaseDate::parse(*d);
    if (!parsed) throw LineError{"release_date", "not an ISO 8601 date: '" + *d + "'"};
    r.release_date = *parsed;
  }
  r.download_url = nullable_string(obj, "download_url");
  r.sha256 = required_string(obj, "sha256");
  {
    auto it = obj.find("size_bytes");
    if (it == obj.end()) throw LineError{"size_bytes", "missing field"};
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0)) {
      throw LineError{"size_bytes", "expected non-negative integer"};
    }
    r.size_bytes = it->get<std::uint64_t>();
  }
  r.fuzzy_digest = nullable_string(obj, "fuzzy_digest");
  {
    const auto t = required_string(obj, "firmware_type");
    auto ft = firmware_type_from_string(t);
    if (!ft) throw LineError{"firmware_type", "unknown firmware type '" + t + "'"};
    r.firmware_type = *ft;
  }
  {
    const auto s = required_string(obj, "unpack_status");
    auto us = unpack_status_from_string(s);
    if (!us) throw LineError{"unpack_status", "unknown unpack status '" + s + "'"};
    r.unpack_status = *us;
  }
  if (auto n = nullable_string(obj, "notes")) r.notes = *n;

  // Unknown keys survive as notes.
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (is_known_field(it.key())) continue;
    if (!r.notes.empty()) r.notes += "; ";
    r.notes += it.key() + "=" + (it->is_string() ? it->get<std::string>() : it->dump());
  }
  return r;
}

}  // namespace

bool is_device_class(std::string_view label) {
  return std::find(kDeviceClasses.begin(), kDeviceClasses.end(), label) != kDeviceClasses.end();
}

std::string_view to_string(FirmwareType t) {
  switch (t) {
    case FirmwareType::Type0: return "Type-0";
    case FirmwareType::TypeI: return "Type-I";
    case FirmwareType::TypeII: return "Type-II";
    case FirmwareType::TypeIII: return "Type-III";
    case FirmwareType::Unknown: return "Unknown";
  }
  return "Unknown";
}

std::string_view to_string(UnpackStatus s) {
  switch (s) {
    case UnpackStatus::Untested: return "untested";
    case UnpackStatus::Unpacked: return "unpacked";
    case UnpackStatus::Failed: return "failed";
  }
  return "untested";
}

std::optional<FirmwareType> firmware_type_from_string(std::string_view s) {
  for (auto t : {FirmwareType::Type0, FirmwareType::TypeI, FirmwareType::TypeII,
                 FirmwareType::TypeIII, FirmwareType::Unknown}) {
    if (s == to_string(t)) return t;
  }
  return std::nullopt;
}

std::optional<UnpackStatus> unpack_status_from_string(std::string_view s) {
  for (auto u : {UnpackStatus::Untested, UnpackStatus::Unpacked, UnpackStatus::Failed}) {
    if (s == to_string(u)) return u;
  }
  return std::nullopt;
}

bool ReleaseDate::valid() const {
  using namespace std::chrono;
  return year_month_day{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}}.ok();
}

std::string ReleaseDate::iso() const {
  char buf[16];
  switch (precision) {
    case DatePrecision::Year: std::snprintf(buf, sizeof buf, "%04d", year); break;
    case DatePrecision::Month: std::snprintf(buf, sizeof buf, "%04d-%02u", year, month); break;
    case DatePrecision::Day: std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year, month, day); break;
  }
  return buf;
}

std::optional<ReleaseDate> ReleaseDate::parse(std::string_view text) {
  ReleaseDate d;
  auto digits = [](std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  if (text.size() == 4 && digits(text)) {
    d.year = *parse_int(text);
    d.precision = DatePrecision::Year;
  } else if (text.size() == 7 && text[4] == '-' && digits(text.substr(0, 4)) && digits(text.substr(5, 2))) {
    d.year = *parse_int(text.substr(0, 4));
    d.month = static_cast<unsigned>(*parse_int(text.substr(5, 2)));
    d.precision = DatePrecision::Month;
  } else if (text.size() == 10 && text[4] == '-' && text[7] == '-' && digits(text.substr(0, 4)) &&
             digits(text.substr(5, 2)) && digits(text.substr(8, 2))) {
    d.year = *parse_int(text.substr(0, 4));
    d.month = static_cast<unsigned>(*parse_int(text.substr(5, 2)));
    d.day = static_cast<unsigned>(*parse_int(text.substr(8, 2)));
  } else {
    return std::nullopt;
  }
  if (!d.valid()) return std::nullopt;
  return d;
}

bool is_sha256_hex(std::string_view s) {
  return s.size() == 64 &&
         std::all_of(s.begin(), s.end(), [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); });
}

bool is_absolute_url(std::string_view s) {
  const auto sep = s.find("://");
  if (sep == std::string_view::npos || sep == 0) return false;
  const auto scheme = s.substr(0, sep);
  if (!std::isalpha(static_cast<unsigned char>(scheme[0]))) return false;
  for (char c : scheme) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '+' && c != '-' && c != '.') return false;
  }
  const auto rest = s.substr(sep + 3);
  const auto host = rest.substr(0, rest.find_first_of("/?#"));
  return !host.empty() && s.find_first_of(" \t\r\n") == std::string_view::npos;
}

std::vector<Violation> validate_record(const FirmwareRecord& r) {
  std::vector<Violation> out;
  if (r.manufacturer.empty()) out.push_back({"manufacturer", "must not be empty"});
  if (r.model.empty()) out.push_back({"model", "must not be empty"});
  if (!is_device_class(r.device_class)) {
    out.push_back({"device_class", "'" + r.device_class + "' is not in the device-class vocabulary"});
  }
  if (!is_sha256_hex(r.sha256)) out.push_back({"sha256", "must match ^[0-9a-f]{64}$"});
  if (r.release_date) {
    if (!r.release_date->valid()) {
      out.push_back({"release_date", "not a calendar date"});
    } else if (*r.release_date < kDateFloor) {
      out.push_back({"release_date", "before 1990-01-01"});
    }
  }
  if (r.download_url && !is_absolute_url(*r.download_url)) {
    out.push_back({"download_url", "must be an absolute URL"});
  }
  if (r.download_url && r.unpack_status != UnpackStatus::Untested && r.size_bytes == 0) {
    out.push_back({"size_bytes", "must be positive for a fetched sample"});
  }
  return out;
}

ManifestParseResult parse_manifest(std::istream& in) {
  ManifestParseResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error&) {
      result.issues.push_back({line_no, "", "malformed record at line " + std::to_string(line_no), false});
      continue;
    }
    if (!obj.is_object()) {
      result.issues.push_back({line_no, "", "record at line " + std::to_string(line_no) + " is not an object", false});
      continue;
    }
    if (obj.size() == 1 && obj.contains("schema_version")) {
      if (!obj["schema_version"].is_number_integer()) {
        result.issues.push_back({line_no, "schema_version", "invalid schema_version at line " + std::to_string(line_no), false});
      } else {
        result.manifest.schema_version = obj["schema_version"].get<int>();
      }
      continue;
    }

    FirmwareRecord r;
    try {
      r = record_from_json(obj);
    } catch (const LineError& e) {
      result.issues.push_back({line_no, e.field, "invalid " + e.field + " at line " + std::to_string(line_no) + ": " + e.detail, false});
      continue;
    } catch (const json::exception& e) {
      result.issues.push_back({line_no, "", "malformed record at line " + std::to_string(line_no) + ": " + e.what(), false});
      continue;
    }

    const auto violations = validate_record(r);
    if (!violations.empty()) {
      for (const auto& v : violations) {
        result.issues.push_back({line_no, v.field, "invalid " + v.field + " at line " + std::to_string(line_no) + ": " + v.rule, true});
      }
      continue;
    }
    result.manifest.records.push_back(std::move(r));
  }
  if (in.bad()) throw IoError("manifest read failed");
  return result;
}

ManifestParseResult parse_manifest(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_manifest(in);
}

ManifestParseResult load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path);
  return parse_manifest(in);
}

std::string serialize_record(const FirmwareRecord& r) {
  auto nullable = [](const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); };
  // Built by hand to keep the documented field order.
  std::string out = "{";
  auto field = [&](std::string_view key, const json& value) {
    if (out.size() > 1) out += ", ";
    out += json(std::string(key)).dump();
    out += ": ";
    out += value.dump(-1, ' ', false, json::error_handler_t::replace);
  };
  field("manufacturer", r.manufacturer);
  field("model", r.model);
  field("device_class", r.device_class);
  field("firmware_version", r.firmware_version);
  field("release_date", r.release_date ? json(r.release_date->iso()) : json(nullptr));
  field("download_url", nullable(r.download_url));
  field("sha256", r.sha256);
  field("size_bytes", r.size_bytes);
  field("fuzzy_digest", nullable(r.fuzzy_digest));
  field("firmware_type", std::string(to_string(r.firmware_type)));
  field("unpack_status", std::string(to_string(r.unpack_status)));
  field("notes", r.notes);
  out += "}";
  return out;
}

void write_manifest(std::ostream& out, const CorpusManifest& m) {
  out << "{\"schema_version\": " << m.schema_version << "}\n";
  for (const auto& r : m.records) out << serialize_record(r) << '\n';
}

std::string serialize_manifest(const CorpusManifest& m) {
  std::ostringstream out;
  write_manifest(out, m);
  return out.str();
}

}  // namespace fwcorpus::manifest
