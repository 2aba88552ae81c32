#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fwcorpus::manifest {

// Product-line labels used to group devices.
inline constexpr std::array<std::string_view, 22> kDeviceClasses = {
    "switch",    "router",       "ipcam",    "repeater", "mesh",  "controller",
    "accesspoint", "powerline",  "modem",    "power_supply", "wifi-usb",
    "recorder",  "nas",          "phone",    "board",    "kvm",   "converter",
    "san",       "printer",      "media",    "encoder",  "gateway"};

bool is_device_class(std::string_view label);

enum class FirmwareType { Type0, TypeI, TypeII, TypeIII, Unknown };
enum class UnpackStatus { Untested, Unpacked, Failed };
enum class DatePrecision { Day, Month, Year };

std::string_view to_string(FirmwareType t);
std::string_view to_string(UnpackStatus s);
std::optional<FirmwareType> firmware_type_from_string(std::string_view s);
std::optional<UnpackStatus> unpack_status_from_string(std::string_view s);

// ISO 8601 calendar date. Month- or year-precision sources are stored as the
// first day of the period and keep their precision for serialization.
struct ReleaseDate {
  int year = 0;
  unsigned month = 1;
  unsigned day = 1;
  DatePrecision precision = DatePrecision::Day;

  bool valid() const;
  std::string iso() const;  // "YYYY-MM-DD", "YYYY-MM" or "YYYY"
  static std::optional<ReleaseDate> parse(std::string_view text);

  friend auto operator<=>(const ReleaseDate&, const ReleaseDate&) = default;
};

struct FirmwareRecord {
  std::string manufacturer;
  std::string model;
  std::string device_class;
  std::string firmware_version;
  std::optional<ReleaseDate> release_date;
  std::optional<std::string> download_url;
  std::string sha256;
  std::uint64_t size_bytes = 0;
  // Either a block digest ("blk:<size>:<hex...>") or an opaque external
  // digest such as "ssdeep:..." or "tlsh:...".
  std::optional<std::string> fuzzy_digest;
  FirmwareType firmware_type = FirmwareType::Unknown;
  UnpackStatus unpack_status = UnpackStatus::Untested;
  std::string notes;

  friend bool operator==(const FirmwareRecord&, const FirmwareRecord&) = default;
};

struct CorpusManifest {
  static constexpr int kSchemaVersion = 1;
  std::vector<FirmwareRecord> records;
  int schema_version = kSchemaVersion;
};

struct Violation {
  std::string field;
  std::string rule;
};

// Empty iff every record invariant holds.
std::vector<Violation> validate_record(const FirmwareRecord& r);

bool is_sha256_hex(std::string_view s);
bool is_absolute_url(std::string_view s);

struct ManifestIssue {
  std::size_t line = 0;
  std::string field;
  std::string message;  // e.g. "invalid sha256 at line 3"
  bool validation = false;  // true for rule violations, false for syntax errors
};

struct ManifestParseResult {
  CorpusManifest manifest;
  std::vector<ManifestIssue> issues;
  bool ok() const { return issues.empty(); }
};

// Parses the line-delimited manifest format. Lines that fail to parse or
// validate are reported in `issues` and left out of the manifest.
ManifestParseResult parse_manifest(std::istream& in);
ManifestParseResult parse_manifest(std::string_view text);
ManifestParseResult load_manifest(const std::string& path);

std::string serialize_record(const FirmwareRecord& r);
void write_manifest(std::ostream& out, const CorpusManifest& m);
std::string serialize_manifest(const CorpusManifest& m);

// Identification results for one sample, keyed by sample sha256 when passed
// to composition_report.
struct SampleFindings {
  std::optional<std::size_t> file_count;
  std::vector<std::string> kernel_versions;  // one entry per banner found
  std::vector<std::string> isas;             // distinct labels
};

struct CompositionRow {
  std::size_t samples = 0;
  std::size_t devices = 0;  // distinct (manufacturer, model)
  double samples_per_device_mean = 0.0;
  double size_per_sample_mean = 0.0;  // bytes
  std::optional<double> files_per_sample_mean;
};

struct CompositionStats {
  std::map<std::string, CompositionRow> per_manufacturer;
  CompositionRow totals;
  std::map<std::string, std::size_t> class_histogram;
  std::map<std::string, std::size_t> year_histogram;  // "unknown" for undated
  std::optional<std::map<std::string, std::size_t>> kernel_histogram;  // major.minor
  std::optional<std::map<std::string, std::size_t>> isa_histogram;     // samples per ISA
};

inline constexpr std::string_view kUnknownYear = "unknown";

CompositionStats composition_report(
    const CorpusManifest& m,
    const std::map<std::string, SampleFindings>* findings = nullptr);

// manufacturer,samples,devices,samples_per_device,size_per_sample_bytes,files_per_sample
std::string composition_csv(const CompositionStats& s);
// histogram,key,count for the class, year, kernel and ISA histograms
std::string histograms_csv(const CompositionStats& s);
std::string composition_table(const CompositionStats& s);

}  // namespace fwcorpus::manifest
