#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fwcorpus/bytes.hpp"
#include "fwcorpus/manifest.hpp"

namespace testsupport {

namespace fs = std::filesystem;
using fwcorpus::Bytes;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

CommandResult run_command(const std::string& command);
std::string shell_quote(const std::string& s);

fs::path elf_fixture(const std::string& name);
fs::path source_dir();
fs::path cli_path();

Bytes random_bytes(std::mt19937_64& rng, std::size_t n);
std::string random_hex(std::mt19937_64& rng, std::size_t chars);

fwcorpus::manifest::FirmwareRecord make_record(const std::string& manufacturer, const std::string& model,
                                               const std::string& sha256);

// Oracle helpers that shell out to independent tools.
std::string python_sha256(const fs::path& file);
// Builds an archive with python's tarfile/zipfile/gzip modules. kind is
// "tar", "zip", "tar.gz" or "gz"; for "gz" `files` must hold one entry.
void python_archive(const std::string& kind, const std::map<std::string, std::string>& files,
                    const fs::path& out);

// Minimal ustar writer that emits entry names verbatim (no sanitizing).
Bytes ustar(const std::vector<std::pair<std::string, std::string>>& entries);

// ELF header with no tables: e_phnum = e_shnum = 0.
Bytes craft_elf_header(std::uint16_t machine, bool is64, bool big_endian, std::uint16_t e_type = 2);

// Hardening facts as reported by binutils readelf.
struct ReadelfFacts {
  bool canary = false;
  bool nx = false;
  int relro = 0;  // 0 none, 1 partial, 2 full
  bool pic = false;
  bool fortify = false;
  std::string type;  // "EXEC", "DYN", ...
  bool has_interp = false;
};
ReadelfFacts readelf_checksec(const fs::path& file);

}  // namespace testsupport

namespace testsupport {

struct SummaryRow {
  std::string manufacturer;
  std::size_t samples = 0;
  std::size_t devices = 0;
  std::uint64_t size_mib = 0;
  std::size_t files_per_sample = 0;
};

// Per-manufacturer corpus summary (samples, devices, size, files).
std::vector<SummaryRow> load_corpus_summary();

// Expands summary rows into a manifest: each manufacturer's samples are dealt
// round-robin over its devices. Per-sample file counts go to `findings`.
fwcorpus::manifest::CorpusManifest expand_summary(
    const std::vector<SummaryRow>& rows,
    std::map<std::string, fwcorpus::manifest::SampleFindings>* findings = nullptr);

}  // namespace testsupport

#include "fwcorpus/soundness.hpp"

namespace testsupport {

struct RubricCase {
  std::string label;
  fwcorpus::soundness::MeasureAssessment assessment;
  bool expect_accept = false;
};

// Hand-labeled rubric cases, one measure set per case, all others None.
std::vector<RubricCase> load_rubric_cases();

// Independent re-reading of the bundled survey table: per subject, per
// measure column, a status letter F, P, N or A (not applicable).
std::vector<std::string> oracle_survey_statuses();

// Check marks of the requirement/measure matrix, one 16-char row per
// requirement, '1' where the measure feeds the requirement.
const std::vector<std::string>& requirement_matrix();

}  // namespace testsupport
