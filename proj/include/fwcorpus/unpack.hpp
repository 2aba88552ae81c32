#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "fwcorpus/bytes.hpp"

namespace fwcorpus::unpack {

enum class ContainerFormat { Gzip, Zip, Tar, CpioNewc, Directory, Unknown };

std::string_view to_string(ContainerFormat f);

// Magic-byte dispatch on the first bytes of a file (512 are enough).
// `total_length` is the full file length. Directories are never detected
// from bytes; callers classify filesystem paths themselves.
ContainerFormat detect_container(ByteView head, std::uint64_t total_length);

struct ExtractedFile {
  std::string path;  // relative, '/'-separated, no ".." segments
  std::uint64_t size_bytes = 0;
  std::string sha256;
  std::size_t depth = 0;
  std::vector<std::string> container_chain;  // format ids, outermost first

  friend bool operator==(const ExtractedFile&, const ExtractedFile&) = default;
};

struct FailedNode {
  std::string path;  // empty for the firmware itself
  std::string format_guess;
  std::string reason;
};

struct UnpackReport {
  std::string firmware_sha256;
  std::vector<ExtractedFile> files;  // ordered by path
  std::vector<FailedNode> failed_nodes;
  bool max_depth_reached = false;
  bool budget_exceeded = false;
  std::vector<std::string> sanitized_paths;  // "<raw> -> <clean>" log
};

struct UnpackLimits {
  std::size_t max_depth = 8;
  std::uint64_t max_total_bytes = 4ull << 30;
};

// One raw member produced by an unpacker. The path is untrusted.
struct RawEntry {
  std::string path;
  Bytes data;
};

class Unpacker {
 public:
  virtual ~Unpacker() = default;
  virtual std::string id() const = 0;
  virtual bool matches(ByteView head, std::uint64_t length) const = 0;
  // Throws on malformed input. Must not return more than `byte_budget`
  // bytes of payload in total; throws BudgetExceeded instead.
  virtual std::vector<RawEntry> unpack(ByteView data, std::uint64_t byte_budget) const = 0;
};

class BudgetExceeded : public std::exception {
 public:
  const char* what() const noexcept override { return "extraction byte budget exceeded"; }
};

std::unique_ptr<Unpacker> make_gzip_unpacker();
std::unique_ptr<Unpacker> make_zip_unpacker();
std::unique_ptr<Unpacker> make_tar_unpacker();
std::unique_ptr<Unpacker> make_cpio_unpacker();

// Runs an external tool for formats without a built-in unpacker. The
// command template may use {input_file} and {output_dir}; exit code 0 means
// success. Every regular file left under {output_dir} becomes an entry.
struct ExternalToolSpec {
  std::string id;
  std::uint64_t magic_offset = 0;
  Bytes magic;
  std::string command;
};

std::unique_ptr<Unpacker> make_external_unpacker(ExternalToolSpec spec);

class UnpackerRegistry {
 public:
  // gzip, zip, tar, cpio (newc).
  static UnpackerRegistry with_builtins();

  void add(std::shared_ptr<const Unpacker> unpacker);
  // JSON array of {"id", "magic" (hex), "offset", "command"} objects.
  void load_external_config(const std::filesystem::path& path);

  const Unpacker* find(ByteView head, std::uint64_t length) const;
  bool empty() const { return unpackers_.empty(); }
  std::size_t size() const { return unpackers_.size(); }

 private:
  std::vector<std::shared_ptr<const Unpacker>> unpackers_;
};

// Receives every extracted file together with its bytes.
class ExtractionSink {
 public:
  virtual ~ExtractionSink() = default;
  virtual void begin(const std::string& /*firmware_sha256*/) {}
  // `entry_path` is the sanitized path inside the container at `node_index`.
  virtual void on_file(const ExtractedFile& file, std::string_view entry_path,
                       std::size_t node_index, ByteView data) = 0;
};

struct FileBlob {
  std::string path;
  std::string sha256;
  Bytes data;
};

class MemorySink : public ExtractionSink {
 public:
  void on_file(const ExtractedFile& file, std::string_view entry_path,
               std::size_t node_index, ByteView data) override;
  std::vector<FileBlob>& files() { return files_; }
  const std::vector<FileBlob>& files() const { return files_; }

 private:
  std::vector<FileBlob> files_;
};

// Writes files to <root>/<firmware sha256>/<node-index>/<entry path>.
class DirectorySink : public ExtractionSink {
 public:
  explicit DirectorySink(std::filesystem::path root);
  void begin(const std::string& firmware_sha256) override;
  void on_file(const ExtractedFile& file, std::string_view entry_path,
               std::size_t node_index, ByteView data) override;
  std::size_t rejected() const { return rejected_; }

 private:
  std::filesystem::path root_;
  std::filesystem::path firmware_root_;
  std::size_t rejected_ = 0;
};

// Strips leading '/', '.', '..' and empty segments. Returns an empty string
// if nothing usable remains.
std::string sanitize_path(std::string_view raw);

// Throws ValidationError when the registry is empty.
UnpackReport unpack_recursive(ByteView firmware, const UnpackerRegistry& registry,
                              const UnpackLimits& limits = {},
                              ExtractionSink* sink = nullptr);

std::vector<std::string> default_markers();

struct VerificationResult {
  bool verified = false;
  std::vector<std::string> matched_markers;
  std::string marker_set_id;
};

// Verified iff some extracted file lives below a directory named by a marker
// ("/bin/" matches "rootfs/bin/busybox"). Throws ValidationError on an empty
// marker list.
VerificationResult verify_unpack(const UnpackReport& report,
                                 const std::vector<std::string>& markers,
                                 std::string marker_set_id = "default");

struct FileOccurrence {
  std::string firmware_sha256;
  std::string path;
  friend auto operator<=>(const FileOccurrence&, const FileOccurrence&) = default;
};

class ContentDedupIndex {
 public:
  void ingest(const UnpackReport& report);
  void merge(const ContentDedupIndex& other);

  const std::map<std::string, std::vector<FileOccurrence>>& files() const { return files_; }
  std::size_t unique_file_count() const { return files_.size(); }
  std::size_t total_file_count() const { return total_; }

  // Distinct hashes present in both images divided by the larger image's
  // distinct hash count.
  double overlap_fraction(const std::string& firmware_a, const std::string& firmware_b) const;

 private:
  std::map<std::string, std::vector<FileOccurrence>> files_;
  std::size_t total_ = 0;
};

ContentDedupIndex content_dedup(const std::vector<UnpackReport>& reports);

}  // namespace fwcorpus::unpack
