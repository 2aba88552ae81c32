#include <algorithm>
#include <unordered_set>

#include "fwcorpus/digest.hpp"
#include "fwcorpus/error.hpp"
#include "fwcorpus/unpack.hpp"

namespace fwcorpus::unpack {

namespace fs = std::filesystem;

std::string sanitize_path(std::string_view raw) {
  std::string out;
  std::size_t start = 0;
  while (start <= raw.size()) {
    auto end = raw.find_first_of("/\\", start);
    if (end == std::string_view::npos) end = raw.size();
    const auto seg = raw.substr(start, end - start);
    if (!seg.empty() && seg != "." && seg != ".." && seg.find('\0') == std::string_view::npos) {
      if (!out.empty()) out += '/';
      out += seg;
    }
    start = end + 1;
  }
  return out;
}

namespace {

constexpr std::size_t kHeadBytes = 512;

struct Run {
  const UnpackerRegistry& registry;
  const UnpackLimits& limits;
  ExtractionSink* sink;
  UnpackReport& report;
  std::unordered_set<std::string> unpacked;  // cycle guard
  std::uint64_t bytes_used = 0;
  std::size_t next_node = 0;

  void container(ByteView data, const std::string& path, std::size_t depth,
                 const std::vector<std::string>& chain, const Unpacker& unpacker, std::size_t node) {
    std::vector<RawEntry> entries;
    try {
      entries = unpacker.unpack(data, limits.max_total_bytes - bytes_used);
    } catch (const BudgetExceeded&) {
      report.budget_exceeded = true;
      report.failed_nodes.push_back({path, unpacker.id(), "byte budget exceeded"});
      return;
    } catch (const std::exception& e) {
      report.failed_nodes.push_back({path, unpacker.id(), e.what()});
      return;
    }

    auto child_chain = chain;
    child_chain.push_back(unpacker.id());

    for (std::size_t i = 0; i < entries.size(); ++i) {
      auto& entry = entries[i];
      std::string clean = sanitize_path(entry.path);
      if (clean.empty()) clean = "unnamed-" + std::to_string(i);
      if (clean != entry.path) report.sanitized_paths.push_back(entry.path + " -> " + clean);

      if (entry.data.size() > limits.max_total_bytes - bytes_used) {
        report.budget_exceeded = true;
        report.failed_nodes.push_back({path, unpacker.id(), "byte budget exceeded"});
        return;
      }
      bytes_used += entry.data.size();

      ExtractedFile file;
      file.path = path.empty() ? clean : path + "/" + clean;
      file.size_bytes = entry.data.size();
      file.sha256 = digest::sha256_hex(entry.data);
      file.depth = depth + 1;
      file.container_chain = child_chain;
      if (sink) sink->on_file(file, clean, node, entry.data);
      report.files.push_back(file);

      const ByteView bytes(entry.data);
      const Unpacker* child = registry.find(bytes.first(std::min(bytes.size(), kHeadBytes)), bytes.size());
      if (!child || !unpacked.insert(file.sha256).second) continue;
      if (file.depth >= limits.max_depth) {
        report.max_depth_reached = true;
        continue;
      }
      container(bytes, file.path, file.depth, child_chain, *child, ++next_node);
      // Children are done; release the payload early.
      Bytes().swap(entry.data);
    }
  }
};

}  // namespace

UnpackReport unpack_recursive(ByteView firmware, const UnpackerRegistry& registry,
                              const UnpackLimits& limits, ExtractionSink* sink) {
  if (registry.empty()) throw ValidationError("unpacker registry is empty");
  UnpackReport report;
  report.firmware_sha256 = digest::sha256_hex(firmware);
  if (sink) sink->begin(report.firmware_sha256);

  const Unpacker* root = registry.find(firmware.first(std::min(firmware.size(), kHeadBytes)), firmware.size());
  if (!root) {
    report.failed_nodes.push_back({"", std::string(to_string(ContainerFormat::Unknown)), "no unpacker matches"});
    return report;
  }
  Run run{registry, limits, sink, report, {}, 0, 0};
  run.unpacked.insert(report.firmware_sha256);
  if (limits.max_depth == 0) {
    report.max_depth_reached = true;
    return report;
  }
  run.container(firmware, "", 0, {}, *root, 0);

  std::stable_sort(report.files.begin(), report.files.end(),
                   [](const ExtractedFile& a, const ExtractedFile& b) { return a.path < b.path; });
  return report;
}

// ---------------------------------------------------------------------------

void MemorySink::on_file(const ExtractedFile& file, std::string_view, std::size_t, ByteView data) {
  files_.push_back({file.path, file.sha256, Bytes(data.begin(), data.end())});
}

DirectorySink::DirectorySink(fs::path root) : root_(fs::absolute(std::move(root)).lexically_normal()) {}

void DirectorySink::begin(const std::string& firmware_sha256) { firmware_root_ = root_ / firmware_sha256; }

void DirectorySink::on_file(const ExtractedFile&, std::string_view entry_path, std::size_t node_index,
                            ByteView data) {
  const auto clean = sanitize_path(entry_path);
  const auto base = (firmware_root_ / std::to_string(node_index)).lexically_normal();
  const auto target = (base / clean).lexically_normal();
  const auto rel = target.lexically_relative(base);
  if (clean.empty() || rel.empty() || *rel.begin() == "..") {
    ++rejected_;
    return;
  }
  try {
    write_file(target, data);
  } catch (const std::exception&) {
    // e.g. a file and a directory with the same name in one container
    ++rejected_;
  }
}

// ---------------------------------------------------------------------------

std::vector<std::string> default_markers() {
  return {"/bin/", "/sbin/", "/lib/", "/usr/", "/etc/", "/var/", "/root/",
          "/home/", "/opt/", "/mnt/", "/proc/", "/sys/", "/dev/", "/tmp/"};
}

namespace {

std::vector<std::string_view> split_segments(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find('/', start);
    if (end == std::string_view::npos) end = s.size();
    if (end > start) out.push_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

bool contains_run(const std::vector<std::string_view>& dirs, const std::vector<std::string_view>& marker) {
  if (marker.empty() || marker.size() > dirs.size()) return false;
  for (std::size_t i = 0; i + marker.size() <= dirs.size(); ++i) {
    if (std::equal(marker.begin(), marker.end(), dirs.begin() + static_cast<std::ptrdiff_t>(i))) return true;
  }
  return false;
}

}  // namespace

VerificationResult verify_unpack(const UnpackReport& report, const std::vector<std::string>& markers,
                                 std::string marker_set_id) {
  if (markers.empty()) throw ValidationError("marker list is empty");
  VerificationResult result;
  result.marker_set_id = std::move(marker_set_id);

  std::vector<std::vector<std::string_view>> marker_segments;
  for (const auto& m : markers) marker_segments.push_back(split_segments(m));

  std::vector<bool> hit(markers.size(), false);
  for (const auto& f : report.files) {
    auto dirs = split_segments(f.path);
    if (!dirs.empty()) dirs.pop_back();  // the file name itself
    for (std::size_t i = 0; i < markers.size(); ++i) {
      if (!hit[i] && contains_run(dirs, marker_segments[i])) hit[i] = true;
    }
  }
  for (std::size_t i = 0; i < markers.size(); ++i) {
    if (hit[i]) result.matched_markers.push_back(markers[i]);
  }
  result.verified = !result.matched_markers.empty();
  return result;
}

// ---------------------------------------------------------------------------

void ContentDedupIndex::ingest(const UnpackReport& report) {
  for (const auto& f : report.files) {
    auto& occ = files_[f.sha256];
    FileOccurrence o{report.firmware_sha256, f.path};
    occ.insert(std::upper_bound(occ.begin(), occ.end(), o), std::move(o));
    ++total_;
  }
}

void ContentDedupIndex::merge(const ContentDedupIndex& other) {
  for (const auto& [sha, list] : other.files_) {
    auto& occ = files_[sha];
    std::vector<FileOccurrence> merged;
    merged.reserve(occ.size() + list.size());
    std::merge(occ.begin(), occ.end(), list.begin(), list.end(), std::back_inserter(merged));
    occ = std::move(merged);
  }
  total_ += other.total_;
}

double ContentDedupIndex::overlap_fraction(const std::string& firmware_a, const std::string& firmware_b) const {
  std::size_t in_a = 0, in_b = 0, both = 0;
  for (const auto& [sha, occ] : files_) {
    const bool a = std::any_of(occ.begin(), occ.end(), [&](const auto& o) { return o.firmware_sha256 == firmware_a; });
    const bool b = std::any_of(occ.begin(), occ.end(), [&](const auto& o) { return o.firmware_sha256 == firmware_b; });
    in_a += a;
    in_b += b;
    both += a && b;
  }
  const auto denom = std::max(in_a, in_b);
  return denom == 0 ? 0.0 : static_cast<double>(both) / static_cast<double>(denom);
}

ContentDedupIndex content_dedup(const std::vector<UnpackReport>& reports) {
  ContentDedupIndex index;
  for (const auto& r : reports) index.ingest(r);
  return index;
}

}  // namespace fwcorpus::unpack
