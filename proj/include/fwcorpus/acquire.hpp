#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fwcorpus/bytes.hpp"
#include "fwcorpus/manifest.hpp"

namespace fwcorpus::acquire {

struct Url {
  std::string scheme;
  std::string host;
  int port = 0;
  std::string target;  // path plus query, at least "/"

  std::string origin() const;    // scheme://host:port
  std::string host_key() const;  // host:port, the throttling key
};

std::optional<Url> parse_url(std::string_view text);
std::string percent_encode(std::string_view s);

// status == 0 means the request never produced an HTTP response.
struct HttpResponse {
  int status = 0;
  Bytes body;
  std::string error;
};

class HttpClient {
 public:
  virtual ~HttpClient() = default;
  // Must be safe for concurrent use.
  virtual HttpResponse get(const std::string& url) = 0;
};

// cpp-httplib backed client (http and https).
std::unique_ptr<HttpClient> make_http_client(std::chrono::seconds timeout);

// Spaces requests to the same host at least 1/rate seconds apart. Slots are
// reserved under a lock so concurrent workers share one schedule per host.
class HostThrottle {
 public:
  explicit HostThrottle(double requests_per_second);
  void wait(const std::string& host_key);
  double rate() const { return rate_; }

 private:
  using Clock = std::chrono::steady_clock;
  double rate_;
  Clock::duration interval_;
  std::mutex mu_;
  std::map<std::string, Clock::time_point> next_slot_;
};

class ThrottledHttpClient : public HttpClient {
 public:
  ThrottledHttpClient(HttpClient& inner, std::shared_ptr<HostThrottle> throttle);
  HttpResponse get(const std::string& url) override;

 private:
  HttpClient& inner_;
  std::shared_ptr<HostThrottle> throttle_;
};

struct CdxRow {
  std::string timestamp;  // yyyyMMddhhmmss
  std::string original;
  int status = 0;
};

class ArchiveClient {
 public:
  virtual ~ArchiveClient() = default;
  // nullopt when the capture index cannot be reached.
  virtual std::optional<std::vector<CdxRow>> cdx_query(const std::string& original_url) = 0;
  virtual std::string snapshot_url(const CdxRow& row) const = 0;
  virtual HttpResponse fetch(const std::string& snapshot_url) = 0;
};

// Wayback-style CDX index: <base>/cdx/search/cdx?url=..&output=json&
// fl=timestamp,original,statuscode&filter=statuscode:200, replay at
// <base>/web/<timestamp>id_/<original>.
class WaybackClient : public ArchiveClient {
 public:
  WaybackClient(HttpClient& http, std::string base_url);
  std::optional<std::vector<CdxRow>> cdx_query(const std::string& original_url) override;
  std::string snapshot_url(const CdxRow& row) const override;
  HttpResponse fetch(const std::string& snapshot_url) override;

  static std::string cdx_query_url(const std::string& base, const std::string& original_url);
  // Parses the JSON row format, skipping a header row if present.
  static std::vector<CdxRow> parse_cdx_json(std::string_view body);

 private:
  HttpClient& http_;
  std::string base_;
};

class HashLookupClient {
 public:
  virtual ~HashLookupClient() = default;
  virtual std::optional<Bytes> lookup(const std::string& sha256) = 0;
};

// GET on a URL template containing {sha256}; 200 yields the body.
class HttpHashLookupClient : public HashLookupClient {
 public:
  HttpHashLookupClient(HttpClient& http, std::string url_template);
  std::optional<Bytes> lookup(const std::string& sha256) override;

 private:
  HttpClient& http_;
  std::string template_;
};

// Files named by their sha256 inside a directory.
class LocalStoreHashLookup : public HashLookupClient {
 public:
  explicit LocalStoreHashLookup(std::filesystem::path dir);
  std::optional<Bytes> lookup(const std::string& sha256) override;

 private:
  std::filesystem::path dir_;
};

// Newest capture with HTTP status 200, or nullopt. Failures of the index are
// described in `diagnostic` when given.
std::optional<std::string> wayback_lookup(const std::string& original_url, ArchiveClient& archive,
                                          std::string* diagnostic = nullptr);

// ---------------------------------------------------------------------------
// robots.txt

class RobotsRules {
 public:
  // Groups for `agent` win over the "*" group.
  static RobotsRules parse(std::string_view text, std::string_view agent);
  // Longest matching Allow/Disallow prefix decides; allowed by default.
  bool allowed(std::string_view path) const;

 private:
  std::vector<std::pair<std::string, bool>> rules_;  // prefix, allow
};

// Fetches and caches robots.txt per origin. Missing or unreachable files
// allow everything.
class RobotsCache {
 public:
  RobotsCache(HttpClient& http, std::string agent);
  bool allowed(const std::string& url);

 private:
  HttpClient& http_;
  std::string agent_;
  std::mutex mu_;
  std::map<std::string, RobotsRules> cache_;
};

// Site-specific discovery plugs in here; crawl() enforces robots.txt.
class ScraperAdapter {
 public:
  virtual ~ScraperAdapter() = default;
  virtual std::vector<std::string> start_urls() const = 0;
  struct PageResult {
    std::vector<manifest::FirmwareRecord> records;
    std::vector<std::string> follow;
  };
  virtual PageResult parse_page(const std::string& url, std::string_view body) = 0;
};

struct CrawlResult {
  std::vector<manifest::FirmwareRecord> records;
  std::vector<std::string> skipped_by_robots;
  std::vector<std::string> failed;
};

CrawlResult crawl(ScraperAdapter& adapter, HttpClient& http, RobotsCache& robots,
                  std::size_t max_pages = 10000);

// ---------------------------------------------------------------------------
// Replication engine

struct AcquisitionPolicy {
  double per_host_rate = 1.0;  // requests per second
  std::size_t max_parallel = 4;
  std::chrono::seconds timeout{60};
  bool verify_hash = true;
  bool obey_robots = false;
  std::optional<std::filesystem::path> output_dir;  // store payloads as <sha256>

  // Throws ValidationError.
  void validate() const;
};

enum class Phase { Direct, Archive, HashLookup, Manual };
enum class Outcome { Direct, Archive, HashLookup, ManualWorklist, Missing };

std::string_view to_string(Phase p);
std::string_view to_string(Outcome o);

struct Attempt {
  Phase phase = Phase::Direct;
  std::string url;
  std::string status;  // "ok", "http 404", "hash mismatch", ...
};

struct WorklistEntry {
  std::string manufacturer;
  std::string model;
  std::string file_name;
  std::string version;
  std::string sha256;
};

struct AcquisitionResult {
  std::string sha256;
  Outcome outcome = Outcome::Missing;
  std::uint64_t bytes_fetched = 0;
  std::vector<Attempt> attempts;
  bool hash_verified = false;
  std::optional<WorklistEntry> worklist;
};

struct Clients {
  HttpClient* http = nullptr;
  ArchiveClient* archive = nullptr;
  HashLookupClient* hash_lookup = nullptr;
  RobotsCache* robots = nullptr;  // consulted when policy.obey_robots
};

// Phases run strictly in order direct -> archive -> hash lookup; the first
// verified payload wins. Everything else ends on the manual worklist.
// Network failures are recorded in the attempt log, never thrown.
AcquisitionResult acquire_record(const manifest::FirmwareRecord& r, const Clients& clients,
                                 const AcquisitionPolicy& p);

struct ReplicationRow {
  std::size_t samples = 0;
  std::size_t replicated = 0;
  std::size_t direct = 0;
  std::size_t archive = 0;
  std::size_t hash_lookup = 0;
  std::size_t manual = 0;   // placed on the manual worklist
  std::size_t missing = 0;  // not replicated automatically (includes manual)

  double ratio(std::size_t count) const {
    return samples == 0 ? 0.0 : static_cast<double>(count) / samples;
  }
  friend bool operator==(const ReplicationRow&, const ReplicationRow&) = default;
};

struct ReplicationReport {
  std::map<std::string, ReplicationRow> per_manufacturer;
  ReplicationRow total;
  std::vector<AcquisitionResult> results;  // manifest order
  std::vector<WorklistEntry> worklist;
  double wall_seconds = 0.0;
};

// Owns a throttled HTTP stack and the clients built on it. Every request made
// through clients() shares one per-host schedule.
class NetworkStack {
 public:
  struct Endpoints {
    std::optional<std::string> archive_base;          // Wayback-style index
    std::optional<std::string> hash_lookup_template;  // URL with {sha256}
    std::optional<std::filesystem::path> hash_store;  // local store, used if no template
    std::string robots_agent = "fwcorpus";
  };

  NetworkStack(const AcquisitionPolicy& p, Endpoints endpoints);
  ~NetworkStack();
  Clients clients();

 private:
  std::unique_ptr<HttpClient> base_;
  std::unique_ptr<ThrottledHttpClient> throttled_;
  std::unique_ptr<ArchiveClient> archive_;
  std::unique_ptr<HashLookupClient> hash_lookup_;
  std::unique_ptr<RobotsCache> robots_;
};

ReplicationReport acquire_corpus(const manifest::CorpusManifest& m, const Clients& clients,
                                 const AcquisitionPolicy& p);

std::string replication_csv(const ReplicationReport& r);
std::string replication_table(const ReplicationReport& r);
// manufacturer,model,file_name,version,sha256
std::string worklist_csv(const std::vector<WorklistEntry>& w);

}  // namespace fwcorpus::acquire
