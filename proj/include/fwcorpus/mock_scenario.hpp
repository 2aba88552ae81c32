#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <vector>

#include "fwcorpus/acquire.hpp"
#include "fwcorpus/manifest.hpp"

namespace fwcorpus::acquire {

// Local HTTP servers standing in for vendor download hosts, a Wayback-style
// archive and a hash-lookup service. Every request is logged.
class MockScenario {
 public:
  struct Config {
    std::size_t records = 100;
    std::size_t dead_links = 10;           // direct link fails
    std::size_t archive_recoverable = 5;   // of the dead links
    std::size_t hash_recoverable = 3;      // of the rest
    std::size_t vendor_hosts = 2;
    std::size_t payload_bytes = 2048;
  };

  struct LoggedRequest {
    std::string host_key;
    std::string target;
    std::chrono::steady_clock::time_point at;
  };

  // The "standard" scenario: 100 records, 90 live links, 5 archive captures,
  // 3 hash-lookup hits, 2 unrecoverable.
  static Config standard();

  explicit MockScenario(const Config& config);
  ~MockScenario();
  MockScenario(const MockScenario&) = delete;
  MockScenario& operator=(const MockScenario&) = delete;

  const manifest::CorpusManifest& manifest() const;
  std::string archive_base() const;
  std::string hash_lookup_template() const;
  std::vector<LoggedRequest> request_log() const;
  void clear_log();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct MockRunResult {
  ReplicationReport report;
  std::vector<MockScenario::LoggedRequest> log;
};

// Starts the scenario, replicates its manifest with real HTTP clients and the
// given policy, and returns the report plus the server-side request log.
MockRunResult run_mock_replication(const MockScenario::Config& config, const AcquisitionPolicy& policy);

}  // namespace fwcorpus::acquire
