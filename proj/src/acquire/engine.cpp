#include <atomic>
#include <thread>

#include "fwcorpus/acquire.hpp"
#include "fwcorpus/digest.hpp"
#include "fwcorpus/error.hpp"

namespace fwcorpus::acquire {

void AcquisitionPolicy::validate() const {
  if (!(per_host_rate > 0)) throw ValidationError("per_host_rate must be positive");
  if (max_parallel < 1) throw ValidationError("max_parallel must be at least 1");
  if (timeout.count() <= 0) throw ValidationError("timeout must be positive");
}

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Direct: return "direct";
    case Phase::Archive: return "archive";
    case Phase::HashLookup: return "hash_lookup";
    case Phase::Manual: break;
  }
  return "manual";
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Direct: return "direct";
    case Outcome::Archive: return "archive";
    case Outcome::HashLookup: return "hash_lookup";
    case Outcome::ManualWorklist: return "manual_worklist";
    case Outcome::Missing: break;
  }
  return "missing";
}

namespace {

std::string file_name_of(const std::optional<std::string>& url) {
  if (!url) return {};
  const auto u = parse_url(*url);
  std::string path = u ? u->target : *url;
  if (const auto q = path.find('?'); q != std::string::npos) path.resize(q);
  const auto slash = path.rfind('/');
  return slash == std::string::npos ? path : path.substr(slash + 1);
}

std::string describe(const HttpResponse& res) {
  if (res.status == 0) return "network error: " + (res.error.empty() ? std::string("no response") : res.error);
  return "http " + std::to_string(res.status);
}

class Run {
 public:
  Run(const manifest::FirmwareRecord& r, const AcquisitionPolicy& p, AcquisitionResult& out)
      : record_(r), policy_(p), out_(out) {}

  // Returns true when the payload is accepted.
  bool accept(Phase phase, const std::string& url, const Bytes& payload) {
    out_.bytes_fetched += payload.size();
    const bool matches = digest::sha256_hex(payload) == record_.sha256;
    if (policy_.verify_hash && !matches) {
      out_.attempts.push_back({phase, url, "hash mismatch"});
      return false;
    }
    out_.hash_verified = matches;
    out_.attempts.push_back({phase, url, "ok"});
    if (policy_.output_dir) write_file(*policy_.output_dir / record_.sha256, payload);
    return true;
  }

  bool accept(Phase phase, const std::string& url, const HttpResponse& res) {
    if (res.status != 200) {
      if (res.status != 0) out_.bytes_fetched += res.body.size();
      out_.attempts.push_back({phase, url, describe(res)});
      return false;
    }
    return accept(phase, url, res.body);
  }

 private:
  const manifest::FirmwareRecord& record_;
  const AcquisitionPolicy& policy_;
  AcquisitionResult& out_;
};

}  // namespace

AcquisitionResult acquire_record(const manifest::FirmwareRecord& r, const Clients& clients,
                                 const AcquisitionPolicy& p) {
  AcquisitionResult out;
  out.sha256 = r.sha256;
  if (r.sha256.empty()) {
    out.attempts.push_back({Phase::Direct, r.download_url.value_or(""), "record has no sha256"});
    return out;
  }
  Run run(r, p, out);

  // 1: original link
  if (!r.download_url) {
    out.attempts.push_back({Phase::Direct, "", "no download url"});
  } else if (!clients.http) {
    out.attempts.push_back({Phase::Direct, *r.download_url, "no http client"});
  } else if (p.obey_robots && clients.robots && !clients.robots->allowed(*r.download_url)) {
    out.attempts.push_back({Phase::Direct, *r.download_url, "disallowed by robots.txt"});
  } else {
    try {
      if (run.accept(Phase::Direct, *r.download_url, clients.http->get(*r.download_url))) {
        out.outcome = Outcome::Direct;
        return out;
      }
    } catch (const std::exception& e) {
      out.attempts.push_back({Phase::Direct, *r.download_url, std::string("error: ") + e.what()});
    }
  }

  // 2: web archive
  if (clients.archive && r.download_url) {
    try {
      std::string diagnostic;
      if (const auto snapshot = wayback_lookup(*r.download_url, *clients.archive, &diagnostic)) {
        if (run.accept(Phase::Archive, *snapshot, clients.archive->fetch(*snapshot))) {
          out.outcome = Outcome::Archive;
          return out;
        }
      } else {
        out.attempts.push_back({Phase::Archive, *r.download_url, diagnostic});
      }
    } catch (const std::exception& e) {
      out.attempts.push_back({Phase::Archive, *r.download_url, std::string("error: ") + e.what()});
    }
  }

  // 3: hash lookup service
  if (clients.hash_lookup) {
    const auto key = "sha256:" + r.sha256;
    try {
      if (auto payload = clients.hash_lookup->lookup(r.sha256)) {
        if (run.accept(Phase::HashLookup, key, *payload)) {
          out.outcome = Outcome::HashLookup;
          return out;
        }
      } else {
        out.attempts.push_back({Phase::HashLookup, key, "not found"});
      }
    } catch (const std::exception& e) {
      out.attempts.push_back({Phase::HashLookup, key, std::string("error: ") + e.what()});
    }
  }

  // 4: a person takes over
  out.outcome = Outcome::ManualWorklist;
  out.hash_verified = false;
  out.worklist = WorklistEntry{r.manufacturer, r.model, file_name_of(r.download_url), r.firmware_version, r.sha256};
  out.attempts.push_back({Phase::Manual, "", "queued for manual search"});
  return out;
}

ReplicationReport acquire_corpus(const manifest::CorpusManifest& m, const Clients& clients,
                                 const AcquisitionPolicy& p) {
  p.validate();
  const auto started = std::chrono::steady_clock::now();
  ReplicationReport report;
  report.results.resize(m.records.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < m.records.size(); i = next++) {
      report.results[i] = acquire_record(m.records[i], clients, p);
    }
  };
  const auto workers = std::min(p.max_parallel, std::max<std::size_t>(1, m.records.size()));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < workers; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < m.records.size(); ++i) {
    const auto& res = report.results[i];
    for (ReplicationRow* row : {&report.per_manufacturer[m.records[i].manufacturer], &report.total}) {
      ++row->samples;
      switch (res.outcome) {
        case Outcome::Direct: ++row->direct; ++row->replicated; break;
        case Outcome::Archive: ++row->archive; ++row->replicated; break;
        case Outcome::HashLookup: ++row->hash_lookup; ++row->replicated; break;
        case Outcome::ManualWorklist: ++row->manual; ++row->missing; break;
        case Outcome::Missing: ++row->missing; break;
      }
    }
    if (res.worklist) report.worklist.push_back(*res.worklist);
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

NetworkStack::NetworkStack(const AcquisitionPolicy& p, Endpoints endpoints) {
  p.validate();
  base_ = make_http_client(p.timeout);
  throttled_ = std::make_unique<ThrottledHttpClient>(*base_, std::make_shared<HostThrottle>(p.per_host_rate));
  if (endpoints.archive_base) archive_ = std::make_unique<WaybackClient>(*throttled_, *endpoints.archive_base);
  if (endpoints.hash_lookup_template) {
    hash_lookup_ = std::make_unique<HttpHashLookupClient>(*throttled_, *endpoints.hash_lookup_template);
  } else if (endpoints.hash_store) {
    hash_lookup_ = std::make_unique<LocalStoreHashLookup>(*endpoints.hash_store);
  }
  robots_ = std::make_unique<RobotsCache>(*throttled_, endpoints.robots_agent);
}

NetworkStack::~NetworkStack() = default;

Clients NetworkStack::clients() { return {throttled_.get(), archive_.get(), hash_lookup_.get(), robots_.get()}; }

}  // namespace fwcorpus::acquire
