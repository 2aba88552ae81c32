#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "fwcorpus/digest.hpp"
#include "fwcorpus/error.hpp"
#include "fwcorpus/mock_scenario.hpp"

namespace fwcorpus::acquire {

namespace {

enum class DirectBehavior { Live, NotFound, WrongBytes };

struct Capture {
  std::string timestamp;
  int status = 200;
  Bytes body;
};

Bytes make_payload(std::size_t index, std::size_t size) {
  std::mt19937 rng(static_cast<std::mt19937::result_type>(0x5eed + index));
  Bytes out(size);
  for (auto& b : out) b = static_cast<std::byte>(rng() & 0xFF);
  return out;
}

Bytes corrupt(Bytes b) {
  if (b.empty()) b.push_back(std::byte{0});
  b[0] ^= std::byte{0xFF};
  return b;
}

httplib::Server::HandlerResponse log_request(std::mutex& mu, std::vector<MockScenario::LoggedRequest>& log,
                                             const std::string& host_key, const httplib::Request& req) {
  const auto now = std::chrono::steady_clock::now();
  std::lock_guard lock(mu);
  log.push_back({host_key, req.target, now});
  return httplib::Server::HandlerResponse::Unhandled;
}

}  // namespace

struct MockScenario::Impl {
  Config config;
  manifest::CorpusManifest manifest;
  std::vector<Bytes> payloads;
  std::vector<DirectBehavior> direct;
  std::map<std::string, std::vector<Capture>> captures;  // original url -> captures
  std::map<std::string, Bytes> hash_store;

  std::vector<std::unique_ptr<httplib::Server>> vendors;
  std::vector<int> vendor_ports;
  httplib::Server archive;
  int archive_port = 0;
  httplib::Server hashes;
  int hash_port = 0;
  std::vector<std::thread> threads;

  mutable std::mutex log_mu;
  std::vector<LoggedRequest> log;

  void start(httplib::Server& server, int& port) {
    port = server.bind_to_any_port("127.0.0.1");
    if (port <= 0) throw IoError("mock scenario: cannot bind a local port");
    const auto key = "127.0.0.1:" + std::to_string(port);
    server.set_pre_routing_handler(
        [this, key](const httplib::Request& req, httplib::Response&) { return log_request(log_mu, log, key, req); });
    threads.emplace_back([&server] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
};

MockScenario::Config MockScenario::standard() {
  Config c;
  c.vendor_hosts = 4;
  return c;
}

MockScenario::MockScenario(const Config& config) : impl_(std::make_unique<Impl>()) {
  auto& s = *impl_;
  s.config = config;
  if (config.vendor_hosts == 0) throw ValidationError("mock scenario needs at least one vendor host");
  if (config.dead_links > config.records) throw ValidationError("more dead links than records");
  if (config.archive_recoverable + config.hash_recoverable > config.dead_links) {
    throw ValidationError("more recoverable records than dead links");
  }

  for (std::size_t h = 0; h < config.vendor_hosts; ++h) s.vendors.push_back(std::make_unique<httplib::Server>());

  // Routes first, then bind; ports are needed for the manifest URLs.
  for (std::size_t h = 0; h < config.vendor_hosts; ++h) {
    s.vendors[h]->Get(R"(/fw/(\d+)\.bin)", [&s](const httplib::Request& req, httplib::Response& res) {
      const auto i = std::stoul(req.matches[1]);
      if (i >= s.payloads.size() || s.direct[i] == DirectBehavior::NotFound) {
        res.status = 404;
        return;
      }
      const auto& body = s.direct[i] == DirectBehavior::Live ? s.payloads[i] : corrupt(s.payloads[i]);
      res.set_content(std::string(as_chars(body)), "application/octet-stream");
    });
  }

  s.archive.Get("/cdx/search/cdx", [&s](const httplib::Request& req, httplib::Response& res) {
    const auto url = req.get_param_value("url");
    const bool only_200 = req.get_param_value("filter") == "statuscode:200";
    nlohmann::json rows = nlohmann::json::array();
    rows.push_back({"timestamp", "original", "statuscode"});
    if (auto it = s.captures.find(url); it != s.captures.end()) {
      for (const auto& c : it->second) {
        if (only_200 && c.status != 200) continue;
        rows.push_back({c.timestamp, url, std::to_string(c.status)});
      }
    }
    res.set_content(rows.dump(), "application/json");
  });
  s.archive.Get(R"(/web/(\d{14})id_/(.+))", [&s](const httplib::Request& req, httplib::Response& res) {
    const auto ts = req.matches[1].str();
    const auto original = req.matches[2].str();
    auto it = s.captures.find(original);
    if (it != s.captures.end()) {
      for (const auto& c : it->second) {
        if (c.timestamp != ts) continue;
        res.status = c.status;
        res.set_content(std::string(as_chars(c.body)), "application/octet-stream");
        return;
      }
    }
    res.status = 404;
  });

  s.hashes.Get(R"(/file/([0-9a-f]{64}))", [&s](const httplib::Request& req, httplib::Response& res) {
    auto it = s.hash_store.find(req.matches[1].str());
    if (it == s.hash_store.end()) {
      res.status = 404;
      return;
    }
    res.set_content(std::string(as_chars(it->second)), "application/octet-stream");
  });

  // Records are fixed before any server thread starts.
  s.vendor_ports.resize(config.vendor_hosts);
  for (std::size_t h = 0; h < config.vendor_hosts; ++h) {
    const int port = s.vendors[h]->bind_to_any_port("127.0.0.1");
    if (port <= 0) throw IoError("mock scenario: cannot bind a local port");
    s.vendor_ports[h] = port;
  }

  const std::size_t first_dead = config.records - config.dead_links;
  for (std::size_t i = 0; i < config.records; ++i) {
    const auto host = i % config.vendor_hosts;
    auto payload = make_payload(i, config.payload_bytes);

    manifest::FirmwareRecord r;
    r.manufacturer = "Vendor " + std::string(1, static_cast<char>('A' + host % 26));
    r.model = "M" + std::to_string(100 + i / 3);
    r.device_class = "router";
    r.firmware_version = "1.0." + std::to_string(i);
    r.release_date = manifest::ReleaseDate{2015 + static_cast<int>(i % 8), 1 + static_cast<unsigned>(i % 12), 1,
                                           manifest::DatePrecision::Day};
    r.download_url = "http://127.0.0.1:" + std::to_string(s.vendor_ports[host]) + "/fw/" + std::to_string(i) + ".bin";
    r.sha256 = digest::sha256_hex(payload);
    r.size_bytes = payload.size();
    r.firmware_type = manifest::FirmwareType::TypeI;
    r.unpack_status = manifest::UnpackStatus::Untested;

    DirectBehavior behavior = DirectBehavior::Live;
    if (i >= first_dead) {
      const auto j = i - first_dead;
      behavior = j % 5 == 4 ? DirectBehavior::WrongBytes : DirectBehavior::NotFound;
      auto& caps = s.captures[*r.download_url];
      if (j < config.archive_recoverable) {
        // Newest capture is a 404, an older one is good.
        caps.push_back({"20190101000000", 200, payload});
        caps.push_back({"20210101000000", 404, to_bytes("gone")});
      } else if (j < config.archive_recoverable + config.hash_recoverable) {
        if (j == config.archive_recoverable) caps.push_back({"20200101000000", 200, corrupt(payload)});
        s.hash_store[r.sha256] = payload;
      } else if (j % 2 == 0) {
        caps.push_back({"20200101000000", 404, to_bytes("gone")});
      }
      if (caps.empty()) s.captures.erase(*r.download_url);
    }
    s.direct.push_back(behavior);
    s.payloads.push_back(std::move(payload));
    s.manifest.records.push_back(std::move(r));
  }

  for (std::size_t h = 0; h < config.vendor_hosts; ++h) {
    auto& server = *s.vendors[h];
    const auto key = "127.0.0.1:" + std::to_string(s.vendor_ports[h]);
    server.set_pre_routing_handler([&s, key](const httplib::Request& req, httplib::Response&) {
      return log_request(s.log_mu, s.log, key, req);
    });
    s.threads.emplace_back([&server] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  s.start(s.archive, s.archive_port);
  s.start(s.hashes, s.hash_port);
}

MockScenario::~MockScenario() {
  auto& s = *impl_;
  for (auto& v : s.vendors) v->stop();
  s.archive.stop();
  s.hashes.stop();
  for (auto& t : s.threads) t.join();
}

const manifest::CorpusManifest& MockScenario::manifest() const { return impl_->manifest; }

std::string MockScenario::archive_base() const { return "http://127.0.0.1:" + std::to_string(impl_->archive_port); }

std::string MockScenario::hash_lookup_template() const {
  return "http://127.0.0.1:" + std::to_string(impl_->hash_port) + "/file/{sha256}";
}

std::vector<MockScenario::LoggedRequest> MockScenario::request_log() const {
  std::lock_guard lock(impl_->log_mu);
  return impl_->log;
}

void MockScenario::clear_log() {
  std::lock_guard lock(impl_->log_mu);
  impl_->log.clear();
}

MockRunResult run_mock_replication(const MockScenario::Config& config, const AcquisitionPolicy& policy) {
  MockScenario scenario(config);
  NetworkStack stack(policy, {scenario.archive_base(), scenario.hash_lookup_template(), std::nullopt, "fwcorpus"});
  MockRunResult out;
  out.report = acquire_corpus(scenario.manifest(), stack.clients(), policy);
  out.log = scenario.request_log();
  return out;
}

}  // namespace fwcorpus::acquire
