#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <map>
#include <mutex>
#include <thread>

#include "fwcorpus/acquire.hpp"
#include "fwcorpus/digest.hpp"
#include "fwcorpus/error.hpp"
#include "fwcorpus/mock_scenario.hpp"
#include "support/support.hpp"

using namespace fwcorpus;
using namespace fwcorpus::acquire;
using Clock = std::chrono::steady_clock;

namespace {

class FakeHttp : public HttpClient {
 public:
  std::map<std::string, HttpResponse> routes;
  std::vector<std::string> log;

  HttpResponse get(const std::string& url) override {
    std::lock_guard lock(mu_);
    log.push_back(url);
    auto it = routes.find(url);
    if (it == routes.end()) return {404, {}, ""};
    return it->second;
  }

 private:
  std::mutex mu_;
};

class FakeArchive : public ArchiveClient {
 public:
  std::map<std::string, std::vector<CdxRow>> index;
  std::map<std::string, Bytes> snapshots;
  bool reachable = true;

  std::optional<std::vector<CdxRow>> cdx_query(const std::string& url) override {
    if (!reachable) return std::nullopt;
    auto it = index.find(url);
    return it == index.end() ? std::vector<CdxRow>{} : it->second;
  }
  std::string snapshot_url(const CdxRow& row) const override { return "archive:" + row.timestamp + ":" + row.original; }
  HttpResponse fetch(const std::string& url) override {
    auto it = snapshots.find(url);
    if (it == snapshots.end()) return {404, {}, ""};
    return {200, it->second, ""};
  }
};

class FakeLookup : public HashLookupClient {
 public:
  std::map<std::string, Bytes> store;
  std::optional<Bytes> lookup(const std::string& sha) override {
    auto it = store.find(sha);
    if (it == store.end()) return std::nullopt;
    return it->second;
  }
};

manifest::FirmwareRecord record_for(const Bytes& payload, const std::string& url) {
  auto r = testsupport::make_record("Vendor", "R1", digest::sha256_hex(payload));
  r.download_url = url;
  r.firmware_version = "2.1";
  return r;
}

bool phases_monotone(const AcquisitionResult& r) {
  for (std::size_t i = 1; i < r.attempts.size(); ++i) {
    if (r.attempts[i].phase < r.attempts[i - 1].phase) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("url parsing") {
  auto u = parse_url("https://Download.Example.com:8443/fw/a.bin?x=1#frag");
  REQUIRE(u);
  CHECK(u->scheme == "https");
  CHECK(u->port == 8443);
  CHECK(u->target == "/fw/a.bin?x=1");
  CHECK(u->host_key() == u->host + ":8443");
  auto plain = parse_url("http://example.com");
  REQUIRE(plain);
  CHECK(plain->port == 80);
  CHECK(plain->target == "/");
  CHECK(parse_url("https://[::1]:9000/x")->host == "::1");
  CHECK_FALSE(parse_url("ftp://example.com/x"));
  CHECK_FALSE(parse_url("example.com/x"));
  CHECK_FALSE(parse_url("http://user@example.com/"));
  CHECK(percent_encode("a b/c?d") == "a%20b%2Fc%3Fd");
}

TEST_CASE("policy validation") {
  AcquisitionPolicy p;
  CHECK_NOTHROW(p.validate());
  p.per_host_rate = 0;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p.per_host_rate = 1;
  p.max_parallel = 0;
  CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("phase chain outcomes") {
  const auto good = to_bytes("firmware payload");
  FakeHttp http;
  FakeArchive archive;
  FakeLookup lookup;
  Clients c{&http, &archive, &lookup, nullptr};
  AcquisitionPolicy p;

  auto live = record_for(good, "http://vendor/live.bin");
  http.routes[*live.download_url] = {200, good, ""};
  auto r = acquire_record(live, c, p);
  CHECK(r.outcome == Outcome::Direct);
  CHECK(r.hash_verified);
  CHECK(r.bytes_fetched == good.size());

  auto archived = record_for(to_bytes("archived payload"), "http://vendor/dead.bin");
  archive.index[*archived.download_url] = {{"20150101000000", *archived.download_url, 200},
                                           {"20190101000000", *archived.download_url, 404}};
  archive.snapshots["archive:20150101000000:http://vendor/dead.bin"] = to_bytes("archived payload");
  r = acquire_record(archived, c, p);
  CHECK(r.outcome == Outcome::Archive);
  CHECK(r.hash_verified);
  CHECK(r.attempts.front().status == "http 404");
  CHECK(phases_monotone(r));

  auto looked = record_for(to_bytes("only in lookup"), "http://vendor/gone.bin");
  lookup.store[looked.sha256] = to_bytes("only in lookup");
  r = acquire_record(looked, c, p);
  CHECK(r.outcome == Outcome::HashLookup);
  CHECK(phases_monotone(r));

  auto lost = record_for(to_bytes("lost forever"), "http://vendor/path/lost.bin?dl=1");
  http.routes[*lost.download_url] = {200, to_bytes("wrong bytes"), ""};
  r = acquire_record(lost, c, p);
  CHECK(r.outcome == Outcome::ManualWorklist);
  CHECK_FALSE(r.hash_verified);
  REQUIRE(r.worklist);
  CHECK(r.worklist->file_name == "lost.bin");
  CHECK(r.worklist->version == "2.1");
  CHECK(r.worklist->model == "R1");
  CHECK(r.attempts[0].status == "hash mismatch");
  CHECK(phases_monotone(r));
  CHECK(r.attempts.back().phase == Phase::Manual);

  p.verify_hash = false;
  r = acquire_record(lost, c, p);
  CHECK(r.outcome == Outcome::Direct);
  CHECK_FALSE(r.hash_verified);

  auto no_sha = lost;
  no_sha.sha256.clear();
  CHECK(acquire_record(no_sha, c, p).outcome == Outcome::Missing);
}

TEST_CASE("wayback lookup picks the newest 200 capture") {
  FakeArchive a;
  a.index["u"] = {{"2010", "u", 200}, {"2012", "u", 200}, {"2020", "u", 404}};
  CHECK(*wayback_lookup("u", a) == "archive:2012:u");
  std::string why;
  CHECK_FALSE(wayback_lookup("none", a, &why));
  CHECK(why == "no captures");
  a.index["bad"] = {{"2010", "bad", 404}};
  CHECK_FALSE(wayback_lookup("bad", a, &why));
  CHECK(why == "no capture with status 200");
  a.reachable = false;
  CHECK_FALSE(wayback_lookup("u", a, &why));
  CHECK(why == "capture index unreachable");
}

TEST_CASE("CDX query and parsing") {
  auto url = WaybackClient::cdx_query_url("http://archive/", "http://v/a b.bin");
  CHECK(url == "http://archive/cdx/search/cdx?url=http%3A%2F%2Fv%2Fa%20b.bin&output=json"
               "&fl=timestamp,original,statuscode&filter=statuscode:200");
  auto rows = WaybackClient::parse_cdx_json(
      R"([["timestamp","original","statuscode"],["20200101","http://v/a",  "200"],["20210101","http://v/a","-"]])");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].status == 200);
  CHECK(rows[1].status == 0);
  CHECK(WaybackClient::parse_cdx_json("garbage").empty());

  FakeHttp http;
  WaybackClient w(http, "http://archive");
  http.routes[WaybackClient::cdx_query_url("http://archive", "http://v/a")] = {200, to_bytes(""), ""};
  auto empty = w.cdx_query("http://v/a");
  REQUIRE(empty);
  CHECK(empty->empty());
  CHECK_FALSE(w.cdx_query("http://v/missing"));
  CHECK(w.snapshot_url({"20200101", "http://v/a", 200}) == "http://archive/web/20200101id_/http://v/a");
}

TEST_CASE("hash lookup backends") {
  FakeHttp http;
  http.routes["http://lookup/files/" + std::string(64, 'a')] = {200, to_bytes("x"), ""};
  HttpHashLookupClient h(http, "http://lookup/files/{sha256}");
  CHECK(h.lookup(std::string(64, 'a')) == to_bytes("x"));
  CHECK_FALSE(h.lookup(std::string(64, 'b')));

  testsupport::TempDir dir;
  const auto data = to_bytes("stored sample");
  const auto sha = digest::sha256_hex(data);
  write_file(dir / sha, data);
  LocalStoreHashLookup store(dir.path());
  CHECK(store.lookup(sha) == data);
  CHECK_FALSE(store.lookup(std::string(64, 'c')));
  CHECK_FALSE(store.lookup("../etc/passwd"));
}

TEST_CASE("robots rules") {
  auto r = RobotsRules::parse("User-agent: *\nDisallow: /private\nAllow: /private/ok\n\n"
                              "User-agent: fwcorpus\nDisallow: /firmware/\n",
                              "fwcorpus");
  CHECK_FALSE(r.allowed("/firmware/a.bin"));
  CHECK(r.allowed("/private/x"));
  auto star = RobotsRules::parse("User-agent: *\nDisallow: /private\nAllow: /private/ok\n", "other");
  CHECK_FALSE(star.allowed("/private/x"));
  CHECK(star.allowed("/private/ok/y"));
  CHECK(star.allowed("/public"));
  CHECK(RobotsRules::parse("", "x").allowed("/anything"));
}

TEST_CASE("crawl honors robots.txt") {
  struct Adapter : ScraperAdapter {
    std::vector<std::string> start_urls() const override { return {"http://site/index", "http://site/blocked/p"}; }
    PageResult parse_page(const std::string& url, std::string_view) override {
      PageResult p;
      if (url == "http://site/index") {
        p.follow = {"http://site/product", "http://site/blocked/q", "http://site/missing"};
      } else {
        p.records.push_back(testsupport::make_record("V", "M", std::string(64, 'a')));
      }
      return p;
    }
  } adapter;
  FakeHttp http;
  http.routes["http://site:80/robots.txt"] = {200, to_bytes("User-agent: *\nDisallow: /blocked/\n"), ""};
  http.routes["http://site/robots.txt"] = http.routes["http://site:80/robots.txt"];
  http.routes["http://site/index"] = {200, to_bytes("index"), ""};
  http.routes["http://site/product"] = {200, to_bytes("product"), ""};
  RobotsCache robots(http, "fwcorpus");
  auto res = crawl(adapter, http, robots);
  CHECK(res.records.size() == 1);
  CHECK(res.skipped_by_robots.size() == 2);
  CHECK(res.failed == std::vector<std::string>{"http://site/missing"});
  for (const auto& u : http.log) CHECK(u.find("/blocked/") == std::string::npos);
}

TEST_CASE("host throttle spaces requests per host") {
  HostThrottle t(20.0);
  std::mutex mu;
  std::map<std::string, std::vector<Clock::time_point>> stamps;
  std::vector<std::thread> threads;
  for (int w = 0; w < 4; ++w) {
    threads.emplace_back([&, w] {
      for (int i = 0; i < 5; ++i) {
        const std::string host = w % 2 ? "a:80" : "b:80";
        t.wait(host);
        std::lock_guard lock(mu);
        stamps[host].push_back(Clock::now());
      }
    });
  }
  for (auto& th : threads) th.join();
  for (auto& [host, v] : stamps) {
    std::sort(v.begin(), v.end());
    REQUIRE(v.size() == 10);
    for (std::size_t i = 1; i < v.size(); ++i) {
      CHECK(std::chrono::duration<double>(v[i] - v[i - 1]).count() >= 0.9 / 20.0);
    }
  }
}

TEST_CASE("acquire_corpus over fakes is independent of parallelism") {
  FakeHttp http;
  FakeArchive archive;
  FakeLookup lookup;
  manifest::CorpusManifest m;
  for (int i = 0; i < 40; ++i) {
    const auto payload = to_bytes("payload " + std::to_string(i));
    auto r = record_for(payload, "http://v" + std::to_string(i % 3) + "/fw" + std::to_string(i));
    r.manufacturer = i % 2 ? "Odd" : "Even";
    if (i % 4 != 3) {
      http.routes[*r.download_url] = {200, payload, ""};
    } else if (i % 8 == 3) {
      lookup.store[r.sha256] = payload;
    }
    m.records.push_back(r);
  }
  Clients c{&http, &archive, &lookup, nullptr};
  AcquisitionPolicy p;
  p.max_parallel = 1;
  auto one = acquire_corpus(m, c, p);
  p.max_parallel = 8;
  auto many = acquire_corpus(m, c, p);
  CHECK(replication_csv(one) == replication_csv(many));
  CHECK(replication_table(one) == replication_table(many));
  CHECK(one.total.direct == 30);
  CHECK(one.total.hash_lookup == 5);
  CHECK(one.total.manual == 5);
  CHECK(one.total.replicated + one.total.missing == 40);
  CHECK(one.total.direct + one.total.archive + one.total.hash_lookup + one.total.manual ==
        one.total.replicated + one.worklist.size());
  for (std::size_t i = 0; i < m.records.size(); ++i) CHECK(one.results[i].sha256 == m.records[i].sha256);
  CHECK(worklist_csv(one.worklist).rfind("manufacturer,model,file_name,version,sha256\n", 0) == 0);

  auto empty = acquire_corpus({}, c, p);
  CHECK(empty.total == ReplicationRow{});
  CHECK(empty.results.empty());
}

TEST_CASE("output directory receives verified payloads") {
  testsupport::TempDir dir;
  FakeHttp http;
  const auto payload = to_bytes("saved payload");
  auto r = record_for(payload, "http://v/saved");
  http.routes[*r.download_url] = {200, payload, ""};
  AcquisitionPolicy p;
  p.output_dir = dir.path();
  acquire_record(r, {&http, nullptr, nullptr, nullptr}, p);
  CHECK(read_file(dir / r.sha256) == payload);
}

TEST_CASE("mock scenario over real HTTP") {
  auto cfg = MockScenario::standard();
  AcquisitionPolicy p;
  p.per_host_rate = 40;
  p.max_parallel = 8;
  p.timeout = std::chrono::seconds(10);
  auto run = run_mock_replication(cfg, p);
  const auto& t = run.report.total;
  CHECK(t.samples == 100);
  CHECK(t.direct == 90);
  CHECK(t.archive == 5);
  CHECK(t.hash_lookup == 3);
  CHECK(t.manual == 2);
  CHECK(t.missing == 2);
  CHECK(t.ratio(t.direct) == doctest::Approx(0.90));
  for (const auto& r : run.report.results) {
    CHECK(phases_monotone(r));
    if (r.outcome == Outcome::Direct || r.outcome == Outcome::Archive || r.outcome == Outcome::HashLookup) {
      CHECK(r.hash_verified);
    }
  }
  CHECK_FALSE(run.log.empty());
}
