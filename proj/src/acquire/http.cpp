#include <thread>

#include <httplib.h>

#include "fwcorpus/acquire.hpp"
#include "fwcorpus/error.hpp"

namespace fwcorpus::acquire {

namespace {

class HttplibClient : public HttpClient {
 public:
  explicit HttplibClient(std::chrono::seconds timeout) : timeout_(timeout) {}

  HttpResponse get(const std::string& url) override {
    HttpResponse out;
    const auto u = parse_url(url);
    if (!u) {
      out.error = "unsupported url";
      return out;
    }
    // One client per request keeps concurrent use trivially safe.
    httplib::Client cli(u->origin());
    cli.set_connection_timeout(timeout_);
    cli.set_read_timeout(timeout_);
    cli.set_write_timeout(timeout_);
    cli.set_follow_location(true);
    auto res = cli.Get(u->target);
    if (!res) {
      out.error = httplib::to_string(res.error());
      return out;
    }
    out.status = res->status;
    out.body = to_bytes(res->body);
    return out;
  }

 private:
  std::chrono::seconds timeout_;
};

}  // namespace

std::unique_ptr<HttpClient> make_http_client(std::chrono::seconds timeout) {
  return std::make_unique<HttplibClient>(timeout);
}

HostThrottle::HostThrottle(double requests_per_second) : rate_(requests_per_second) {
  if (!(requests_per_second > 0)) throw ValidationError("per-host rate must be positive");
  interval_ = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / requests_per_second));
}

void HostThrottle::wait(const std::string& host_key) {
  Clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    const auto now = Clock::now();
    auto& next = next_slot_[host_key];
    slot = std::max(now, next);
    next = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

ThrottledHttpClient::ThrottledHttpClient(HttpClient& inner, std::shared_ptr<HostThrottle> throttle)
    : inner_(inner), throttle_(std::move(throttle)) {}

HttpResponse ThrottledHttpClient::get(const std::string& url) {
  if (const auto u = parse_url(url)) throttle_->wait(u->host_key());
  return inner_.get(url);
}

}  // namespace fwcorpus::acquire
