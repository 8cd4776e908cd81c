#include <fmt/format.h>

#include <atomic>

#include "httplib.h"
#include "wikialumni/errors.hpp"
#include "wikialumni/pageviews.hpp"

namespace wikialumni {
namespace {

std::atomic<std::uint64_t> g_network_operations{0};

class HttpsTransport final : public HttpTransport {
 public:
  explicit HttpsTransport(std::string user_agent)
      : user_agent_(std::move(user_agent)) {}

  HttpResponse get(const std::string& url) override {
    ++g_network_operations;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
      throw FetchError(fmt::format("not an absolute URL: {}", url));
    }
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string origin = url.substr(0, path_start);
    const std::string path =
        path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    client.set_follow_location(true);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(30, 0);
    const httplib::Headers headers{{"User-Agent", user_agent_},
                                   {"Accept", "application/json"}};
    auto result = client.Get(path, headers);
    if (!result) {
      throw FetchError(fmt::format("GET {}: {}", url,
                                   httplib::to_string(result.error())));
    }
    return HttpResponse{result->status, result->body};
  }

 private:
  std::string user_agent_;
};

}  // namespace

std::uint64_t network_operation_count() { return g_network_operations.load(); }

std::unique_ptr<HttpTransport> make_https_transport(std::string user_agent) {
  return std::make_unique<HttpsTransport>(std::move(user_agent));
}

}  // namespace wikialumni
