#include "pathtest/http.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace pathtest::http {

HttpResult post_json(const std::string& base_url, const std::string& path,
                     const std::vector<std::pair<std::string, std::string>>& headers,
                     const std::string& json_body,
                     std::chrono::seconds timeout) {
  httplib::Headers hdrs;
  for (const auto& [k, v] : headers) hdrs.emplace(k, v);

  auto do_post = [&](auto& client) -> HttpResult {
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto res = client.Post(path, hdrs, json_body, "application/json");
    if (!res) {
      return {0, {}, httplib::to_string(res.error())};
    }
    return {res->status, res->body, {}};
  };

  if (base_url.rfind("https://", 0) == 0) {
    httplib::SSLClient client(base_url.substr(8));
    client.enable_server_certificate_verification(false);
    return do_post(client);
  }
  std::string hostport =
      base_url.rfind("http://", 0) == 0 ? base_url.substr(7) : base_url;
  std::string host = hostport;
  int port = 80;
  if (auto colon = hostport.rfind(':'); colon != std::string::npos) {
    host = hostport.substr(0, colon);
    port = std::stoi(hostport.substr(colon + 1));
  }
  httplib::Client client(host, port);
  return do_post(client);
}

}  // namespace pathtest::http
