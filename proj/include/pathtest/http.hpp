#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace pathtest::http {

struct HttpResult {
  int status = 0;       // HTTP status, 0 when the transport failed
  std::string body;
  std::string error;    // transport-level failure description, empty on success
};

// POSTs a JSON body to base_url + path. base_url carries the scheme
// ("http://host:port" or "https://host"); headers are (name, value) pairs
// added on top of Content-Type: application/json.
HttpResult post_json(const std::string& base_url, const std::string& path,
                     const std::vector<std::pair<std::string, std::string>>& headers,
                     const std::string& json_body,
                     std::chrono::seconds timeout);

}  // namespace pathtest::http
