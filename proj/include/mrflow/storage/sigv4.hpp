#pragma once

#include <chrono>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mrflow::storage::sigv4 {

struct Credentials {
  std::string access_key;
  std::string secret_key;
  std::string region = "us-east-1";
};

struct Request {
  std::string method;
  std::string path;  // unencoded, e.g. "/bucket/some key"
  std::vector<std::pair<std::string, std::string>> query;  // unencoded
  std::map<std::string, std::string> headers;             // lowercase names; must include host
  std::string payload_sha256;
};

std::string sha256_hex(std::string_view data);
// RFC 3986 unreserved characters pass through; everything else is %XX.
std::string uri_encode(std::string_view s, bool keep_slash);
// "YYYYMMDDTHHMMSSZ"
std::string amz_timestamp(std::chrono::system_clock::time_point t);

std::string canonical_request(const Request& req);
std::string canonical_query(const Request& req);

// Value for the Authorization header. `amz_date` must equal the
// x-amz-date header of the request.
std::string authorization(const Request& req, const Credentials& creds, std::string_view amz_date);

}  // namespace mrflow::storage::sigv4
