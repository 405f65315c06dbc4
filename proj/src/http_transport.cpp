#include <httplib.h>

#include "stylemimic/error.hpp"
#include "stylemimic/llmclient.hpp"

namespace stylemimic {

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "URL without scheme: " + url);
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw Error(ErrorCode::kInvalidArgument, "unsupported scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class HttplibTransport final : public HttpTransport {
 public:
  HttpResponse post_json(const std::string& url, const std::map<std::string, std::string>& headers,
                         const std::string& body, std::chrono::seconds timeout) override {
    const auto parsed = parse_url(url);
    httplib::Client client(parsed.origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers request_headers;
    for (const auto& [name, value] : headers) request_headers.emplace(name, value);

    const auto result = client.Post(parsed.path, request_headers, body, "application/json");
    HttpResponse out;
    if (!result) {
      const auto err = result.error();
      // httplib reports an expired read deadline as a read error.
      out.failure = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read
                        ? HttpResponse::Failure::kTimeout
                        : HttpResponse::Failure::kConnection;
      return out;
    }
    out.status = result->status;
    out.body = result->body;
    return out;
  }
};

}  // namespace

std::shared_ptr<HttpTransport> make_http_transport() { return std::make_shared<HttplibTransport>(); }

}  // namespace stylemimic
