#include "honeykit/shell.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace honeykit {

FetchResult http_fetch(const std::string& url, uint64_t limit) {
    FetchResult result;
    auto parsed = parse_url(url);
    if (!parsed) {
        result.error = "malformed URL";
        return result;
    }
    httplib::Client cli(parsed->scheme + "://" + parsed->host + ":" +
                        std::to_string(parsed->port));
    cli.set_connection_timeout(5, 0);
    cli.set_read_timeout(10, 0);
    cli.set_follow_location(true);
    if (parsed->scheme == "https") cli.enable_server_certificate_verification(false);

    int status = 0;
    auto res = cli.Get(
        parsed->path,
        [&](const httplib::Response& r) {
            status = r.status;
            return true;
        },
        [&](const char* data, size_t n) {
            uint64_t room = limit - result.body.size();
            if (n <= room) {
                result.body.append(data, n);
                return true;
            }
            result.body.append(data, room);
            result.truncated = true;
            return false; // abort the transfer once the cap is hit
        });
    if (result.truncated && status >= 200 && status < 300) {
        result.ok = true;
        return result;
    }
    if (!res) {
        result.body.clear();
        result.error = httplib::to_string(res.error());
        return result;
    }
    if (status < 200 || status >= 300) {
        result.body.clear();
        result.error = "HTTP " + std::to_string(status);
        return result;
    }
    result.ok = true;
    return result;
}

} // namespace honeykit
