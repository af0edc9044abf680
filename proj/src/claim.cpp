#include "honeykit/claim.hpp"

#include <poll.h>
#include <sys/socket.h>

#include "honeykit/util.hpp"

namespace honeykit {

namespace {
constexpr size_t kMaxClaimLine = 32; // marker + dotted quad + newline
}

std::string make_claim_preamble(const std::string& ip) {
    return std::string(kClaimPrefix) + ip + "\n";
}

std::string strip_claim(std::string& data) {
    if (data.size() < kClaimPrefix.size() ||
        std::string_view(data).substr(0, kClaimPrefix.size()) != kClaimPrefix)
        return "";
    size_t nl = data.find('\n');
    if (nl == std::string::npos || nl > kMaxClaimLine) return "";
    std::string ip = data.substr(kClaimPrefix.size(), nl - kClaimPrefix.size());
    if (!parse_ipv4(ip)) return "";
    data.erase(0, nl + 1);
    return ip;
}

std::string read_claim(int fd, uint32_t timeout_ms) {
    pollfd pfd{fd, POLLIN, 0};
    if (::poll(&pfd, 1, static_cast<int>(timeout_ms)) <= 0) return "";
    char first = 0;
    ssize_t n = ::recv(fd, &first, 1, MSG_PEEK);
    if (n != 1 || first != '\0') return "";

    std::string line;
    while (line.size() < kMaxClaimLine) {
        char c = 0;
        if (::poll(&pfd, 1, static_cast<int>(timeout_ms)) <= 0) return "";
        if (::recv(fd, &c, 1, 0) != 1) return "";
        line += c;
        if (c == '\n') break;
    }
    std::string claimed = strip_claim(line);
    return line.empty() ? claimed : ""; // leftovers mean a malformed claim
}

} // namespace honeykit
