#include "honeykit/net.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace honeykit {

namespace {

[[noreturn]] void fail(const std::string& what) {
    throw NetError(what + ": " + std::strerror(errno));
}

sockaddr_in make_addr(const std::string& host, uint16_t port) {
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(port);
    if (inet_pton(AF_INET, host.c_str(), &sa.sin_addr) != 1)
        throw NetError("not an IPv4 address: " + host);
    return sa;
}

std::string addr_ip(const sockaddr_in& sa) {
    char buf[INET_ADDRSTRLEN] = {};
    inet_ntop(AF_INET, &sa.sin_addr, buf, sizeof(buf));
    return buf;
}

bool wait_fd(int fd, short events, uint32_t timeout_ms) {
    pollfd p{fd, events, 0};
    for (;;) {
        int rc = ::poll(&p, 1, static_cast<int>(timeout_ms));
        if (rc > 0) return true;
        if (rc == 0) return false;
        if (errno != EINTR) fail("poll");
    }
}

} // namespace

Socket& Socket::operator=(Socket&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = other.fd_;
        other.fd_ = -1;
    }
    return *this;
}

void Socket::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

Socket tcp_listen(const std::string& addr, uint16_t port, int backlog) {
    Socket s(::socket(AF_INET, SOCK_STREAM, 0));
    if (!s.valid()) fail("socket");
    int one = 1;
    setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in sa = make_addr(addr, port);
    if (::bind(s.fd(), reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0)
        fail("bind " + addr + ":" + std::to_string(port));
    if (::listen(s.fd(), backlog) != 0) fail("listen");
    return s;
}

uint16_t local_port(const Socket& s) {
    sockaddr_in sa{};
    socklen_t len = sizeof(sa);
    if (getsockname(s.fd(), reinterpret_cast<sockaddr*>(&sa), &len) != 0) fail("getsockname");
    return ntohs(sa.sin_port);
}

std::optional<Socket> tcp_accept(const Socket& listener, std::string* peer_ip,
                                 uint16_t* peer_port, uint32_t timeout_ms) {
    if (!wait_fd(listener.fd(), POLLIN, timeout_ms)) return std::nullopt;
    sockaddr_in sa{};
    socklen_t len = sizeof(sa);
    int fd = ::accept(listener.fd(), reinterpret_cast<sockaddr*>(&sa), &len);
    if (fd < 0) {
        if (errno == EAGAIN || errno == EWOULDBLOCK || errno == ECONNABORTED) return std::nullopt;
        fail("accept");
    }
    if (peer_ip) *peer_ip = addr_ip(sa);
    if (peer_port) *peer_port = ntohs(sa.sin_port);
    return Socket(fd);
}

Socket tcp_connect(const std::string& host, uint16_t port, uint32_t timeout_ms) {
    Socket s(::socket(AF_INET, SOCK_STREAM, 0));
    if (!s.valid()) fail("socket");
    sockaddr_in sa = make_addr(host, port);
    int flags = fcntl(s.fd(), F_GETFL, 0);
    fcntl(s.fd(), F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(s.fd(), reinterpret_cast<sockaddr*>(&sa), sizeof(sa));
    if (rc != 0 && errno != EINPROGRESS)
        fail("connect " + host + ":" + std::to_string(port));
    if (rc != 0) {
        if (!wait_fd(s.fd(), POLLOUT, timeout_ms))
            throw NetError("connect " + host + ":" + std::to_string(port) + ": timeout");
        int err = 0;
        socklen_t len = sizeof(err);
        getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
        if (err != 0)
            throw NetError("connect " + host + ":" + std::to_string(port) + ": " +
                           std::strerror(err));
    }
    fcntl(s.fd(), F_SETFL, flags); // back to blocking
    int one = 1;
    setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return s;
}

bool send_all(int fd, std::string_view data) {
    size_t sent = 0;
    while (sent < data.size()) {
        ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        sent += static_cast<size_t>(n);
    }
    return true;
}

std::optional<size_t> recv_some(int fd, char* buf, size_t cap, uint32_t timeout_ms) {
    if (!wait_fd(fd, POLLIN, timeout_ms)) return std::nullopt;
    for (;;) {
        ssize_t n = ::recv(fd, buf, cap, 0);
        if (n >= 0) return static_cast<size_t>(n);
        if (errno == EINTR) continue;
        if (errno == ECONNRESET) return size_t{0}; // treat reset as EOF
        fail("recv");
    }
}

Socket udp_bind(const std::string& addr, uint16_t port) {
    Socket s(::socket(AF_INET, SOCK_DGRAM, 0));
    if (!s.valid()) fail("socket");
    int one = 1;
    setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in sa = make_addr(addr, port);
    if (::bind(s.fd(), reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0)
        fail("bind udp " + addr + ":" + std::to_string(port));
    return s;
}

bool udp_send(int fd, const std::string& host, uint16_t port, std::string_view payload) {
    sockaddr_in sa = make_addr(host, port);
    ssize_t n = ::sendto(fd, payload.data(), payload.size(), MSG_NOSIGNAL,
                         reinterpret_cast<sockaddr*>(&sa), sizeof(sa));
    return n == static_cast<ssize_t>(payload.size());
}

std::optional<std::string> udp_recv(int fd, std::string* peer_ip, uint16_t* peer_port,
                                    size_t cap, uint32_t timeout_ms) {
    if (!wait_fd(fd, POLLIN, timeout_ms)) return std::nullopt;
    std::string buf(cap, '\0');
    sockaddr_in sa{};
    socklen_t len = sizeof(sa);
    ssize_t n = ::recvfrom(fd, buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&sa), &len);
    if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) return std::nullopt;
        fail("recvfrom");
    }
    buf.resize(static_cast<size_t>(n));
    if (peer_ip) *peer_ip = addr_ip(sa);
    if (peer_port) *peer_port = ntohs(sa.sin_port);
    return buf;
}

} // namespace honeykit
