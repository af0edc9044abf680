#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace honeykit {

struct NetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Move-only RAII wrapper over a file descriptor.
class Socket {
  public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
    Socket& operator=(Socket&& other) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket() { close(); }

    int fd() const { return fd_; }
    bool valid() const { return fd_ >= 0; }
    void close();

  private:
    int fd_ = -1;
};

// All throw NetError with errno detail on failure.
Socket tcp_listen(const std::string& addr, uint16_t port, int backlog = 64);
Socket tcp_connect(const std::string& host, uint16_t port, uint32_t timeout_ms);
Socket udp_bind(const std::string& addr, uint16_t port);

uint16_t local_port(const Socket& s);

// nullopt on timeout; a returned socket is connected and blocking.
std::optional<Socket> tcp_accept(const Socket& listener, std::string* peer_ip,
                                 uint16_t* peer_port, uint32_t timeout_ms);

// Whole-buffer send; false on any error (peer gone).
bool send_all(int fd, std::string_view data);

// One recv with a poll timeout: nullopt = timeout, 0 = orderly EOF,
// otherwise the byte count written into buf. Throws NetError on hard errors.
std::optional<size_t> recv_some(int fd, char* buf, size_t cap, uint32_t timeout_ms);

// UDP: single datagram send/receive.
bool udp_send(int fd, const std::string& host, uint16_t port, std::string_view payload);
std::optional<std::string> udp_recv(int fd, std::string* peer_ip, uint16_t* peer_port,
                                    size_t cap, uint32_t timeout_ms);

} // namespace honeykit
