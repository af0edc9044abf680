#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace honeykit::sshwire {

// RFC 4251 data types over a growing byte buffer.
void put_u8(std::string& b, uint8_t v);
void put_u32(std::string& b, uint32_t v);
void put_bool(std::string& b, bool v);
void put_string(std::string& b, std::string_view s);
void put_namelist(std::string& b, const std::vector<std::string>& names);
// Encodes unsigned big-endian bytes as an ssh mpint (leading zeros stripped,
// 0x00 prepended when the high bit is set).
void put_mpint(std::string& b, std::string_view unsigned_be);

// Throwing cursor over a received payload; any overrun raises
// std::runtime_error("short ssh payload").
class Reader {
  public:
    explicit Reader(std::string_view data) : d_(data) {}

    uint8_t u8();
    uint32_t u32();
    bool boolean();
    std::string string();
    std::vector<std::string> namelist();
    std::string mpint(); // raw bytes as sent (may carry a sign byte)
    void skip(size_t n);
    size_t remaining() const { return d_.size() - pos_; }

  private:
    std::string_view d_;
    size_t pos_ = 0;

    void need(size_t n) const;
};

// SSH message numbers used by the transport, userauth and connection layers.
enum Msg : uint8_t {
    SSH_MSG_DISCONNECT = 1,
    SSH_MSG_IGNORE = 2,
    SSH_MSG_UNIMPLEMENTED = 3,
    SSH_MSG_DEBUG = 4,
    SSH_MSG_SERVICE_REQUEST = 5,
    SSH_MSG_SERVICE_ACCEPT = 6,
    SSH_MSG_KEXINIT = 20,
    SSH_MSG_NEWKEYS = 21,
    SSH_MSG_KEX_ECDH_INIT = 30,
    SSH_MSG_KEX_ECDH_REPLY = 31,
    SSH_MSG_USERAUTH_REQUEST = 50,
    SSH_MSG_USERAUTH_FAILURE = 51,
    SSH_MSG_USERAUTH_SUCCESS = 52,
    SSH_MSG_USERAUTH_BANNER = 53,
    SSH_MSG_GLOBAL_REQUEST = 80,
    SSH_MSG_REQUEST_SUCCESS = 81,
    SSH_MSG_REQUEST_FAILURE = 82,
    SSH_MSG_CHANNEL_OPEN = 90,
    SSH_MSG_CHANNEL_OPEN_CONFIRMATION = 91,
    SSH_MSG_CHANNEL_OPEN_FAILURE = 92,
    SSH_MSG_CHANNEL_WINDOW_ADJUST = 93,
    SSH_MSG_CHANNEL_DATA = 94,
    SSH_MSG_CHANNEL_EXTENDED_DATA = 95,
    SSH_MSG_CHANNEL_EOF = 96,
    SSH_MSG_CHANNEL_CLOSE = 97,
    SSH_MSG_CHANNEL_REQUEST = 98,
    SSH_MSG_CHANNEL_SUCCESS = 99,
    SSH_MSG_CHANNEL_FAILURE = 100,
};

} // namespace honeykit::sshwire
