#include "honeykit/sha256.hpp"

#include <openssl/evp.h>

#include <memory>
#include <stdexcept>

#include "honeykit/util.hpp"

namespace honeykit {

namespace {
struct MdCtxDeleter {
    void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};
using MdCtx = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;
} // namespace

std::string sha256_hex(std::string_view data) {
    unsigned char digest[32];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    return hex_encode(std::string_view(reinterpret_cast<char*>(digest), len));
}

std::string sha256_hex_stream(std::istream& in) {
    MdCtx ctx(EVP_MD_CTX_new());
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 init failed");
    char buf[65536];
    while (in.good()) {
        in.read(buf, sizeof(buf));
        std::streamsize n = in.gcount();
        if (n > 0 && EVP_DigestUpdate(ctx.get(), buf, static_cast<size_t>(n)) != 1)
            throw std::runtime_error("sha256 update failed");
    }
    if (in.bad()) throw std::runtime_error("stream read failure while hashing");
    unsigned char digest[32];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
        throw std::runtime_error("sha256 final failed");
    return hex_encode(std::string_view(reinterpret_cast<char*>(digest), len));
}

bool is_sha256_hex(std::string_view s) {
    if (s.size() != 64) return false;
    for (char c : s) {
        bool ok = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
        if (!ok) return false;
    }
    return true;
}

} // namespace honeykit
