#pragma once

#include <string>
#include <string_view>

namespace honeykit {

// Raw 32-byte SHA-256 digest (the hex form lives in sha256.hpp).
std::string sha256_raw(std::string_view data);

// HMAC-SHA2-256, 32-byte tag.
std::string hmac_sha256(std::string_view key, std::string_view data);

// X25519 ephemeral key agreement (RFC 7748). Raw 32-byte strings throughout.
struct X25519KeyPair {
    std::string public_key;
    std::string private_key;
};
X25519KeyPair x25519_generate();
X25519KeyPair x25519_from_private(const std::string& private_raw);
// Throws std::runtime_error on malformed keys or an all-zero shared secret.
std::string x25519_shared_secret(const std::string& private_raw, const std::string& peer_public);

// Ed25519 signatures (RFC 8032); keys persisted as the 32-byte seed.
struct Ed25519KeyPair {
    std::string public_key; // 32 bytes
    std::string seed;       // 32 bytes
};
Ed25519KeyPair ed25519_generate();
Ed25519KeyPair ed25519_from_seed(const std::string& seed32);
std::string ed25519_sign(const std::string& seed32, std::string_view message); // 64 bytes
bool ed25519_verify(const std::string& public32, std::string_view message, std::string_view sig);

// AES-128-CTR keystream (encrypt == decrypt). Carries its counter state, so
// one instance per direction for the life of a connection.
class AesCtr128 {
  public:
    AesCtr128(const std::string& key16, const std::string& iv16);
    AesCtr128(AesCtr128&&) noexcept;
    AesCtr128& operator=(AesCtr128&&) noexcept;
    AesCtr128(const AesCtr128&) = delete;
    AesCtr128& operator=(const AesCtr128&) = delete;
    ~AesCtr128();

    void crypt(char* data, size_t len);
    std::string crypt(std::string_view data);

  private:
    void* ctx_ = nullptr; // EVP_CIPHER_CTX
};

// CSPRNG bytes (cookies, padding).
std::string random_bytes_crypto(size_t n);

} // namespace honeykit
