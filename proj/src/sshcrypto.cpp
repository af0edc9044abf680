#include "honeykit/sshcrypto.hpp"

#include <openssl/core_names.h>
#include <openssl/evp.h>
#include <openssl/rand.h>

#include <algorithm>
#include <memory>
#include <stdexcept>

namespace honeykit {

namespace {

struct PkeyDeleter {
    void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
using Pkey = std::unique_ptr<EVP_PKEY, PkeyDeleter>;
struct PkeyCtxDeleter {
    void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};
using PkeyCtx = std::unique_ptr<EVP_PKEY_CTX, PkeyCtxDeleter>;
struct MdCtxDeleter {
    void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};
using MdCtx = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;

[[noreturn]] void fail(const char* what) { throw std::runtime_error(what); }

std::string raw_public(EVP_PKEY* key) {
    size_t len = 0;
    if (EVP_PKEY_get_raw_public_key(key, nullptr, &len) != 1) fail("raw public key length");
    std::string out(len, '\0');
    if (EVP_PKEY_get_raw_public_key(key, reinterpret_cast<unsigned char*>(out.data()), &len) != 1)
        fail("raw public key");
    out.resize(len);
    return out;
}

std::string raw_private(EVP_PKEY* key) {
    size_t len = 0;
    if (EVP_PKEY_get_raw_private_key(key, nullptr, &len) != 1) fail("raw private key length");
    std::string out(len, '\0');
    if (EVP_PKEY_get_raw_private_key(key, reinterpret_cast<unsigned char*>(out.data()), &len) !=
        1)
        fail("raw private key");
    out.resize(len);
    return out;
}

Pkey keygen(int type) {
    PkeyCtx ctx(EVP_PKEY_CTX_new_id(type, nullptr));
    if (!ctx || EVP_PKEY_keygen_init(ctx.get()) != 1) fail("keygen init");
    EVP_PKEY* raw = nullptr;
    if (EVP_PKEY_keygen(ctx.get(), &raw) != 1) fail("keygen");
    return Pkey(raw);
}

Pkey from_raw_private(int type, const std::string& priv) {
    Pkey key(EVP_PKEY_new_raw_private_key(
        type, nullptr, reinterpret_cast<const unsigned char*>(priv.data()), priv.size()));
    if (!key) fail("bad raw private key");
    return key;
}

} // namespace

std::string sha256_raw(std::string_view data) {
    unsigned char digest[32];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        fail("sha256");
    return std::string(reinterpret_cast<char*>(digest), len);
}

std::string hmac_sha256(std::string_view key, std::string_view data) {
    static EVP_MAC* mac = EVP_MAC_fetch(nullptr, "HMAC", nullptr);
    if (!mac) fail("HMAC fetch");
    std::unique_ptr<EVP_MAC_CTX, decltype(&EVP_MAC_CTX_free)> ctx(EVP_MAC_CTX_new(mac),
                                                                  EVP_MAC_CTX_free);
    if (!ctx) fail("HMAC ctx");
    char digest_name[] = "SHA256";
    OSSL_PARAM params[] = {
        OSSL_PARAM_construct_utf8_string(OSSL_MAC_PARAM_DIGEST, digest_name, 0),
        OSSL_PARAM_construct_end(),
    };
    if (EVP_MAC_init(ctx.get(), reinterpret_cast<const unsigned char*>(key.data()), key.size(),
                     params) != 1)
        fail("HMAC init");
    if (EVP_MAC_update(ctx.get(), reinterpret_cast<const unsigned char*>(data.data()),
                       data.size()) != 1)
        fail("HMAC update");
    unsigned char out[32];
    size_t outlen = 0;
    if (EVP_MAC_final(ctx.get(), out, &outlen, sizeof(out)) != 1) fail("HMAC final");
    return std::string(reinterpret_cast<char*>(out), outlen);
}

X25519KeyPair x25519_generate() {
    Pkey key = keygen(EVP_PKEY_X25519);
    return {raw_public(key.get()), raw_private(key.get())};
}

X25519KeyPair x25519_from_private(const std::string& private_raw) {
    Pkey key = from_raw_private(EVP_PKEY_X25519, private_raw);
    return {raw_public(key.get()), private_raw};
}

std::string x25519_shared_secret(const std::string& private_raw, const std::string& peer_public) {
    if (peer_public.size() != 32) fail("peer X25519 key must be 32 bytes");
    Pkey mine = from_raw_private(EVP_PKEY_X25519, private_raw);
    Pkey peer(EVP_PKEY_new_raw_public_key(
        EVP_PKEY_X25519, nullptr, reinterpret_cast<const unsigned char*>(peer_public.data()),
        peer_public.size()));
    if (!peer) fail("bad peer X25519 key");
    PkeyCtx ctx(EVP_PKEY_CTX_new(mine.get(), nullptr));
    if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1 ||
        EVP_PKEY_derive_set_peer(ctx.get(), peer.get()) != 1)
        fail("X25519 derive init");
    size_t len = 0;
    if (EVP_PKEY_derive(ctx.get(), nullptr, &len) != 1) fail("X25519 derive length");
    std::string secret(len, '\0');
    if (EVP_PKEY_derive(ctx.get(), reinterpret_cast<unsigned char*>(secret.data()), &len) != 1)
        fail("X25519 derive");
    secret.resize(len);
    if (std::all_of(secret.begin(), secret.end(), [](char c) { return c == '\0'; }))
        fail("X25519 all-zero shared secret");
    return secret;
}

Ed25519KeyPair ed25519_generate() {
    Pkey key = keygen(EVP_PKEY_ED25519);
    return {raw_public(key.get()), raw_private(key.get())};
}

Ed25519KeyPair ed25519_from_seed(const std::string& seed32) {
    if (seed32.size() != 32) fail("Ed25519 seed must be 32 bytes");
    Pkey key = from_raw_private(EVP_PKEY_ED25519, seed32);
    return {raw_public(key.get()), seed32};
}

std::string ed25519_sign(const std::string& seed32, std::string_view message) {
    Pkey key = from_raw_private(EVP_PKEY_ED25519, seed32);
    MdCtx ctx(EVP_MD_CTX_new());
    if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1)
        fail("Ed25519 sign init");
    size_t siglen = 0;
    if (EVP_DigestSign(ctx.get(), nullptr, &siglen,
                       reinterpret_cast<const unsigned char*>(message.data()),
                       message.size()) != 1)
        fail("Ed25519 sign length");
    std::string sig(siglen, '\0');
    if (EVP_DigestSign(ctx.get(), reinterpret_cast<unsigned char*>(sig.data()), &siglen,
                       reinterpret_cast<const unsigned char*>(message.data()),
                       message.size()) != 1)
        fail("Ed25519 sign");
    sig.resize(siglen);
    return sig;
}

bool ed25519_verify(const std::string& public32, std::string_view message, std::string_view sig) {
    Pkey key(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr,
                                         reinterpret_cast<const unsigned char*>(public32.data()),
                                         public32.size()));
    if (!key) return false;
    MdCtx ctx(EVP_MD_CTX_new());
    if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1)
        return false;
    return EVP_DigestVerify(ctx.get(), reinterpret_cast<const unsigned char*>(sig.data()),
                            sig.size(), reinterpret_cast<const unsigned char*>(message.data()),
                            message.size()) == 1;
}

AesCtr128::AesCtr128(const std::string& key16, const std::string& iv16) {
    if (key16.size() != 16 || iv16.size() != 16) fail("AES-128-CTR needs 16-byte key and IV");
    EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
    if (!ctx ||
        EVP_EncryptInit_ex(ctx, EVP_aes_128_ctr(), nullptr,
                           reinterpret_cast<const unsigned char*>(key16.data()),
                           reinterpret_cast<const unsigned char*>(iv16.data())) != 1) {
        EVP_CIPHER_CTX_free(ctx);
        fail("AES-128-CTR init");
    }
    ctx_ = ctx;
}

AesCtr128::AesCtr128(AesCtr128&& other) noexcept : ctx_(other.ctx_) { other.ctx_ = nullptr; }

AesCtr128& AesCtr128::operator=(AesCtr128&& other) noexcept {
    if (this != &other) {
        if (ctx_) EVP_CIPHER_CTX_free(static_cast<EVP_CIPHER_CTX*>(ctx_));
        ctx_ = other.ctx_;
        other.ctx_ = nullptr;
    }
    return *this;
}

AesCtr128::~AesCtr128() {
    if (ctx_) EVP_CIPHER_CTX_free(static_cast<EVP_CIPHER_CTX*>(ctx_));
}

void AesCtr128::crypt(char* data, size_t len) {
    int outlen = 0;
    if (EVP_EncryptUpdate(static_cast<EVP_CIPHER_CTX*>(ctx_),
                          reinterpret_cast<unsigned char*>(data), &outlen,
                          reinterpret_cast<const unsigned char*>(data),
                          static_cast<int>(len)) != 1 ||
        outlen != static_cast<int>(len))
        fail("AES-128-CTR update");
}

std::string AesCtr128::crypt(std::string_view data) {
    std::string out(data);
    crypt(out.data(), out.size());
    return out;
}

std::string random_bytes_crypto(size_t n) {
    std::string out(n, '\0');
    if (n > 0 && RAND_bytes(reinterpret_cast<unsigned char*>(out.data()),
                            static_cast<int>(n)) != 1)
        fail("RAND_bytes");
    return out;
}

} // namespace honeykit
