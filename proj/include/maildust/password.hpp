#pragma once

// Recovery password generation, strength classes and salted SHA-512 storage.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/crypto.h>
#include <openssl/evp.h>

#include "maildust/random.hpp"

namespace maildust::password {

class InvalidPolicy : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class PasswordPolicy {
public:
    PasswordPolicy(std::size_t length, std::string charset)
        : length_(length), charset_(std::move(charset)) {
        if (length_ < 1) {
            throw InvalidPolicy("password length must be at least 1");
        }
        if (charset_.size() < 2) {
            throw InvalidPolicy("charset needs at least 2 characters");
        }
        if (std::set<char>(charset_.begin(), charset_.end()).size() != charset_.size()) {
            throw InvalidPolicy("charset contains duplicate characters");
        }
    }

    /// The 94 printable non-space ASCII characters.
    static std::string printable_ascii() {
        std::string chars;
        for (char c = '!'; c <= '~'; ++c) {
            chars.push_back(c);
        }
        return chars;
    }

    static std::string alphanumeric() {
        return "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";
    }

    /// Default for server-generated recovery passwords: 16 over 94 chars.
    static PasswordPolicy recovery_default() { return PasswordPolicy(16, printable_ascii()); }

    std::size_t length() const noexcept { return length_; }
    const std::string& charset() const noexcept { return charset_; }

private:
    std::size_t length_;
    std::string charset_;
};

enum class StrengthClass { Weak = 0, Medium = 1, Strong = 2 };

inline const char* to_string(StrengthClass s) {
    switch (s) {
        case StrengthClass::Weak: return "weak";
        case StrengthClass::Medium: return "medium";
        case StrengthClass::Strong: return "strong";
    }
    return "unknown";
}

inline double log2_combinations(std::uint64_t charset_size, std::uint64_t length) {
    return static_cast<double>(length) * std::log2(static_cast<double>(charset_size));
}

/// Weak up to 2^50 combinations inclusive, Strong strictly above 2^70,
/// Medium in between.
inline StrengthClass strength(std::uint64_t charset_size, std::uint64_t length) {
    const double bits = log2_combinations(charset_size, length);
    if (bits <= 50.0) {
        return StrengthClass::Weak;
    }
    if (bits > 70.0) {
        return StrengthClass::Strong;
    }
    return StrengthClass::Medium;
}

inline StrengthClass strength(const PasswordPolicy& policy) {
    return strength(policy.charset().size(), policy.length());
}

/// Charset size implied by the character classes a password uses: 26 per
/// letter case, 10 digits, 33 for space and ASCII punctuation, and 128 if anything outside
/// printable ASCII appears.
inline std::size_t estimated_charset_size(std::string_view password) {
    bool lower = false, upper = false, digit = false, symbol = false, other = false;
    for (unsigned char c : password) {
        if (c >= 'a' && c <= 'z') lower = true;
        else if (c >= 'A' && c <= 'Z') upper = true;
        else if (c >= '0' && c <= '9') digit = true;
        else if (c >= 0x20 && c < 0x7F) symbol = true;
        else other = true;
    }
    return (lower ? 26 : 0) + (upper ? 26 : 0) + (digit ? 10 : 0) + (symbol ? 33 : 0) +
           (other ? 128 : 0);
}

inline StrengthClass estimate_strength(std::string_view password) {
    const auto charset = estimated_charset_size(password);
    if (charset < 2 || password.empty()) {
        return StrengthClass::Weak;
    }
    return strength(charset, password.size());
}

template <FullRangeBitGenerator Rng>
std::string generate(const PasswordPolicy& policy, Rng& rng) {
    std::string out;
    out.reserve(policy.length());
    const auto size = static_cast<std::uint32_t>(policy.charset().size());
    for (std::size_t i = 0; i < policy.length(); ++i) {
        out.push_back(policy.charset()[uniform_below(rng, size)]);
    }
    return out;
}

inline constexpr std::size_t kSaltSize = 16;
inline constexpr std::size_t kDigestSize = 64;
inline constexpr std::string_view kAlgorithmTag = "sha512-salted";

using Digest = std::array<std::uint8_t, kDigestSize>;

struct PasswordHashRecord {
    std::vector<std::uint8_t> salt;
    Digest digest{};
    std::string algorithm{kAlgorithmTag};

    friend bool operator==(const PasswordHashRecord&, const PasswordHashRecord&) = default;
};

inline Digest sha512(std::span<const std::uint8_t> prefix, std::string_view message) {
    Digest out{};
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr) {
        throw std::runtime_error("EVP_MD_CTX_new failed");
    }
    unsigned int written = 0;
    const bool ok = EVP_DigestInit_ex(ctx, EVP_sha512(), nullptr) == 1 &&
                    EVP_DigestUpdate(ctx, prefix.data(), prefix.size()) == 1 &&
                    EVP_DigestUpdate(ctx, message.data(), message.size()) == 1 &&
                    EVP_DigestFinal_ex(ctx, out.data(), &written) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok || written != kDigestSize) {
        throw std::runtime_error("SHA-512 computation failed");
    }
    return out;
}

/// digest = SHA-512(salt || password bytes).
inline PasswordHashRecord hash_password(std::string_view password, std::span<const std::uint8_t> salt) {
    PasswordHashRecord record;
    record.salt.assign(salt.begin(), salt.end());
    record.digest = sha512(salt, password);
    return record;
}

template <FullRangeBitGenerator Rng>
std::vector<std::uint8_t> make_salt(Rng& rng) {
    std::vector<std::uint8_t> salt(kSaltSize);
    for (auto& b : salt) {
        b = random_byte(rng);
    }
    return salt;
}

inline bool verify_password(std::string_view password, const PasswordHashRecord& record) {
    if (record.algorithm != kAlgorithmTag) {
        return false;
    }
    const Digest candidate = sha512(record.salt, password);
    return CRYPTO_memcmp(candidate.data(), record.digest.data(), kDigestSize) == 0;
}

}  // namespace maildust::password
