#pragma once

// K-of-N threshold secret sharing over GF(256), applied bytewise.

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "maildust/gf256.hpp"
#include "maildust/random.hpp"

namespace maildust::sss {

enum class Errc {
    EmptySecret,
    InvalidPolicy,
    NotEnoughShares,
    DuplicateIndex,
    ZeroIndex,
    LengthMismatch,
    ShareMismatch,
};

inline const char* to_string(Errc code) {
    switch (code) {
        case Errc::EmptySecret: return "empty_secret";
        case Errc::InvalidPolicy: return "invalid_policy";
        case Errc::NotEnoughShares: return "not_enough_shares";
        case Errc::DuplicateIndex: return "duplicate_index";
        case Errc::ZeroIndex: return "zero_index";
        case Errc::LengthMismatch: return "length_mismatch";
        case Errc::ShareMismatch: return "share_mismatch";
    }
    return "unknown";
}

class SharingError : public std::runtime_error {
public:
    SharingError(Errc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

/// Threshold k out of n total shares, 1 <= k <= n <= 255.
class SharingPolicy {
public:
    SharingPolicy(unsigned k, unsigned n) : k_(k), n_(n) {
        if (k < 1 || k > n || n > 255) {
            throw SharingError(Errc::InvalidPolicy,
                               "invalid sharing policy k=" + std::to_string(k) +
                                   " n=" + std::to_string(n));
        }
    }

    unsigned k() const noexcept { return k_; }
    unsigned n() const noexcept { return n_; }

    friend bool operator==(const SharingPolicy&, const SharingPolicy&) = default;

private:
    unsigned k_;
    unsigned n_;
};

struct Share {
    std::uint8_t index = 0;  // evaluation point; 0 is the secret itself
    std::vector<std::uint8_t> payload;

    friend bool operator==(const Share&, const Share&) = default;
};

struct Point {
    std::uint8_t x;
    std::uint8_t y;
};

/// Horner evaluation of sum(coefficients[i] * x^i).
inline std::uint8_t evaluate(std::span<const std::uint8_t> coefficients, std::uint8_t x) {
    std::uint8_t acc = 0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) {
        acc = gf256::add(gf256::mul(acc, x), *it);
    }
    return acc;
}

/// Lagrange interpolation of the unique polynomial of degree < points.size()
/// through `points`, evaluated at `at`. The x coordinates must be distinct.
inline std::uint8_t interpolate_at(std::span<const Point> points, std::uint8_t at) {
    std::uint8_t acc = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        std::uint8_t num = 1;
        std::uint8_t den = 1;
        for (std::size_t j = 0; j < points.size(); ++j) {
            if (i == j) {
                continue;
            }
            num = gf256::mul(num, gf256::add(at, points[j].x));
            den = gf256::mul(den, gf256::add(points[i].x, points[j].x));
        }
        acc = gf256::add(acc, gf256::mul(points[i].y, gf256::div(num, den)));
    }
    return acc;
}

/// Splits `secret` into policy.n() shares with indices 1..n. Each byte
/// position gets its own random polynomial of degree k-1 whose constant term
/// is that byte; coefficients are drawn one generator call each, low byte.
template <FullRangeBitGenerator Rng>
std::vector<Share> split(std::span<const std::uint8_t> secret, const SharingPolicy& policy, Rng& rng) {
    if (secret.empty()) {
        throw SharingError(Errc::EmptySecret, "cannot split an empty secret");
    }
    std::vector<Share> shares(policy.n());
    for (unsigned i = 0; i < policy.n(); ++i) {
        shares[i].index = static_cast<std::uint8_t>(i + 1);
        shares[i].payload.resize(secret.size());
    }
    std::vector<std::uint8_t> coefficients(policy.k());
    for (std::size_t pos = 0; pos < secret.size(); ++pos) {
        coefficients[0] = secret[pos];
        for (unsigned c = 1; c < policy.k(); ++c) {
            coefficients[c] = random_byte(rng);
        }
        for (auto& share : shares) {
            share.payload[pos] = evaluate(coefficients, share.index);
        }
    }
    std::fill(coefficients.begin(), coefficients.end(), std::uint8_t{0});
    return shares;
}

template <FullRangeBitGenerator Rng>
std::vector<Share> split(std::string_view secret, const SharingPolicy& policy, Rng& rng) {
    return split(std::span(reinterpret_cast<const std::uint8_t*>(secret.data()), secret.size()),
                 policy, rng);
}

/// Recovers the secret from at least k shares. The first k shares define the
/// polynomial; every further share must lie on it or ShareMismatch is thrown.
inline std::vector<std::uint8_t> reconstruct(std::span<const Share> shares, unsigned k) {
    if (k < 1 || k > 255) {
        throw SharingError(Errc::InvalidPolicy, "threshold out of range");
    }
    if (shares.size() < k) {
        throw SharingError(Errc::NotEnoughShares,
                           "need " + std::to_string(k) + " shares, got " +
                               std::to_string(shares.size()));
    }
    std::array<bool, 256> seen{};
    for (const auto& share : shares) {
        if (share.index == 0) {
            throw SharingError(Errc::ZeroIndex, "share index 0 is reserved");
        }
        if (seen[share.index]) {
            throw SharingError(Errc::DuplicateIndex,
                               "duplicate share index " + std::to_string(share.index));
        }
        seen[share.index] = true;
        if (share.payload.size() != shares.front().payload.size()) {
            throw SharingError(Errc::LengthMismatch, "share payload lengths differ");
        }
    }
    const std::size_t length = shares.front().payload.size();
    if (length == 0) {
        throw SharingError(Errc::EmptySecret, "shares carry no payload");
    }

    std::vector<std::uint8_t> secret(length);
    std::vector<Point> basis(k);
    for (std::size_t pos = 0; pos < length; ++pos) {
        for (unsigned i = 0; i < k; ++i) {
            basis[i] = Point{shares[i].index, shares[i].payload[pos]};
        }
        secret[pos] = interpolate_at(basis, 0);
        for (std::size_t extra = k; extra < shares.size(); ++extra) {
            const auto& share = shares[extra];
            if (interpolate_at(basis, share.index) != share.payload[pos]) {
                throw SharingError(Errc::ShareMismatch,
                                   "share " + std::to_string(share.index) +
                                       " is inconsistent with the others");
            }
        }
    }
    return secret;
}

inline std::string reconstruct_string(std::span<const Share> shares, unsigned k) {
    const auto bytes = reconstruct(shares, k);
    return std::string(bytes.begin(), bytes.end());
}

}  // namespace maildust::sss
