#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

namespace maildust::gf256 {

/// Reduction polynomial x^8 + x^4 + x^3 + x + 1.
inline constexpr std::uint16_t kPolynomial = 0x11B;

namespace detail {

struct Tables {
    std::array<std::uint8_t, 510> exp{};
    std::array<std::uint8_t, 256> log{};
};

// 0x03 generates the multiplicative group under 0x11B.
constexpr Tables build_tables() {
    Tables t{};
    std::uint16_t x = 1;
    for (std::size_t i = 0; i < 255; ++i) {
        t.exp[i] = static_cast<std::uint8_t>(x);
        t.log[x] = static_cast<std::uint8_t>(i);
        std::uint16_t doubled = static_cast<std::uint16_t>(x << 1);
        if (doubled & 0x100) {
            doubled ^= kPolynomial;
        }
        x = static_cast<std::uint16_t>(doubled ^ x);
    }
    for (std::size_t i = 255; i < t.exp.size(); ++i) {
        t.exp[i] = t.exp[i - 255];
    }
    return t;
}

inline constexpr Tables kTables = build_tables();

}  // namespace detail

constexpr std::uint8_t add(std::uint8_t a, std::uint8_t b) noexcept {
    return static_cast<std::uint8_t>(a ^ b);
}

constexpr std::uint8_t mul(std::uint8_t a, std::uint8_t b) noexcept {
    if (a == 0 || b == 0) {
        return 0;
    }
    return detail::kTables.exp[detail::kTables.log[a] + detail::kTables.log[b]];
}

constexpr std::uint8_t inv(std::uint8_t a) {
    if (a == 0) {
        throw std::domain_error("gf256: zero has no inverse");
    }
    return detail::kTables.exp[255 - detail::kTables.log[a]];
}

constexpr std::uint8_t div(std::uint8_t a, std::uint8_t b) {
    return mul(a, inv(b));
}

static_assert(mul(0x53, 0xCA) == 0x01);
static_assert(mul(0x57, 0x83) == 0xC1);

}  // namespace maildust::gf256
