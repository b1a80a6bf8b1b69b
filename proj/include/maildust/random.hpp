#pragma once

#include <concepts>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <utility>

#include <openssl/rand.h>

namespace maildust {

/// A uniform random bit generator whose range covers every value of its
/// result type, so low-order bits are uniform and draws are reproducible
/// across standard library implementations.
template <class G>
concept FullRangeBitGenerator =
    std::uniform_random_bit_generator<std::remove_reference_t<G>> &&
    std::unsigned_integral<typename std::remove_reference_t<G>::result_type> &&
    (std::remove_reference_t<G>::min() == 0) &&
    (std::remove_reference_t<G>::max() ==
     std::numeric_limits<typename std::remove_reference_t<G>::result_type>::max()) &&
    (sizeof(typename std::remove_reference_t<G>::result_type) >= 4);

template <FullRangeBitGenerator G>
std::uint8_t random_byte(G& rng) {
    return static_cast<std::uint8_t>(rng() & 0xFF);
}

/// Uniform integer in [0, bound) by rejection on 32-bit draws.
template <FullRangeBitGenerator G>
std::uint32_t uniform_below(G& rng, std::uint32_t bound) {
    if (bound == 0) {
        throw std::invalid_argument("uniform_below: empty range");
    }
    const std::uint64_t span = std::uint64_t{1} << 32;
    const std::uint64_t limit = span - (span % bound);
    for (;;) {
        const std::uint64_t draw = static_cast<std::uint64_t>(rng()) & 0xFFFFFFFFull;
        if (draw < limit) {
            return static_cast<std::uint32_t>(draw % bound);
        }
    }
}

/// Operating-system CSPRNG (OpenSSL RAND_bytes).
class OsRandom {
public:
    using result_type = std::uint64_t;

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        result_type value = 0;
        if (RAND_bytes(reinterpret_cast<unsigned char*>(&value), sizeof(value)) != 1) {
            throw std::runtime_error("RAND_bytes failed");
        }
        return value;
    }
};

/// Type-erased 64-bit generator, used where a random source must be stored
/// (server state) rather than passed per call.
class BitSource {
public:
    using result_type = std::uint64_t;

    BitSource() : next_(OsRandom{}) {}
    explicit BitSource(std::function<result_type()> next) : next_(std::move(next)) {}

    static BitSource seeded(std::uint64_t seed) {
        return BitSource([engine = std::mt19937_64(seed)]() mutable { return engine(); });
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return next_(); }

private:
    std::function<result_type()> next_;
};

static_assert(FullRangeBitGenerator<std::mt19937_64>);
static_assert(FullRangeBitGenerator<OsRandom>);
static_assert(FullRangeBitGenerator<BitSource>);

}  // namespace maildust
