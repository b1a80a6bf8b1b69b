#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "maildust/sss.hpp"
#include "oracles.hpp"

using namespace maildust::sss;
using maildust::testing::slow_eval;

namespace {

std::vector<std::uint8_t> random_secret(std::mt19937_64& rng, std::size_t length) {
    std::vector<std::uint8_t> s(length);
    for (auto& b : s) b = static_cast<std::uint8_t>(rng());
    return s;
}

Errc error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const SharingError& e) {
        return e.code();
    }
    ADD_FAILURE() << "no SharingError thrown";
    return Errc::EmptySecret;
}

}  // namespace

TEST(SharingPolicy, RejectsInvalidThresholds) {
    EXPECT_EQ(error_of([] { SharingPolicy(0, 3); }), Errc::InvalidPolicy);
    EXPECT_EQ(error_of([] { SharingPolicy(4, 3); }), Errc::InvalidPolicy);
    EXPECT_EQ(error_of([] { SharingPolicy(2, 256); }), Errc::InvalidPolicy);
    EXPECT_NO_THROW(SharingPolicy(255, 255));
    EXPECT_NO_THROW(SharingPolicy(1, 1));
}

TEST(Split, ThresholdOneCopiesTheSecret) {
    std::mt19937_64 rng(7);
    const std::vector<std::uint8_t> secret = {'h', 'u', 'n', 't', 'e', 'r', '2'};
    const auto shares = split(secret, SharingPolicy(1, 3), rng);
    ASSERT_EQ(shares.size(), 3u);
    for (const auto& s : shares) EXPECT_EQ(s.payload, secret);

    const auto single = split(secret, SharingPolicy(1, 1), rng);
    ASSERT_EQ(single.size(), 1u);
    EXPECT_EQ(single[0].index, 1);
    EXPECT_EQ(single[0].payload, secret);
}

TEST(Split, EmptySecretIsRejected) {
    std::mt19937_64 rng(1);
    EXPECT_EQ(error_of([&] { split(std::vector<std::uint8_t>{}, SharingPolicy(2, 3), rng); }), Errc::EmptySecret);
}

// Coefficient draw: one generator call per coefficient, low byte. The
// expected payloads were computed with the shift-and-add oracle:
// mt19937_64(42) first output 13930160852258120406 -> coefficient 0xD6,
// f(x) = 0x2A + 0xD6 x  =>  f(1)=0xFC, f(2)=0x9D, f(3)=0x4B.
TEST(Split, SeededSingleByteExampleMatchesOracle) {
    std::mt19937_64 oracle_rng(42);
    const auto coefficient = static_cast<std::uint8_t>(oracle_rng() & 0xFF);
    ASSERT_EQ(coefficient, 0xD6);
    for (std::uint8_t x = 1; x <= 3; ++x) {
        const std::uint8_t expected[] = {0, 0xFC, 0x9D, 0x4B};
        ASSERT_EQ(slow_eval({0x2A, coefficient}, x), expected[x]);
    }

    std::mt19937_64 rng(42);
    const auto shares = split(std::vector<std::uint8_t>{0x2A}, SharingPolicy(2, 3), rng);
    ASSERT_EQ(shares.size(), 3u);
    EXPECT_EQ(shares[0], (Share{1, {0xFC}}));
    EXPECT_EQ(shares[1], (Share{2, {0x9D}}));
    EXPECT_EQ(shares[2], (Share{3, {0x4B}}));

    const std::vector<Share> pair = {shares[0], shares[2]};
    EXPECT_EQ(reconstruct(pair, 2), std::vector<std::uint8_t>{0x2A});
}

TEST(Split, SharesLieOnPolynomialsRebuiltFromTheDraws) {
    std::mt19937_64 rng(99);
    std::mt19937_64 replay(99);
    const std::vector<std::uint8_t> secret = {1, 2, 3, 250};
    const auto shares = split(secret, SharingPolicy(3, 5), rng);
    for (std::size_t pos = 0; pos < secret.size(); ++pos) {
        const std::vector<std::uint8_t> poly = {secret[pos], static_cast<std::uint8_t>(replay()),
                                                static_cast<std::uint8_t>(replay())};
        for (const auto& share : shares) {
            EXPECT_EQ(share.payload[pos], slow_eval(poly, share.index));
        }
    }
}

TEST(Split, IndicesAreOneToNAndPayloadLengthIsPreserved) {
    std::mt19937_64 rng(3);
    for (unsigned n = 1; n <= 12; ++n) {
        for (unsigned k = 1; k <= n; k += 3) {
            const auto secret = random_secret(rng, 1 + rng() % 40);
            const auto shares = split(secret, SharingPolicy(k, n), rng);
            ASSERT_EQ(shares.size(), n);
            for (unsigned i = 0; i < n; ++i) {
                EXPECT_EQ(shares[i].index, i + 1);
                EXPECT_EQ(shares[i].payload.size(), secret.size());
            }
        }
    }
}

TEST(Reconstruct, RoundTripsForAllSmallPolicies) {
    std::mt19937_64 rng(2024);
    for (unsigned n = 1; n <= 10; ++n) {
        for (unsigned k = 1; k <= n; ++k) {
            for (std::size_t length : {1u, 2u, 17u, 64u}) {
                const auto secret = random_secret(rng, length);
                auto shares = split(secret, SharingPolicy(k, n), rng);
                std::shuffle(shares.begin(), shares.end(), rng);
                ASSERT_EQ(reconstruct(std::span(shares).first(k), k), secret);
                ASSERT_EQ(reconstruct(shares, k), secret);
            }
        }
    }
}

TEST(Reconstruct, FewerThanKSharesIsAnError) {
    std::mt19937_64 rng(5);
    const auto shares = split(random_secret(rng, 8), SharingPolicy(3, 5), rng);
    EXPECT_EQ(error_of([&] { reconstruct(std::span(shares).first(2), 3); }), Errc::NotEnoughShares);
}

TEST(Reconstruct, RejectsDuplicateZeroAndMismatchedShares) {
    std::mt19937_64 rng(6);
    auto shares = split(random_secret(rng, 8), SharingPolicy(2, 4), rng);

    std::vector<Share> dup = {shares[0], shares[0]};
    EXPECT_EQ(error_of([&] { reconstruct(dup, 2); }), Errc::DuplicateIndex);

    std::vector<Share> zero = {Share{0, shares[0].payload}, shares[1]};
    EXPECT_EQ(error_of([&] { reconstruct(zero, 2); }), Errc::ZeroIndex);

    std::vector<Share> ragged = {shares[0], shares[1]};
    ragged[1].payload.pop_back();
    EXPECT_EQ(error_of([&] { reconstruct(ragged, 2); }), Errc::LengthMismatch);
}

// Corrupting a single byte anywhere in a (k+1)-share call either trips the
// consistency check or changes the output; it never passes silently.
TEST(Reconstruct, SingleByteCorruptionIsNeverSilent) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const unsigned n = 2 + rng() % 6;
        const unsigned k = 1 + rng() % (n - 1);
        const auto secret = random_secret(rng, 1 + rng() % 16);
        auto shares = split(secret, SharingPolicy(k, n), rng);
        std::shuffle(shares.begin(), shares.end(), rng);
        shares.resize(k + 1);
        auto& victim = shares[rng() % shares.size()];
        victim.payload[rng() % victim.payload.size()] ^= static_cast<std::uint8_t>(1 + rng() % 255);
        try {
            EXPECT_NE(reconstruct(shares, k), secret);
        } catch (const SharingError& e) {
            EXPECT_EQ(e.code(), Errc::ShareMismatch);
        }
    }
}

// With k = 2 one share (x1, y1) leaves every secret possible: for each s
// exactly one of the 256 lines f(x) = s + a x passes through (x1, y1).
TEST(Secrecy, OneShareOfTwoIsConsistentWithEverySecret) {
    for (int x1 = 1; x1 < 256; x1 += 17) {
        for (int y1 = 0; y1 < 256; y1 += 5) {
            for (int s = 0; s < 256; ++s) {
                int lines = 0;
                for (int a = 0; a < 256; ++a) {
                    const std::vector<std::uint8_t> poly = {static_cast<std::uint8_t>(s), static_cast<std::uint8_t>(a)};
                    if (slow_eval(poly, static_cast<std::uint8_t>(x1)) == y1) ++lines;
                }
                ASSERT_EQ(lines, 1) << "x1=" << x1 << " y1=" << y1 << " s=" << s;
            }
        }
    }
}

TEST(Interpolate, AgreesWithDirectEvaluation) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const unsigned degree = rng() % 6;
        std::vector<std::uint8_t> poly(degree + 1);
        for (auto& c : poly) c = static_cast<std::uint8_t>(rng());
        std::vector<Point> points;
        for (unsigned i = 0; i <= degree; ++i) {
            const auto x = static_cast<std::uint8_t>(i + 1 + trial % 50);
            points.push_back({x, slow_eval(poly, x)});
        }
        for (int at = 0; at < 256; at += 15) {
            ASSERT_EQ(interpolate_at(points, static_cast<std::uint8_t>(at)),
                      slow_eval(poly, static_cast<std::uint8_t>(at)));
        }
    }
}
