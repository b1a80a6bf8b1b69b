#pragma once

// Token envelope: the mail body that carries one share.
//
//   version: 1
//   recovery-id: <uuid>
//   index: <1..255>
//   k: <k>
//   n: <n>
//   payload: <standard base64>
//   crc32: <8 lowercase hex digits over the bytes of the six lines above>
//
// Every line ends with LF. Decoding is strict: a body decodes only if
// re-encoding the result reproduces it byte for byte.

#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "maildust/encoding.hpp"
#include "maildust/random.hpp"
#include "maildust/sss.hpp"

namespace maildust::mail {

inline constexpr unsigned kEnvelopeVersion = 1;
inline constexpr std::string_view kTokenSubjectPrefix = "MAILDUST-TOKEN ";

enum class EnvelopeErrc { MalformedEnvelope, ChecksumMismatch, UnsupportedVersion, InvalidEnvelope };

inline const char* to_string(EnvelopeErrc code) {
    switch (code) {
        case EnvelopeErrc::MalformedEnvelope: return "malformed_envelope";
        case EnvelopeErrc::ChecksumMismatch: return "checksum_mismatch";
        case EnvelopeErrc::UnsupportedVersion: return "unsupported_version";
        case EnvelopeErrc::InvalidEnvelope: return "invalid_envelope";
    }
    return "unknown";
}

class EnvelopeError : public std::runtime_error {
public:
    EnvelopeError(EnvelopeErrc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    EnvelopeErrc code() const noexcept { return code_; }

private:
    EnvelopeErrc code_;
};

/// True for the canonical lowercase 8-4-4-4-12 hex form.
inline bool is_uuid(std::string_view text) {
    if (text.size() != 36) {
        return false;
    }
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (i == 8 || i == 13 || i == 18 || i == 23) {
            if (c != '-') return false;
        } else if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) {
            return false;
        }
    }
    return true;
}

/// Random (version 4) UUID.
template <FullRangeBitGenerator Rng>
std::string make_uuid(Rng& rng) {
    std::array<std::uint8_t, 16> bytes{};
    for (auto& b : bytes) {
        b = random_byte(rng);
    }
    bytes[6] = static_cast<std::uint8_t>((bytes[6] & 0x0F) | 0x40);
    bytes[8] = static_cast<std::uint8_t>((bytes[8] & 0x3F) | 0x80);
    const std::string hex = encoding::to_hex(bytes);
    return hex.substr(0, 8) + "-" + hex.substr(8, 4) + "-" + hex.substr(12, 4) + "-" +
           hex.substr(16, 4) + "-" + hex.substr(20, 12);
}

struct TokenEnvelope {
    unsigned version = kEnvelopeVersion;
    std::string recovery_id;
    unsigned share_index = 0;
    unsigned k = 0;
    unsigned n = 0;
    std::vector<std::uint8_t> payload;

    sss::Share share() const { return sss::Share{static_cast<std::uint8_t>(share_index), payload}; }

    friend bool operator==(const TokenEnvelope&, const TokenEnvelope&) = default;
};

inline void validate(const TokenEnvelope& e) {
    auto fail = [](const std::string& why) { throw EnvelopeError(EnvelopeErrc::InvalidEnvelope, why); };
    if (e.version != kEnvelopeVersion) {
        throw EnvelopeError(EnvelopeErrc::UnsupportedVersion,
                            "unsupported envelope version " + std::to_string(e.version));
    }
    if (!is_uuid(e.recovery_id)) fail("recovery id is not a canonical uuid");
    if (e.n < 1 || e.n > 255) fail("n out of range");
    if (e.k < 1 || e.k > e.n) fail("k out of range");
    if (e.share_index < 1 || e.share_index > e.n) fail("share index out of range");
    if (e.payload.empty()) fail("empty payload");
}

namespace detail {

inline std::string envelope_prefix(const TokenEnvelope& e) {
    std::string out;
    out += "version: " + std::to_string(e.version) + "\n";
    out += "recovery-id: " + e.recovery_id + "\n";
    out += "index: " + std::to_string(e.share_index) + "\n";
    out += "k: " + std::to_string(e.k) + "\n";
    out += "n: " + std::to_string(e.n) + "\n";
    out += "payload: " + encoding::base64_encode(e.payload) + "\n";
    return out;
}

inline std::string crc_hex(std::uint32_t crc) {
    char buf[9];
    std::snprintf(buf, sizeof(buf), "%08x", crc);
    return buf;
}

}  // namespace detail

inline std::string encode_token(const TokenEnvelope& envelope) {
    validate(envelope);
    std::string body = detail::envelope_prefix(envelope);
    body += "crc32: " + detail::crc_hex(encoding::crc32(body)) + "\n";
    return body;
}

inline TokenEnvelope decode_token(std::string_view body) {
    auto malformed = [](const std::string& why) -> EnvelopeError {
        return EnvelopeError(EnvelopeErrc::MalformedEnvelope, why);
    };
    static constexpr std::array<std::string_view, 7> kKeys = {
        "version", "recovery-id", "index", "k", "n", "payload", "crc32"};

    if (body.empty() || body.back() != '\n') {
        throw malformed("envelope must end with a line feed");
    }
    std::vector<std::string_view> values;
    std::size_t start = 0;
    std::size_t prefix_end = 0;
    while (start < body.size()) {
        const std::size_t end = body.find('\n', start);
        const std::string_view line = body.substr(start, end - start);
        const std::size_t slot = values.size();
        if (slot >= kKeys.size()) {
            throw malformed("unexpected line after crc32");
        }
        const std::size_t colon = line.find(": ");
        if (colon == std::string_view::npos) {
            throw malformed("line " + std::to_string(slot + 1) + " is not 'key: value'");
        }
        const std::string_view key = line.substr(0, colon);
        if (key != kKeys[slot]) {
            throw malformed("expected key '" + std::string(kKeys[slot]) + "' on line " +
                            std::to_string(slot + 1));
        }
        values.push_back(line.substr(colon + 2));
        if (slot == 0) {
            const std::string_view v = values.back();
            if (v != "1") {
                unsigned parsed = 0;
                const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), parsed);
                if (ec == std::errc{} && ptr == v.data() + v.size()) {
                    throw EnvelopeError(EnvelopeErrc::UnsupportedVersion,
                                        "unsupported envelope version " + std::string(v));
                }
                throw malformed("bad version field");
            }
        }
        if (slot == 5) {
            prefix_end = end + 1;
        }
        start = end + 1;
    }
    if (values.size() != kKeys.size()) {
        throw malformed("envelope has " + std::to_string(values.size()) + " lines, expected 7");
    }

    const std::string_view crc_text = values[6];
    const auto crc_bytes = encoding::from_hex(crc_text);
    if (crc_text.size() != 8 || !crc_bytes) {
        throw malformed("crc32 must be 8 lowercase hex digits");
    }
    if (detail::crc_hex(encoding::crc32(body.substr(0, prefix_end))) != crc_text) {
        throw EnvelopeError(EnvelopeErrc::ChecksumMismatch, "envelope checksum mismatch");
    }

    auto number = [&](std::string_view v, const char* name) {
        unsigned parsed = 0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), parsed);
        if (ec != std::errc{} || ptr != v.data() + v.size() || std::to_string(parsed) != v) {
            throw malformed(std::string("bad numeric field ") + name);
        }
        return parsed;
    };

    TokenEnvelope envelope;
    envelope.version = kEnvelopeVersion;
    envelope.recovery_id = std::string(values[1]);
    envelope.share_index = number(values[2], "index");
    envelope.k = number(values[3], "k");
    envelope.n = number(values[4], "n");
    auto payload = encoding::base64_decode(values[5]);
    if (!payload) {
        throw malformed("payload is not canonical base64");
    }
    envelope.payload = std::move(*payload);
    try {
        validate(envelope);
    } catch (const EnvelopeError& e) {
        throw malformed(e.what());
    }
    return envelope;
}

inline std::string token_subject(std::string_view recovery_id) {
    return std::string(kTokenSubjectPrefix) + std::string(recovery_id);
}

inline bool is_token_subject(std::string_view subject) {
    return subject.substr(0, kTokenSubjectPrefix.size()) == kTokenSubjectPrefix;
}

}  // namespace maildust::mail
