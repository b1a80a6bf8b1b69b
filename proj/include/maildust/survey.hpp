#pragma once

// Website survey aggregates: per-country recovery mechanism counts,
// vulnerable percentages and generated-password robustness.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "maildust/password.hpp"
#include "maildust/threat.hpp"

namespace maildust::survey {

using threat::RecoveryMechanism;

enum class Errc { MalformedCsv, UnknownMechanism, EmptyDataset, Io };

inline const char* to_string(Errc code) {
    switch (code) {
        case Errc::MalformedCsv: return "malformed_csv";
        case Errc::UnknownMechanism: return "unknown_mechanism";
        case Errc::EmptyDataset: return "empty_dataset";
        case Errc::Io: return "io_error";
    }
    return "unknown";
}

class SurveyError : public std::runtime_error {
public:
    SurveyError(Errc code, const std::string& what, std::size_t line = 0)
        : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
          code_(code),
          line_(line) {}

    Errc code() const noexcept { return code_; }
    std::size_t line() const noexcept { return line_; }

private:
    Errc code_;
    std::size_t line_;
};

struct SurveyRow {
    std::string country;
    std::string site;
    /// nullopt for excluded sites (no authentication, unproducible
    /// registration data, or not working).
    std::optional<RecoveryMechanism> mechanism;
};

/// Case-insensitive; '-', '_' and ' ' are interchangeable and ignored.
inline std::optional<std::optional<RecoveryMechanism>> parse_mechanism(std::string_view text) {
    std::string key;
    for (unsigned char c : text) {
        if (c == '-' || c == '_' || c == ' ') continue;
        key.push_back(static_cast<char>(std::tolower(c)));
    }
    using M = RecoveryMechanism;
    static const std::map<std::string, std::optional<M>, std::less<>> kAliases = {
        {"oldpw", M::OldPw},       {"oldpassword", M::OldPw},     {"old", M::OldPw},
        {"newpw", M::NewPw},       {"newpassword", M::NewPw},     {"new", M::NewPw},
        {"temppw", M::TempPw},     {"temppassword", M::TempPw},   {"temp", M::TempPw},
        {"temporary", M::TempPw},  {"httplink", M::HttpLink},     {"http", M::HttpLink},
        {"httpslink", M::HttpsLink}, {"https", M::HttpsLink},
        {"excluded", std::nullopt}, {"noauth", std::nullopt},     {"unproducible", std::nullopt},
        {"notworking", std::nullopt},
    };
    const auto it = kAliases.find(key);
    if (it == kAliases.end()) return std::nullopt;
    return it->second;
}

namespace detail {

/// Splits one CSV record; supports double-quoted fields with "" escapes.
inline std::optional<std::vector<std::string>> split_csv(std::string_view line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back().push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back().push_back(c);
            }
        } else if (c == '"' && fields.back().empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else {
            fields.back().push_back(c);
        }
    }
    if (quoted) return std::nullopt;
    for (auto& f : fields) {
        const auto b = f.find_first_not_of(" \t");
        const auto e = f.find_last_not_of(" \t");
        f = b == std::string::npos ? std::string{} : f.substr(b, e - b + 1);
    }
    return fields;
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SurveyError(Errc::Io, "cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

}  // namespace detail

/// Header must be exactly country,site,mechanism. Blank lines and lines
/// starting with '#' are skipped.
inline std::vector<SurveyRow> parse_survey(const std::vector<std::string>& lines) {
    std::vector<SurveyRow> rows;
    bool header_seen = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t line_number = i + 1;
        const std::string& line = lines[i];
        if (line.empty() || line[0] == '#') continue;
        const auto fields = detail::split_csv(line);
        if (!fields) throw SurveyError(Errc::MalformedCsv, "unterminated quote", line_number);
        if (!header_seen) {
            auto lower = *fields;
            for (auto& f : lower) {
                std::transform(f.begin(), f.end(), f.begin(), [](unsigned char c) { return std::tolower(c); });
            }
            if (lower != std::vector<std::string>{"country", "site", "mechanism"}) {
                throw SurveyError(Errc::MalformedCsv, "header must be country,site,mechanism", line_number);
            }
            header_seen = true;
            continue;
        }
        if (fields->size() != 3) {
            throw SurveyError(Errc::MalformedCsv, "expected 3 fields, got " + std::to_string(fields->size()),
                              line_number);
        }
        if ((*fields)[0].empty()) throw SurveyError(Errc::MalformedCsv, "empty country", line_number);
        const auto mechanism = parse_mechanism((*fields)[2]);
        if (!mechanism) {
            throw SurveyError(Errc::UnknownMechanism, "unknown mechanism '" + (*fields)[2] + "'", line_number);
        }
        rows.push_back(SurveyRow{(*fields)[0], (*fields)[1], *mechanism});
    }
    if (!header_seen) throw SurveyError(Errc::MalformedCsv, "missing header");
    return rows;
}

inline std::vector<SurveyRow> load_survey(const std::filesystem::path& path) {
    return parse_survey(detail::read_lines(path));
}

/// Percentage in hundredths of a percent, rounded half-up: 5484 = 54.84%.
using Hundredths = std::int64_t;

inline Hundredths percent_hundredths(std::uint64_t part, std::uint64_t whole) {
    if (whole == 0) throw SurveyError(Errc::EmptyDataset, "percentage of an empty set");
    return static_cast<Hundredths>((part * 20000 + whole) / (2 * whole));
}

inline double as_percent(Hundredths h) { return static_cast<double>(h) / 100.0; }

struct CountrySummary {
    std::uint64_t analyzed = 0;
    std::array<std::uint64_t, 5> counts{};  // indexed by RecoveryMechanism
    Hundredths vulnerable_hundredths = 0;

    std::uint64_t count(RecoveryMechanism m) const { return counts[static_cast<std::size_t>(m)]; }
    std::uint64_t vulnerable() const { return analyzed - count(RecoveryMechanism::HttpsLink); }
    double vulnerable_pct() const { return as_percent(vulnerable_hundredths); }
};

namespace detail {

inline void finish(CountrySummary& s) {
    s.vulnerable_hundredths = percent_hundredths(s.vulnerable(), s.analyzed);
}

}  // namespace detail

/// Excluded rows are ignored; countries with only excluded rows are omitted.
inline std::map<std::string, CountrySummary> country_summary(const std::vector<SurveyRow>& rows) {
    std::map<std::string, CountrySummary> out;
    for (const auto& row : rows) {
        if (!row.mechanism) continue;
        auto& s = out[row.country];
        ++s.analyzed;
        ++s.counts[static_cast<std::size_t>(*row.mechanism)];
    }
    for (auto& [country, s] : out) detail::finish(s);
    return out;
}

inline CountrySummary overall_summary(const std::vector<SurveyRow>& rows) {
    CountrySummary s;
    for (const auto& row : rows) {
        if (!row.mechanism) continue;
        ++s.analyzed;
        ++s.counts[static_cast<std::size_t>(*row.mechanism)];
    }
    if (s.analyzed == 0) throw SurveyError(Errc::EmptyDataset, "no analyzed sites in dataset");
    detail::finish(s);
    return s;
}

struct RobustnessEntry {
    std::uint64_t charset_size = 0;
    std::uint64_t length = 0;
};

/// Exponents t of the 2^t thresholds.
inline const std::vector<unsigned>& default_thresholds() {
    static const std::vector<unsigned> kThresholds = {10, 20, 30, 40, 50, 60, 70};
    return kThresholds;
}

struct RobustnessPoint {
    unsigned exponent;
    std::uint64_t above;
    Hundredths pct_hundredths;
    double exact_pct;
};

/// For each threshold 2^t, the share of entries with charset^length > 2^t.
inline std::vector<RobustnessPoint> robustness_distribution(const std::vector<RobustnessEntry>& entries,
                                                            const std::vector<unsigned>& exponents = default_thresholds()) {
    if (entries.empty()) throw SurveyError(Errc::EmptyDataset, "no robustness entries");
    std::vector<RobustnessPoint> out;
    for (const unsigned t : exponents) {
        std::uint64_t above = 0;
        for (const auto& e : entries) {
            if (password::log2_combinations(e.charset_size, e.length) > static_cast<double>(t)) ++above;
        }
        out.push_back({t, above, percent_hundredths(above, entries.size()),
                       100.0 * static_cast<double>(above) / static_cast<double>(entries.size())});
    }
    return out;
}

/// charset_size,length per line; an optional header line is allowed.
inline std::vector<RobustnessEntry> parse_robustness(const std::vector<std::string>& lines) {
    std::vector<RobustnessEntry> out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t line_number = i + 1;
        const auto& line = lines[i];
        if (line.empty() || line[0] == '#') continue;
        const auto fields = detail::split_csv(line);
        if (!fields || fields->size() != 2) {
            throw SurveyError(Errc::MalformedCsv, "expected charset_size,length", line_number);
        }
        if (out.empty() && (*fields)[0] == "charset_size") continue;
        auto parse = [&](const std::string& f) {
            std::uint64_t v = 0;
            const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc{} || ptr != f.data() + f.size() || v == 0) {
                throw SurveyError(Errc::MalformedCsv, "expected a positive integer, got '" + f + "'", line_number);
            }
            return v;
        };
        out.push_back({parse((*fields)[0]), parse((*fields)[1])});
    }
    return out;
}

inline std::vector<RobustnessEntry> load_robustness(const std::filesystem::path& path) {
    return parse_robustness(detail::read_lines(path));
}

}  // namespace maildust::survey
