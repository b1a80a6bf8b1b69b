#pragma once

// Token harvesting and password reconstruction on the account holder's side.

#include <future>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "maildust/mail.hpp"
#include "maildust/sss.hpp"

namespace maildust::client {

enum class Errc {
    InvalidConfig,
    NoTokensFound,
    InsufficientTokens,
    ConflictingMetadata,
    InconsistentTokens,
    AllMailboxesUnreachable,
    ServerUnreachable,
};

inline const char* to_string(Errc code) {
    switch (code) {
        case Errc::InvalidConfig: return "invalid_config";
        case Errc::NoTokensFound: return "no_tokens_found";
        case Errc::InsufficientTokens: return "insufficient_tokens";
        case Errc::ConflictingMetadata: return "conflicting_metadata";
        case Errc::InconsistentTokens: return "inconsistent_tokens";
        case Errc::AllMailboxesUnreachable: return "all_mailboxes_unreachable";
        case Errc::ServerUnreachable: return "server_unreachable";
    }
    return "unknown";
}

class ClientError : public std::runtime_error {
public:
    ClientError(Errc code, const std::string& what, std::size_t have = 0, std::size_t need = 0)
        : std::runtime_error(what), code_(code), have_(have), need_(need) {}

    Errc code() const noexcept { return code_; }
    /// For InsufficientTokens: tokens gathered and the threshold.
    std::size_t have() const noexcept { return have_; }
    std::size_t need() const noexcept { return need_; }
    std::size_t missing() const noexcept { return need_ > have_ ? need_ - have_ : 0; }

private:
    Errc code_;
    std::size_t have_;
    std::size_t need_;
};

struct MailboxEntry {
    std::string address;
    std::shared_ptr<mail::MailboxReader> reader;
};

class MailboxConfig {
public:
    explicit MailboxConfig(std::vector<MailboxEntry> entries) : entries_(std::move(entries)) {
        if (entries_.empty()) {
            throw ClientError(Errc::InvalidConfig, "at least one mailbox is required");
        }
        std::set<std::string> seen;
        for (const auto& entry : entries_) {
            if (!entry.reader) throw ClientError(Errc::InvalidConfig, "mailbox " + entry.address + " has no reader");
            if (!seen.insert(entry.address).second) {
                throw ClientError(Errc::InvalidConfig, "duplicate mailbox " + entry.address);
            }
        }
    }

    const std::vector<MailboxEntry>& entries() const noexcept { return entries_; }

private:
    std::vector<MailboxEntry> entries_;
};

struct RecoveredPassword {
    std::string password;
    std::string recovery_id;
    unsigned k = 0;
    unsigned n = 0;
    std::size_t tokens_used = 0;
    std::vector<std::string> unreachable;
    std::vector<std::string> warnings;
};

/// Fetches tokens from every mailbox (concurrently), groups them by
/// recovery id, picks `recovery_id` or else the group holding the most
/// recently received token, and reconstructs the password from it. Tokens
/// from different recovery ids are never combined.
inline RecoveredPassword recover_password(const MailboxConfig& config,
                                          const std::optional<std::string>& recovery_id = std::nullopt) {
    struct Harvest {
        std::string address;
        std::optional<mail::FetchResult> result;
        std::string error;
    };
    std::vector<std::future<Harvest>> pending;
    for (const auto& entry : config.entries()) {
        pending.push_back(std::async(std::launch::async, [&entry, &recovery_id] {
            Harvest h{entry.address, std::nullopt, {}};
            try {
                h.result = mail::fetch_tokens(*entry.reader, recovery_id);
            } catch (const mail::MailboxUnreachable& e) {
                h.error = e.what();
            }
            return h;
        }));
    }

    struct Group {
        std::map<unsigned, mail::TokenEnvelope> by_index;
        mail::Clock::time_point newest{};
        unsigned k = 0;
        unsigned n = 0;
    };
    std::map<std::string, Group> groups;
    RecoveredPassword out;
    std::size_t reachable = 0;
    for (auto& future : pending) {
        Harvest h = future.get();
        if (!h.result) {
            out.unreachable.push_back(h.address);
            out.warnings.push_back(h.address + ": " + h.error);
            continue;
        }
        ++reachable;
        for (const auto& w : h.result->warnings) {
            out.warnings.push_back(h.address + ": " + w.subject + ": " + w.reason);
        }
        for (std::size_t i = 0; i < h.result->envelopes.size(); ++i) {
            const auto& envelope = h.result->envelopes[i];
            auto [it, fresh] = groups.try_emplace(envelope.recovery_id);
            Group& group = it->second;
            if (fresh) {
                group.k = envelope.k;
                group.n = envelope.n;
            } else if (group.k != envelope.k || group.n != envelope.n) {
                throw ClientError(Errc::ConflictingMetadata,
                                  "tokens for recovery " + envelope.recovery_id + " disagree on k or n");
            }
            group.newest = std::max(group.newest, h.result->received[i]);
            const auto [slot, inserted] = group.by_index.try_emplace(envelope.share_index, envelope);
            if (!inserted && slot->second.payload != envelope.payload) {
                throw ClientError(Errc::ConflictingMetadata,
                                  "two different tokens claim index " + std::to_string(envelope.share_index));
            }
        }
    }
    if (reachable == 0) {
        throw ClientError(Errc::AllMailboxesUnreachable, "no mailbox could be read");
    }

    const Group* chosen = nullptr;
    if (recovery_id) {
        const auto it = groups.find(*recovery_id);
        if (it != groups.end()) {
            chosen = &it->second;
            out.recovery_id = it->first;
        }
    } else {
        for (const auto& [id, group] : groups) {
            if (chosen == nullptr || group.newest > chosen->newest) {
                chosen = &group;
                out.recovery_id = id;
            }
        }
    }
    if (chosen == nullptr) {
        throw ClientError(Errc::NoTokensFound, recovery_id ? "no tokens for recovery " + *recovery_id
                                                           : std::string("no recovery tokens found"));
    }
    out.k = chosen->k;
    out.n = chosen->n;
    if (chosen->by_index.size() < chosen->k) {
        throw ClientError(Errc::InsufficientTokens,
                          "found " + std::to_string(chosen->by_index.size()) + " of " + std::to_string(chosen->k) +
                              " required tokens; " + std::to_string(chosen->k - chosen->by_index.size()) +
                              " more needed",
                          chosen->by_index.size(), chosen->k);
    }
    std::vector<sss::Share> shares;
    for (const auto& [index, envelope] : chosen->by_index) {
        shares.push_back(envelope.share());
    }
    try {
        out.password = sss::reconstruct_string(shares, chosen->k);
    } catch (const sss::SharingError& e) {
        throw ClientError(Errc::InconsistentTokens, e.what());
    }
    out.tokens_used = shares.size();
    return out;
}

/// POST /login against `server_url` (e.g. "http://127.0.0.1:8080").
inline bool verify_login(const std::string& server_url, const std::string& username, const std::string& password) {
    httplib::Client http(server_url);
    http.set_connection_timeout(5);
    http.set_read_timeout(10);
    const std::string body = nlohmann::json{{"username", username}, {"password", password}}.dump();
    const auto res = http.Post("/login", body, "application/json");
    if (!res) {
        throw ClientError(Errc::ServerUnreachable,
                          "cannot reach " + server_url + ": " + httplib::to_string(res.error()));
    }
    return res->status == 200;
}

}  // namespace maildust::client
