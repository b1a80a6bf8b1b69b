#pragma once

// Attacker taxonomy: resource access, detectability per recovery mechanism,
// and a simulation of the mail-provider attack against single-mailbox
// recovery and against threshold recovery.

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "maildust/client.hpp"
#include "maildust/password.hpp"
#include "maildust/server.hpp"
#include "maildust/sim_provider.hpp"
#include "maildust/sss.hpp"

namespace maildust::threat {

enum class AttackerKind { MailProvider, WebServerIntruder, ClientIntruder, Sniffing };
enum class Mode { Passive, Active };
enum class RecoveryMechanism { OldPw, NewPw, TempPw, HttpLink, HttpsLink };

inline constexpr std::array<AttackerKind, 4> kAttackerKinds = {
    AttackerKind::MailProvider, AttackerKind::WebServerIntruder, AttackerKind::ClientIntruder,
    AttackerKind::Sniffing};
inline constexpr std::array<Mode, 2> kModes = {Mode::Passive, Mode::Active};
/// In decreasing order of severity.
inline constexpr std::array<RecoveryMechanism, 5> kMechanisms = {
    RecoveryMechanism::OldPw, RecoveryMechanism::NewPw, RecoveryMechanism::TempPw, RecoveryMechanism::HttpLink,
    RecoveryMechanism::HttpsLink};

/// Every email mechanism except an HTTPS reset link counts as vulnerable.
constexpr bool is_vulnerable(RecoveryMechanism m) { return m != RecoveryMechanism::HttpsLink; }

inline const char* to_string(AttackerKind k) {
    switch (k) {
        case AttackerKind::MailProvider: return "Mail service provider-level";
        case AttackerKind::WebServerIntruder: return "Web server intruder";
        case AttackerKind::ClientIntruder: return "Client intruder";
        case AttackerKind::Sniffing: return "Sniffing";
    }
    return "?";
}

inline const char* to_string(Mode m) { return m == Mode::Passive ? "passive" : "active"; }

inline const char* to_string(RecoveryMechanism m) {
    switch (m) {
        case RecoveryMechanism::OldPw: return "Old Pw";
        case RecoveryMechanism::NewPw: return "New Pw";
        case RecoveryMechanism::TempPw: return "Temp Pw";
        case RecoveryMechanism::HttpLink: return "HTTP link";
        case RecoveryMechanism::HttpsLink: return "HTTPS link";
    }
    return "?";
}

enum class Detectability {
    Undetectable,
    Detectable,
    StorageMethod,
    DetectableOrStorageMethod,
    DetectableOrUserBehavior,
    DetectableUseless,
    DetectableEasier,
};

inline const char* to_string(Detectability d) {
    switch (d) {
        case Detectability::Undetectable: return "undetectable";
        case Detectability::Detectable: return "detectable";
        case Detectability::StorageMethod: return "storage method";
        case Detectability::DetectableOrStorageMethod: return "detectable / storage method";
        case Detectability::DetectableOrUserBehavior: return "detectable / user's behavior";
        case Detectability::DetectableUseless: return "detectable - useless";
        case Detectability::DetectableEasier: return "detectable - easier";
    }
    return "?";
}

struct Access {
    bool user_emails;
    bool password_db;
    bool recovery_method;

    friend bool operator==(const Access&, const Access&) = default;
};

constexpr Access access_matrix(AttackerKind kind) {
    switch (kind) {
        case AttackerKind::MailProvider: return {true, false, true};
        case AttackerKind::WebServerIntruder: return {false, true, true};
        case AttackerKind::ClientIntruder: return {true, false, true};
        case AttackerKind::Sniffing: return {false, false, true};
    }
    return {false, false, false};
}

namespace detail {

using D = Detectability;
using Row = std::array<Detectability, 5>;

// Rows follow kAttackerKinds, columns follow kMechanisms.
inline constexpr std::array<Row, 4> kPassive = {{
    {D::Undetectable, D::Undetectable, D::Detectable, D::Detectable, D::Detectable},
    {D::Undetectable, D::StorageMethod, D::StorageMethod, D::StorageMethod, D::StorageMethod},
    {D::Undetectable, D::Undetectable, D::DetectableOrUserBehavior, D::DetectableOrUserBehavior,
     D::DetectableOrUserBehavior},
    {D::Undetectable, D::Undetectable, D::Undetectable, D::Undetectable, D::Undetectable},
}};

inline constexpr std::array<Row, 4> kActive = {{
    {D::Undetectable, D::Detectable, D::Detectable, D::Detectable, D::Detectable},
    {D::Undetectable, D::DetectableOrStorageMethod, D::DetectableOrStorageMethod, D::DetectableOrStorageMethod,
     D::DetectableOrStorageMethod},
    {D::Undetectable, D::Detectable, D::Detectable, D::Detectable, D::Detectable},
    {D::DetectableUseless, D::DetectableEasier, D::DetectableEasier, D::Detectable, D::Detectable},
}};

}  // namespace detail

constexpr Detectability detectability(AttackerKind kind, Mode mode, RecoveryMechanism mechanism) {
    const auto& table = mode == Mode::Passive ? detail::kPassive : detail::kActive;
    return table[static_cast<std::size_t>(kind)][static_cast<std::size_t>(mechanism)];
}

// ---------------------------------------------------------------------------
// Secrecy evidence

/// Number of candidate secret bytes s in 0..255 for which some polynomial of
/// degree < k passes through (0, s) and every given point, found by
/// enumerating all 256^k polynomials. Limited to k <= 3.
inline std::size_t count_consistent_secrets_brute_force(std::span<const sss::Point> points, unsigned k) {
    if (k < 1 || k > 3) {
        throw std::invalid_argument("brute-force enumeration is limited to k <= 3");
    }
    std::array<bool, 256> consistent{};
    std::array<std::uint8_t, 3> coefficients{};
    const std::uint32_t total = 1u << (8 * k);
    for (std::uint32_t code = 0; code < total; ++code) {
        for (unsigned i = 0; i < k; ++i) coefficients[i] = static_cast<std::uint8_t>(code >> (8 * i));
        bool fits = true;
        for (const auto& p : points) {
            if (sss::evaluate(std::span(coefficients.data(), k), p.x) != p.y) {
                fits = false;
                break;
            }
        }
        if (fits) consistent[coefficients[0]] = true;
    }
    return static_cast<std::size_t>(std::count(consistent.begin(), consistent.end(), true));
}

/// Same count by interpolation: s is consistent iff the polynomial through
/// (0, s) and the first k-1 points also passes through the remaining points.
inline std::size_t count_consistent_secrets(std::span<const sss::Point> points, unsigned k) {
    std::size_t count = 0;
    for (unsigned s = 0; s < 256; ++s) {
        std::vector<sss::Point> basis{{0, static_cast<std::uint8_t>(s)}};
        for (std::size_t i = 0; i < points.size() && basis.size() < k; ++i) basis.push_back(points[i]);
        bool fits = true;
        for (std::size_t i = basis.size() - 1; i < points.size(); ++i) {
            if (sss::interpolate_at(basis, points[i].x) != points[i].y) {
                fits = false;
                break;
            }
        }
        if (fits) ++count;
    }
    return count;
}

// ---------------------------------------------------------------------------
// Mail-provider attack simulation

class InvalidScenario : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Scheme { Baseline, Maildust };
enum class Outcome { FullCompromise, NoInformation };

inline const char* to_string(Scheme s) { return s == Scheme::Baseline ? "baseline" : "maildust"; }
inline const char* to_string(Outcome o) { return o == Outcome::FullCompromise ? "full_compromise" : "no_information"; }

/// Single-mailbox site using the "New Pw" mechanism: recovery mails a fresh
/// plaintext password to the account's one address.
class BaselineSite {
public:
    static constexpr std::string_view kSubject = "Your new password";
    static constexpr std::string_view kBodyPrefix = "Your new password is: ";

    BaselineSite(std::shared_ptr<mail::MailTransport> transport, std::uint64_t seed)
        : transport_(std::move(transport)), rng_(seed) {}

    void register_user(const std::string& username, const std::string& password, const std::string& address) {
        accounts_[username] = Account{password::hash_password(password, password::make_salt(rng_)), address};
    }

    void recover(const std::string& username) {
        auto& account = accounts_.at(username);
        const std::string fresh = password::generate(password::PasswordPolicy(8, password::PasswordPolicy::alphanumeric()), rng_);
        account.hash = password::hash_password(fresh, password::make_salt(rng_));
        transport_->send(mail::MailMessage{account.address, std::string(kSubject), std::string(kBodyPrefix) + fresh + "\n"});
    }

    bool login(const std::string& username, const std::string& password) const {
        const auto it = accounts_.find(username);
        return it != accounts_.end() && password::verify_password(password, it->second.hash);
    }

private:
    struct Account {
        password::PasswordHashRecord hash;
        std::string address;
    };

    std::shared_ptr<mail::MailTransport> transport_;
    std::mt19937_64 rng_;
    std::map<std::string, Account> accounts_;
};

struct AttackReport {
    Outcome outcome = Outcome::NoInformation;
    std::size_t compromised_recipients = 0;
    std::size_t tokens_seen = 0;
    unsigned k = 0;
    bool login_succeeded = false;
    /// For NoInformation under Maildust: candidate values of the first secret
    /// byte still consistent with what the attacker saw.
    std::optional<std::size_t> consistent_secrets;
    std::string detail;
};

using LoginCheck = std::function<bool(const std::string& username, const std::string& password)>;

/// Reads every compromised mailbox through the provider's attacker handle
/// and tries to turn what it finds into a working login. `user` lists the
/// victim's recovery addresses (one address for Baseline); a recovery must
/// already have been triggered through `fabric`.
inline AttackReport simulate_provider_attack(const server::UserRecord& user,
                                             const std::set<std::string>& compromised, mail::SimProvider& fabric,
                                             Scheme scheme, const LoginCheck& login) {
    const std::set<std::string> recipients(user.recovery_addresses.begin(), user.recovery_addresses.end());
    for (const auto& address : compromised) {
        if (recipients.count(address) == 0) {
            throw InvalidScenario("compromised address " + address + " is not a recovery address of " + user.username);
        }
    }
    if (scheme == Scheme::Baseline && recipients.size() != 1) {
        throw InvalidScenario("baseline recovery uses exactly one mailbox");
    }
    fabric.clear_compromised();
    for (const auto& address : compromised) fabric.compromise(address);

    AttackReport report;
    report.compromised_recipients = compromised.size();
    report.k = scheme == Scheme::Baseline ? 1 : user.threshold;
    const auto reader = fabric.attacker();

    if (scheme == Scheme::Baseline) {
        for (const auto& message : reader->fetch()) {
            if (message.subject != BaselineSite::kSubject) continue;
            const auto at = message.body.find(BaselineSite::kBodyPrefix);
            if (at == std::string::npos) continue;
            std::string candidate = message.body.substr(at + BaselineSite::kBodyPrefix.size());
            candidate = candidate.substr(0, candidate.find('\n'));
            ++report.tokens_seen;
            if (login(user.username, candidate)) {
                report.outcome = Outcome::FullCompromise;
                report.login_succeeded = true;
                report.detail = "read the mailed password and logged in";
            }
        }
        if (report.outcome == Outcome::NoInformation) report.detail = "no password mail visible";
        return report;
    }

    const client::MailboxConfig view({client::MailboxEntry{"attacker", reader}});
    try {
        const auto recovered = client::recover_password(view);
        report.tokens_seen = recovered.tokens_used;
        report.k = recovered.k;
        report.login_succeeded = login(user.username, recovered.password);
        report.outcome = report.login_succeeded ? Outcome::FullCompromise : Outcome::NoInformation;
        report.detail = report.login_succeeded ? "reconstructed the password from " +
                                                     std::to_string(recovered.tokens_used) + " tokens and logged in"
                                               : "reconstructed a password that does not log in";
    } catch (const client::ClientError& e) {
        report.outcome = Outcome::NoInformation;
        report.detail = e.what();
        if (e.code() == client::Errc::InsufficientTokens) report.tokens_seen = e.have();
        // What the attacker holds about the first password character.
        std::vector<sss::Point> points;
        for (const auto& envelope : mail::fetch_tokens(*reader).envelopes) {
            if (!envelope.payload.empty()) {
                points.push_back({static_cast<std::uint8_t>(envelope.share_index), envelope.payload[0]});
            }
        }
        if (points.size() < report.k) {
            report.consistent_secrets = report.k <= 2 ? count_consistent_secrets_brute_force(points, report.k)
                                                      : count_consistent_secrets(points, report.k);
        }
    }
    return report;
}

struct Scenario {
    unsigned n = 3;
    unsigned k = 2;
    unsigned compromised = 1;
    Scheme scheme = Scheme::Maildust;
    std::uint64_t seed = 1;
};

/// Builds a victim account on a fresh simulated provider, triggers one
/// recovery, compromises the first `compromised` mailboxes and attacks.
inline AttackReport run_scenario(const Scenario& s) {
    auto fabric = mail::SimProvider::create();
    server::UserRecord user;
    user.username = "victim";
    const std::string original = "Original-Passphrase-2017!";

    if (s.scheme == Scheme::Baseline) {
        if (s.compromised > 1) throw InvalidScenario("baseline has a single mailbox");
        user.recovery_addresses = {"victim@mail0.example"};
        user.threshold = 1;
        BaselineSite site(fabric, s.seed);
        site.register_user(user.username, original, user.recovery_addresses[0]);
        site.recover(user.username);
        std::set<std::string> compromised;
        if (s.compromised == 1) compromised.insert(user.recovery_addresses[0]);
        return simulate_provider_attack(user, compromised, *fabric, s.scheme,
                                        [&](const std::string& u, const std::string& p) { return site.login(u, p); });
    }

    if (s.compromised > s.n) throw InvalidScenario("cannot compromise more mailboxes than exist");
    for (unsigned i = 0; i < s.n; ++i) {
        user.recovery_addresses.push_back("victim@mail" + std::to_string(i) + ".example");
    }
    server::MaildustServer service(std::make_shared<server::MemoryStore>(), fabric, BitSource::seeded(s.seed));
    service.register_user(user.username, original, user.recovery_addresses, s.k);
    service.recover(user.username);
    user = *service.user(user.username);
    const std::set<std::string> compromised(user.recovery_addresses.begin(),
                                            user.recovery_addresses.begin() + s.compromised);
    return simulate_provider_attack(user, compromised, *fabric, s.scheme, [&](const std::string& u, const std::string& p) {
        try {
            service.login(u, p);
            return true;
        } catch (const server::ServiceError&) {
            return false;
        }
    });
}

}  // namespace maildust::threat
