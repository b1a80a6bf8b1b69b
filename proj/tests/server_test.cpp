#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>

#include "maildust/server.hpp"
#include "maildust/sim_provider.hpp"

using namespace maildust;
using namespace maildust::server;

namespace {

const std::string kPassword = "Original-Passphrase-2017!";

std::vector<std::string> addresses(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 1; i <= n; ++i) out.push_back("alice@mail" + std::to_string(i) + ".example");
    return out;
}

Errc error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const ServiceError& e) {
        return e.code();
    }
    ADD_FAILURE() << "no ServiceError thrown";
    return Errc::BadRequest;
}

struct Fixture {
    std::shared_ptr<UserStore> store = std::make_shared<MemoryStore>();
    std::shared_ptr<mail::SimProvider> sim = mail::SimProvider::create();
    std::unique_ptr<MaildustServer> server;

    explicit Fixture(std::uint64_t seed = 1, ServerOptions options = {}) {
        server = std::make_unique<MaildustServer>(store, sim, BitSource::seeded(seed), std::move(options));
    }

    /// Tokens of `id` (or of any recovery) found across the user's mailboxes.
    std::vector<mail::TokenEnvelope> tokens(const std::vector<std::string>& to, const std::string& id) {
        std::vector<mail::TokenEnvelope> out;
        for (const auto& a : to) {
            for (auto& e : mail::fetch_tokens(*sim->mailbox(a), id).envelopes) out.push_back(std::move(e));
        }
        return out;
    }

    std::string rebuild(const std::vector<mail::TokenEnvelope>& envelopes) {
        std::vector<sss::Share> shares;
        for (const auto& e : envelopes) shares.push_back(e.share());
        return sss::reconstruct_string(shares, envelopes.at(0).k);
    }

    std::string active_id(const std::string& user) {
        for (const auto& e : server->recovery_events(user)) {
            if (e.status == RecoveryStatus::Active) return e.recovery_id;
        }
        return {};
    }
};

std::filesystem::path temp_file(const std::string& tag) {
    return std::filesystem::temp_directory_path() /
           ("maildust-" + tag + "-" + std::to_string(std::random_device{}()) + ".log");
}

}  // namespace

TEST(DefaultThreshold, IsNMinusOneFromThreeUp) {
    EXPECT_EQ(default_threshold(1), 1u);
    EXPECT_EQ(default_threshold(2), 2u);
    EXPECT_EQ(default_threshold(3), 2u);
    EXPECT_EQ(default_threshold(5), 4u);
}

TEST(Register, ValidatesInput) {
    Fixture f;
    auto& s = *f.server;
    EXPECT_EQ(error_of([&] { s.register_user("", kPassword, addresses(3)); }), Errc::InvalidUsername);
    EXPECT_EQ(error_of([&] { s.register_user("has space", kPassword, addresses(3)); }), Errc::InvalidUsername);
    EXPECT_EQ(error_of([&] { s.register_user("alice", kPassword, {}); }), Errc::InvalidAddressList);
    EXPECT_EQ(error_of([&] { s.register_user("alice", kPassword, {"nope"}); }), Errc::InvalidAddressList);
    EXPECT_EQ(error_of([&] { s.register_user("alice", kPassword, {"a@x.example", "A@X.example"}); }),
              Errc::InvalidAddressList);
    EXPECT_EQ(error_of([&] { s.register_user("alice", kPassword, addresses(3), 0); }), Errc::InvalidThreshold);
    EXPECT_EQ(error_of([&] { s.register_user("alice", kPassword, addresses(3), 4); }), Errc::InvalidThreshold);
    EXPECT_EQ(error_of([&] { s.register_user("alice", "password", addresses(3)); }), Errc::WeakPassword);

    s.register_user("alice", kPassword, addresses(3));
    EXPECT_EQ(error_of([&] { s.register_user("alice", kPassword, addresses(2)); }), Errc::DuplicateUsername);
    const auto record = s.user("alice");
    ASSERT_TRUE(record);
    EXPECT_EQ(record->threshold, 2u);
    EXPECT_EQ(record->recovery_addresses, addresses(3));
    EXPECT_TRUE(password::verify_password(kPassword, record->hash));
}

TEST(Register, RejectsWeakRecoveryPolicy) {
    ServerOptions options;
    options.recovery_policy = password::PasswordPolicy(8, password::PasswordPolicy::alphanumeric());
    EXPECT_THROW(Fixture(1, options), std::invalid_argument);
}

TEST(Sessions, LoginLogoutAndExpiry) {
    auto now = mail::Clock::from_time_t(1500000000);
    ServerOptions options;
    options.session_ttl = std::chrono::seconds(60);
    options.clock = [&now] { return now; };
    Fixture f(2, options);
    auto& s = *f.server;
    s.register_user("alice", kPassword, addresses(3));

    const auto session = s.login("alice", kPassword);
    EXPECT_EQ(session.token.size(), 32u);
    EXPECT_EQ(s.authenticate(session.token), "alice");
    now += std::chrono::seconds(59);
    EXPECT_EQ(s.authenticate(session.token), "alice");
    now += std::chrono::seconds(1);
    EXPECT_EQ(error_of([&] { s.authenticate(session.token); }), Errc::InvalidSession);

    const auto second = s.login("alice", kPassword);
    s.logout(second.token);
    s.logout(second.token);
    EXPECT_EQ(error_of([&] { s.authenticate(second.token); }), Errc::InvalidSession);
}

TEST(Sessions, UnknownUserAndWrongPasswordLookTheSame) {
    Fixture f;
    f.server->register_user("alice", kPassword, addresses(3));
    std::string unknown_what, wrong_what;
    try {
        f.server->login("mallory", kPassword);
    } catch (const ServiceError& e) {
        EXPECT_EQ(e.code(), Errc::AuthenticationFailed);
        unknown_what = e.what();
    }
    try {
        f.server->login("alice", "wrong");
    } catch (const ServiceError& e) {
        EXPECT_EQ(e.code(), Errc::AuthenticationFailed);
        wrong_what = e.what();
    }
    EXPECT_FALSE(unknown_what.empty());
    EXPECT_EQ(unknown_what, wrong_what);
}

TEST(Recover, UnknownUserSendsNothing) {
    Fixture f;
    EXPECT_NO_THROW(f.server->recover("nobody"));
    EXPECT_EQ(f.sim->message_count(), 0u);
}

TEST(Recover, TokensRebuildTheNewPassword) {
    for (unsigned n = 1; n <= 5; ++n) {
        for (unsigned k = 1; k <= n; ++k) {
            Fixture f(n * 10 + k);
            const auto to = addresses(n);
            f.server->register_user("alice", kPassword, to, k);
            f.server->recover("alice");

            const auto id = f.active_id("alice");
            ASSERT_TRUE(mail::is_uuid(id));
            const auto tokens = f.tokens(to, id);
            ASSERT_EQ(tokens.size(), n);
            for (unsigned i = 0; i < n; ++i) {
                EXPECT_EQ(f.sim->messages_to(to[i]).size(), 1u);
                EXPECT_EQ(tokens[i].k, k);
                EXPECT_EQ(tokens[i].n, n);
            }
            const auto fresh = f.rebuild(std::vector(tokens.begin(), tokens.begin() + k));
            EXPECT_EQ(fresh.size(), 16u);
            EXPECT_EQ(password::strength(94, fresh.size()), password::StrengthClass::Strong);
            EXPECT_NO_THROW(f.server->login("alice", fresh));
            EXPECT_EQ(error_of([&] { f.server->login("alice", kPassword); }), Errc::AuthenticationFailed);
        }
    }
}

TEST(Recover, SecondRecoverySupersedesFirst) {
    Fixture f;
    const auto to = addresses(3);
    f.server->register_user("alice", kPassword, to);
    f.server->recover("alice");
    const auto first = f.active_id("alice");
    f.server->recover("alice");
    const auto second = f.active_id("alice");
    ASSERT_NE(first, second);

    const auto events = f.server->recovery_events("alice");
    ASSERT_EQ(events.size(), 2u);
    EXPECT_EQ(events[0].status, RecoveryStatus::Superseded);
    EXPECT_EQ(events[1].status, RecoveryStatus::Active);

    const auto old_pw = f.rebuild(f.tokens(to, first));
    const auto new_pw = f.rebuild(f.tokens(to, second));
    EXPECT_EQ(error_of([&] { f.server->login("alice", old_pw); }), Errc::AuthenticationFailed);
    EXPECT_NO_THROW(f.server->login("alice", new_pw));
}

TEST(Recover, DeliveryFailureRollsBack) {
    Fixture f;
    const auto to = addresses(4);
    f.server->register_user("alice", kPassword, to);
    f.sim->set_failing(to[2]);
    EXPECT_EQ(error_of([&] { f.server->recover("alice"); }), Errc::MailDispatchFailed);
    EXPECT_EQ(f.sim->message_count(), 0u);
    EXPECT_TRUE(f.server->recovery_events("alice").empty());
    EXPECT_NO_THROW(f.server->login("alice", kPassword));
}

TEST(Recover, ConcurrentRequestsLeaveOneActiveRecovery) {
    std::mt19937_64 rng(17);
    for (int round = 0; round < 100; ++round) {
        Fixture f(round);
        const auto to = addresses(3);
        f.server->register_user("alice", kPassword, to);
        f.server->register_user("bob", kPassword, {"bob@mail1.example", "bob@mail2.example"});
        const int threads = 2 + static_cast<int>(rng() % 3);
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) {
            const bool bob = (rng() % 4) == 0;
            pool.emplace_back([&f, bob] { f.server->recover(bob ? "bob" : "alice"); });
        }
        for (auto& t : pool) t.join();

        const auto events = f.server->recovery_events("alice");
        const auto active = std::count_if(events.begin(), events.end(),
                                          [](const RecoveryEvent& e) { return e.status == RecoveryStatus::Active; });
        ASSERT_LE(active, 1);
        if (active == 1) {
            const auto fresh = f.rebuild(f.tokens(to, f.active_id("alice")));
            ASSERT_NO_THROW(f.server->login("alice", fresh));
        }
    }
}

TEST(LogStore, ReplaysAndNeverStoresPlaintext) {
    const auto path = temp_file("store");
    const auto to = addresses(3);
    std::string fresh;
    {
        auto sim = mail::SimProvider::create();
        auto store = std::make_shared<LogStore>(path);
        MaildustServer s(store, sim, BitSource::seeded(5));
        s.register_user("alice", kPassword, to);
        s.recover("alice");
        std::vector<sss::Share> shares;
        for (const auto& a : to) {
            for (const auto& e : mail::fetch_tokens(*sim->mailbox(a)).envelopes) shares.push_back(e.share());
        }
        fresh = sss::reconstruct_string(shares, 2);
    }
    std::ifstream in(path, std::ios::binary);
    std::stringstream raw;
    raw << in.rdbuf();
    const std::string bytes = raw.str();
    EXPECT_EQ(bytes.find(kPassword), std::string::npos);
    EXPECT_EQ(bytes.find(fresh), std::string::npos);
    EXPECT_NE(bytes.find("sha512-salted"), std::string::npos);

    auto reopened = std::make_shared<LogStore>(path);
    const auto record = reopened->find("alice");
    ASSERT_TRUE(record);
    EXPECT_TRUE(password::verify_password(fresh, record->hash));
    EXPECT_FALSE(password::verify_password(kPassword, record->hash));
    ASSERT_EQ(reopened->events("alice").size(), 1u);
    EXPECT_EQ(reopened->events("alice")[0].status, RecoveryStatus::Active);
    std::filesystem::remove(path);
}

TEST(LogStore, TornTailIsDiscarded) {
    const auto path = temp_file("torn");
    password::PasswordHashRecord hash;
    {
        std::mt19937_64 rng(3);
        auto store = std::make_shared<LogStore>(path);
        UserRecord user;
        user.username = "alice";
        user.hash = password::hash_password(kPassword, password::make_salt(rng));
        user.recovery_addresses = addresses(2);
        user.threshold = 2;
        ASSERT_TRUE(store->insert(user));
        hash = password::hash_password("Other-Passphrase-99", password::make_salt(rng));
        store->inject_torn_write(40);
        RecoveryEvent event{"44444444-4444-4444-8444-444444444444", "alice", 2, 2, 0, RecoveryStatus::Active};
        EXPECT_THROW(store->commit_recovery(hash, event), SimulatedCrash);
    }
    const auto before = std::filesystem::file_size(path);
    auto reopened = std::make_shared<LogStore>(path);
    EXPECT_LT(std::filesystem::file_size(path), before);
    const auto record = reopened->find("alice");
    ASSERT_TRUE(record);
    EXPECT_TRUE(password::verify_password(kPassword, record->hash));
    EXPECT_TRUE(reopened->events("alice").empty());
    std::filesystem::remove(path);
}
