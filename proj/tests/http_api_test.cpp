#include <gtest/gtest.h>

#include "http_harness.hpp"
#include "maildust/sim_provider.hpp"

using namespace maildust;
using nlohmann::json;

namespace {

const std::string kPassword = "Original-Passphrase-2017!";

class HttpApi : public ::testing::Test {
protected:
    std::shared_ptr<mail::SimProvider> sim = mail::SimProvider::create();
    server::MaildustServer service{std::make_shared<server::MemoryStore>(), sim, BitSource::seeded(9)};
    maildust::testing::RunningServer running{service};
    httplib::Client client{running.url()};

    httplib::Result post(const std::string& path, const json& body) {
        return client.Post(path, body.dump(), "application/json");
    }

    json register_body(const std::string& user) {
        return {{"username", user},
                {"password", kPassword},
                {"recovery_addresses", {"a@m1.example", "a@m2.example", "a@m3.example"}}};
    }
};

}  // namespace

TEST_F(HttpApi, RegisterLoginSessionLogout) {
    auto res = post("/register", register_body("alice"));
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 201);
    EXPECT_EQ(json::parse(res->body), (json{{"status", "registered"}}));

    res = post("/login", {{"username", "alice"}, {"password", kPassword}});
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 200);
    const auto login = json::parse(res->body);
    const std::string token = login.at("token");
    EXPECT_EQ(token.size(), 32u);
    EXPECT_EQ(login.at("expires_in"), 3600);

    res = client.Get("/session", {{"Authorization", "Bearer " + token}});
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(json::parse(res->body).at("username"), "alice");

    res = post("/logout", {{"token", token}});
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    res = client.Get("/session", {{"Authorization", "Bearer " + token}});
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 401);
    EXPECT_EQ(res->body, R"({"error":"invalid_session"})");
}

TEST_F(HttpApi, ErrorCodes) {
    ASSERT_EQ(post("/register", register_body("alice"))->status, 201);

    auto res = post("/register", register_body("alice"));
    EXPECT_EQ(res->status, 409);
    EXPECT_EQ(res->body, R"({"error":"duplicate_username"})");

    auto weak = register_body("bob");
    weak["password"] = "abc";
    res = post("/register", weak);
    EXPECT_EQ(res->status, 400);
    EXPECT_EQ(res->body, R"({"error":"weak_password"})");

    auto bad_k = register_body("bob");
    bad_k["k"] = 7;
    res = post("/register", bad_k);
    EXPECT_EQ(res->status, 400);
    EXPECT_EQ(res->body, R"({"error":"invalid_threshold"})");

    auto bad_list = register_body("bob");
    bad_list["recovery_addresses"] = "a@m1.example";
    res = post("/register", bad_list);
    EXPECT_EQ(res->body, R"({"error":"invalid_address_list"})");

    res = client.Post("/register", "{not json", "application/json");
    EXPECT_EQ(res->status, 400);
    EXPECT_EQ(res->body, R"({"error":"bad_request"})");

    res = post("/recover", json::object());
    EXPECT_EQ(res->status, 400);
    EXPECT_EQ(res->body, R"({"error":"bad_request"})");
}

TEST_F(HttpApi, ResponsesDoNotRevealWhetherAUserExists) {
    ASSERT_EQ(post("/register", register_body("alice"))->status, 201);

    const auto wrong = post("/login", {{"username", "alice"}, {"password", "nope"}});
    const auto unknown = post("/login", {{"username", "mallory"}, {"password", "nope"}});
    const auto missing = post("/login", {{"username", "mallory"}});
    for (const auto* res : {&wrong, &unknown, &missing}) {
        ASSERT_TRUE(*res);
        EXPECT_EQ((*res)->status, 401);
        EXPECT_EQ((*res)->body, R"({"error":"authentication_failed"})");
    }

    const auto known = post("/recover", {{"username", "alice"}});
    const auto nobody = post("/recover", {{"username", "mallory"}});
    ASSERT_TRUE(known);
    ASSERT_TRUE(nobody);
    EXPECT_EQ(known->status, 202);
    EXPECT_EQ(nobody->status, known->status);
    EXPECT_EQ(nobody->body, known->body);
    EXPECT_EQ(sim->message_count(), 3u);
}

TEST_F(HttpApi, DispatchFailureIs503) {
    ASSERT_EQ(post("/register", register_body("alice"))->status, 201);
    sim->set_failing("a@m2.example");
    const auto res = post("/recover", {{"username", "alice"}});
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 503);
    EXPECT_EQ(res->body, R"({"error":"mail_dispatch_failed"})");
    EXPECT_EQ(sim->message_count(), 0u);
}
