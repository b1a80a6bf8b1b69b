#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "maildust/client.hpp"
#include "maildust/config.hpp"

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInsufficientTokens = 2;
constexpr int kExitTransport = 3;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Collects Maildust recovery tokens from your mailboxes and rebuilds the password"};
    app.require_subcommand(1);

    auto* recover = app.add_subcommand("recover", "reconstruct the password from recovery tokens");
    std::string mailboxes;
    std::string recovery_id;
    bool verify = false;
    std::string server_url;
    std::string user;
    recover->add_option("--mailboxes", mailboxes, "mailbox configuration file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    recover->add_option("--recovery-id", recovery_id, "use tokens of this recovery instead of the newest");
    auto* verify_flag = recover->add_flag("--verify", verify, "log in with the reconstructed password");
    recover->add_option("--server", server_url, "server base URL, e.g. http://127.0.0.1:8080")->needs(verify_flag);
    recover->add_option("--user", user, "username for --verify")->needs(verify_flag);
    CLI11_PARSE(app, argc, argv);

    using namespace maildust;
    try {
        if (verify && (server_url.empty() || user.empty())) {
            std::cerr << "--verify needs --server and --user\n";
            return kExitFailure;
        }
        const auto base = std::filesystem::path(mailboxes).parent_path();
        const auto cfg = config::parse_mailbox_config(config::read_json(mailboxes), base);
        const auto result = client::recover_password(
            cfg, recovery_id.empty() ? std::nullopt : std::optional<std::string>(recovery_id));
        for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
        std::cerr << "recovery " << result.recovery_id << ": " << result.tokens_used << " tokens, threshold "
                  << result.k << " of " << result.n << "\n";
        std::cout << result.password << std::endl;
        if (verify) {
            const bool ok = client::verify_login(server_url, user, result.password);
            std::cerr << (ok ? "login verified" : "login FAILED with reconstructed password") << "\n";
            return ok ? kExitSuccess : kExitFailure;
        }
        return kExitSuccess;
    } catch (const client::ClientError& e) {
        std::cerr << "maildust-client: " << client::to_string(e.code()) << ": " << e.what() << "\n";
        switch (e.code()) {
            case client::Errc::InsufficientTokens:
            case client::Errc::NoTokensFound: return kExitInsufficientTokens;
            case client::Errc::AllMailboxesUnreachable:
            case client::Errc::ServerUnreachable: return kExitTransport;
            default: return kExitFailure;
        }
    } catch (const std::exception& e) {
        std::cerr << "maildust-client: " << e.what() << "\n";
        return kExitFailure;
    }
}
