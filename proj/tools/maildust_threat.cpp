#include <iomanip>
#include <iostream>

#include "CLI11.hpp"

#include "maildust/threat.hpp"

namespace {

using namespace maildust::threat;

void print_access_matrix() {
    std::cout << "Attackers resources and possible accesses\n";
    std::cout << std::left << std::setw(30) << "attacker" << std::setw(14) << "user e-mails" << std::setw(14)
              << "password DB" << "recovery method\n";
    for (const auto kind : kAttackerKinds) {
        const auto a = access_matrix(kind);
        std::cout << std::setw(30) << to_string(kind) << std::setw(14) << (a.user_emails ? "yes" : "no")
                  << std::setw(14) << (a.password_db ? "yes" : "no") << (a.recovery_method ? "yes" : "no") << "\n";
    }
}

void print_table(Mode mode) {
    std::cout << "\nSynoptic table, " << to_string(mode) << " attackers\n";
    std::cout << std::left << std::setw(30) << "attack / recovery";
    for (const auto m : kMechanisms) std::cout << std::setw(30) << to_string(m);
    std::cout << "\n";
    for (const auto kind : kAttackerKinds) {
        std::cout << std::setw(30) << to_string(kind);
        for (const auto m : kMechanisms) std::cout << std::setw(30) << to_string(detectability(kind, mode, m));
        std::cout << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Attacker model tables and mail-provider attack simulation"};
    app.require_subcommand(1);
    auto* matrix = app.add_subcommand("matrix", "print the access matrix and both synoptic tables");
    auto* simulate = app.add_subcommand("simulate", "simulate a mail-provider attack");
    Scenario scenario;
    std::string scheme = "maildust";
    simulate->add_option("--n", scenario.n, "number of recovery mailboxes")->check(CLI::Range(1, 255));
    simulate->add_option("--k", scenario.k, "reconstruction threshold")->check(CLI::Range(1, 255));
    simulate->add_option("--compromised", scenario.compromised, "mailboxes read by the attacker");
    simulate->add_option("--scheme", scheme, "baseline | maildust")->check(CLI::IsMember({"baseline", "maildust"}));
    simulate->add_option("--seed", scenario.seed, "random seed");
    CLI11_PARSE(app, argc, argv);

    if (matrix->parsed()) {
        print_access_matrix();
        print_table(Mode::Passive);
        print_table(Mode::Active);
        return 0;
    }
    scenario.scheme = scheme == "baseline" ? Scheme::Baseline : Scheme::Maildust;
    if (scenario.scheme == Scheme::Baseline) {
        scenario.n = 1;
        scenario.k = 1;
    }
    try {
        const auto report = run_scenario(scenario);
        std::cout << "scheme: " << to_string(scenario.scheme) << "\n"
                  << "mailboxes: " << scenario.n << ", threshold: " << report.k
                  << ", compromised: " << report.compromised_recipients << "\n"
                  << "outcome: " << to_string(report.outcome) << "\n"
                  << "tokens seen: " << report.tokens_seen << "\n"
                  << "login succeeded: " << (report.login_succeeded ? "yes" : "no") << "\n";
        if (report.consistent_secrets) {
            std::cout << "candidate values of first password byte still possible: " << *report.consistent_secrets
                      << " / 256\n";
        }
        std::cout << "detail: " << report.detail << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "maildust-threat: " << e.what() << "\n";
        return 1;
    }
}
