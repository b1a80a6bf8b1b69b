#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "maildust/survey.hpp"

namespace {

using namespace maildust::survey;
using maildust::threat::RecoveryMechanism;

std::string pct(Hundredths h) {
    std::ostringstream out;
    out << h / 100 << "." << std::setw(2) << std::setfill('0') << h % 100;
    return out.str();
}

nlohmann::json to_json(const CountrySummary& s) {
    return {{"analyzed", s.analyzed},
            {"old_pw", s.count(RecoveryMechanism::OldPw)},
            {"new_pw", s.count(RecoveryMechanism::NewPw)},
            {"temp_pw", s.count(RecoveryMechanism::TempPw)},
            {"http_link", s.count(RecoveryMechanism::HttpLink)},
            {"https_link", s.count(RecoveryMechanism::HttpsLink)},
            {"vulnerable_pct", s.vulnerable_pct()}};
}

void print_row(const std::string& name, const CountrySummary& s) {
    std::cout << std::left << std::setw(12) << name << std::right << std::setw(9) << s.analyzed;
    for (const auto m : maildust::threat::kMechanisms) std::cout << std::setw(11) << s.count(m);
    std::cout << std::setw(14) << pct(s.vulnerable_hundredths) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Survey analytics for website password recovery mechanisms"};
    app.require_subcommand(1);

    auto* summarize = app.add_subcommand("summarize", "per-country mechanism counts and vulnerable percentages");
    std::string input;
    std::string country;
    std::string format = "table";
    summarize->add_option("--input", input, "survey CSV (country,site,mechanism)")->required();
    summarize->add_option("--country", country, "only this country");
    summarize->add_option("--format", format, "table | json")->check(CLI::IsMember({"table", "json"}));

    auto* robustness = app.add_subcommand("robustness", "cumulative strength distribution of generated passwords");
    std::string robustness_input;
    std::string robustness_format = "table";
    robustness->add_option("--input", robustness_input, "CSV of charset_size,length")->required();
    robustness->add_option("--format", robustness_format, "table | json")->check(CLI::IsMember({"table", "json"}));
    CLI11_PARSE(app, argc, argv);

    try {
        if (summarize->parsed()) {
            const auto rows = load_survey(input);
            auto per_country = country_summary(rows);
            if (!country.empty()) {
                const auto it = per_country.find(country);
                if (it == per_country.end()) {
                    std::cerr << "maildust-audit: no analyzed sites for country " << country << "\n";
                    return 1;
                }
                per_country = {*it};
            }
            const auto total = country.empty() ? overall_summary(rows) : per_country.begin()->second;
            if (format == "json") {
                nlohmann::json out;
                for (const auto& [name, s] : per_country) out["countries"][name] = to_json(s);
                out["total"] = to_json(total);
                std::cout << out.dump(2) << "\n";
                return 0;
            }
            std::cout << std::left << std::setw(12) << "country" << std::right << std::setw(9) << "analyzed";
            for (const auto m : maildust::threat::kMechanisms) std::cout << std::setw(11) << to_string(m);
            std::cout << std::setw(14) << "vulnerable %" << "\n";
            for (const auto& [name, s] : per_country) print_row(name, s);
            if (country.empty()) print_row("Total", total);
            return 0;
        }
        const auto entries = load_robustness(robustness_input);
        const auto curve = robustness_distribution(entries);
        if (robustness_format == "json") {
            nlohmann::json out = nlohmann::json::array();
            for (const auto& p : curve) {
                out.push_back({{"threshold_log2", p.exponent}, {"above", p.above}, {"pct", p.exact_pct}});
            }
            std::cout << out.dump(2) << "\n";
            return 0;
        }
        std::cout << "entries: " << entries.size() << "\n";
        for (const auto& p : curve) {
            std::cout << "> 2^" << std::left << std::setw(4) << p.exponent << std::right << std::setw(6) << p.above
                      << "  " << p.exact_pct << "%\n";
        }
        return 0;
    } catch (const SurveyError& e) {
        std::cerr << "maildust-audit: " << to_string(e.code()) << ": " << e.what() << "\n";
        return 1;
    }
}
