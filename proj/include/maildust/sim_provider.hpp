#pragma once

// In-memory mail provider for tests and attack simulation.

#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "maildust/mail.hpp"

namespace maildust::mail {

class SimProvider : public MailTransport, public std::enable_shared_from_this<SimProvider> {
public:
    static std::shared_ptr<SimProvider> create() { return std::shared_ptr<SimProvider>(new SimProvider()); }

    void send(const MailMessage& message) override {
        std::lock_guard lock(mutex_);
        ++send_attempts_;
        if (failing_.count(message.to) != 0 || (fail_on_attempt_ && *fail_on_attempt_ == send_attempts_)) {
            throw DeliveryFailed("simulated delivery failure to " + message.to);
        }
        MailMessage stored = message;
        stored.sequence = ++sequence_;
        const auto now = Clock::now();
        last_received_ = (now > last_received_) ? now : last_received_ + std::chrono::microseconds(1);
        stored.received = last_received_;
        queues_[message.to].push_back(std::move(stored));
    }

    void recall(std::string_view recovery_id) override {
        std::lock_guard lock(mutex_);
        const std::string subject = token_subject(recovery_id);
        for (auto& [address, queue] : queues_) {
            std::erase_if(queue, [&](const MailMessage& m) { return m.subject == subject; });
        }
    }

    /// Reader bound to one address.
    std::shared_ptr<MailboxReader> mailbox(const std::string& address) {
        return std::make_shared<Handle>(shared_from_this(), std::set<std::string>{address}, false);
    }

    /// Reader over every currently compromised address.
    std::shared_ptr<MailboxReader> attacker() {
        return std::make_shared<Handle>(shared_from_this(), std::set<std::string>{}, true);
    }

    void compromise(const std::string& address) {
        std::lock_guard lock(mutex_);
        compromised_.insert(address);
    }

    void clear_compromised() {
        std::lock_guard lock(mutex_);
        compromised_.clear();
    }

    std::set<std::string> compromised() const {
        std::lock_guard lock(mutex_);
        return compromised_;
    }

    void set_unreachable(const std::string& address, bool unreachable = true) {
        std::lock_guard lock(mutex_);
        if (unreachable) unreachable_.insert(address);
        else unreachable_.erase(address);
    }

    /// Sends to `address` throw DeliveryFailed until cleared.
    void set_failing(const std::string& address, bool failing = true) {
        std::lock_guard lock(mutex_);
        if (failing) failing_.insert(address);
        else failing_.erase(address);
    }

    /// The `attempt`-th send from now on (1-based) fails once.
    void fail_nth_send(std::size_t attempt) {
        std::lock_guard lock(mutex_);
        fail_on_attempt_ = send_attempts_ + attempt;
    }

    std::size_t message_count() const {
        std::lock_guard lock(mutex_);
        std::size_t total = 0;
        for (const auto& [address, queue] : queues_) total += queue.size();
        return total;
    }

    std::vector<MailMessage> messages_to(const std::string& address) const {
        std::lock_guard lock(mutex_);
        const auto it = queues_.find(address);
        return it == queues_.end() ? std::vector<MailMessage>{} : it->second;
    }

private:
    SimProvider() = default;

    class Handle : public MailboxReader {
    public:
        Handle(std::shared_ptr<SimProvider> provider, std::set<std::string> addresses, bool attacker)
            : provider_(std::move(provider)), addresses_(std::move(addresses)), attacker_(attacker) {}

        std::vector<MailMessage> fetch() override {
            std::lock_guard lock(provider_->mutex_);
            const auto& addresses = attacker_ ? provider_->compromised_ : addresses_;
            std::vector<MailMessage> out;
            for (const auto& address : addresses) {
                if (!attacker_ && provider_->unreachable_.count(address) != 0) {
                    throw MailboxUnreachable("mailbox " + address + " is unreachable");
                }
                const auto it = provider_->queues_.find(address);
                if (it != provider_->queues_.end()) {
                    out.insert(out.end(), it->second.begin(), it->second.end());
                }
            }
            std::sort(out.begin(), out.end(),
                      [](const MailMessage& a, const MailMessage& b) { return a.sequence < b.sequence; });
            return out;
        }

    private:
        std::shared_ptr<SimProvider> provider_;
        std::set<std::string> addresses_;
        bool attacker_;
    };

    mutable std::mutex mutex_;
    std::map<std::string, std::vector<MailMessage>> queues_;
    std::set<std::string> compromised_;
    std::set<std::string> unreachable_;
    std::set<std::string> failing_;
    std::optional<std::size_t> fail_on_attempt_;
    std::size_t send_attempts_ = 0;
    std::uint64_t sequence_ = 0;
    Clock::time_point last_received_{};
};

}  // namespace maildust::mail
