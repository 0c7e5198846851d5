#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace noted {

enum class Role { system, user, assistant };

std::string to_string(Role r);
Role role_from_string(const std::string& s);

struct ChatMessage {
    Role role = Role::user;
    std::string content;
    bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
    std::string model_name;
    std::vector<ChatMessage> messages;  // non-empty, last role = user
    double temperature = 0.0;
    int max_tokens = 1024;
};

// Stable digest of the message list, used as cassette key.
std::uint64_t request_digest(const ChatRequest& request);

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string complete(const ChatRequest& request) = 0;
};

// Deterministic stand-in: maps substring patterns over the last user
// message to canned replies. Patterns are checked in declaration order.
struct ScriptEntry {
    std::string matcher;
    std::string reply;
    bool consume_once = false;
};

class ScriptedBackend : public Backend {
public:
    explicit ScriptedBackend(std::vector<ScriptEntry> entries);
    static std::unique_ptr<ScriptedBackend> from_file(const std::string& path);

    // Throws ScriptMissError when no entry matches.
    std::string complete(const ChatRequest& request) override;

private:
    struct Slot {
        ScriptEntry entry;
        bool consumed = false;
    };
    std::vector<Slot> slots_;
    std::mutex mutex_;
};

// Replays recorded replies keyed by request digest.
class CassetteBackend : public Backend {
public:
    // Replay mode: throws CassetteMissError on unseen digests.
    static std::unique_ptr<CassetteBackend> replay(const std::string& path);

    // Record mode: delegates to `inner` and appends (digest, reply) records.
    static std::unique_ptr<CassetteBackend> record(std::shared_ptr<Backend> inner,
                                                   const std::string& path);

    std::string complete(const ChatRequest& request) override;

private:
    CassetteBackend() = default;
    std::unordered_map<std::uint64_t, std::string> recorded_;
    std::shared_ptr<Backend> inner_;
    std::string record_path_;
    std::mutex mutex_;
};

// Chat-completion HTTP client: POST {model, messages[], temperature,
// max_tokens} to <base_url>/v1/chat/completions, reads the first choice's
// message content. Retries transient transport failures with exponential
// backoff (3 attempts). Bounds in-flight requests by max_in_flight.
struct HttpBackendConfig {
    std::string base_url;          // e.g. "http://localhost:8080"
    std::string model_name = "gpt-3.5-turbo";
    std::string api_key_env = "NOTED_API_KEY";
    int timeout_seconds = 60;
    int max_in_flight = 4;
    int retry_base_ms = 200;       // first backoff delay
};

class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config);
    ~HttpBackend() override;

    std::string complete(const ChatRequest& request) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace noted
