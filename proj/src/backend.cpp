#include "noted/backend.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "noted/errors.hpp"

namespace noted {

std::string to_string(Role r) {
    switch (r) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

Role role_from_string(const std::string& s) {
    if (s == "system") return Role::system;
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    throw Error("unknown role: " + s);
}

std::uint64_t request_digest(const ChatRequest& request) {
    // FNV-1a over role/content pairs with separators; stable across runs.
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&h](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
        h ^= 0x1f;
        h *= 1099511628211ull;
    };
    for (const auto& m : request.messages) {
        mix(to_string(m.role));
        mix(m.content);
    }
    return h;
}

namespace {

const ChatMessage* last_user_message(const ChatRequest& request) {
    for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
        if (it->role == Role::user) return &*it;
    }
    return nullptr;
}

}  // namespace

ScriptedBackend::ScriptedBackend(std::vector<ScriptEntry> entries) {
    slots_.reserve(entries.size());
    for (auto& e : entries) slots_.push_back({std::move(e), false});
}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_file(
    const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open script: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed script: ") + e.what(), 1);
    }
    std::vector<ScriptEntry> entries;
    for (const auto& item : doc) {
        entries.push_back({item.at("match").get<std::string>(),
                           item.at("reply").get<std::string>(),
                           item.value("consume_once", false)});
    }
    return std::make_unique<ScriptedBackend>(std::move(entries));
}

std::string ScriptedBackend::complete(const ChatRequest& request) {
    const ChatMessage* last = last_user_message(request);
    if (!last) throw BackendError("request has no user message");

    std::lock_guard lock(mutex_);
    for (auto& slot : slots_) {
        if (slot.consumed) continue;
        if (last->content.find(slot.entry.matcher) != std::string::npos) {
            if (slot.entry.consume_once) slot.consumed = true;
            return slot.entry.reply;
        }
    }
    throw ScriptMissError("no script entry matches: " + last->content);
}

std::unique_ptr<CassetteBackend> CassetteBackend::replay(
    const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open cassette: " + path);
    auto backend = std::unique_ptr<CassetteBackend>(new CassetteBackend());
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
            backend->recorded_[record.at("digest").get<std::uint64_t>()] =
                record.at("reply").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            throw FormatError("malformed cassette record", line_no);
        }
    }
    return backend;
}

std::unique_ptr<CassetteBackend> CassetteBackend::record(
    std::shared_ptr<Backend> inner, const std::string& path) {
    auto backend = std::unique_ptr<CassetteBackend>(new CassetteBackend());
    backend->inner_ = std::move(inner);
    backend->record_path_ = path;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open cassette for writing: " + path);
    return backend;
}

std::string CassetteBackend::complete(const ChatRequest& request) {
    const std::uint64_t digest = request_digest(request);
    if (inner_) {
        const std::string reply = inner_->complete(request);
        std::lock_guard lock(mutex_);
        recorded_[digest] = reply;
        std::ofstream out(record_path_, std::ios::binary | std::ios::app);
        if (!out) throw IoError("cannot append cassette: " + record_path_);
        out << nlohmann::json{{"digest", digest}, {"reply", reply}}.dump() << '\n';
        return reply;
    }
    std::lock_guard lock(mutex_);
    auto it = recorded_.find(digest);
    if (it == recorded_.end()) {
        throw CassetteMissError("no recorded reply for digest " +
                                std::to_string(digest));
    }
    return it->second;
}

struct HttpBackend::Impl {
    HttpBackendConfig config;
    std::string api_key;
    std::mutex mutex;
    std::condition_variable slot_free;
    int in_flight = 0;
};

HttpBackend::HttpBackend(HttpBackendConfig config)
    : impl_(std::make_unique<Impl>()) {
    impl_->config = std::move(config);
    if (const char* key = std::getenv(impl_->config.api_key_env.c_str())) {
        impl_->api_key = key;
    }
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::complete(const ChatRequest& request) {
    {
        std::unique_lock lock(impl_->mutex);
        impl_->slot_free.wait(lock, [this] {
            return impl_->in_flight < impl_->config.max_in_flight;
        });
        ++impl_->in_flight;
    }
    struct SlotGuard {
        Impl* impl;
        ~SlotGuard() {
            std::lock_guard lock(impl->mutex);
            --impl->in_flight;
            impl->slot_free.notify_one();
        }
    } guard{impl_.get()};

    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    const std::string body = nlohmann::json{{"model", request.model_name.empty()
                                                          ? impl_->config.model_name
                                                          : request.model_name},
                                            {"messages", messages},
                                            {"temperature", request.temperature},
                                            {"max_tokens", request.max_tokens}}
                                 .dump();

    std::string last_error;
    for (int attempt = 0; attempt < 3; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(
                impl_->config.retry_base_ms * (1 << (attempt - 1))));
        }
        httplib::Client client(impl_->config.base_url);
        client.set_connection_timeout(impl_->config.timeout_seconds, 0);
        client.set_read_timeout(impl_->config.timeout_seconds, 0);
        httplib::Headers headers;
        if (!impl_->api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + impl_->api_key);
        }
        auto res = client.Post("/v1/chat/completions", headers, body,
                               "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "server error: HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw BackendError("HTTP " + std::to_string(res->status) + ": " +
                               res->body);
        }
        try {
            auto doc = nlohmann::json::parse(res->body);
            return doc.at("choices").at(0).at("message").at("content")
                .get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("malformed completion response: ") +
                               e.what());
        }
    }
    throw BackendError("backend unreachable after 3 attempts: " + last_error);
}

}  // namespace noted
