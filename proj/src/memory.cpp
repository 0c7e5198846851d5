#include "noted/memory.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <mutex>

#include "json.hpp"
#include "noted/errors.hpp"

namespace noted {

namespace {

std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

std::string to_string(Polarity p) {
    return p == Polarity::positive ? "positive" : "negative";
}

std::string to_string(ExperienceMode m) {
    return m == ExperienceMode::abstract_rule ? "abstract" : "case";
}

Polarity polarity_from_string(const std::string& s) {
    if (s == "positive") return Polarity::positive;
    if (s == "negative") return Polarity::negative;
    throw Error("unknown polarity: " + s);
}

ExperienceMode mode_from_string(const std::string& s) {
    if (s == "abstract") return ExperienceMode::abstract_rule;
    if (s == "case") return ExperienceMode::case_record;
    throw Error("unknown experience mode: " + s);
}

std::set<std::string> tokenize(const std::string& text) {
    std::set<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.insert(current);
            current.clear();
        }
    }
    if (!current.empty()) tokens.insert(current);
    return tokens;
}

ExperienceStore::ExperienceStore(const ExperienceStore& other) {
    std::shared_lock lock(other.mutex_);
    experiences_ = other.experiences_;
}

ExperienceStore& ExperienceStore::operator=(const ExperienceStore& other) {
    if (this == &other) return *this;
    std::vector<Experience> copy;
    {
        std::shared_lock lock(other.mutex_);
        copy = other.experiences_;
    }
    std::unique_lock lock(mutex_);
    experiences_ = std::move(copy);
    return *this;
}

Experience ExperienceStore::note(const std::string& key, const std::string& value,
                                 Polarity polarity,
                                 const std::string& source_case_id,
                                 ExperienceMode mode) {
    if (trim(key).empty()) throw EmptyFieldError("experience key is blank");
    if (trim(value).empty()) throw EmptyFieldError("experience value is blank");

    std::unique_lock lock(mutex_);
    Experience e{static_cast<std::int64_t>(experiences_.size()),
                 key, value, polarity, source_case_id, mode};
    experiences_.push_back(e);
    return e;
}

std::vector<RetrievalResult> ExperienceStore::recall(
    const std::string& query, int k,
    std::optional<Polarity> polarity_filter) const {
    if (k < 1) throw Error("recall requires k >= 1");

    const auto query_tokens = tokenize(query);
    std::vector<RetrievalResult> scored;
    {
        std::shared_lock lock(mutex_);
        for (const auto& e : experiences_) {
            if (polarity_filter && e.polarity != *polarity_filter) continue;
            int overlap = 0;
            for (const auto& t : tokenize(e.key)) {
                if (query_tokens.count(t)) ++overlap;
            }
            if (overlap >= 1) scored.push_back({e, overlap});
        }
    }

    std::stable_sort(scored.begin(), scored.end(),
                     [](const RetrievalResult& a, const RetrievalResult& b) {
                         if (a.score != b.score) return a.score > b.score;
                         return a.experience.id < b.experience.id;
                     });
    if (scored.size() > static_cast<std::size_t>(k)) {
        scored.resize(static_cast<std::size_t>(k));
    }
    return scored;
}

std::size_t ExperienceStore::size() const {
    std::shared_lock lock(mutex_);
    return experiences_.size();
}

std::size_t ExperienceStore::count(Polarity p) const {
    std::shared_lock lock(mutex_);
    return static_cast<std::size_t>(
        std::count_if(experiences_.begin(), experiences_.end(),
                      [p](const Experience& e) { return e.polarity == p; }));
}

std::vector<Experience> ExperienceStore::experiences() const {
    std::shared_lock lock(mutex_);
    return experiences_;
}

void ExperienceStore::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    std::shared_lock lock(mutex_);
    for (const auto& e : experiences_) {
        nlohmann::json record{{"id", e.id},
                              {"key", e.key},
                              {"value", e.value},
                              {"polarity", to_string(e.polarity)},
                              {"source_case_id", e.source_case_id},
                              {"mode", to_string(e.mode)}};
        out << record.dump() << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

ExperienceStore ExperienceStore::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);

    ExperienceStore store;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
            throw FormatError("malformed experience record", line_no);
        }
        try {
            Experience e{record.at("id").get<std::int64_t>(),
                         record.at("key").get<std::string>(),
                         record.at("value").get<std::string>(),
                         polarity_from_string(record.at("polarity").get<std::string>()),
                         record.at("source_case_id").get<std::string>(),
                         mode_from_string(record.at("mode").get<std::string>())};
            if (e.id != static_cast<std::int64_t>(store.experiences_.size())) {
                throw FormatError("experience ids out of order", line_no);
            }
            store.experiences_.push_back(std::move(e));
        } catch (const nlohmann::json::exception&) {
            throw FormatError("experience record missing fields", line_no);
        } catch (const Error& err) {
            if (dynamic_cast<const FormatError*>(&err)) throw;
            throw FormatError(err.what(), line_no);
        }
    }
    return store;
}

}  // namespace noted
