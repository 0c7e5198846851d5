#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

namespace noted {

enum class Polarity { positive, negative };
enum class ExperienceMode { abstract_rule, case_record };

std::string to_string(Polarity p);
std::string to_string(ExperienceMode m);
Polarity polarity_from_string(const std::string& s);
ExperienceMode mode_from_string(const std::string& s);

// One noted experience: a key of cue words and a value holding either an
// abstract rule or the original Q&A (case mode).
struct Experience {
    std::int64_t id = 0;
    std::string key;
    std::string value;
    Polarity polarity = Polarity::positive;
    std::string source_case_id;
    ExperienceMode mode = ExperienceMode::abstract_rule;

    bool operator==(const Experience&) const = default;
};

struct RetrievalResult {
    Experience experience;
    int score = 0;  // distinct shared tokens, always >= 1
};

// Lowercase, split on every non-alphanumeric character, drop empties,
// collapse duplicates.
std::set<std::string> tokenize(const std::string& text);

// Append-only store of experiences with a word-overlap retriever.
// Single writer (training is sequential), any number of concurrent readers.
class ExperienceStore {
public:
    ExperienceStore() = default;

    ExperienceStore(const ExperienceStore& other);
    ExperienceStore& operator=(const ExperienceStore& other);

    // Appends with the next ordinal id. Throws EmptyFieldError when key or
    // value is blank after trimming.
    Experience note(const std::string& key, const std::string& value,
                    Polarity polarity, const std::string& source_case_id,
                    ExperienceMode mode);

    // Top-k by distinct-shared-token count against the key, score descending,
    // ties by smaller id. Experiences with zero overlap are never returned.
    std::vector<RetrievalResult> recall(
        const std::string& query, int k,
        std::optional<Polarity> polarity_filter = std::nullopt) const;

    std::size_t size() const;
    std::size_t count(Polarity p) const;
    std::vector<Experience> experiences() const;

    // Line-delimited JSON, one experience per line, UTF-8.
    void save(const std::string& path) const;
    static ExperienceStore load(const std::string& path);

private:
    std::vector<Experience> experiences_;
    mutable std::shared_mutex mutex_;
};

}  // namespace noted
