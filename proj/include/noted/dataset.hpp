#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace noted {

struct TaskInstance {
    std::string id;
    std::string question;
    std::string answer;
    bool operator==(const TaskInstance&) const = default;
};

// Letter-splicing instance: concatenate the letter at a 1-based index of
// each of three distinct words.
struct LetsInstance {
    std::array<std::string, 3> words;
    std::array<int, 3> indexes;  // 1-based
    std::string question;
    std::string answer;
};

// 100 distinct lowercase alphabetic words, lengths 4-10.
class Vocabulary {
public:
    static constexpr std::size_t kSize = 100;
    static constexpr std::size_t kMinLen = 4;
    static constexpr std::size_t kMaxLen = 10;

    // Throws InvalidVocabularyError when any invariant is violated.
    explicit Vocabulary(std::vector<std::string> words);
    static Vocabulary from_file(const std::string& path);

    const std::vector<std::string>& words() const { return words_; }

private:
    std::vector<std::string> words_;
};

// "2" -> "2nd", "11" -> "11th", "23" -> "23rd".
std::string ordinal_suffix(int n);

// Throws IndexOutOfRangeError when an index falls outside its word.
std::string lets_oracle(const std::array<std::string, 3>& words,
                        const std::array<int, 3>& indexes);

// Deterministic under (seed, vocab). Words are drawn without replacement
// per instance; indexes uniform over [1, len(word)].
std::vector<LetsInstance> gen_lets(int count, std::uint64_t seed,
                                   const Vocabulary& vocab);

std::vector<TaskInstance> lets_to_tasks(const std::vector<LetsInstance>& instances);

// Line-delimited JSON records {id, question, answer}, UTF-8, order preserved.
std::vector<TaskInstance> load_tasks(const std::string& path);
void save_tasks(const std::vector<TaskInstance>& tasks, const std::string& path);

// Seeded shuffle then partition; train gets round(ratio * n) instances.
std::pair<std::vector<TaskInstance>, std::vector<TaskInstance>> split(
    const std::vector<TaskInstance>& instances, double train_ratio,
    std::uint64_t seed);

}  // namespace noted
