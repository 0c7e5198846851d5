#include "noted/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "json.hpp"
#include "noted/errors.hpp"

namespace noted {

Vocabulary::Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
    if (words_.size() != kSize) {
        throw InvalidVocabularyError("vocabulary must hold exactly " +
                                     std::to_string(kSize) + " words, got " +
                                     std::to_string(words_.size()));
    }
    std::set<std::string> seen;
    for (const auto& w : words_) {
        if (w.size() < kMinLen || w.size() > kMaxLen) {
            throw InvalidVocabularyError("word length out of [4,10]: " + w);
        }
        for (unsigned char c : w) {
            if (!std::islower(c)) {
                throw InvalidVocabularyError("word is not lowercase alphabetic: " + w);
            }
        }
        if (!seen.insert(w).second) {
            throw InvalidVocabularyError("duplicate word: " + w);
        }
    }
}

Vocabulary Vocabulary::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open vocabulary: " + path);
    std::vector<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) words.push_back(line);
    }
    return Vocabulary(std::move(words));
}

std::string ordinal_suffix(int n) {
    const int last_two = n % 100;
    const int last = n % 10;
    std::string suffix = "th";
    if (last_two < 11 || last_two > 13) {
        if (last == 1) suffix = "st";
        else if (last == 2) suffix = "nd";
        else if (last == 3) suffix = "rd";
    }
    return std::to_string(n) + suffix;
}

std::string lets_oracle(const std::array<std::string, 3>& words,
                        const std::array<int, 3>& indexes) {
    std::string answer;
    for (std::size_t i = 0; i < 3; ++i) {
        if (indexes[i] < 1 ||
            static_cast<std::size_t>(indexes[i]) > words[i].size()) {
            throw IndexOutOfRangeError("index " + std::to_string(indexes[i]) +
                                       " out of range for \"" + words[i] + "\"");
        }
        answer.push_back(words[i][static_cast<std::size_t>(indexes[i]) - 1]);
    }
    return answer;
}

namespace {

std::string render_lets_question(const LetsInstance& inst) {
    return "Splice the " + ordinal_suffix(inst.indexes[0]) + " letter of \"" +
           inst.words[0] + "\", the " + ordinal_suffix(inst.indexes[1]) +
           " letter of \"" + inst.words[1] + "\", and the " +
           ordinal_suffix(inst.indexes[2]) + " letter of \"" + inst.words[2] +
           "\" together.";
}

// Stable uniform draw; avoids stdlib-specific distribution behavior.
std::size_t draw(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

}  // namespace

std::vector<LetsInstance> gen_lets(int count, std::uint64_t seed,
                                   const Vocabulary& vocab) {
    if (count < 1) throw Error("gen_lets requires count >= 1");
    std::mt19937_64 rng(seed);
    const auto& words = vocab.words();
    std::vector<LetsInstance> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        LetsInstance inst;
        std::set<std::size_t> picked;
        for (std::size_t w = 0; w < 3; ++w) {
            std::size_t idx;
            do {
                idx = draw(rng, words.size());
            } while (picked.count(idx));
            picked.insert(idx);
            inst.words[w] = words[idx];
            inst.indexes[w] =
                static_cast<int>(draw(rng, inst.words[w].size())) + 1;
        }
        inst.question = render_lets_question(inst);
        inst.answer = lets_oracle(inst.words, inst.indexes);
        out.push_back(std::move(inst));
    }
    return out;
}

std::vector<TaskInstance> lets_to_tasks(const std::vector<LetsInstance>& instances) {
    std::vector<TaskInstance> tasks;
    tasks.reserve(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) {
        char id[16];
        std::snprintf(id, sizeof(id), "lets-%04zu", i);
        tasks.push_back({id, instances[i].question, instances[i].answer});
    }
    return tasks;
}

std::vector<TaskInstance> load_tasks(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open task file: " + path);
    std::vector<TaskInstance> tasks;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto record = nlohmann::json::parse(line);
            TaskInstance t{record.at("id").get<std::string>(),
                           record.at("question").get<std::string>(),
                           record.at("answer").get<std::string>()};
            if (t.question.empty() || t.answer.empty()) {
                throw FormatError("task with empty question or answer", line_no);
            }
            tasks.push_back(std::move(t));
        } catch (const nlohmann::json::exception&) {
            throw FormatError("malformed task record", line_no);
        }
    }
    return tasks;
}

void save_tasks(const std::vector<TaskInstance>& tasks, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (const auto& t : tasks) {
        out << nlohmann::json{{"id", t.id},
                              {"question", t.question},
                              {"answer", t.answer}}
                   .dump()
            << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

std::pair<std::vector<TaskInstance>, std::vector<TaskInstance>> split(
    const std::vector<TaskInstance>& instances, double train_ratio,
    std::uint64_t seed) {
    if (train_ratio <= 0.0 || train_ratio >= 1.0) {
        throw Error("train_ratio must be in (0, 1)");
    }
    std::vector<TaskInstance> shuffled = instances;
    // Fisher-Yates with a stable draw, identical output on every platform.
    std::mt19937_64 rng(seed);
    for (std::size_t i = shuffled.size(); i > 1; --i) {
        std::swap(shuffled[i - 1], shuffled[draw(rng, i)]);
    }
    const auto n_train = static_cast<std::size_t>(
        std::llround(train_ratio * static_cast<double>(shuffled.size())));
    std::vector<TaskInstance> train(shuffled.begin(),
                                    shuffled.begin() + static_cast<long>(n_train));
    std::vector<TaskInstance> test(shuffled.begin() + static_cast<long>(n_train),
                                   shuffled.end());
    return {std::move(train), std::move(test)};
}

}  // namespace noted
