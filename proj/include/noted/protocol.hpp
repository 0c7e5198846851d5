#pragma once

#include <string>
#include <variant>
#include <vector>

#include "noted/memory.hpp"

namespace noted {

// Agent actions parsed from raw model output.
struct ThinkCmd {
    std::string text;
    bool operator==(const ThinkCmd&) const = default;
};
struct NoteCmd {
    std::string key;
    std::string value;
    bool operator==(const NoteCmd&) const = default;
};
struct RecallCmd {
    std::string query;
    bool operator==(const RecallCmd&) const = default;
};
struct AnswerCmd {
    std::string text;
    bool operator==(const AnswerCmd&) const = default;
};

using Command = std::variant<ThinkCmd, NoteCmd, RecallCmd, AnswerCmd>;

// Recognizes, case-insensitively at line start after trimming:
//   THINK[...]  RECALL[...]  NOTE[...]: ...  ANSWER[...]
// Only the first command on the first matching line is taken.
// Throws UnparsableActionError when no clause matches.
Command parse_action(const std::string& raw);

std::string serialize_command(const Command& cmd);

// Prompt templates with slot markers {demonstrations}, {question},
// {experiences}. Each slot must appear exactly once in its template.
struct PromptBundle {
    std::string train_template;   // slots: demonstrations, question
    std::string test_template;    // slots: demonstrations, question, experiences
    std::string demonstrations;   // 2-3 worked trajectories per task
};

PromptBundle load_bundle(const std::string& train_path,
                         const std::string& test_path,
                         const std::string& demos_path);

std::string render_train_prompt(const PromptBundle& bundle,
                                const std::string& question);

// Embeds each retrieved experience value on its own line; the literal
// "No relevant experience" when the list is empty.
std::string render_test_prompt(const PromptBundle& bundle,
                               const std::string& question,
                               const std::vector<Experience>& experiences);

// One-sentence verdict plus the gold answer, nothing else.
std::string feedback(const std::string& predicted, const std::string& gold,
                     bool correct);

// Exact match after lowercasing, trimming, and collapsing internal whitespace.
bool judge(const std::string& predicted, const std::string& gold);

}  // namespace noted
