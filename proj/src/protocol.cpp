#include "noted/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>

#include "noted/errors.hpp"

namespace noted {

namespace {

std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

bool starts_with_icase(const std::string& line, const std::string& keyword) {
    if (line.size() < keyword.size()) return false;
    for (std::size_t i = 0; i < keyword.size(); ++i) {
        if (std::toupper(static_cast<unsigned char>(line[i])) != keyword[i]) {
            return false;
        }
    }
    return true;
}

// Matches KEYWORD[arg] at the start of `line`; arg runs to the first ']'.
// Returns the arg and the position one past ']' when matched.
std::optional<std::pair<std::string, std::size_t>> match_clause(
    const std::string& line, const std::string& keyword) {
    if (!starts_with_icase(line, keyword)) return std::nullopt;
    std::size_t pos = keyword.size();
    if (pos >= line.size() || line[pos] != '[') return std::nullopt;
    auto close = line.find(']', pos + 1);
    if (close == std::string::npos) return std::nullopt;
    return std::make_pair(line.substr(pos + 1, close - pos - 1), close + 1);
}

std::optional<Command> parse_line(const std::string& raw_line) {
    const std::string line = trim(raw_line);
    if (auto m = match_clause(line, "THINK")) return ThinkCmd{m->first};
    if (auto m = match_clause(line, "RECALL")) return RecallCmd{m->first};
    if (auto m = match_clause(line, "ANSWER")) return AnswerCmd{m->first};
    if (auto m = match_clause(line, "NOTE")) {
        std::size_t pos = m->second;
        while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
        if (pos >= line.size() || line[pos] != ':') return std::nullopt;
        const std::string key = trim(m->first);
        const std::string value = trim(line.substr(pos + 1));
        if (key.empty() || value.empty()) return std::nullopt;
        return NoteCmd{key, value};
    }
    return std::nullopt;
}

// Replaces "{slot}" in `text`; the marker must appear exactly once.
std::string fill_slot(const std::string& text, const std::string& slot,
                      const std::string& replacement) {
    const std::string marker = "{" + slot + "}";
    auto first = text.find(marker);
    if (first == std::string::npos) {
        throw TemplateError("template is missing slot " + marker);
    }
    if (text.find(marker, first + 1) != std::string::npos) {
        throw TemplateError("template repeats slot " + marker);
    }
    std::string out = text;
    out.replace(first, marker.size(), replacement);
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

Command parse_action(const std::string& raw) {
    std::istringstream lines(raw);
    std::string line;
    while (std::getline(lines, line)) {
        if (auto cmd = parse_line(line)) return *cmd;
    }
    throw UnparsableActionError(raw);
}

std::string serialize_command(const Command& cmd) {
    return std::visit(
        [](const auto& c) -> std::string {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, ThinkCmd>) {
                return "THINK[" + c.text + "]";
            } else if constexpr (std::is_same_v<T, RecallCmd>) {
                return "RECALL[" + c.query + "]";
            } else if constexpr (std::is_same_v<T, AnswerCmd>) {
                return "ANSWER[" + c.text + "]";
            } else {
                return "NOTE[" + c.key + "]: " + c.value;
            }
        },
        cmd);
}

PromptBundle load_bundle(const std::string& train_path,
                         const std::string& test_path,
                         const std::string& demos_path) {
    return PromptBundle{read_file(train_path), read_file(test_path),
                        read_file(demos_path)};
}

std::string render_train_prompt(const PromptBundle& bundle,
                                const std::string& question) {
    if (trim(question).empty()) throw EmptyFieldError("question is blank");
    std::string out = fill_slot(bundle.train_template, "demonstrations",
                                bundle.demonstrations);
    return fill_slot(out, "question", question);
}

std::string render_test_prompt(const PromptBundle& bundle,
                               const std::string& question,
                               const std::vector<Experience>& experiences) {
    if (trim(question).empty()) throw EmptyFieldError("question is blank");
    std::string block;
    if (experiences.empty()) {
        block = "No relevant experience";
    } else {
        for (std::size_t i = 0; i < experiences.size(); ++i) {
            if (i) block += '\n';
            block += experiences[i].value;
        }
    }
    std::string out = fill_slot(bundle.test_template, "demonstrations",
                                bundle.demonstrations);
    out = fill_slot(out, "experiences", block);
    return fill_slot(out, "question", question);
}

std::string feedback(const std::string& /*predicted*/, const std::string& gold,
                     bool correct) {
    if (correct) {
        return "Your answer is correct. The answer is " + gold + ".";
    }
    return "Your answer is wrong. The correct answer is " + gold + ".";
}

bool judge(const std::string& predicted, const std::string& gold) {
    auto normalize = [](const std::string& s) {
        std::string out;
        bool in_space = false;
        for (unsigned char c : trim(s)) {
            if (std::isspace(c)) {
                in_space = true;
            } else {
                if (in_space && !out.empty()) out.push_back(' ');
                in_space = false;
                out.push_back(static_cast<char>(std::tolower(c)));
            }
        }
        return out;
    };
    return normalize(predicted) == normalize(gold);
}

}  // namespace noted
