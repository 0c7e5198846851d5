#include "noted/agent.hpp"

#include <set>

#include "json.hpp"
#include "noted/errors.hpp"

namespace noted {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::disabled: return "disabled";
        case Variant::case_based: return "case";
        case Variant::positive: return "positive";
        case Variant::negative: return "negative";
    }
    return "full";
}

Variant variant_from_string(const std::string& s) {
    if (s == "full") return Variant::full;
    if (s == "disabled") return Variant::disabled;
    if (s == "case") return Variant::case_based;
    if (s == "positive") return Variant::positive;
    if (s == "negative") return Variant::negative;
    throw Error("unknown variant: " + s);
}

std::string to_string(Phase p) {
    return p == Phase::train ? "train" : "test";
}

std::string trajectory_to_json(const Trajectory& t) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : t.steps) {
        steps.push_back({{"prompt", s.prompt_sent},
                         {"reply", s.raw_reply},
                         {"command", s.command
                                         ? nlohmann::json(serialize_command(*s.command))
                                         : nlohmann::json(nullptr)}});
    }
    nlohmann::json doc{
        {"instance_id", t.instance_id},
        {"phase", to_string(t.phase)},
        {"steps", steps},
        {"prediction",
         t.prediction ? nlohmann::json(*t.prediction) : nlohmann::json(nullptr)},
        {"correct_before_feedback",
         t.correct_before_feedback ? nlohmann::json(*t.correct_before_feedback)
                                   : nlohmann::json(nullptr)},
        {"noted_experience_ids", t.noted_experience_ids}};
    return doc.dump();
}

namespace {

constexpr const char* kFormatReminder =
    "Please reply with a single command: THINK[...], NOTE[key]: value, or "
    "ANSWER[...].";
constexpr const char* kAnswerReminder =
    "Please give your answer now with ANSWER[...].";
constexpr const char* kThinkAck = "OK.";
constexpr const char* kNoteAck = "Noted.";
constexpr const char* kNoRecallInTraining =
    "RECALL is not available during training.";
constexpr const char* kNoNoteInTesting = "NOTE is not available during testing.";
constexpr const char* kRecallIsAutomatic =
    "Experiences are retrieved automatically; continue.";

// One conversation with a backend; records every exchange as a Step.
class Conversation {
public:
    Conversation(Backend& backend, const VariantConfig& config,
                 Trajectory& trajectory)
        : backend_(backend), config_(config), trajectory_(trajectory) {}

    void push_user(const std::string& content) {
        messages_.push_back({Role::user, content});
    }

    // Sends the conversation, records the step, appends the assistant reply.
    // Returns the parsed command, or nullopt when unparsable.
    std::optional<Command> exchange() {
        ChatRequest request{config_.model_name, messages_, 0.0, 1024};
        const std::string reply = backend_.complete(request);
        messages_.push_back({Role::assistant, reply});

        Step step{messages_[messages_.size() - 2].content, reply, std::nullopt};
        try {
            step.command = parse_action(reply);
        } catch (const UnparsableActionError&) {
        }
        trajectory_.steps.push_back(step);
        return trajectory_.steps.back().command;
    }

private:
    Backend& backend_;
    const VariantConfig& config_;
    Trajectory& trajectory_;
    std::vector<ChatMessage> messages_;
};

ExperienceMode mode_for(const VariantConfig& config) {
    return config.variant == Variant::case_based ? ExperienceMode::case_record
                                                 : ExperienceMode::abstract_rule;
}

}  // namespace

Trajectory run_train_episode(const TaskInstance& instance, ExperienceStore& memory,
                             Backend& backend, const PromptBundle& bundle,
                             const VariantConfig& config) {
    Trajectory trajectory;
    trajectory.instance_id = instance.id;
    trajectory.phase = Phase::train;

    Conversation conv(backend, config, trajectory);
    conv.push_user(render_train_prompt(bundle, instance.question));

    // Answer phase: the first reply must be ANSWER; one reminder retry,
    // after which the episode is scored incorrect.
    for (int attempt = 0; attempt < 2; ++attempt) {
        auto cmd = conv.exchange();
        if (cmd && std::holds_alternative<AnswerCmd>(*cmd)) {
            trajectory.prediction = std::get<AnswerCmd>(*cmd).text;
            break;
        }
        if (attempt == 0) conv.push_user(kAnswerReminder);
    }

    const bool correct =
        trajectory.prediction && judge(*trajectory.prediction, instance.answer);
    trajectory.correct_before_feedback = correct;
    const Polarity polarity = correct ? Polarity::positive : Polarity::negative;

    conv.push_user(feedback(trajectory.prediction.value_or(""), instance.answer,
                            correct));

    // Reflection loop: up to n_train extra actions of any mix.
    int budget = config.n_train;
    bool recovery_used = false;
    while (budget > 0) {
        auto cmd = conv.exchange();
        if (!cmd) {
            if (recovery_used) break;
            recovery_used = true;
            conv.push_user(kFormatReminder);
            continue;
        }
        --budget;
        if (std::holds_alternative<ThinkCmd>(*cmd)) {
            conv.push_user(kThinkAck);
        } else if (std::holds_alternative<NoteCmd>(*cmd)) {
            const auto& note = std::get<NoteCmd>(*cmd);
            std::string value = note.value;
            if (config.variant == Variant::case_based) {
                value = "Q: " + instance.question + " A: " + instance.answer;
            }
            Experience stored = memory.note(note.key, value, polarity,
                                            instance.id, mode_for(config));
            trajectory.noted_experience_ids.push_back(stored.id);
            conv.push_user(kNoteAck);
        } else if (std::holds_alternative<RecallCmd>(*cmd)) {
            conv.push_user(kNoRecallInTraining);
        } else {
            break;  // terminal ANSWER ends the reflection loop
        }
    }
    return trajectory;
}

Trajectory run_test_episode(const TaskInstance& instance,
                            const ExperienceStore& memory, Backend& backend,
                            const PromptBundle& bundle,
                            const VariantConfig& config) {
    Trajectory trajectory;
    trajectory.instance_id = instance.id;
    trajectory.phase = Phase::test;

    // Retrieval is executed by the harness, never delegated to the model.
    std::vector<Experience> retrieved;
    if (config.variant != Variant::disabled) {
        std::optional<Polarity> filter;
        if (config.variant == Variant::positive) filter = Polarity::positive;
        if (config.variant == Variant::negative) filter = Polarity::negative;
        for (auto& r : memory.recall(instance.question, config.k, filter)) {
            retrieved.push_back(std::move(r.experience));
        }
    }

    Conversation conv(backend, config, trajectory);
    conv.push_user(render_test_prompt(bundle, instance.question, retrieved));

    for (int turn = 0; turn < config.max_turns; ++turn) {
        auto cmd = conv.exchange();
        if (!cmd) {
            conv.push_user(kFormatReminder);
            continue;
        }
        if (std::holds_alternative<AnswerCmd>(*cmd)) {
            trajectory.prediction = std::get<AnswerCmd>(*cmd).text;
            break;
        }
        if (std::holds_alternative<ThinkCmd>(*cmd)) {
            conv.push_user(kThinkAck);
        } else if (std::holds_alternative<NoteCmd>(*cmd)) {
            conv.push_user(kNoNoteInTesting);
        } else {
            conv.push_user(kRecallIsAutomatic);
        }
    }
    return trajectory;
}

std::vector<Trajectory> run_train_pass(const std::vector<TaskInstance>& train_set,
                                       ExperienceStore& memory, Backend& backend,
                                       const PromptBundle& bundle,
                                       const VariantConfig& config) {
    std::vector<Trajectory> trajectories;
    trajectories.reserve(train_set.size());
    for (const auto& instance : train_set) {
        trajectories.push_back(
            run_train_episode(instance, memory, backend, bundle, config));
    }
    return trajectories;
}

std::vector<Trajectory> run_test_pass(const std::vector<TaskInstance>& test_set,
                                      const ExperienceStore& memory,
                                      Backend& backend, const PromptBundle& bundle,
                                      const VariantConfig& config) {
    std::vector<Trajectory> trajectories;
    trajectories.reserve(test_set.size());
    for (const auto& instance : test_set) {
        trajectories.push_back(
            run_test_episode(instance, memory, backend, bundle, config));
    }
    return trajectories;
}

namespace {

std::vector<std::pair<std::string, CaseOutcome>> score_pass(
    const std::vector<Trajectory>& trajectories,
    const std::vector<TaskInstance>& test_set) {
    std::vector<std::pair<std::string, CaseOutcome>> outcomes;
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        CaseOutcome outcome;
        outcome.prediction = trajectories[i].prediction;
        outcome.correct = outcome.prediction &&
                          judge(*outcome.prediction, test_set[i].answer);
        outcomes.emplace_back(trajectories[i].instance_id, outcome);
    }
    return outcomes;
}

double pass_accuracy(const std::vector<std::pair<std::string, CaseOutcome>>& outcomes) {
    if (outcomes.empty()) return 0.0;
    std::size_t correct = 0;
    for (const auto& [_, o] : outcomes) {
        if (o.correct) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(outcomes.size());
}

}  // namespace

ExperimentResult run_experiment(const std::vector<TaskInstance>& train_set,
                                const std::vector<TaskInstance>& test_set,
                                ExperienceStore& memory, Backend& backend,
                                const PromptBundle& bundle,
                                const VariantConfig& config,
                                const ExperimentOptions& options) {
    std::set<std::string> train_ids;
    for (const auto& t : train_set) train_ids.insert(t.id);
    for (const auto& t : test_set) {
        if (train_ids.count(t.id)) {
            throw Error("train and test sets share instance id: " + t.id);
        }
    }

    ExperimentResult result;
    auto checkpoint = [&](int n_trained) {
        auto trajectories =
            run_test_pass(test_set, memory, backend, bundle, config);
        result.curve.emplace_back(n_trained,
                                  pass_accuracy(score_pass(trajectories, test_set)));
    };

    if (options.checkpoint_every > 0) checkpoint(0);
    for (std::size_t i = 0; i < train_set.size(); ++i) {
        result.train_trajectories.push_back(
            run_train_episode(train_set[i], memory, backend, bundle, config));
        if (options.checkpoint_every > 0 &&
            (i + 1) % static_cast<std::size_t>(options.checkpoint_every) == 0 &&
            i + 1 < train_set.size()) {
            checkpoint(static_cast<int>(i + 1));
        }
    }

    result.test_trajectories =
        run_test_pass(test_set, memory, backend, bundle, config);
    result.outcomes = score_pass(result.test_trajectories, test_set);
    if (options.checkpoint_every > 0) {
        result.curve.emplace_back(static_cast<int>(train_set.size()),
                                  pass_accuracy(result.outcomes));
    }
    return result;
}

}  // namespace noted
