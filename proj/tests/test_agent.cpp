#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "noted/agent.hpp"
#include "noted/errors.hpp"

using namespace noted;

namespace {

const PromptBundle kBundle{
    "Train intro.\n{demonstrations}\nQuestion: {question}\n",
    "Test intro.\nExperiences:\n{experiences}\n{demonstrations}\nQuestion: {question}\n",
    "demos"};

const TaskInstance kCase{"c17",
                         "Quinn has a daughter named Ruth and Quinn is married "
                         "to Sam. Who is Ruth to Sam?",
                         "daughter"};

VariantConfig config_for(Variant v) {
    VariantConfig config;
    config.variant = v;
    return config;
}

}  // namespace

TEST_CASE("training episode judges before feedback and notes with polarity") {
    ScriptedBackend backend({
        {"Ruth to Sam", "ANSWER[aunt]", true},
        {"correct answer is daughter", "THINK[I should note the rule.]", true},
        {"OK.", "NOTE[daughter, married]: spouse of a parent shares the child",
         true},
        {"Noted.", "ANSWER[done]", true},
    });
    ExperienceStore memory;
    const Trajectory t = run_train_episode(kCase, memory, backend, kBundle,
                                           config_for(Variant::full));

    CHECK(t.phase == Phase::train);
    CHECK(t.prediction == "aunt");
    REQUIRE(t.correct_before_feedback.has_value());
    CHECK_FALSE(*t.correct_before_feedback);
    REQUIRE(memory.size() == 1);
    const Experience e = memory.experiences()[0];
    CHECK(e.polarity == Polarity::negative);
    CHECK(e.key == "daughter, married");
    CHECK(e.source_case_id == "c17");
    CHECK(e.mode == ExperienceMode::abstract_rule);
    CHECK(t.noted_experience_ids == std::vector<std::int64_t>{0});
}

TEST_CASE("a correct pre-feedback answer yields positive polarity") {
    ScriptedBackend backend({
        {"Ruth to Sam", "ANSWER[daughter]", true},
        {"answer is daughter", "NOTE[daughter, married]: the rule", true},
        {"Noted.", "ANSWER[done]", true},
    });
    ExperienceStore memory;
    const Trajectory t = run_train_episode(kCase, memory, backend, kBundle,
                                           config_for(Variant::full));
    CHECK(*t.correct_before_feedback);
    REQUIRE(memory.size() == 1);
    CHECK(memory.experiences()[0].polarity == Polarity::positive);
}

TEST_CASE("zero training budget writes no notes") {
    ScriptedBackend backend({{"Ruth to Sam", "ANSWER[aunt]", true}});
    ExperienceStore memory;
    VariantConfig config = config_for(Variant::full);
    config.n_train = 0;
    const Trajectory t =
        run_train_episode(kCase, memory, backend, kBundle, config);
    CHECK(memory.size() == 0);
    CHECK(t.noted_experience_ids.empty());
    CHECK(t.steps.size() == 1);  // only the answer exchange
}

TEST_CASE("the budget caps notes at n_train") {
    ScriptedBackend backend({
        {"Ruth to Sam", "ANSWER[aunt]", true},
        {"correct answer is daughter", "NOTE[k1]: v1", true},
        {"Noted.", "NOTE[k2]: v2", true},
        {"Noted.", "NOTE[k3]: v3", true},
        {"Noted.", "NOTE[k4]: v4", true},
        {"Noted.", "NOTE[k5]: v5", true},
    });
    ExperienceStore memory;
    const Trajectory t = run_train_episode(kCase, memory, backend, kBundle,
                                           config_for(Variant::full));
    CHECK(memory.size() == 4);  // the fifth NOTE never runs
    CHECK(t.noted_experience_ids.size() == 4);
}

TEST_CASE("RECALL during training is rejected and consumes budget") {
    ScriptedBackend backend({
        {"Ruth to Sam", "ANSWER[aunt]", true},
        {"correct answer is daughter", "RECALL[daughter]", true},
        {"RECALL is not available", "RECALL[again]", true},
        {"RECALL is not available", "RECALL[again]", true},
        {"RECALL is not available", "RECALL[again]", true},
    });
    ExperienceStore memory;
    const Trajectory t = run_train_episode(kCase, memory, backend, kBundle,
                                           config_for(Variant::full));
    CHECK(memory.size() == 0);
    CHECK(t.steps.size() == 5);  // answer + 4 budgeted rejections
}

TEST_CASE("unparsable answer-phase output gets one reminder then scores wrong") {
    ScriptedBackend backend({
        {"Ruth to Sam", "The answer might be aunt.", true},
        {"ANSWER[...]", "Still prose, no command.", true},
    });
    ExperienceStore memory;
    VariantConfig config = config_for(Variant::full);
    config.n_train = 0;
    const Trajectory t =
        run_train_episode(kCase, memory, backend, kBundle, config);
    CHECK_FALSE(t.prediction.has_value());
    CHECK_FALSE(*t.correct_before_feedback);
    CHECK(t.steps.size() == 2);
}

TEST_CASE("case variant stores the verbatim question and gold answer") {
    ScriptedBackend backend({
        {"Ruth to Sam", "ANSWER[aunt]", true},
        {"correct answer is daughter", "NOTE[daughter, married]: my summary",
         true},
        {"Noted.", "ANSWER[done]", true},
    });
    ExperienceStore memory;
    run_train_episode(kCase, memory, backend, kBundle,
                      config_for(Variant::case_based));
    REQUIRE(memory.size() == 1);
    const Experience e = memory.experiences()[0];
    CHECK(e.mode == ExperienceMode::case_record);
    CHECK(e.value == "Q: " + kCase.question + " A: daughter");
    CHECK(e.key == "daughter, married");
}

TEST_CASE("test episode embeds retrieved values and records the prediction") {
    ExperienceStore memory;
    memory.note("daughter, married", "the spouse rule", Polarity::negative, "t1",
                ExperienceMode::abstract_rule);
    ScriptedBackend backend({{"Question:", "ANSWER[daughter]", false}});
    const TaskInstance instance{"s1",
                                "Fay has a daughter named Gail and Fay is "
                                "married to Hank. Who is Gail to Hank?",
                                "daughter"};
    const Trajectory t = run_test_episode(instance, memory, backend, kBundle,
                                          config_for(Variant::full));
    CHECK(t.phase == Phase::test);
    CHECK(t.prediction == "daughter");
    CHECK(t.noted_experience_ids.empty());
    REQUIRE(t.steps.size() == 1);
    CHECK(t.steps[0].prompt_sent.find("the spouse rule") != std::string::npos);
}

TEST_CASE("disabled variant embeds the failure prompt and skips retrieval") {
    ExperienceStore memory;
    memory.note("daughter, married", "the spouse rule", Polarity::negative, "t1",
                ExperienceMode::abstract_rule);
    ScriptedBackend backend({{"Question:", "ANSWER[x]", false}});
    const TaskInstance instance{"s1", "Who is the daughter of the married pair?",
                                "daughter"};
    const Trajectory t = run_test_episode(instance, memory, backend, kBundle,
                                          config_for(Variant::disabled));
    CHECK(t.steps[0].prompt_sent.find("No relevant experience") !=
          std::string::npos);
    CHECK(t.steps[0].prompt_sent.find("the spouse rule") == std::string::npos);
}

TEST_CASE("polarity variants embed only matching experiences") {
    ExperienceStore memory;
    memory.note("daughter", "positive rule body", Polarity::positive, "t1",
                ExperienceMode::abstract_rule);
    memory.note("daughter", "negative rule body", Polarity::negative, "t2",
                ExperienceMode::abstract_rule);
    const TaskInstance instance{"s1", "Who is the daughter?", "daughter"};

    ScriptedBackend backend({{"Question:", "ANSWER[x]", false}});
    const Trajectory pos = run_test_episode(instance, memory, backend, kBundle,
                                            config_for(Variant::positive));
    CHECK(pos.steps[0].prompt_sent.find("positive rule body") != std::string::npos);
    CHECK(pos.steps[0].prompt_sent.find("negative rule body") == std::string::npos);

    const Trajectory neg = run_test_episode(instance, memory, backend, kBundle,
                                            config_for(Variant::negative));
    CHECK(neg.steps[0].prompt_sent.find("negative rule body") != std::string::npos);
    CHECK(neg.steps[0].prompt_sent.find("positive rule body") == std::string::npos);
}

TEST_CASE("test episodes leave memory untouched and respect max_turns") {
    ExperienceStore memory;
    memory.note("daughter", "rule", Polarity::positive, "t1",
                ExperienceMode::abstract_rule);
    const std::size_t before = memory.size();

    // The model never answers; NOTE attempts are rejected.
    ScriptedBackend backend({{"", "NOTE[k]: should be rejected", false}});
    VariantConfig config = config_for(Variant::full);
    config.max_turns = 4;
    const TaskInstance instance{"s1", "Who is the daughter?", "daughter"};
    const Trajectory t =
        run_test_episode(instance, memory, backend, kBundle, config);

    CHECK_FALSE(t.prediction.has_value());
    CHECK(t.steps.size() == 4);
    CHECK(memory.size() == before);
    CHECK(t.noted_experience_ids.empty());
}

TEST_CASE("run_experiment rejects overlapping train and test ids") {
    ScriptedBackend backend({{"", "ANSWER[x]", false}});
    ExperienceStore memory;
    const std::vector<TaskInstance> same = {{"a", "q", "x"}};
    CHECK_THROWS_AS(run_experiment(same, same, memory, backend, kBundle,
                                   config_for(Variant::full)),
                    Error);
}

TEST_CASE("run_experiment is deterministic and conserves note counts") {
    auto make_backend = [] {
        return ScriptedBackend({
            {"alpha beta", "ANSWER[x]", true},
            {"correct answer is y", "NOTE[alpha]: rule about alpha", true},
            {"Noted.", "ANSWER[done]", true},
            {"gamma alpha", "ANSWER[x]", false},
        });
    };
    const std::vector<TaskInstance> train = {{"tr1", "alpha beta question", "y"}};
    const std::vector<TaskInstance> test = {{"te1", "gamma alpha question", "x"}};

    std::string logs[2];
    for (int run = 0; run < 2; ++run) {
        ScriptedBackend backend = make_backend();
        ExperienceStore memory;
        const ExperimentResult result =
            run_experiment(train, test, memory, backend, kBundle,
                           config_for(Variant::full));
        CHECK(memory.size() == 1);
        std::size_t notes = 0;
        for (const auto& t : result.train_trajectories) {
            notes += t.noted_experience_ids.size();
        }
        CHECK(notes == memory.size());
        CHECK(memory.count(Polarity::positive) + memory.count(Polarity::negative) ==
              memory.size());
        REQUIRE(result.outcomes.size() == 1);
        CHECK(result.outcomes[0].second.correct);

        for (const auto& t : result.train_trajectories) {
            logs[run] += trajectory_to_json(t) + "\n";
        }
        for (const auto& t : result.test_trajectories) {
            logs[run] += trajectory_to_json(t) + "\n";
        }
    }
    CHECK(logs[0] == logs[1]);
}

TEST_CASE("checkpoint schedule produces a monotone-n curve") {
    auto entries = std::vector<ScriptEntry>{
        {"q one", "ANSWER[x]", true},
        {"q two", "ANSWER[x]", true},
        {"correct answer is", "ANSWER[done]", false},
        {"test q", "ANSWER[right]", false},
    };
    ScriptedBackend backend(entries);
    ExperienceStore memory;
    const std::vector<TaskInstance> train = {{"tr1", "q one", "y"},
                                             {"tr2", "q two", "y"}};
    const std::vector<TaskInstance> test = {{"te1", "test q", "right"}};
    const ExperimentResult result =
        run_experiment(train, test, memory, backend, kBundle,
                       config_for(Variant::full), {1});
    REQUIRE(result.curve.size() == 3);
    CHECK(result.curve[0].first == 0);
    CHECK(result.curve[1].first == 1);
    CHECK(result.curve[2].first == 2);
    for (const auto& [_, acc] : result.curve) CHECK(acc == 1.0);
}

TEST_CASE("step counts stay within the budget bound") {
    // 1 answer exchange + n_train budgeted actions + at most 2 recovery
    // re-prompts across both phases.
    ScriptedBackend backend({
        {"Ruth to Sam", "garbled", true},
        {"ANSWER[...]", "ANSWER[aunt]", true},
        {"correct answer is daughter", "also garbled", true},
        {"single command", "THINK[ok]", true},
        {"OK.", "THINK[ok]", true},
        {"OK.", "THINK[ok]", true},
        {"OK.", "THINK[ok]", true},
    });
    ExperienceStore memory;
    const Trajectory t = run_train_episode(kCase, memory, backend, kBundle,
                                           config_for(Variant::full));
    CHECK(t.prediction == "aunt");
    CHECK(t.steps.size() <= 1 + 4 + 2);
}
