#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "noted/backend.hpp"
#include "noted/dataset.hpp"
#include "noted/memory.hpp"
#include "noted/protocol.hpp"

namespace noted {

enum class Variant { full, disabled, case_based, positive, negative };
enum class Phase { train, test };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);
std::string to_string(Phase p);

struct VariantConfig {
    Variant variant = Variant::full;
    int k = 3;        // experiences retrieved per test case
    int n_train = 4;  // extra actions after feedback during training
    int max_turns = 8;
    std::string model_name = "gpt-3.5-turbo";
};

struct Step {
    std::string prompt_sent;
    std::string raw_reply;
    std::optional<Command> command;  // absent when the reply was unparsable
};

struct Trajectory {
    std::string instance_id;
    Phase phase = Phase::train;
    std::vector<Step> steps;
    std::optional<std::string> prediction;
    std::optional<bool> correct_before_feedback;
    std::vector<std::int64_t> noted_experience_ids;
};

std::string trajectory_to_json(const Trajectory& t);

// Training episode: elicit an answer, judge it, deliver feedback, then run
// the reflection loop for up to n_train actions. Notes carry the polarity
// of the pre-feedback verdict; the case variant stores the raw Q&A.
Trajectory run_train_episode(const TaskInstance& instance, ExperienceStore& memory,
                             Backend& backend, const PromptBundle& bundle,
                             const VariantConfig& config);

// Testing episode: retrieval runs harness-side before the model sees the
// question; memory is read-only and the reply loop is bounded by max_turns.
Trajectory run_test_episode(const TaskInstance& instance,
                            const ExperienceStore& memory, Backend& backend,
                            const PromptBundle& bundle,
                            const VariantConfig& config);

struct CaseOutcome {
    std::optional<std::string> prediction;
    bool correct = false;
};

struct ExperimentResult {
    std::vector<Trajectory> train_trajectories;
    std::vector<Trajectory> test_trajectories;
    std::vector<std::pair<std::string, CaseOutcome>> outcomes;  // test order
    std::vector<std::pair<int, double>> curve;  // (n_train_samples, accuracy)
};

struct ExperimentOptions {
    // When > 0, the test set is evaluated before training and after every
    // checkpoint_every training samples, producing the training curve.
    int checkpoint_every = 0;
};

std::vector<Trajectory> run_train_pass(const std::vector<TaskInstance>& train_set,
                                       ExperienceStore& memory, Backend& backend,
                                       const PromptBundle& bundle,
                                       const VariantConfig& config);

std::vector<Trajectory> run_test_pass(const std::vector<TaskInstance>& test_set,
                                      const ExperienceStore& memory,
                                      Backend& backend, const PromptBundle& bundle,
                                      const VariantConfig& config);

// Sequential train pass building memory, then a test pass over the frozen
// store. Train and test ids must be disjoint.
ExperimentResult run_experiment(const std::vector<TaskInstance>& train_set,
                                const std::vector<TaskInstance>& test_set,
                                ExperienceStore& memory, Backend& backend,
                                const PromptBundle& bundle,
                                const VariantConfig& config,
                                const ExperimentOptions& options = {});

}  // namespace noted
