#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "json.hpp"
#include "noted/agent.hpp"
#include "noted/dataset.hpp"
#include "noted/errors.hpp"
#include "noted/evaluation.hpp"
#include "noted/memory.hpp"

namespace fs = std::filesystem;
using namespace noted;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBackend = 1;
constexpr int kExitUsage = 2;
constexpr int kExitFormat = 3;

std::uint64_t file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::uint64_t h = 14695981039346656037ull;
    char c;
    while (in.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

struct RunFlags {
    std::string train_set;
    std::string test_set;
    std::string variant = "full";
    int k = 3;
    int n_train = 4;
    int max_turns = 8;
    std::uint64_t seed = 0;
    std::string backend = "scripted";
    std::string script;
    std::string cassette;
    std::string base_url;
    std::string model = "gpt-3.5-turbo";
    std::string memory_path;
    std::string out_dir;
    std::string prompt_train;
    std::string prompt_test;
    std::string demos;
    std::string config_path;
    int checkpoint_every = 0;
};

// Config file values fill in any flag left at its default.
void apply_config_file(RunFlags& flags) {
    if (flags.config_path.empty()) return;
    std::ifstream in(flags.config_path);
    if (!in) throw IoError("cannot open config: " + flags.config_path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed config: ") + e.what(), 1);
    }
    auto str = [&doc](const char* key, std::string& target) {
        if (target.empty() && doc.contains(key)) target = doc[key].get<std::string>();
    };
    str("train_set", flags.train_set);
    str("test_set", flags.test_set);
    str("script", flags.script);
    str("cassette", flags.cassette);
    str("base_url", flags.base_url);
    str("memory", flags.memory_path);
    str("out", flags.out_dir);
    str("prompt_train", flags.prompt_train);
    str("prompt_test", flags.prompt_test);
    str("demos", flags.demos);
    if (doc.contains("variant")) flags.variant = doc["variant"].get<std::string>();
    if (doc.contains("k")) flags.k = doc["k"].get<int>();
    if (doc.contains("n_train")) flags.n_train = doc["n_train"].get<int>();
    if (doc.contains("max_turns")) flags.max_turns = doc["max_turns"].get<int>();
    if (doc.contains("seed")) flags.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("backend")) flags.backend = doc["backend"].get<std::string>();
    if (doc.contains("model")) flags.model = doc["model"].get<std::string>();
}

std::unique_ptr<Backend> make_backend(const RunFlags& flags, bool recording_allowed) {
    if (flags.backend == "scripted") {
        if (flags.script.empty()) throw CLI::ValidationError("scripted backend requires --script");
        return ScriptedBackend::from_file(flags.script);
    }
    if (flags.backend == "cassette") {
        if (flags.cassette.empty()) throw CLI::ValidationError("cassette backend requires --cassette");
        return CassetteBackend::replay(flags.cassette);
    }
    if (flags.backend == "live") {
        if (flags.base_url.empty()) throw CLI::ValidationError("live backend requires --base-url");
        HttpBackendConfig config;
        config.base_url = flags.base_url;
        config.model_name = flags.model;
        auto live = std::make_shared<HttpBackend>(config);
        if (recording_allowed && !flags.cassette.empty()) {
            return CassetteBackend::record(live, flags.cassette);
        }
        struct Wrap : Backend {
            std::shared_ptr<HttpBackend> inner;
            std::string complete(const ChatRequest& r) override {
                return inner->complete(r);
            }
        };
        auto wrap = std::make_unique<Wrap>();
        wrap->inner = live;
        return wrap;
    }
    throw CLI::ValidationError("unknown backend: " + flags.backend);
}

VariantConfig variant_config(const RunFlags& flags) {
    VariantConfig config;
    config.variant = variant_from_string(flags.variant);
    config.k = flags.k;
    config.n_train = flags.n_train;
    config.max_turns = flags.max_turns;
    config.model_name = flags.model;
    return config;
}

void write_manifest(const RunFlags& flags, const std::string& subcommand,
                    const std::vector<std::string>& input_paths) {
    nlohmann::json inputs = nlohmann::json::object();
    for (const auto& p : input_paths) {
        if (!p.empty()) inputs[p] = file_digest(p);
    }
    nlohmann::json manifest{{"subcommand", subcommand},
                            {"variant", flags.variant},
                            {"k", flags.k},
                            {"n_train", flags.n_train},
                            {"max_turns", flags.max_turns},
                            {"seed", flags.seed},
                            {"backend", flags.backend},
                            {"model", flags.model},
                            {"inputs", inputs}};
    std::ofstream out(fs::path(flags.out_dir) / "manifest.json");
    if (!out) throw IoError("cannot write manifest");
    out << manifest.dump(2) << '\n';
}

void write_trajectories(const std::vector<Trajectory>& trajectories,
                        const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write trajectory log: " + path.string());
    for (const auto& t : trajectories) out << trajectory_to_json(t) << '\n';
}

int cmd_gen_data(int count, std::uint64_t seed, const std::string& vocab_path,
                 const std::string& out_path) {
    const Vocabulary vocab = Vocabulary::from_file(vocab_path);
    const auto instances = gen_lets(count, seed, vocab);
    save_tasks(lets_to_tasks(instances), out_path);
    std::cout << "wrote " << count << " instances to " << out_path << "\n";
    return kExitOk;
}

int cmd_train(RunFlags flags) {
    apply_config_file(flags);
    if (flags.train_set.empty() || flags.out_dir.empty() ||
        flags.memory_path.empty() || flags.prompt_train.empty() ||
        flags.prompt_test.empty() || flags.demos.empty()) {
        throw CLI::ValidationError(
            "train requires --train-set, --memory, --out and prompt files");
    }
    fs::create_directories(flags.out_dir);

    const auto train_set = load_tasks(flags.train_set);
    const PromptBundle bundle =
        load_bundle(flags.prompt_train, flags.prompt_test, flags.demos);
    auto backend = make_backend(flags, /*recording_allowed=*/true);
    const VariantConfig config = variant_config(flags);

    ExperienceStore memory;
    std::vector<Trajectory> trajectories;
    std::vector<std::pair<int, double>> curve;
    try {
        if (flags.checkpoint_every > 0) {
            if (flags.test_set.empty()) {
                throw CLI::ValidationError("--checkpoint-every requires --test-set");
            }
            auto result = run_experiment(train_set, load_tasks(flags.test_set),
                                         memory, *backend, bundle, config,
                                         {flags.checkpoint_every});
            trajectories = std::move(result.train_trajectories);
            curve = training_curve(result.curve);
        } else {
            trajectories = run_train_pass(train_set, memory, *backend, bundle, config);
        }
    } catch (const BackendError&) {
        // Persist what we have, then propagate for the exit code.
        memory.save(flags.memory_path);
        write_trajectories(trajectories, fs::path(flags.out_dir) / "train_trajectories.jsonl");
        throw;
    }

    memory.save(flags.memory_path);
    write_trajectories(trajectories, fs::path(flags.out_dir) / "train_trajectories.jsonl");
    if (!curve.empty()) {
        std::ofstream out(fs::path(flags.out_dir) / "curve.tsv");
        out << render_curve_tsv(curve);
    }
    write_manifest(flags, "train",
                   {flags.train_set, flags.prompt_train, flags.prompt_test,
                    flags.demos, flags.script, flags.config_path});
    std::cout << "stored " << memory.size() << " experiences in "
              << flags.memory_path << "\n";
    return kExitOk;
}

int cmd_test(RunFlags flags) {
    apply_config_file(flags);
    if (flags.test_set.empty() || flags.out_dir.empty() ||
        flags.prompt_train.empty() || flags.prompt_test.empty() ||
        flags.demos.empty()) {
        throw CLI::ValidationError(
            "test requires --test-set, --out and prompt files");
    }
    const bool disabled = flags.variant == "disabled";
    if (!disabled && flags.memory_path.empty()) {
        throw CLI::ValidationError("test requires --memory unless --variant disabled");
    }
    fs::create_directories(flags.out_dir);

    const auto test_set = load_tasks(flags.test_set);
    const PromptBundle bundle =
        load_bundle(flags.prompt_train, flags.prompt_test, flags.demos);
    auto backend = make_backend(flags, /*recording_allowed=*/true);
    const VariantConfig config = variant_config(flags);

    ExperienceStore memory;
    if (!disabled) memory = ExperienceStore::load(flags.memory_path);

    auto trajectories = run_test_pass(test_set, memory, *backend, bundle, config);

    std::vector<std::pair<std::string, CaseResult>> cases;
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        CaseResult result;
        result.prediction = trajectories[i].prediction;
        result.correct =
            result.prediction && judge(*result.prediction, test_set[i].answer);
        cases.emplace_back(trajectories[i].instance_id, result);
    }
    RunReport report =
        make_report(flags.variant, cases, static_cast<int>(memory.size()));

    write_trajectories(trajectories, fs::path(flags.out_dir) / "test_trajectories.jsonl");
    save_report(report, (fs::path(flags.out_dir) / "report.json").string());
    write_manifest(flags, "test",
                   {flags.test_set, flags.prompt_train, flags.prompt_test,
                    flags.demos, flags.script, flags.cassette,
                    disabled ? std::string() : flags.memory_path,
                    flags.config_path});
    std::cout << render_report_table({report});
    return kExitOk;
}

int cmd_eval(const std::string& base_path, const std::string& treated_path,
             const std::string& out_dir) {
    fs::create_directories(out_dir);
    const RunReport base = report_from_json_file(base_path);
    const RunReport treated = report_from_json_file(treated_path);
    const BucketCounts buckets = improvement_analysis(base, treated);

    const std::string tables =
        render_report_table({base, treated}) + "\n" + render_buckets(buckets);
    std::ofstream out(fs::path(out_dir) / "analysis.txt");
    if (!out) throw IoError("cannot write analysis");
    out << tables;

    std::ofstream tsv(fs::path(out_dir) / "buckets.tsv");
    tsv << "ff\tft\ttt\ttf\n"
        << buckets.ff << '\t' << buckets.ft << '\t' << buckets.tt << '\t'
        << buckets.tf << '\n';

    std::cout << tables;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"experience-noting agent harness"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a letter-splicing task file");
    int gen_count = 0;
    std::uint64_t gen_seed = 0;
    std::string gen_vocab;
    std::string gen_out;
    gen->add_option("--count", gen_count, "number of instances")
        ->required()
        ->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed, "RNG seed")->default_val(0);
    gen->add_option("--vocab", gen_vocab, "vocabulary file")->required();
    gen->add_option("--out", gen_out, "output task file")->required();

    RunFlags flags;
    auto add_run_flags = [&flags](CLI::App* cmd) {
        cmd->add_option("--train-set", flags.train_set, "training task file");
        cmd->add_option("--test-set", flags.test_set, "testing task file");
        cmd->add_option("--variant", flags.variant)
            ->check(CLI::IsMember({"full", "disabled", "case", "positive", "negative"}));
        cmd->add_option("--k", flags.k)->check(CLI::PositiveNumber);
        cmd->add_option("--n-train", flags.n_train)->check(CLI::NonNegativeNumber);
        cmd->add_option("--max-turns", flags.max_turns)->check(CLI::PositiveNumber);
        cmd->add_option("--seed", flags.seed);
        cmd->add_option("--backend", flags.backend)
            ->check(CLI::IsMember({"live", "scripted", "cassette"}));
        cmd->add_option("--script", flags.script, "scripted backend script file");
        cmd->add_option("--cassette", flags.cassette, "cassette file");
        cmd->add_option("--base-url", flags.base_url, "live backend base URL");
        cmd->add_option("--model", flags.model, "model name");
        cmd->add_option("--memory", flags.memory_path, "experience store file");
        cmd->add_option("--out", flags.out_dir, "output directory");
        cmd->add_option("--prompt-train", flags.prompt_train, "train template file");
        cmd->add_option("--prompt-test", flags.prompt_test, "test template file");
        cmd->add_option("--demos", flags.demos, "demonstrations file");
        cmd->add_option("--config", flags.config_path, "JSON config file");
    };

    auto* train = app.add_subcommand("train", "run the training pass");
    add_run_flags(train);
    train->add_option("--checkpoint-every", flags.checkpoint_every,
                      "evaluate the test set after every N training samples");

    auto* test = app.add_subcommand("test", "run the testing pass");
    add_run_flags(test);

    auto* eval = app.add_subcommand("eval", "compare two run reports");
    std::string eval_base, eval_treated, eval_out;
    eval->add_option("--base", eval_base, "baseline report.json")->required();
    eval->add_option("--treated", eval_treated, "treated report.json")->required();
    eval->add_option("--out", eval_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(gen_count, gen_seed, gen_vocab, gen_out);
        if (train->parsed()) return cmd_train(flags);
        if (test->parsed()) return cmd_test(flags);
        if (eval->parsed()) return cmd_eval(eval_base, eval_treated, eval_out);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitFormat;
    } catch (const InvalidVocabularyError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitFormat;
    } catch (const BackendError& e) {
        std::cerr << "backend failure: " << e.what() << "\n";
        return kExitBackend;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBackend;
    }
    return kExitUsage;
}
