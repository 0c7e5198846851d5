#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "noted/dataset.hpp"
#include "noted/evaluation.hpp"

namespace fs = std::filesystem;
using namespace noted;

namespace {

const std::string kData = NOTED_DATA_DIR;
const std::string kBin = NOTED_CLI_BIN;

int run_cli(const std::string& args) {
    const std::string cmd = kBin + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const char* stem) {
    static int counter = 0;
    fs::path dir = fs::temp_directory_path() /
                   (std::string("noted_cli_") + stem + std::to_string(counter++));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string prompt_flags() {
    return " --prompt-train " + kData + "/prompts/relations_train.txt" +
           " --prompt-test " + kData + "/prompts/relations_test.txt" +
           " --demos " + kData + "/prompts/relations_demos.txt";
}

}  // namespace

TEST_CASE("gen-data is deterministic and validates usage") {
    const fs::path dir = fresh_dir("gen");
    const std::string out1 = (dir / "a.jsonl").string();
    const std::string out2 = (dir / "b.jsonl").string();
    const std::string vocab = kData + "/vocab.txt";

    CHECK(run_cli("gen-data --count 200 --seed 7 --vocab " + vocab +
                  " --out " + out1) == 0);
    CHECK(run_cli("gen-data --count 200 --seed 7 --vocab " + vocab +
                  " --out " + out2) == 0);
    CHECK(slurp(out1) == slurp(out2));
    CHECK(load_tasks(out1).size() == 200);

    CHECK(run_cli("gen-data --count 0 --seed 7 --vocab " + vocab + " --out " +
                  (dir / "c.jsonl").string()) == 2);
    CHECK(run_cli("gen-data") == 2);
    fs::remove_all(dir);
}

TEST_CASE("train and test run the bundled fixture without mutating inputs") {
    const fs::path dir = fresh_dir("run");
    const std::string train_set = kData + "/fixtures/relations_train.jsonl";
    const std::string before = slurp(train_set);

    CHECK(run_cli("train --train-set " + train_set +
                  " --backend scripted --script " + kData +
                  "/fixtures/script_train.json --variant full --memory " +
                  (dir / "memory.jsonl").string() + " --out " + dir.string() +
                  prompt_flags()) == 0);
    CHECK(slurp(train_set) == before);
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(fs::exists(dir / "memory.jsonl"));
    CHECK(fs::exists(dir / "train_trajectories.jsonl"));

    const fs::path test_dir = fresh_dir("test");
    CHECK(run_cli("test --test-set " + kData +
                  "/fixtures/relations_test.jsonl --backend scripted --script " +
                  kData + "/fixtures/script_test_full.json --variant full "
                  "--memory " + (dir / "memory.jsonl").string() + " --out " +
                  test_dir.string() + prompt_flags()) == 0);
    CHECK(fs::exists(test_dir / "report.json"));
    CHECK(fs::exists(test_dir / "manifest.json"));

    fs::remove_all(dir);
    fs::remove_all(test_dir);
}

TEST_CASE("disabled test needs no memory file") {
    const fs::path dir = fresh_dir("disabled");
    CHECK(run_cli("test --test-set " + kData +
                  "/fixtures/relations_test.jsonl --backend scripted --script " +
                  kData + "/fixtures/script_test_disabled.json "
                  "--variant disabled --out " + dir.string() +
                  prompt_flags()) == 0);
    const RunReport report =
        report_from_json_file((dir / "report.json").string());
    CHECK(report.memory_count == 0);
    fs::remove_all(dir);
}

TEST_CASE("non-disabled test without memory is a usage error") {
    const fs::path dir = fresh_dir("nomem");
    CHECK(run_cli("test --test-set " + kData +
                  "/fixtures/relations_test.jsonl --backend scripted --script " +
                  kData + "/fixtures/script_test_full.json --variant full --out " +
                  dir.string() + prompt_flags()) == 2);
    fs::remove_all(dir);
}

TEST_CASE("format errors exit with code 3") {
    const fs::path dir = fresh_dir("badformat");
    const fs::path bad = dir / "bad.jsonl";
    std::ofstream(bad) << "{not json\n";
    CHECK(run_cli("train --train-set " + bad.string() +
                  " --backend scripted --script " + kData +
                  "/fixtures/script_train.json --memory " +
                  (dir / "m.jsonl").string() + " --out " + dir.string() +
                  prompt_flags()) == 3);
    fs::remove_all(dir);
}

TEST_CASE("script misses exit with code 1") {
    const fs::path dir = fresh_dir("miss");
    const fs::path script = dir / "script.json";
    std::ofstream(script) << R"([{"match": "never ever", "reply": "x"}])";
    CHECK(run_cli("train --train-set " + kData +
                  "/fixtures/relations_train.jsonl --backend scripted --script " +
                  script.string() + " --memory " + (dir / "m.jsonl").string() +
                  " --out " + dir.string() + prompt_flags()) == 1);
    // Partial artifacts are still persisted.
    CHECK(fs::exists(dir / "m.jsonl"));
    fs::remove_all(dir);
}

TEST_CASE("eval emits bucket counts that partition the cases") {
    const fs::path mem_dir = fresh_dir("evalmem");
    REQUIRE(run_cli("train --train-set " + kData +
                    "/fixtures/relations_train.jsonl --backend scripted "
                    "--script " + kData + "/fixtures/script_train.json "
                    "--variant full --memory " +
                    (mem_dir / "memory.jsonl").string() + " --out " +
                    mem_dir.string() + prompt_flags()) == 0);

    const fs::path full_dir = fresh_dir("evalfull");
    REQUIRE(run_cli("test --test-set " + kData +
                    "/fixtures/relations_test.jsonl --backend scripted "
                    "--script " + kData + "/fixtures/script_test_full.json "
                    "--variant full --memory " +
                    (mem_dir / "memory.jsonl").string() + " --out " +
                    full_dir.string() + prompt_flags()) == 0);

    const fs::path dis_dir = fresh_dir("evaldis");
    REQUIRE(run_cli("test --test-set " + kData +
                    "/fixtures/relations_test.jsonl --backend scripted "
                    "--script " + kData + "/fixtures/script_test_disabled.json "
                    "--variant disabled --out " + dis_dir.string() +
                    prompt_flags()) == 0);

    const fs::path eval_dir = fresh_dir("evalout");
    CHECK(run_cli("eval --base " + (dis_dir / "report.json").string() +
                  " --treated " + (full_dir / "report.json").string() +
                  " --out " + eval_dir.string()) == 0);

    std::ifstream tsv(eval_dir / "buckets.tsv");
    std::string header;
    int ff = -1, ft = -1, tt = -1, tf = -1;
    std::getline(tsv, header);
    tsv >> ff >> ft >> tt >> tf;
    CHECK(ff + ft + tt + tf == 4);

    for (const auto& d : {mem_dir, full_dir, dis_dir, eval_dir}) fs::remove_all(d);
}
