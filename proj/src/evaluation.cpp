#include "noted/evaluation.hpp"

#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "noted/errors.hpp"

namespace noted {

RunReport make_report(const std::string& variant,
                      const std::vector<std::pair<std::string, CaseResult>>& cases,
                      int memory_count) {
    RunReport report;
    report.variant = variant;
    report.memory_count = memory_count;
    for (const auto& [id, result] : cases) {
        report.per_case[id] = result;
        ++report.n_cases;
        if (result.correct) ++report.n_correct;
    }
    report.accuracy = report.n_cases
                          ? static_cast<double>(report.n_correct) / report.n_cases
                          : 0.0;
    return report;
}

double accuracy(const RunReport& report) {
    if (report.n_cases < 1) throw EmptyRunError("report has no cases");
    return static_cast<double>(report.n_correct) / report.n_cases;
}

BucketCounts improvement_analysis(const RunReport& base, const RunReport& treated) {
    if (base.per_case.size() != treated.per_case.size()) {
        throw IdMismatchError("reports cover different numbers of cases");
    }
    BucketCounts buckets;
    for (const auto& [id, base_result] : base.per_case) {
        auto it = treated.per_case.find(id);
        if (it == treated.per_case.end()) {
            throw IdMismatchError("instance missing from treated report: " + id);
        }
        const bool before = base_result.correct;
        const bool after = it->second.correct;
        if (!before && !after) ++buckets.ff;
        else if (!before && after) ++buckets.ft;
        else if (before && after) ++buckets.tt;
        else ++buckets.tf;
    }
    return buckets;
}

double efficiency(double perf_type, double perf_disabled, int count) {
    if (count < 1) throw ZeroCountError("experience count must be >= 1");
    return (perf_type - perf_disabled) / static_cast<double>(count);
}

std::vector<std::pair<int, double>> training_curve(
    const std::vector<std::pair<int, double>>& checkpoint_reports) {
    int previous = -1;
    for (const auto& [n, _] : checkpoint_reports) {
        if (n < 0 || n <= previous) {
            throw NonMonotoneCheckpointsError(
                "checkpoint sample counts must be strictly increasing from 0");
        }
        previous = n;
    }
    return checkpoint_reports;
}

std::string report_to_json(const RunReport& report) {
    nlohmann::json per_case = nlohmann::json::object();
    for (const auto& [id, result] : report.per_case) {
        per_case[id] = {{"prediction", result.prediction
                                           ? nlohmann::json(*result.prediction)
                                           : nlohmann::json(nullptr)},
                        {"correct", result.correct}};
    }
    return nlohmann::json{{"variant", report.variant},
                          {"n_cases", report.n_cases},
                          {"n_correct", report.n_correct},
                          {"accuracy", report.accuracy},
                          {"memory_count", report.memory_count},
                          {"per_case", per_case}}
        .dump(2);
}

RunReport report_from_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open report: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed report: ") + e.what(), 1);
    }
    RunReport report;
    try {
        report.variant = doc.at("variant").get<std::string>();
        report.n_cases = doc.at("n_cases").get<int>();
        report.n_correct = doc.at("n_correct").get<int>();
        report.accuracy = doc.at("accuracy").get<double>();
        report.memory_count = doc.at("memory_count").get<int>();
        for (const auto& [id, entry] : doc.at("per_case").items()) {
            CaseResult result;
            if (!entry.at("prediction").is_null()) {
                result.prediction = entry.at("prediction").get<std::string>();
            }
            result.correct = entry.at("correct").get<bool>();
            report.per_case[id] = result;
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("report missing fields: ") + e.what(), 1);
    }
    return report;
}

void save_report(const RunReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << report_to_json(report) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

namespace {

std::string pct(double fraction) {
    // Percentages at 3 significant figures, e.g. 0.61 -> "61.0".
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", fraction * 100.0);
    return buf;
}

}  // namespace

std::string render_report_table(const std::vector<RunReport>& reports) {
    std::string out = "variant     accuracy   cases   memory\n";
    for (const auto& r : reports) {
        char line[128];
        std::snprintf(line, sizeof(line), "%-10s  %7s%%  %6d  %7d\n",
                      r.variant.c_str(), pct(r.accuracy).c_str(), r.n_cases,
                      r.memory_count);
        out += line;
    }
    return out;
}

std::string render_buckets(const BucketCounts& buckets) {
    const int total = buckets.ff + buckets.ft + buckets.tt + buckets.tf;
    auto frac = [total](int n) {
        return total ? static_cast<double>(n) / total : 0.0;
    };
    char out[256];
    std::snprintf(out, sizeof(out),
                  "bucket  count  fraction\n"
                  "F=>F   %6d  %8.3f\n"
                  "F=>T   %6d  %8.3f\n"
                  "T=>T   %6d  %8.3f\n"
                  "T=>F   %6d  %8.3f\n",
                  buckets.ff, frac(buckets.ff), buckets.ft, frac(buckets.ft),
                  buckets.tt, frac(buckets.tt), buckets.tf, frac(buckets.tf));
    return out;
}

std::string render_curve_tsv(const std::vector<std::pair<int, double>>& curve) {
    std::string out = "n_train\taccuracy\n";
    for (const auto& [n, acc] : curve) {
        char line[64];
        std::snprintf(line, sizeof(line), "%d\t%.6f\n", n, acc);
        out += line;
    }
    return out;
}

}  // namespace noted
