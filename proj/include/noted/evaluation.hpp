#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace noted {

struct CaseResult {
    std::optional<std::string> prediction;
    bool correct = false;
    bool operator==(const CaseResult&) const = default;
};

struct RunReport {
    std::string variant;
    int n_cases = 0;
    int n_correct = 0;
    double accuracy = 0.0;  // n_correct / n_cases exactly
    int memory_count = 0;
    std::map<std::string, CaseResult> per_case;
};

// F=>F / F=>T / T=>T / T=>F partition of shared test cases.
struct BucketCounts {
    int ff = 0;
    int ft = 0;
    int tt = 0;
    int tf = 0;
    bool operator==(const BucketCounts&) const = default;
};

RunReport make_report(const std::string& variant,
                      const std::vector<std::pair<std::string, CaseResult>>& cases,
                      int memory_count);

// Throws EmptyRunError when the report has no cases.
double accuracy(const RunReport& report);

// Throws IdMismatchError unless both reports cover the same instance ids.
BucketCounts improvement_analysis(const RunReport& base, const RunReport& treated);

// Per-experience accuracy lift: (perf_type - perf_disabled) / count.
// Throws ZeroCountError when count < 1.
double efficiency(double perf_type, double perf_disabled, int count);

// Validates the n axis (strictly increasing, first value 0 allowed) and
// returns plot-ready rows. Throws NonMonotoneCheckpointsError otherwise.
std::vector<std::pair<int, double>> training_curve(
    const std::vector<std::pair<int, double>>& checkpoint_reports);

std::string report_to_json(const RunReport& report);
RunReport report_from_json_file(const std::string& path);
void save_report(const RunReport& report, const std::string& path);

// Aligned-column text renderings for humans, TSV for tooling.
std::string render_report_table(const std::vector<RunReport>& reports);
std::string render_buckets(const BucketCounts& buckets);
std::string render_curve_tsv(const std::vector<std::pair<int, double>>& curve);

}  // namespace noted
