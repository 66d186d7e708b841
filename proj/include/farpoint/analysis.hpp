#pragma once

#include "farpoint/engine.hpp"
#include "farpoint/experiment.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace farpoint {

struct ConditionSummary {
    Technique technique = Technique::absolute;
    double width_px = 0.0;
    double amplitude_px = 0.0;
    double id = 0.0;
    std::vector<double> set_median_rt_s; // sets with at least one valid trial
    int sets_without_rt = 0;             // all trials invalid; kept for accuracy only
    double mean_rt_s = 0.0;              // mean of the set medians; 0 without any
    int trials = 0;
    int valid_trials = 0;

    friend bool operator==(const ConditionSummary&, const ConditionSummary&) = default;

    double accuracy() const { return trials == 0 ? 0.0 : static_cast<double>(valid_trials) / trials; }
    bool has_rt() const { return !set_median_rt_s.empty(); }
};

// Median RT per set over its valid trials, then the mean of set medians per
// (technique, W, A). Sets are keyed by (session, set), so several simulated
// participants pool into one summary per condition. Sorted by technique, W, A.
std::vector<ConditionSummary> summarize(std::span<const TrialRow> rows);

double median(std::vector<double> values);

struct FittsFit {
    double a = 0.0; // s
    double b = 0.0; // s/bit
    double rmse = 0.0;
    double r_squared = 0.0;
    std::size_t n = 0;

    friend bool operator==(const FittsFit&, const FittsFit&) = default;

    // 1/b in bits/s; empty when the slope is not positive.
    std::optional<double> throughput() const
    {
        if (!(b > 0.0))
            return std::nullopt;
        return 1.0 / b;
    }
    double predict(double id) const { return a + b * id; }
};

// Ordinary least squares of y on x; exact for two distinct points. Throws
// SingularFit when every x is equal.
FittsFit least_squares(std::span<const std::pair<double, double>> points);

// Fitts regression of RT on ID. Needs at least three distinct IDs.
FittsFit fit_fitts(std::span<const std::pair<double, double>> id_rt_points);

// ID at which two regression lines meet. Throws DomainError for equal slopes.
double crossover_id(const FittsFit& first, const FittsFit& second);

struct TechniqueFit {
    Technique technique = Technique::absolute;
    FittsFit fit;

    friend bool operator==(const TechniqueFit&, const TechniqueFit&) = default;
};

// One fit per technique with enough conditions carrying RTs; techniques that
// cannot be fitted are skipped with a warning.
std::vector<TechniqueFit> fit_by_technique(std::span<const ConditionSummary> summaries);

enum class ReportFormat { csv, txt };

struct ReportResult {
    std::vector<std::filesystem::path> files;
    std::vector<std::string> warnings;
};

// csv: conditions.csv, fits.csv, accuracy_by_width.csv. txt: report.txt with
// the same three tables laid out for reading. Throws Error on I/O failure.
ReportResult emit_report(std::span<const ConditionSummary> summaries, std::span<const TechniqueFit> fits,
                         ReportFormat format, const std::filesystem::path& out_dir);

void write_conditions_csv(std::ostream& out, std::span<const ConditionSummary> summaries);
std::vector<ConditionSummary> read_conditions_csv(std::istream& in);

} // namespace farpoint
