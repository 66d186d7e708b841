#pragma once

#include "farpoint/engine.hpp"
#include "farpoint/geometry.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace farpoint {

// Fitts' index of difficulty, log2(A/W + 1), in bits.
double fitts_id(double amplitude_px, double width_px);

// Counterbalancing orders over conditions 1..n. Even n: n rows in which every
// ordered adjacent pair occurs once. Odd n > 1: the n rows followed by their
// reversals (2n rows).
std::vector<std::vector<int>> balanced_latin_square(int n);

struct PracticeRules {
    bool enabled = true;
    double amplitude_px = 3000.0;
    std::vector<double> widths_px{25.0, 50.0}; // alternated set to set
    double criterion = 0.90;                   // pooled accuracy...
    int window_sets = 2;                       // ...over this many latest sets
    int max_sets = 20;                         // give up and proceed

    friend bool operator==(const PracticeRules&, const PracticeRules&) = default;
};

struct StudyDesign {
    std::vector<Technique> techniques{Technique::relative, Technique::absolute, Technique::hybrid,
                                      Technique::dual_speed};
    std::vector<double> widths_px{25.0, 50.0, 100.0};
    std::vector<double> amplitudes_px{1000.0, 3000.0, 5000.0};
    int sets_per_condition = 1;
    int participant_index = 0; // picks the Latin-square row
    bool randomize_technique_order = true;
    std::uint64_t seed = 1;
    PracticeRules practice;

    friend bool operator==(const StudyDesign&, const StudyDesign&) = default;

    void validate() const;
};

enum class Side { left, right };

struct SetSpec {
    int index = 0; // running set number within the session
    bool practice = false;
    Technique technique = Technique::absolute;
    double width_px = 0.0;
    double amplitude_px = 0.0;
    double left_center_px = 0.0;
    double right_center_px = 0.0;

    friend bool operator==(const SetSpec&, const SetSpec&) = default;

    // Two full-height bars centred on the display centre +/- A/2. Throws
    // DomainError if a bar would leave the display.
    static SetSpec make(Technique technique, double width_px, double amplitude_px, const DisplayPlane& display,
                        int index = 0, bool practice = false);

    double id() const { return fitts_id(amplitude_px, width_px); }
    double center(Side s) const { return s == Side::left ? left_center_px : right_center_px; }
    // Closed interval [centre - W/2, centre + W/2].
    bool hits(Side s, double x) const
    {
        const double c = center(s);
        return x >= c - width_px / 2.0 && x <= c + width_px / 2.0;
    }
};

struct TrialRecord {
    int trial_index = 0; // 1..6
    TimeUs t_start_us = 0;
    TimeUs t_end_us = 0;
    PixelPoint click_position;
    std::vector<Click> error_clicks;
    bool valid = true;

    friend bool operator==(const TrialRecord&, const TrialRecord&) = default;

    TimeUs rt_us() const { return t_end_us - t_start_us; }
};

struct SetRecord {
    SetSpec spec;
    std::vector<TrialRecord> trials;
    std::vector<Click> pre_start_errors; // misses before the timer started

    friend bool operator==(const SetRecord&, const SetRecord&) = default;

    int valid_count() const;
    double accuracy() const;
    // Median RT of the valid trials in seconds; empty if none are valid.
    std::optional<double> median_rt_s() const;
};

inline constexpr int kHitsPerSet = 7;
inline constexpr int kTrialsPerSet = kHitsPerSet - 1;

struct TrialAdvance {
    int hits = 0;            // successful target clicks so far
    int completed_trial = 0; // 0 when the hit only started the timer
    Side next_target = Side::left;
};
struct ErrorFeedback {
    Click click;
    Side target = Side::left;
    int trial_index = 0; // 0 before the timer started
};
struct SetComplete {
    SetRecord record;
};
using ClickOutcome = std::variant<TrialAdvance, ErrorFeedback, SetComplete>;

// One reciprocal-tapping set: seven alternating hits, the first starting the
// timer. A miss flags the trial in progress and leaves the target unchanged.
class SetState {
public:
    explicit SetState(SetSpec spec);

    ClickOutcome handle_click(const Click& click);

    Side target() const { return target_; }
    int hits() const { return hits_; }
    bool complete() const { return hits_ >= kHitsPerSet; }
    const SetRecord& record() const { return record_; }
    const SetSpec& spec() const { return record_.spec; }

private:
    SetRecord record_;
    Side target_ = Side::left;
    int hits_ = 0;
    TimeUs last_hit_us_ = 0;
    bool current_invalid_ = false;
    std::vector<Click> current_errors_;
};

struct ContinuePractice {
    double width_px = 0.0;
    double amplitude_px = 0.0;
};
struct PracticeReady {};
using PracticeDecision = std::variant<ContinuePractice, PracticeReady>;

// Ready once the pooled accuracy of the last `window_sets` practice sets
// reaches the criterion; otherwise the next practice condition.
PracticeDecision practice_controller(std::span<const SetRecord> history, const PracticeRules& rules);

// Walks a session through the study: per technique block, practice to
// criterion, then the formal sets in Latin-square order.
class StudyRunner {
public:
    StudyRunner(StudyDesign design, DisplayPlane display);

    // Null once every block is done.
    const SetSpec* current() const { return active_ ? &active_->spec() : nullptr; }
    Side current_target() const { return active_ ? active_->target() : Side::left; }
    int current_hits() const { return active_ ? active_->hits() : 0; }
    bool finished() const { return !active_.has_value(); }

    // Empty when no set is active (the click is ignored).
    std::optional<ClickOutcome> handle_click(const Click& click);

    const std::vector<Technique>& technique_order() const { return order_; }
    const std::vector<SetRecord>& formal_records() const { return formal_; }
    const std::vector<SetRecord>& practice_records() const { return practice_; }

    // The formal (W, A) schedule of one technique block.
    std::vector<std::pair<double, double>> block_conditions() const;

private:
    void start_next();

    StudyDesign design_;
    DisplayPlane display_;
    std::vector<Technique> order_;
    std::vector<std::pair<double, double>> conditions_;
    std::size_t block_ = 0;
    std::size_t formal_pos_ = 0;
    bool in_practice_ = false;
    std::vector<SetRecord> block_practice_;
    std::optional<SetState> active_;
    int next_index_ = 0;
    std::vector<SetRecord> formal_;
    std::vector<SetRecord> practice_;
};

// One line of the per-session results file.
struct TrialRow {
    std::string session;
    Technique technique = Technique::absolute;
    int set = 0;
    double width_px = 0.0;
    double amplitude_px = 0.0;
    double id = 0.0;
    int trial = 0;
    TimeUs rt_us = 0;
    bool valid = true;
    int error_count = 0;

    friend bool operator==(const TrialRow&, const TrialRow&) = default;
};

std::vector<TrialRow> to_rows(const std::string& session, std::span<const SetRecord> sets);

inline constexpr const char* kResultsHeader = "session,technique,set,W,A,ID,trial,rt_us,valid,error_count";
void write_results(std::ostream& out, std::span<const TrialRow> rows, bool header = true);
// Throws DecodeError on malformed rows.
std::vector<TrialRow> read_results(std::istream& in);

} // namespace farpoint
