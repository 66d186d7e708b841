#include "farpoint/experiment.hpp"

#include "farpoint/error.hpp"
#include "farpoint/random.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace farpoint {

double fitts_id(double amplitude_px, double width_px)
{
    if (!(amplitude_px > 0.0) || !(width_px > 0.0))
        throw DomainError("fitts_id needs positive amplitude and width");
    return std::log2(amplitude_px / width_px + 1.0);
}

std::vector<std::vector<int>> balanced_latin_square(int n)
{
    if (n < 1)
        throw DomainError("balanced_latin_square needs n >= 1");

    // 0, 1, n-1, 2, n-2, ...
    std::vector<int> first;
    first.reserve(static_cast<std::size_t>(n));
    for (int j = 0, lo = 1, hi = n - 1; j < n; ++j) {
        if (j == 0)
            first.push_back(0);
        else if (j % 2 == 1)
            first.push_back(lo++);
        else
            first.push_back(hi--);
    }

    std::vector<std::vector<int>> rows;
    for (int r = 0; r < n; ++r) {
        std::vector<int> row;
        for (int c : first)
            row.push_back((c + r) % n + 1);
        rows.push_back(std::move(row));
    }
    if (n % 2 == 1 && n > 1) {
        for (int r = 0; r < n; ++r) {
            auto rev = rows[static_cast<std::size_t>(r)];
            std::reverse(rev.begin(), rev.end());
            rows.push_back(std::move(rev));
        }
    }
    return rows;
}

void StudyDesign::validate() const
{
    if (techniques.empty() || widths_px.empty() || amplitudes_px.empty())
        throw ConfigError("study: techniques, widths and amplitudes must be non-empty");
    for (double w : widths_px)
        for (double a : amplitudes_px) {
            if (!(w > 0.0) || !(a > 0.0))
                throw ConfigError("study: widths and amplitudes must be positive");
            if (!(w < a))
                throw ConfigError("study: every width must be smaller than every amplitude");
        }
    if (sets_per_condition < 1)
        throw ConfigError("study: sets_per_condition must be >= 1");
    if (participant_index < 0)
        throw ConfigError("study: participant_index must be >= 0");
    if (practice.enabled && (practice.widths_px.empty() || practice.window_sets < 1 || practice.max_sets < 1))
        throw ConfigError("study: practice rules incomplete");
}

SetSpec SetSpec::make(Technique technique, double width_px, double amplitude_px, const DisplayPlane& display,
                      int index, bool practice)
{
    if (!(width_px > 0.0) || !(amplitude_px > 0.0))
        throw DomainError("set needs positive width and amplitude");
    SetSpec s;
    s.index = index;
    s.practice = practice;
    s.technique = technique;
    s.width_px = width_px;
    s.amplitude_px = amplitude_px;
    const double cx = display.width_px / 2.0;
    s.left_center_px = cx - amplitude_px / 2.0;
    s.right_center_px = cx + amplitude_px / 2.0;
    if (s.left_center_px - width_px / 2.0 < 0.0 || s.right_center_px + width_px / 2.0 > display.width_px)
        throw DomainError("target bars do not fit on the display");
    return s;
}

int SetRecord::valid_count() const
{
    return static_cast<int>(std::count_if(trials.begin(), trials.end(), [](const auto& t) { return t.valid; }));
}

double SetRecord::accuracy() const
{
    return trials.empty() ? 0.0 : static_cast<double>(valid_count()) / static_cast<double>(trials.size());
}

std::optional<double> SetRecord::median_rt_s() const
{
    std::vector<double> rts;
    for (const auto& t : trials)
        if (t.valid)
            rts.push_back(static_cast<double>(t.rt_us()) * 1e-6);
    if (rts.empty())
        return std::nullopt;
    std::sort(rts.begin(), rts.end());
    const std::size_t n = rts.size();
    return n % 2 == 1 ? rts[n / 2] : 0.5 * (rts[n / 2 - 1] + rts[n / 2]);
}

SetState::SetState(SetSpec spec) { record_.spec = std::move(spec); }

ClickOutcome SetState::handle_click(const Click& click)
{
    if (complete())
        throw DomainError("click on a completed set");

    if (!record_.spec.hits(target_, click.position.x)) {
        if (hits_ == 0) {
            record_.pre_start_errors.push_back(click);
        } else {
            current_invalid_ = true;
            current_errors_.push_back(click);
        }
        return ErrorFeedback{click, target_, hits_ == 0 ? 0 : hits_};
    }

    int completed = 0;
    if (hits_ > 0) {
        TrialRecord trial;
        trial.trial_index = hits_;
        trial.t_start_us = last_hit_us_;
        trial.t_end_us = click.t_us;
        trial.click_position = click.position;
        trial.error_clicks = std::move(current_errors_);
        trial.valid = !current_invalid_;
        record_.trials.push_back(std::move(trial));
        completed = hits_;
    }
    ++hits_;
    last_hit_us_ = click.t_us;
    current_invalid_ = false;
    current_errors_.clear();
    target_ = target_ == Side::left ? Side::right : Side::left;

    if (complete())
        return SetComplete{record_};
    return TrialAdvance{hits_, completed, target_};
}

PracticeDecision practice_controller(std::span<const SetRecord> history, const PracticeRules& rules)
{
    const auto window = static_cast<std::size_t>(rules.window_sets);
    if (history.size() >= window) {
        int valid = 0, total = 0;
        for (const auto& set : history.last(window)) {
            valid += set.valid_count();
            total += static_cast<int>(set.trials.size());
        }
        if (total > 0 && static_cast<double>(valid) / total >= rules.criterion - 1e-12)
            return PracticeReady{};
    }
    const double w = rules.widths_px[history.size() % rules.widths_px.size()];
    return ContinuePractice{w, rules.amplitude_px};
}

StudyRunner::StudyRunner(StudyDesign design, DisplayPlane display)
    : design_(std::move(design)), display_(std::move(display))
{
    design_.validate();
    order_ = design_.techniques;
    if (design_.randomize_technique_order) {
        Rng rng(design_.seed);
        rng.shuffle(order_);
    }

    std::vector<std::pair<double, double>> cells;
    for (double w : design_.widths_px)
        for (double a : design_.amplitudes_px)
            cells.emplace_back(w, a);
    const auto square = balanced_latin_square(static_cast<int>(cells.size()));
    const auto& row = square[static_cast<std::size_t>(design_.participant_index) % square.size()];
    for (int rep = 0; rep < design_.sets_per_condition; ++rep)
        for (int c : row)
            conditions_.push_back(cells[static_cast<std::size_t>(c - 1)]);

    in_practice_ = design_.practice.enabled;
    start_next();
}

std::vector<std::pair<double, double>> StudyRunner::block_conditions() const { return conditions_; }

void StudyRunner::start_next()
{
    active_.reset();
    while (block_ < order_.size()) {
        const Technique tech = order_[block_];
        if (in_practice_) {
            const auto decision = practice_controller(block_practice_, design_.practice);
            const bool exhausted = static_cast<int>(block_practice_.size()) >= design_.practice.max_sets;
            if (const auto* next = std::get_if<ContinuePractice>(&decision); next && !exhausted) {
                active_.emplace(SetSpec::make(tech, next->width_px, next->amplitude_px, display_, next_index_++, true));
                return;
            }
            if (std::holds_alternative<ContinuePractice>(decision))
                spdlog::warn("study: practice cap reached for {}, proceeding", to_string(tech));
            in_practice_ = false;
            block_practice_.clear();
        }
        if (formal_pos_ < conditions_.size()) {
            const auto [w, a] = conditions_[formal_pos_++];
            active_.emplace(SetSpec::make(tech, w, a, display_, next_index_++, false));
            return;
        }
        ++block_;
        formal_pos_ = 0;
        in_practice_ = design_.practice.enabled;
    }
}

std::optional<ClickOutcome> StudyRunner::handle_click(const Click& click)
{
    if (!active_) {
        spdlog::debug("study: click at {} us with no active set, ignored", click.t_us);
        return std::nullopt;
    }
    auto outcome = active_->handle_click(click);
    if (const auto* done = std::get_if<SetComplete>(&outcome)) {
        if (done->record.spec.practice) {
            block_practice_.push_back(done->record);
            practice_.push_back(done->record);
        } else {
            formal_.push_back(done->record);
        }
        start_next();
    }
    return outcome;
}

std::vector<TrialRow> to_rows(const std::string& session, std::span<const SetRecord> sets)
{
    std::vector<TrialRow> rows;
    for (const auto& set : sets) {
        for (const auto& t : set.trials) {
            TrialRow r;
            r.session = session;
            r.technique = set.spec.technique;
            r.set = set.spec.index;
            r.width_px = set.spec.width_px;
            r.amplitude_px = set.spec.amplitude_px;
            r.id = set.spec.id();
            r.trial = t.trial_index;
            r.rt_us = t.rt_us();
            r.valid = t.valid;
            r.error_count = static_cast<int>(t.error_clicks.size());
            rows.push_back(std::move(r));
        }
    }
    return rows;
}

void write_results(std::ostream& out, std::span<const TrialRow> rows, bool header)
{
    if (header)
        out << kResultsHeader << '\n';
    std::ostringstream line;
    line << std::setprecision(17);
    for (const auto& r : rows) {
        line.str({});
        line << r.session << ',' << to_string(r.technique) << ',' << r.set << ',' << r.width_px << ','
             << r.amplitude_px << ',' << r.id << ',' << r.trial << ',' << r.rt_us << ',' << (r.valid ? 1 : 0) << ','
             << r.error_count << '\n';
        out << line.str();
    }
}

std::vector<TrialRow> read_results(std::istream& in)
{
    std::vector<TrialRow> rows;
    std::string line;
    std::size_t offset = 0;
    while (std::getline(in, line)) {
        const std::size_t line_start = offset;
        offset += line.size() + 1;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line == kResultsHeader)
            continue;

        std::vector<std::string> cols;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');)
            cols.push_back(cell);
        if (cols.size() != 10)
            throw DecodeError("results row needs 10 columns, got " + std::to_string(cols.size()), line_start);
        try {
            TrialRow r;
            r.session = cols[0];
            r.technique = technique_from_string(cols[1]);
            r.set = std::stoi(cols[2]);
            r.width_px = std::stod(cols[3]);
            r.amplitude_px = std::stod(cols[4]);
            r.id = std::stod(cols[5]);
            r.trial = std::stoi(cols[6]);
            r.rt_us = std::stoll(cols[7]);
            r.valid = std::stoi(cols[8]) != 0;
            r.error_count = std::stoi(cols[9]);
            rows.push_back(std::move(r));
        } catch (const std::logic_error& e) {
            throw DecodeError(std::string("bad results value: ") + e.what(), line_start);
        } catch (const ConfigError& e) {
            throw DecodeError(e.what(), line_start);
        }
    }
    return rows;
}

} // namespace farpoint
