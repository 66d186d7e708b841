#include "farpoint/error.hpp"
#include "farpoint/experiment.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

using namespace farpoint;

namespace {

const DisplayPlane wall = DisplayPlane::tiled_wall();

Click at(double x, TimeUs t) { return {{x, 2175}, t}; }

// Plays hits on alternating bars, 1 s apart, starting at t.
TimeUs play_hits(SetState& s, int n, TimeUs t)
{
    for (int i = 0; i < n; ++i, t += 1'000'000)
        s.handle_click(at(s.spec().center(s.target()), t));
    return t;
}

SetRecord record_with(int valid, int total = 6)
{
    SetRecord r;
    for (int i = 0; i < total; ++i) {
        TrialRecord t;
        t.trial_index = i + 1;
        t.valid = i < valid;
        r.trials.push_back(t);
    }
    return r;
}

} // namespace

TEST_CASE("fitts_id")
{
    CHECK(fitts_id(1000, 100) == doctest::Approx(3.459).epsilon(1e-3));
    CHECK(fitts_id(5000, 25) == doctest::Approx(7.651).epsilon(1e-3));
    for (double w : {1.0, 25.0, 333.0})
        CHECK(fitts_id(w, w) == 1.0);
    CHECK_THROWS_AS(fitts_id(0, 10), DomainError);
    CHECK_THROWS_AS(fitts_id(10, -1), DomainError);
}

TEST_CASE("the crossed design has nine IDs")
{
    const StudyDesign d;
    std::vector<double> ids;
    for (double w : d.widths_px)
        for (double a : d.amplitudes_px)
            ids.push_back(fitts_id(a, w));
    std::sort(ids.begin(), ids.end());
    const std::vector<double> expected{3.46, 4.39, 4.95, 5.36, 5.67, 5.93, 6.66, 6.92, 7.65};
    REQUIRE(ids.size() == expected.size());
    for (std::size_t i = 0; i < ids.size(); ++i)
        CHECK(std::abs(ids[i] - expected[i]) <= 0.01);
    for (double a : d.amplitudes_px)
        CHECK(std::set<double>{5.36, 6.92, 7.65}.count(std::round(fitts_id(a, 25) * 100) / 100));
}

TEST_CASE("balanced latin square: small cases")
{
    CHECK(balanced_latin_square(1) == std::vector<std::vector<int>>{{1}});
    CHECK(balanced_latin_square(2) == std::vector<std::vector<int>>{{1, 2}, {2, 1}});
    CHECK(balanced_latin_square(3).size() == 6);
    CHECK_THROWS_AS(balanced_latin_square(0), DomainError);
}

TEST_CASE("property: latin squares up to 12 are balanced")
{
    for (int n = 1; n <= 12; ++n) {
        CAPTURE(n);
        const auto rows = balanced_latin_square(n);
        const std::size_t base = static_cast<std::size_t>(n);
        REQUIRE(rows.size() == (n % 2 == 1 && n > 1 ? 2 * base : base));
        // Each block of n rows is a latin square.
        for (std::size_t block = 0; block < rows.size(); block += base) {
            for (std::size_t r = block; r < block + base; ++r) {
                std::set<int> seen(rows[r].begin(), rows[r].end());
                CHECK(seen.size() == base);
                CHECK(*seen.begin() == 1);
                CHECK(*seen.rbegin() == n);
            }
            for (std::size_t c = 0; c < base; ++c) {
                std::set<int> col;
                for (std::size_t r = block; r < block + base; ++r)
                    col.insert(rows[r][c]);
                CHECK(col.size() == base);
            }
        }
        // Ordered adjacent pairs: once each (even n), twice each with reversals (odd n).
        std::map<std::pair<int, int>, int> pairs;
        for (const auto& row : rows)
            for (std::size_t c = 0; c + 1 < row.size(); ++c)
                ++pairs[{row[c], row[c + 1]}];
        if (n > 1) {
            CHECK(pairs.size() == base * (base - 1));
            for (const auto& [pair, count] : pairs)
                CHECK(count == (n % 2 == 0 ? 1 : 2));
        }
    }
}

TEST_CASE("set geometry")
{
    const auto s = SetSpec::make(Technique::absolute, 25, 5000, wall);
    CHECK(s.left_center_px == 3855 - 2500);
    CHECK(s.right_center_px == 3855 + 2500);
    CHECK(s.id() == doctest::Approx(std::log2(201.0)));
    CHECK(s.hits(Side::left, 1355 - 12.5));
    CHECK(s.hits(Side::left, 1355 + 12.5));
    CHECK_FALSE(s.hits(Side::left, 1355 + 12.6));
    CHECK_FALSE(s.hits(Side::right, 1355));
    CHECK_THROWS_AS(SetSpec::make(Technique::absolute, 100, 7700, wall), DomainError);
    CHECK_THROWS_AS(SetSpec::make(Technique::absolute, 0, 1000, wall), DomainError);
}

TEST_CASE("seven hits complete a set with six valid trials")
{
    SetState s(SetSpec::make(Technique::hybrid, 50, 3000, wall));
    CHECK(s.target() == Side::left);
    std::optional<ClickOutcome> last;
    TimeUs t = 0;
    for (int i = 0; i < 7; ++i, t += 1'000'000) {
        const Side expected = i % 2 == 0 ? Side::left : Side::right;
        CHECK(s.target() == expected);
        last = s.handle_click(at(s.spec().center(s.target()), t));
        if (i < 6) {
            const auto& adv = std::get<TrialAdvance>(*last);
            CHECK(adv.hits == i + 1);
            CHECK(adv.completed_trial == i);
        }
    }
    const auto& rec = std::get<SetComplete>(*last).record;
    CHECK(rec.trials.size() == 6);
    CHECK(rec.valid_count() == 6);
    CHECK(rec.accuracy() == 1.0);
    for (const auto& tr : rec.trials) {
        CHECK(tr.rt_us() == 1'000'000);
        CHECK(tr.t_end_us > tr.t_start_us);
    }
    CHECK(s.complete());
    CHECK_THROWS_AS(s.handle_click(at(0, t)), DomainError);
}

TEST_CASE("a miss invalidates the trial in progress and keeps the target")
{
    SetState s(SetSpec::make(Technique::absolute, 25, 1000, wall));
    TimeUs t = play_hits(s, 3, 0); // trial 3 in progress
    const Side target = s.target();
    const auto fb = s.handle_click(at(10, t));
    const auto& err = std::get<ErrorFeedback>(fb);
    CHECK(err.target == target);
    CHECK(err.trial_index == 3);
    CHECK(s.target() == target);
    CHECK(s.hits() == 3);
    t = play_hits(s, 4, t + 500'000);
    REQUIRE(s.complete());
    const auto& rec = s.record();
    CHECK(rec.valid_count() == 5);
    CHECK_FALSE(rec.trials[2].valid);
    CHECK(rec.trials[2].error_clicks.size() == 1);
    CHECK(rec.accuracy() == doctest::Approx(5.0 / 6));
}

TEST_CASE("misses before the first hit do not touch any trial")
{
    SetState s(SetSpec::make(Technique::absolute, 25, 1000, wall));
    const auto fb = s.handle_click(at(10, 0));
    CHECK(std::get<ErrorFeedback>(fb).trial_index == 0);
    play_hits(s, 7, 1000);
    CHECK(s.record().pre_start_errors.size() == 1);
    CHECK(s.record().valid_count() == 6);
}

TEST_CASE("set median RT")
{
    SetRecord r = record_with(6);
    const std::vector<TimeUs> rts{1'000'000, 1'200'000, 1'100'000, 2'000'000, 900'000, 1'300'000};
    for (std::size_t i = 0; i < 6; ++i)
        r.trials[i].t_end_us = rts[i];
    CHECK(*r.median_rt_s() == doctest::Approx(1.15));
    r.trials[3].valid = false; // drops 2.0
    CHECK(*r.median_rt_s() == doctest::Approx(1.1));
    CHECK_FALSE(record_with(0).median_rt_s());
}

TEST_CASE("practice controller")
{
    const PracticeRules rules;
    std::vector<SetRecord> h;
    auto decide = [&] { return practice_controller(h, rules); };

    auto first = std::get<ContinuePractice>(decide());
    CHECK(first.width_px == 25);
    CHECK(first.amplitude_px == 3000);

    h.push_back(record_with(6));
    CHECK(std::get<ContinuePractice>(decide()).width_px == 50);

    SUBCASE("11 of 12 is ready") {
        h.push_back(record_with(5));
        CHECK(std::holds_alternative<PracticeReady>(decide()));
    }
    SUBCASE("10 of 12 continues") {
        h.front() = record_with(5);
        h.push_back(record_with(5));
        CHECK(std::get<ContinuePractice>(decide()).width_px == 25);
    }
    SUBCASE("only the last two sets count") {
        h.front() = record_with(0);
        h.push_back(record_with(6));
        h.push_back(record_with(5));
        CHECK(std::holds_alternative<PracticeReady>(decide()));
    }
}

TEST_CASE("study runner walks practice then formal sets per block")
{
    StudyDesign d;
    d.techniques = {Technique::absolute, Technique::dual_speed};
    d.randomize_technique_order = false;
    StudyRunner run(d, wall);
    CHECK(run.technique_order() == d.techniques);
    CHECK(run.block_conditions().size() == 9);

    TimeUs t = 0;
    int sets = 0;
    while (!run.finished()) {
        const SetSpec spec = *run.current();
        CHECK(spec.index == sets);
        for (int i = 0; i < 7; ++i, t += 1000)
            run.handle_click(at(spec.center(run.current_target()), t));
        ++sets;
    }
    // Perfect accuracy: two practice sets per block, then nine formal sets.
    CHECK(sets == 2 * (2 + 9));
    CHECK(run.practice_records().size() == 4);
    CHECK(run.formal_records().size() == 18);
    CHECK(run.practice_records()[0].spec.width_px == 25);
    CHECK(run.practice_records()[1].spec.width_px == 50);
    CHECK(run.formal_records()[0].spec.technique == Technique::absolute);
    CHECK(run.formal_records()[9].spec.technique == Technique::dual_speed);
    CHECK_FALSE(run.handle_click(at(0, t)));
}

TEST_CASE("practice gives up after the cap")
{
    StudyDesign d;
    d.techniques = {Technique::absolute};
    d.practice.max_sets = 3;
    d.amplitudes_px = {1000};
    d.widths_px = {100};
    StudyRunner run(d, wall);
    TimeUs t = 0;
    for (int s = 0; s < 3; ++s) {
        REQUIRE(run.current()->practice);
        // One miss per trial keeps accuracy at zero.
        run.handle_click(at(run.current()->center(run.current_target()), t++));
        for (int i = 0; i < 6; ++i) {
            run.handle_click(at(3855, t++));
            run.handle_click(at(run.current()->center(run.current_target()), t++));
        }
    }
    REQUIRE(run.current());
    CHECK_FALSE(run.current()->practice);
}

TEST_CASE("latin square row and repetitions order the formal conditions")
{
    StudyDesign d;
    d.sets_per_condition = 2;
    d.participant_index = 3;
    const StudyRunner run(d, wall);
    const auto conds = run.block_conditions();
    REQUIRE(conds.size() == 18);
    const auto row = balanced_latin_square(9)[3];
    for (std::size_t i = 0; i < 9; ++i) {
        const int c = row[i] - 1;
        const std::pair<double, double> cell{d.widths_px[static_cast<std::size_t>(c / 3)],
                                             d.amplitudes_px[static_cast<std::size_t>(c % 3)]};
        CHECK(conds[i] == cell);
        CHECK(conds[i + 9] == cell);
    }
}

TEST_CASE("technique order is a seeded shuffle")
{
    StudyDesign d;
    const auto a = StudyRunner(d, wall).technique_order();
    CHECK(StudyRunner(d, wall).technique_order() == a);
    auto sorted = a;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<Technique>{Technique::absolute, Technique::relative, Technique::hybrid,
                                           Technique::dual_speed});
    bool differs = false;
    for (std::uint64_t seed = 2; seed < 10 && !differs; ++seed) {
        d.seed = seed;
        differs = StudyRunner(d, wall).technique_order() != a;
    }
    CHECK(differs);
}

TEST_CASE("study validation")
{
    StudyDesign d;
    d.widths_px = {25, 2000};
    CHECK_THROWS_AS(d.validate(), ConfigError);
    d = {};
    d.sets_per_condition = 0;
    CHECK_THROWS_AS(d.validate(), ConfigError);
    d = {};
    d.techniques.clear();
    CHECK_THROWS_AS(d.validate(), ConfigError);
}

TEST_CASE("results file round trip")
{
    SetState s(SetSpec::make(Technique::dual_speed, 25, 5000, wall, 4));
    TimeUs t = play_hits(s, 2, 0);
    s.handle_click(at(3855, t));
    play_hits(s, 5, t + 10);
    const std::vector<SetRecord> sets{s.record()};
    const auto rows = to_rows("p01", sets);
    REQUIRE(rows.size() == 6);
    CHECK(rows[1].error_count == 1);
    CHECK_FALSE(rows[1].valid);
    CHECK(rows[0].set == 4);

    std::stringstream io;
    write_results(io, rows);
    CHECK(io.str().rfind(kResultsHeader, 0) == 0);
    CHECK(read_results(io) == rows);

    // A session may be named like the header's first column.
    const auto named = to_rows("session", sets);
    std::stringstream same;
    write_results(same, named);
    CHECK(read_results(same) == named);

    std::stringstream bad("session,technique\np01,absolute,1\n");
    CHECK_THROWS_AS(read_results(bad), DecodeError);
    std::stringstream worse("p01,laser,0,25,1000,5.3,1,100,1,0\n");
    CHECK_THROWS_AS(read_results(worse), DecodeError);
}
