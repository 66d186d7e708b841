#include "farpoint/analysis.hpp"

#include "farpoint/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

namespace farpoint {

namespace {

using ConditionKey = std::tuple<Technique, double, double>;

struct SetAccumulator {
    std::vector<double> valid_rts_s;
    int trials = 0;
};

std::ofstream open_for_write(const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write " + path.string());
    out << std::setprecision(17);
    return out;
}

std::string join(const std::vector<double>& values, char sep)
{
    std::ostringstream ss;
    ss << std::setprecision(17);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i)
            ss << sep;
        ss << values[i];
    }
    return ss.str();
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(s);
    while (std::getline(ss, cell, sep))
        out.push_back(cell);
    if (!s.empty() && s.back() == sep)
        out.emplace_back();
    return out;
}

// Accuracy pooled over amplitudes, keyed by (technique, W).
std::map<std::pair<Technique, double>, std::pair<int, int>> accuracy_by_width(
    std::span<const ConditionSummary> summaries)
{
    std::map<std::pair<Technique, double>, std::pair<int, int>> acc;
    for (const auto& s : summaries) {
        auto& cell = acc[{s.technique, s.width_px}];
        cell.first += s.valid_trials;
        cell.second += s.trials;
    }
    return acc;
}

} // namespace

double median(std::vector<double> values)
{
    if (values.empty())
        throw DomainError("median of an empty sample");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<ConditionSummary> summarize(std::span<const TrialRow> rows)
{
    std::map<ConditionKey, std::map<std::pair<std::string, int>, SetAccumulator>> grouped;
    for (const auto& r : rows) {
        auto& set = grouped[{r.technique, r.width_px, r.amplitude_px}][{r.session, r.set}];
        ++set.trials;
        if (r.valid)
            set.valid_rts_s.push_back(static_cast<double>(r.rt_us) * 1e-6);
    }

    std::vector<ConditionSummary> out;
    for (const auto& [key, sets] : grouped) {
        ConditionSummary s;
        std::tie(s.technique, s.width_px, s.amplitude_px) = key;
        s.id = fitts_id(s.amplitude_px, s.width_px);
        for (const auto& [set_key, acc] : sets) {
            s.trials += acc.trials;
            s.valid_trials += static_cast<int>(acc.valid_rts_s.size());
            if (acc.valid_rts_s.empty()) {
                ++s.sets_without_rt;
                spdlog::warn("analysis: set {}/{} has no valid trial; excluded from RT", set_key.first,
                             set_key.second);
            } else {
                s.set_median_rt_s.push_back(median(acc.valid_rts_s));
            }
        }
        if (s.has_rt())
            s.mean_rt_s = std::accumulate(s.set_median_rt_s.begin(), s.set_median_rt_s.end(), 0.0) /
                          static_cast<double>(s.set_median_rt_s.size());
        out.push_back(std::move(s));
    }
    return out;
}

FittsFit least_squares(std::span<const std::pair<double, double>> points)
{
    const auto n = points.size();
    if (n < 2)
        throw SingularFit("least squares needs at least two points");
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : points) {
        mx += x;
        my += y;
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [x, y] : points) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if (sxx == 0.0)
        throw SingularFit("all predictor values are identical");

    FittsFit f;
    f.n = n;
    f.b = sxy / sxx;
    f.a = my - f.b * mx;
    double ss_res = 0.0;
    for (const auto& [x, y] : points) {
        const double r = y - f.predict(x);
        ss_res += r * r;
    }
    f.rmse = std::sqrt(ss_res / static_cast<double>(n));
    f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : (ss_res == 0.0 ? 1.0 : 0.0);
    return f;
}

FittsFit fit_fitts(std::span<const std::pair<double, double>> id_rt_points)
{
    std::set<double> ids;
    for (const auto& p : id_rt_points)
        ids.insert(p.first);
    if (ids.size() == 1)
        throw SingularFit("all IDs are identical");
    if (ids.size() < 3)
        throw DomainError("a Fitts fit needs at least three distinct IDs");
    const FittsFit f = least_squares(id_rt_points);
    if (!f.throughput())
        spdlog::warn("analysis: non-positive Fitts slope {:.4f}; throughput undefined", f.b);
    return f;
}

double crossover_id(const FittsFit& first, const FittsFit& second)
{
    if (first.b == second.b)
        throw DomainError("regression lines are parallel");
    return (second.a - first.a) / (first.b - second.b);
}

std::vector<TechniqueFit> fit_by_technique(std::span<const ConditionSummary> summaries)
{
    std::map<Technique, std::vector<std::pair<double, double>>> points;
    for (const auto& s : summaries)
        if (s.has_rt())
            points[s.technique].emplace_back(s.id, s.mean_rt_s);

    std::vector<TechniqueFit> fits;
    for (const auto& [tech, pts] : points) {
        try {
            fits.push_back({tech, fit_fitts(pts)});
        } catch (const Error& e) {
            spdlog::warn("analysis: no fit for {}: {}", to_string(tech), e.what());
        }
    }
    return fits;
}

void write_conditions_csv(std::ostream& out, std::span<const ConditionSummary> summaries)
{
    out << std::setprecision(17);
    out << "technique,W,A,ID,sets,sets_without_rt,trials,valid_trials,accuracy,mean_rt_s,set_median_rt_s\n";
    for (const auto& s : summaries) {
        out << to_string(s.technique) << ',' << s.width_px << ',' << s.amplitude_px << ',' << s.id << ','
            << s.set_median_rt_s.size() + static_cast<std::size_t>(s.sets_without_rt) << ',' << s.sets_without_rt
            << ',' << s.trials << ',' << s.valid_trials << ',' << s.accuracy() << ',' << s.mean_rt_s << ','
            << join(s.set_median_rt_s, ';') << '\n';
    }
}

std::vector<ConditionSummary> read_conditions_csv(std::istream& in)
{
    std::vector<ConditionSummary> out;
    std::string line;
    std::size_t offset = 0;
    while (std::getline(in, line)) {
        const std::size_t start = offset;
        offset += line.size() + 1;
        if (line.empty() || line.rfind("technique,", 0) == 0)
            continue;
        const auto cols = split(line, ',');
        if (cols.size() != 11)
            throw DecodeError("condition row needs 11 columns", start);
        try {
            ConditionSummary s;
            s.technique = technique_from_string(cols[0]);
            s.width_px = std::stod(cols[1]);
            s.amplitude_px = std::stod(cols[2]);
            s.id = std::stod(cols[3]);
            s.sets_without_rt = std::stoi(cols[5]);
            s.trials = std::stoi(cols[6]);
            s.valid_trials = std::stoi(cols[7]);
            s.mean_rt_s = std::stod(cols[9]);
            if (!cols[10].empty())
                for (const auto& v : split(cols[10], ';'))
                    s.set_median_rt_s.push_back(std::stod(v));
            out.push_back(std::move(s));
        } catch (const std::logic_error& e) {
            throw DecodeError(std::string("bad condition value: ") + e.what(), start);
        } catch (const ConfigError& e) {
            throw DecodeError(e.what(), start);
        }
    }
    return out;
}

ReportResult emit_report(std::span<const ConditionSummary> summaries, std::span<const TechniqueFit> fits,
                         ReportFormat format, const std::filesystem::path& out_dir)
{
    if (summaries.empty())
        throw DomainError("nothing to report");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        throw Error("cannot create " + out_dir.string() + ": " + ec.message());

    ReportResult result;
    std::set<Technique> seen;
    for (const auto& s : summaries)
        seen.insert(s.technique);
    std::vector<TechniqueFit> rows;
    for (Technique t : {Technique::relative, Technique::absolute, Technique::hybrid, Technique::dual_speed}) {
        const auto it = std::find_if(fits.begin(), fits.end(), [t](const auto& f) { return f.technique == t; });
        if (it != fits.end()) {
            rows.push_back(*it);
        } else if (seen.count(t)) {
            result.warnings.push_back("no fit for " + std::string(to_string(t)) + "; row omitted");
        }
    }
    for (const auto& w : result.warnings)
        spdlog::warn("report: {}", w);

    const auto acc = accuracy_by_width(summaries);

    if (format == ReportFormat::csv) {
        {
            const auto path = out_dir / "conditions.csv";
            auto out = open_for_write(path);
            write_conditions_csv(out, summaries);
            result.files.push_back(path);
        }
        {
            const auto path = out_dir / "fits.csv";
            auto out = open_for_write(path);
            out << "technique,a,b,rmse,r_squared,throughput_bits_per_s,n\n";
            for (const auto& f : rows) {
                out << to_string(f.technique) << ',' << f.fit.a << ',' << f.fit.b << ',' << f.fit.rmse << ','
                    << f.fit.r_squared << ',';
                if (const auto tp = f.fit.throughput())
                    out << *tp;
                out << ',' << f.fit.n << '\n';
            }
            result.files.push_back(path);
        }
        {
            const auto path = out_dir / "accuracy_by_width.csv";
            auto out = open_for_write(path);
            out << "technique,W,trials,valid_trials,accuracy\n";
            for (const auto& [key, cell] : acc)
                out << to_string(key.first) << ',' << key.second << ',' << cell.second << ',' << cell.first << ','
                    << (cell.second ? static_cast<double>(cell.first) / cell.second : 0.0) << '\n';
            result.files.push_back(path);
        }
    } else {
        const auto path = out_dir / "report.txt";
        std::ofstream out(path);
        if (!out)
            throw Error("cannot write " + path.string());
        out << std::fixed;

        out << "Fitts' law fits (RT = a + b * ID)\n\n";
        out << std::left << std::setw(12) << "technique" << std::right << std::setw(9) << "a" << std::setw(9) << "b"
            << std::setw(9) << "RMSE" << std::setw(9) << "R^2" << std::setw(12) << "1/b (b/s)" << '\n';
        for (const auto& f : rows) {
            out << std::left << std::setw(12) << to_string(f.technique) << std::right << std::setprecision(3)
                << std::setw(9) << f.fit.a << std::setw(9) << f.fit.b << std::setw(9) << f.fit.rmse << std::setw(9)
                << f.fit.r_squared << std::setw(12);
            if (const auto tp = f.fit.throughput())
                out << *tp;
            else
                out << "undefined";
            out << '\n';
        }

        out << "\nAccuracy by target width\n\n" << std::left << std::setw(12) << "technique";
        std::set<double> widths;
        for (const auto& [key, cell] : acc)
            widths.insert(key.second);
        for (double w : widths)
            out << std::right << std::setw(9) << std::setprecision(0) << w;
        out << '\n';
        for (Technique t : seen) {
            out << std::left << std::setw(12) << to_string(t);
            for (double w : widths) {
                const auto it = acc.find({t, w});
                out << std::right << std::setw(9) << std::setprecision(3);
                if (it != acc.end() && it->second.second > 0)
                    out << static_cast<double>(it->second.first) / it->second.second;
                else
                    out << "-";
            }
            out << '\n';
        }

        out << "\nConditions\n\n";
        out << std::left << std::setw(12) << "technique" << std::right << std::setw(7) << "W" << std::setw(7) << "A"
            << std::setw(8) << "ID" << std::setw(6) << "sets" << std::setw(11) << "mean RT s" << std::setw(10)
            << "accuracy" << '\n';
        for (const auto& s : summaries) {
            out << std::left << std::setw(12) << to_string(s.technique) << std::right << std::setprecision(0)
                << std::setw(7) << s.width_px << std::setw(7) << s.amplitude_px << std::setprecision(3)
                << std::setw(8) << s.id << std::setw(6) << s.set_median_rt_s.size() + s.sets_without_rt
                << std::setw(11);
            if (s.has_rt())
                out << s.mean_rt_s;
            else
                out << "-";
            out << std::setw(10) << s.accuracy() << '\n';
        }
        result.files.push_back(path);
    }
    return result;
}

} // namespace farpoint
