#include "farpoint/config.hpp"

#include "farpoint/error.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace farpoint {

namespace {

// Reads keys out of one JSON object and rejects the ones nobody asked for.
class Section {
public:
    Section(const ConfigJson& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            throw ConfigError(path_ + ": expected an object");
    }

    template <class T>
    void get(const char* key, T& out)
    {
        seen_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end())
            return;
        read(*it, out, path_ + "." + key);
    }

    const ConfigJson* child(const char* key)
    {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    std::string path(const char* key) const { return path_ + "." + key; }

    void finish() const
    {
        for (const auto& [key, value] : j_.items())
            if (!seen_.contains(key))
                throw ConfigError(path_ + ": unknown key '" + key + "'");
    }

private:
    static void read(const ConfigJson& v, double& out, const std::string& where)
    {
        if (!v.is_number())
            throw ConfigError(where + ": expected a number");
        out = v.get<double>();
    }
    static void read(const ConfigJson& v, int& out, const std::string& where)
    {
        if (!v.is_number_integer())
            throw ConfigError(where + ": expected an integer");
        out = v.get<int>();
    }
    static void read(const ConfigJson& v, unsigned long& out, const std::string& where)
    {
        if (!v.is_number_unsigned())
            throw ConfigError(where + ": expected a non-negative integer");
        out = v.get<unsigned long>();
    }
    static void read(const ConfigJson& v, unsigned short& out, const std::string& where)
    {
        if (!v.is_number_unsigned() || v.get<std::uint64_t>() > 65535)
            throw ConfigError(where + ": expected a port number");
        out = v.get<unsigned short>();
    }
    static void read(const ConfigJson& v, bool& out, const std::string& where)
    {
        if (!v.is_boolean())
            throw ConfigError(where + ": expected true or false");
        out = v.get<bool>();
    }
    static void read(const ConfigJson& v, std::string& out, const std::string& where)
    {
        if (!v.is_string())
            throw ConfigError(where + ": expected a string");
        out = v.get<std::string>();
    }
    static void read(const ConfigJson& v, std::vector<double>& out, const std::string& where)
    {
        if (!v.is_array())
            throw ConfigError(where + ": expected an array of numbers");
        out.clear();
        for (const auto& e : v) {
            double d = 0.0;
            read(e, d, where);
            out.push_back(d);
        }
    }
    static void read(const ConfigJson& v, std::array<double, 2>& out, const std::string& where)
    {
        std::vector<double> tmp;
        read(v, tmp, where);
        if (tmp.size() != 2)
            throw ConfigError(where + ": expected two numbers");
        out = {tmp[0], tmp[1]};
    }
    static void read(const ConfigJson& v, Vec3& out, const std::string& where)
    {
        std::vector<double> tmp;
        read(v, tmp, where);
        if (tmp.size() != 3)
            throw ConfigError(where + ": expected three numbers");
        out = {tmp[0], tmp[1], tmp[2]};
    }
    static void read(const ConfigJson& v, Technique& out, const std::string& where)
    {
        std::string name;
        read(v, name, where);
        out = technique_from_string(name);
    }
    static void read(const ConfigJson& v, std::vector<Technique>& out, const std::string& where)
    {
        if (!v.is_array())
            throw ConfigError(where + ": expected an array of technique names");
        out.clear();
        for (const auto& e : v) {
            Technique t{};
            read(e, t, where);
            out.push_back(t);
        }
    }
    static void read(const ConfigJson& v, ReleaseBehavior& out, const std::string& where)
    {
        std::string name;
        read(v, name, where);
        if (name == "snap")
            out = ReleaseBehavior::snap;
        else if (name == "instant")
            out = ReleaseBehavior::instant;
        else
            throw ConfigError(where + ": expected \"snap\" or \"instant\"");
    }

    const ConfigJson& j_;
    std::string path_;
    std::set<std::string, std::less<>> seen_;
};

ConfigJson vec(const Vec3& v) { return ConfigJson::array({v.x, v.y, v.z}); }

ConfigJson technique_json(Technique t, const TechniqueOptions& o)
{
    ConfigJson j = {{"name", std::string(to_string(t))}};
    j.update(to_json(o));
    return j;
}

void read_technique(const ConfigJson& j, const std::string& path, Technique& t, TechniqueOptions& o)
{
    if (!j.is_object())
        throw ConfigError(path + ": expected an object");
    ConfigJson rest = j;
    if (const auto it = rest.find("name"); it != rest.end()) {
        if (!it->is_string())
            throw ConfigError(path + ".name: expected a string");
        t = technique_from_string(it->get<std::string>());
        rest.erase("name");
    }
    from_json(rest, o);
}

// Shared by the session and scenario layouts.
void read_session_sections(Section& s, SessionConfig& c)
{
    s.get("session_id", c.session_id);
    if (const auto* t = s.child("technique"))
        read_technique(*t, s.path("technique"), c.technique, c.options);
    if (const auto* d = s.child("display"))
        from_json(*d, c.display);
    if (const auto* f = s.child("filter"))
        from_json(*f, c.filter);
    if (const auto* tr = s.child("transfer")) {
        Section ts(*tr, s.path("transfer"));
        if (const auto* h = ts.child("hybrid"))
            from_json(*h, c.hybrid_transfer);
        if (const auto* r = ts.child("relative"))
            from_json(*r, c.relative_transfer);
        ts.finish();
    }
    if (const auto* st = s.child("study")) {
        if (st->is_null()) {
            c.study.reset();
        } else {
            StudyDesign design;
            from_json(*st, design);
            c.study = design;
        }
    }
    s.get("queue_capacity", c.queue_capacity);
    if (c.queue_capacity == 0)
        throw ConfigError("queue_capacity: must be positive");
}

void write_session_sections(ConfigJson& j, const SessionConfig& c)
{
    j["session_id"] = c.session_id;
    j["technique"] = technique_json(c.technique, c.options);
    j["display"] = to_json(c.display);
    j["filter"] = to_json(c.filter);
    j["transfer"] = {{"hybrid", to_json(c.hybrid_transfer)}, {"relative", to_json(c.relative_transfer)}};
    j["study"] = c.study ? to_json(*c.study) : ConfigJson(nullptr);
    j["queue_capacity"] = c.queue_capacity;
}

} // namespace

ConfigJson to_json(const DisplayPlane& d)
{
    return {{"top_left", vec(d.top_left)}, {"u_axis", vec(d.u_axis)}, {"v_axis", vec(d.v_axis)},
            {"width_m", d.width_m},        {"height_m", d.height_m}, {"width_px", d.width_px},
            {"height_px", d.height_px}};
}

void from_json(const ConfigJson& j, DisplayPlane& d)
{
    Section s(j, "display");
    s.get("top_left", d.top_left);
    s.get("u_axis", d.u_axis);
    s.get("v_axis", d.v_axis);
    s.get("width_m", d.width_m);
    s.get("height_m", d.height_m);
    s.get("width_px", d.width_px);
    s.get("height_px", d.height_px);
    s.finish();
    try {
        d.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("display: ") + e.what());
    }
}

ConfigJson to_json(const FilterParams& p)
{
    return {{"f_min_hz", p.f_min_hz}, {"beta", p.beta}, {"f_deriv_hz", p.f_deriv_hz}};
}

void from_json(const ConfigJson& j, FilterParams& p)
{
    Section s(j, "filter");
    s.get("f_min_hz", p.f_min_hz);
    s.get("beta", p.beta);
    s.get("f_deriv_hz", p.f_deriv_hz);
    s.finish();
    p.validate();
}

ConfigJson to_json(const TransferParams& p)
{
    return {{"cd_min", p.cd_min}, {"cd_max", p.cd_max},           {"lambda", p.lambda},
            {"v_mid", p.v_mid},   {"v_low_clamp", p.v_low_clamp}, {"v_high_clamp", p.v_high_clamp}};
}

void from_json(const ConfigJson& j, TransferParams& p)
{
    Section s(j, "transfer");
    s.get("cd_min", p.cd_min);
    s.get("cd_max", p.cd_max);
    s.get("lambda", p.lambda);
    s.get("v_mid", p.v_mid);
    s.get("v_low_clamp", p.v_low_clamp);
    s.get("v_high_clamp", p.v_high_clamp);
    s.finish();
    p.validate();
}

ConfigJson to_json(const TechniqueOptions& o)
{
    return {{"clutch_ms", o.clutch_ms},
            {"snap_time_constant_ms", o.snap_time_constant_ms},
            {"snap_max_ms", o.snap_max_ms},
            {"snap_done_px", o.snap_done_px},
            {"slow_gain", o.slow_gain},
            {"dual_speed_release", o.dual_speed_release == ReleaseBehavior::snap ? "snap" : "instant"},
            {"tap_max_ms", o.tap_max_ms},
            {"tap_slop_m", o.tap_slop_m},
            {"trigger_clicks", o.trigger_clicks}};
}

void from_json(const ConfigJson& j, TechniqueOptions& o)
{
    Section s(j, "technique");
    s.get("clutch_ms", o.clutch_ms);
    s.get("snap_time_constant_ms", o.snap_time_constant_ms);
    s.get("snap_max_ms", o.snap_max_ms);
    s.get("snap_done_px", o.snap_done_px);
    s.get("slow_gain", o.slow_gain);
    s.get("dual_speed_release", o.dual_speed_release);
    s.get("tap_max_ms", o.tap_max_ms);
    s.get("tap_slop_m", o.tap_slop_m);
    s.get("trigger_clicks", o.trigger_clicks);
    s.finish();
    o.validate();
}

ConfigJson to_json(const PracticeRules& r)
{
    return {{"enabled", r.enabled},         {"amplitude_px", r.amplitude_px}, {"widths_px", r.widths_px},
            {"criterion", r.criterion},     {"window_sets", r.window_sets},   {"max_sets", r.max_sets}};
}

void from_json(const ConfigJson& j, PracticeRules& r)
{
    Section s(j, "study.practice");
    s.get("enabled", r.enabled);
    s.get("amplitude_px", r.amplitude_px);
    s.get("widths_px", r.widths_px);
    s.get("criterion", r.criterion);
    s.get("window_sets", r.window_sets);
    s.get("max_sets", r.max_sets);
    s.finish();
}

ConfigJson to_json(const StudyDesign& d)
{
    ConfigJson techniques = ConfigJson::array();
    for (auto t : d.techniques)
        techniques.push_back(std::string(to_string(t)));
    return {{"techniques", techniques},
            {"widths_px", d.widths_px},
            {"amplitudes_px", d.amplitudes_px},
            {"sets_per_condition", d.sets_per_condition},
            {"participant_index", d.participant_index},
            {"randomize_technique_order", d.randomize_technique_order},
            {"seed", d.seed},
            {"practice", to_json(d.practice)}};
}

void from_json(const ConfigJson& j, StudyDesign& d)
{
    Section s(j, "study");
    s.get("techniques", d.techniques);
    s.get("widths_px", d.widths_px);
    s.get("amplitudes_px", d.amplitudes_px);
    s.get("sets_per_condition", d.sets_per_condition);
    s.get("participant_index", d.participant_index);
    s.get("randomize_technique_order", d.randomize_technique_order);
    s.get("seed", d.seed);
    if (const auto* p = s.child("practice"))
        from_json(*p, d.practice);
    s.finish();
    d.validate();
}

ConfigJson to_json(const HumanModel& h)
{
    return {{"tremor_freq_band_hz", h.tremor_freq_band_hz},
            {"tremor_rms_deg", h.tremor_rms_deg},
            {"tremor_white_fraction", h.tremor_white_fraction},
            {"sway_freq_band_hz", h.sway_freq_band_hz},
            {"sway_rms_deg", h.sway_rms_deg},
            {"click_shake_peak_deg", h.click_shake_peak_deg},
            {"click_shake_decay_ms", h.click_shake_decay_ms},
            {"press_lead_ms", h.press_lead_ms},
            {"press_hold_ms", h.press_hold_ms},
            {"move_a_ms", h.move_a_ms},
            {"move_b_ms", h.move_b_ms},
            {"endpoint_noise_fraction", h.endpoint_noise_fraction},
            {"endpoint_noise_floor_deg", h.endpoint_noise_floor_deg},
            {"swipe_a_ms", h.swipe_a_ms},
            {"swipe_b_ms", h.swipe_b_ms},
            {"swipe_noise_fraction", h.swipe_noise_fraction},
            {"swipe_noise_floor_m", h.swipe_noise_floor_m},
            {"tap_ms", h.tap_ms},
            {"reposition_ms", h.reposition_ms},
            {"reaction_overhead_ms", h.reaction_overhead_ms},
            {"perception_delay_ms", h.perception_delay_ms},
            {"dwell_before_click_ms", h.dwell_before_click_ms},
            {"click_margin_px", h.click_margin_px},
            {"settle_speed_px_s", h.settle_speed_px_s},
            {"min_watch_ms", h.min_watch_ms},
            {"max_watch_ms", h.max_watch_ms},
            {"patience_ms", h.patience_ms},
            {"correction_lead_ms", h.correction_lead_ms},
            {"rng_seed", h.rng_seed}};
}

void from_json(const ConfigJson& j, HumanModel& h)
{
    Section s(j, "human");
    s.get("tremor_freq_band_hz", h.tremor_freq_band_hz);
    s.get("tremor_rms_deg", h.tremor_rms_deg);
    s.get("tremor_white_fraction", h.tremor_white_fraction);
    s.get("sway_freq_band_hz", h.sway_freq_band_hz);
    s.get("sway_rms_deg", h.sway_rms_deg);
    s.get("click_shake_peak_deg", h.click_shake_peak_deg);
    s.get("click_shake_decay_ms", h.click_shake_decay_ms);
    s.get("press_lead_ms", h.press_lead_ms);
    s.get("press_hold_ms", h.press_hold_ms);
    s.get("move_a_ms", h.move_a_ms);
    s.get("move_b_ms", h.move_b_ms);
    s.get("endpoint_noise_fraction", h.endpoint_noise_fraction);
    s.get("endpoint_noise_floor_deg", h.endpoint_noise_floor_deg);
    s.get("swipe_a_ms", h.swipe_a_ms);
    s.get("swipe_b_ms", h.swipe_b_ms);
    s.get("swipe_noise_fraction", h.swipe_noise_fraction);
    s.get("swipe_noise_floor_m", h.swipe_noise_floor_m);
    s.get("tap_ms", h.tap_ms);
    s.get("reposition_ms", h.reposition_ms);
    s.get("reaction_overhead_ms", h.reaction_overhead_ms);
    s.get("perception_delay_ms", h.perception_delay_ms);
    s.get("dwell_before_click_ms", h.dwell_before_click_ms);
    s.get("click_margin_px", h.click_margin_px);
    s.get("settle_speed_px_s", h.settle_speed_px_s);
    s.get("min_watch_ms", h.min_watch_ms);
    s.get("max_watch_ms", h.max_watch_ms);
    s.get("patience_ms", h.patience_ms);
    s.get("correction_lead_ms", h.correction_lead_ms);
    s.get("rng_seed", h.rng_seed);
    s.finish();
    h.validate();
}

ConfigJson to_json(const SessionConfig& c)
{
    ConfigJson j = ConfigJson::object();
    write_session_sections(j, c);
    return j;
}

void from_json(const ConfigJson& j, SessionConfig& c)
{
    Section s(j, "session");
    read_session_sections(s, c);
    s.finish();
}

namespace {

ConfigJson scenario_section(const SimScenario& s)
{
    return {{"stand_position", vec(s.stand_position)},
            {"pose_rate_hz", s.pose_rate_hz},
            {"touch_rate_hz", s.touch_rate_hz},
            {"pad_radius_m", s.pad_radius_m},
            {"tablet_half_m", s.tablet_half_m},
            {"max_set_seconds", s.max_set_seconds}};
}

void read_scenario_section(const ConfigJson& j, SimScenario& s)
{
    Section sec(j, "scenario");
    sec.get("stand_position", s.stand_position);
    sec.get("pose_rate_hz", s.pose_rate_hz);
    sec.get("touch_rate_hz", s.touch_rate_hz);
    sec.get("pad_radius_m", s.pad_radius_m);
    sec.get("tablet_half_m", s.tablet_half_m);
    sec.get("max_set_seconds", s.max_set_seconds);
    sec.finish();
}

void read_scenario(Section& sec, SimScenario& s)
{
    read_session_sections(sec, s.session);
    if (const auto* h = sec.child("human"))
        from_json(*h, s.human);
    if (const auto* sc = sec.child("scenario"))
        read_scenario_section(*sc, s);
}

} // namespace

ConfigJson to_json(const SimScenario& s)
{
    ConfigJson j = to_json(s.session);
    j["human"] = to_json(s.human);
    j["scenario"] = scenario_section(s);
    return j;
}

void from_json(const ConfigJson& j, SimScenario& s)
{
    Section sec(j, "config");
    read_scenario(sec, s);
    sec.finish();
    s.validate();
}

ConfigJson to_json(const ServerSettings& s)
{
    return {{"host", s.host}, {"port", s.port}, {"log_dir", s.log_dir}};
}

void from_json(const ConfigJson& j, ServerSettings& s)
{
    Section sec(j, "server");
    sec.get("host", s.host);
    sec.get("port", s.port);
    sec.get("log_dir", s.log_dir);
    sec.finish();
}

ConfigJson to_json(const AppConfig& c)
{
    ConfigJson j = to_json(c.scenario);
    j["server"] = to_json(c.server);
    return j;
}

void from_json(const ConfigJson& j, AppConfig& c)
{
    Section sec(j, "config");
    read_scenario(sec, c.scenario);
    if (const auto* s = sec.child("server"))
        from_json(*s, c.server);
    sec.finish();
    // A serve-only file may omit the study; simulate_run rejects that itself.
    if (c.scenario.session.study)
        c.scenario.validate();
    else
        c.scenario.session.engine_for(c.scenario.session.technique).validate();
}

AppConfig parse_config(const std::string& text)
{
    ConfigJson j;
    try {
        j = ConfigJson::parse(text);
    } catch (const ConfigJson::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    AppConfig c;
    try {
        from_json(j, c);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

AppConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    try {
        return parse_config(text.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

} // namespace farpoint
