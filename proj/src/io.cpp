#include "millstab/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <system_error>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace millstab::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    return fmt::format("{}", value);
}

void atomic_write_text(const fs::path& path, const std::string& text) {
    const fs::path dir = path.parent_path().empty() ? "." : path.parent_path();
    fs::create_directories(dir);
    fs::path tmp = dir / (path.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error(fmt::format("cannot open {} for writing",
                                                       tmp.string()));
        out << text;
        if (!out) throw std::runtime_error(fmt::format("write failed: {}", tmp.string()));
    }
    fs::rename(tmp, path);
}

// --- trajectory -------------------------------------------------------------

void write_trajectory_csv(const fs::path& path, const Trajectory& trajectory) {
    std::string text = "t,qx,qy,vx,vy,ax,ay,Fx,Fy,omega_rpm\n";
    text.reserve(text.size() + trajectory.samples.size() * 120);
    std::size_t speed_cursor = 0;
    for (const StateSample& s : trajectory.samples) {
        while (speed_cursor + 1 < trajectory.operating_history.size() &&
               trajectory.operating_history[speed_cursor + 1].t_s <= s.t)
            ++speed_cursor;
        const double rpm = trajectory.operating_history.empty()
                               ? 0.0
                               : trajectory.operating_history[speed_cursor].rpm;
        text += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", format_double(s.t),
                            format_double(s.q.x()), format_double(s.q.y()),
                            format_double(s.velocity.x()), format_double(s.velocity.y()),
                            format_double(s.acceleration.x()),
                            format_double(s.acceleration.y()),
                            format_double(s.force.x()), format_double(s.force.y()),
                            format_double(rpm));
    }
    atomic_write_text(path, text);
}

namespace {
double parse_field(std::string_view field, const fs::path& path, std::size_t line,
                   int column) {
    double value = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end)
        throw ParseError(fmt::format("{}:{}: cannot parse field {} ('{}')",
                                     path.string(), line, column + 1,
                                     std::string(field)));
    return value;
}
}  // namespace

Trajectory read_trajectory_csv(const fs::path& path, double axial_depth_mm) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(fmt::format("cannot open {}", path.string()));

    Trajectory trajectory;
    trajectory.axial_depth_mm = axial_depth_mm;
    std::string line;
    std::size_t line_number = 0;
    if (!std::getline(in, line))
        throw ParseError(fmt::format("{}:1: empty file", path.string()));
    ++line_number;
    if (line.ends_with('\r')) line.pop_back();
    if (line != "t,qx,qy,vx,vy,ax,ay,Fx,Fy,omega_rpm")
        throw ParseError(fmt::format("{}:1: unexpected header '{}'", path.string(),
                                     line));

    while (std::getline(in, line)) {
        ++line_number;
        if (line.ends_with('\r')) line.pop_back();
        if (line.empty()) continue;
        double fields[10];
        std::size_t start = 0;
        for (int f = 0; f < 10; ++f) {
            const std::size_t comma = line.find(',', start);
            const bool last = f == 9;
            if (!last && comma == std::string::npos)
                throw ParseError(fmt::format("{}:{}: expected 10 fields, found {}",
                                             path.string(), line_number, f + 1));
            if (last && comma != std::string::npos)
                throw ParseError(fmt::format("{}:{}: trailing fields beyond 10",
                                             path.string(), line_number));
            const std::size_t stop = last ? line.size() : comma;
            fields[f] = parse_field({line.data() + start, stop - start}, path,
                                    line_number, f);
            start = stop + 1;
        }
        StateSample sample;
        sample.t = fields[0];
        sample.q = {fields[1], fields[2]};
        sample.velocity = {fields[3], fields[4]};
        sample.acceleration = {fields[5], fields[6]};
        sample.force = {fields[7], fields[8]};
        const double rpm = fields[9];
        if (trajectory.operating_history.empty() ||
            trajectory.operating_history.back().rpm != rpm)
            trajectory.operating_history.push_back({sample.t, rpm});
        trajectory.samples.push_back(sample);
    }
    if (trajectory.samples.size() < 2)
        throw ParseError(fmt::format("{}: needs at least two samples", path.string()));
    trajectory.sample_step_s = trajectory.samples[1].t - trajectory.samples[0].t;
    if (trajectory.sample_step_s <= 0.0)
        throw ParseError(fmt::format("{}: time column must increase", path.string()));
    for (std::size_t i = 1; i < trajectory.samples.size(); ++i) {
        const double dt = trajectory.samples[i].t - trajectory.samples[i - 1].t;
        if (std::abs(dt - trajectory.sample_step_s) >
            1e-6 * trajectory.sample_step_s)
            throw ParseError(fmt::format("{}:{}: non-uniform sample step",
                                         path.string(), i + 2));
    }
    if (!trajectory.operating_history.empty())
        trajectory.operating_history.front().t_s = 0.0;
    return trajectory;
}

// --- SLD --------------------------------------------------------------------

void write_sld_csv(const fs::path& path, const SldGrid& grid) {
    std::string text = "omega_rpm,ap_mm,rho,gamma_max,stable\n";
    text.reserve(text.size() +
                 static_cast<std::size_t>(grid.spec.depth_count) *
                     grid.spec.speed_count * 60);
    for (int d = 0; d < grid.spec.depth_count; ++d) {
        for (int s = 0; s < grid.spec.speed_count; ++s) {
            const double rho = grid.rho(d, s);
            const int stable = std::isfinite(rho) && rho < 1.0 ? 1 : 0;
            text += fmt::format("{},{},{},{},{}\n",
                                format_double(grid.spec.speed_at(s)),
                                format_double(grid.spec.depth_at(d)),
                                format_double(rho), format_double(grid.gamma_max(d, s)),
                                stable);
        }
    }
    atomic_write_text(path, text);
}

void write_boundary_csv(const fs::path& path, const SldGrid& grid) {
    std::string text = "omega_rpm,ap_star_mm\n";
    for (const auto& [rpm, depth] : extract_boundary(grid))
        text += fmt::format("{},{}\n", format_double(rpm), format_double(depth));
    atomic_write_text(path, text);
}

// --- JSON codecs ------------------------------------------------------------

json to_json(const ProcessParameters& params) {
    return json{{"teeth_count", params.teeth_count},
                {"modal_mass_kg", params.modal_mass_kg},
                {"tool_diameter_mm", params.tool_diameter_mm},
                {"radial_depth_mm", params.radial_depth_mm},
                {"zeta", params.damping_ratio},
                {"omega_n_rad_s", params.natural_frequency_rad_s},
                {"kt", params.tangential_coeff},
                {"kr", params.radial_coeff}};
}

ProcessParameters params_from_json(const json& j) {
    ProcessParameters params;
    params.teeth_count = j.value("teeth_count", params.teeth_count);
    params.modal_mass_kg = j.value("modal_mass_kg", params.modal_mass_kg);
    params.tool_diameter_mm = j.value("tool_diameter_mm", params.tool_diameter_mm);
    params.radial_depth_mm = j.value("radial_depth_mm", params.radial_depth_mm);
    params.damping_ratio = j.value("zeta", params.damping_ratio);
    params.natural_frequency_rad_s =
        j.value("omega_n_rad_s", params.natural_frequency_rad_s);
    params.tangential_coeff = j.value("kt", params.tangential_coeff);
    params.radial_coeff = j.value("kr", params.radial_coeff);
    params.validate();
    return params;
}

json to_json(const GridSpec& spec) {
    return json{{"speed_min_rpm", spec.speed_min_rpm},
                {"speed_max_rpm", spec.speed_max_rpm},
                {"depth_min_mm", spec.depth_min_mm},
                {"depth_max_mm", spec.depth_max_mm},
                {"speed_count", spec.speed_count},
                {"depth_count", spec.depth_count},
                {"delay_resolution", spec.sdm.delay_resolution}};
}

GridSpec grid_spec_from_json(const json& j) {
    GridSpec spec;
    spec.speed_min_rpm = j.value("speed_min_rpm", spec.speed_min_rpm);
    spec.speed_max_rpm = j.value("speed_max_rpm", spec.speed_max_rpm);
    spec.depth_min_mm = j.value("depth_min_mm", spec.depth_min_mm);
    spec.depth_max_mm = j.value("depth_max_mm", spec.depth_max_mm);
    spec.speed_count = j.value("speed_count", spec.speed_count);
    spec.depth_count = j.value("depth_count", spec.depth_count);
    spec.sdm.delay_resolution = j.value("delay_resolution", spec.sdm.delay_resolution);
    spec.validate();
    return spec;
}

json to_json(const ControllerConfig& cfg) {
    return json{{"alpha", cfg.alpha},
                {"beta", cfg.beta},
                {"gamma", cfg.gamma},
                {"speed_min_rpm", cfg.speed_min_rpm},
                {"speed_max_rpm", cfg.speed_max_rpm},
                {"speed_step_rpm", cfg.speed_step_rpm},
                {"min_interval_s", cfg.min_interval_s},
                {"delta_floor_rpm", cfg.delta_floor_rpm}};
}

ControllerConfig controller_from_json(const json& j) {
    ControllerConfig cfg;
    cfg.alpha = j.value("alpha", cfg.alpha);
    cfg.beta = j.value("beta", cfg.beta);
    cfg.gamma = j.value("gamma", cfg.gamma);
    cfg.speed_min_rpm = j.value("speed_min_rpm", cfg.speed_min_rpm);
    cfg.speed_max_rpm = j.value("speed_max_rpm", cfg.speed_max_rpm);
    cfg.speed_step_rpm = j.value("speed_step_rpm", cfg.speed_step_rpm);
    cfg.min_interval_s = j.value("min_interval_s", cfg.min_interval_s);
    cfg.delta_floor_rpm = j.value("delta_floor_rpm", cfg.speed_step_rpm);
    cfg.validate();
    return cfg;
}

json to_json(const RoughnessCalibration& cal) {
    return json{{"r0_um", cal.r0_um},
                {"c_kin", cal.c_kin_um_per_mm2},
                {"c_vib", cal.c_vib_um_per_m},
                {"chatter_offband_threshold", cal.chatter_offband_threshold},
                {"displacement_floor_m", cal.displacement_floor_m}};
}

RoughnessCalibration roughness_calibration_from_json(const json& j) {
    RoughnessCalibration cal;
    cal.r0_um = j.value("r0_um", cal.r0_um);
    cal.c_kin_um_per_mm2 = j.value("c_kin", cal.c_kin_um_per_mm2);
    cal.c_vib_um_per_m = j.value("c_vib", cal.c_vib_um_per_m);
    cal.chatter_offband_threshold =
        j.value("chatter_offband_threshold", cal.chatter_offband_threshold);
    cal.displacement_floor_m = j.value("displacement_floor_m", cal.displacement_floor_m);
    return cal;
}

namespace {
RunMode mode_from_string(const std::string& text) {
    if (text == "open_loop") return RunMode::open_loop;
    if (text == "offline_control") return RunMode::offline_control;
    if (text == "online_control") return RunMode::online_control;
    throw ParseError(fmt::format("unknown mode '{}'", text));
}
}  // namespace

json to_json(const Scenario& s) {
    json drift = json::array();
    for (const DriftEvent& event : s.drift_events)
        drift.push_back(json{{"t", event.t_s}, {"params", to_json(event.params)}});
    return json{{"nominal_params", to_json(s.nominal)},
                {"drift_events", drift},
                {"initial",
                 json{{"omega_rpm", s.initial.spindle_speed_rpm},
                      {"ap_mm", s.initial.axial_depth_mm}}},
                {"mode", to_string(s.mode)},
                {"control_start_s", s.control_start_s},
                {"estimation_period_s", s.estimation_period_s},
                {"duration_s", s.duration_s},
                {"seed", s.seed},
                {"noise_std", s.noise_std},
                {"controller", to_json(s.controller)},
                {"roughness_calibration", to_json(s.roughness)},
                {"grid", to_json(s.grid)},
                {"feed_rate_mm_s", s.feed_rate_mm_s},
                {"initial_perturbation_m", s.initial_perturbation_m},
                {"step_fraction", s.step_fraction},
                {"full_grid_snapshots", s.full_grid_snapshots},
                {"online_context_rows", s.online_context_rows}};
}

Scenario scenario_from_json(const json& j) {
    Scenario s;
    if (j.contains("nominal_params")) s.nominal = params_from_json(j.at("nominal_params"));
    if (j.contains("drift_events")) {
        for (const json& entry : j.at("drift_events"))
            s.drift_events.push_back(
                {entry.at("t").get<double>(), params_from_json(entry.at("params"))});
    }
    if (j.contains("initial")) {
        s.initial.spindle_speed_rpm = j.at("initial").value("omega_rpm", 11500.0);
        s.initial.axial_depth_mm = j.at("initial").value("ap_mm", 1.0);
    }
    if (j.contains("mode")) s.mode = mode_from_string(j.at("mode").get<std::string>());
    s.control_start_s = j.value("control_start_s", s.control_start_s);
    s.estimation_period_s = j.value("estimation_period_s", s.estimation_period_s);
    s.duration_s = j.value("duration_s", s.duration_s);
    s.seed = j.value("seed", s.seed);
    s.noise_std = j.value("noise_std", s.noise_std);
    if (j.contains("controller")) s.controller = controller_from_json(j.at("controller"));
    if (j.contains("roughness_calibration"))
        s.roughness = roughness_calibration_from_json(j.at("roughness_calibration"));
    if (j.contains("grid")) s.grid = grid_spec_from_json(j.at("grid"));
    s.feed_rate_mm_s = j.value("feed_rate_mm_s", s.feed_rate_mm_s);
    s.initial_perturbation_m = j.value("initial_perturbation_m", s.initial_perturbation_m);
    s.step_fraction = j.value("step_fraction", s.step_fraction);
    s.full_grid_snapshots = j.value("full_grid_snapshots", s.full_grid_snapshots);
    s.online_context_rows = j.value("online_context_rows", s.online_context_rows);
    s.validate();
    return s;
}

Scenario load_scenario(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(fmt::format("cannot open {}", path.string()));
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& error) {
        throw ParseError(fmt::format("{}: {}", path.string(), error.what()));
    }
    return scenario_from_json(j);
}

RoughnessCalibration load_roughness_calibration(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(fmt::format("cannot open {}", path.string()));
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& error) {
        throw ParseError(fmt::format("{}: {}", path.string(), error.what()));
    }
    return roughness_calibration_from_json(j);
}

void write_sld_sidecar_json(const fs::path& path, const SldGrid& grid) {
    json failures = json::array();
    for (const auto& [d, s] : grid.failures)
        failures.push_back(json{{"depth_index", d}, {"speed_index", s}});
    const json j{{"grid", to_json(grid.spec)},
                 {"params", to_json(grid.params_used)},
                 {"timestamp_s", grid.timestamp_s},
                 {"failures", failures}};
    atomic_write_text(path, j.dump(2) + "\n");
}

// --- estimator / closed loop -------------------------------------------------

void write_estimate_json(const fs::path& path, const EstimatedParameters& estimate,
                         double window_t0_s, double window_t1_s) {
    const json j{{"zeta", estimate.damping_ratio},
                 {"omega_n_rad_s", estimate.natural_frequency_rad_s},
                 {"kt", estimate.tangential_coeff},
                 {"kr", estimate.radial_coeff},
                 {"loss", estimate.loss},
                 {"residual_lhs", estimate.residual_lhs_n},
                 {"residual_rhs", estimate.residual_rhs_n},
                 {"clamped", estimate.clamped},
                 {"window", json::array({window_t0_s, window_t1_s})}};
    atomic_write_text(path, j.dump(2) + "\n");
}

void write_decisions_csv(const fs::path& path,
                         const std::vector<TimedDecision>& decisions) {
    std::string text =
        "t,omega_current,omega_star,applied,feasible,rho_at_star,cost_stability,"
        "cost_gamma,cost_speed,cost_roughness\n";
    for (const TimedDecision& td : decisions) {
        const ControlDecision& d = td.decision;
        text += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", format_double(td.t_s),
                            format_double(td.omega_before_rpm),
                            format_double(d.omega_star_rpm), d.applied ? 1 : 0,
                            d.feasible ? 1 : 0, format_double(d.rho_at_star),
                            format_double(d.cost.stability_term),
                            format_double(d.cost.gamma_term),
                            format_double(d.cost.speed_term),
                            format_double(d.cost.roughness_term));
    }
    atomic_write_text(path, text);
}

void write_run_report(const fs::path& out_dir, const RunReport& report,
                      const Scenario& scenario) {
    fs::create_directories(out_dir);
    write_trajectory_csv(out_dir / "trajectory.csv", report.trajectory);
    write_decisions_csv(out_dir / "decisions.csv", report.decisions);
    for (std::size_t k = 0; k < report.sld_snapshots.size(); ++k) {
        write_sld_csv(out_dir / fmt::format("sld_t{}.csv", k), report.sld_snapshots[k]);
        write_sld_sidecar_json(out_dir / fmt::format("sld_t{}.json", k),
                               report.sld_snapshots[k]);
    }

    json estimates = json::array();
    for (const TimedEstimate& te : report.estimates)
        estimates.push_back(json{{"t", te.t_s},
                                 {"zeta", te.estimate.damping_ratio},
                                 {"omega_n_rad_s", te.estimate.natural_frequency_rad_s},
                                 {"kt", te.estimate.tangential_coeff},
                                 {"kr", te.estimate.radial_coeff},
                                 {"loss", te.estimate.loss},
                                 {"residual_lhs", te.estimate.residual_lhs_n},
                                 {"residual_rhs", te.estimate.residual_rhs_n},
                                 {"clamped", te.estimate.clamped}});
    json roughness = json::array();
    for (const TimedRoughness& tr : report.roughness_series)
        roughness.push_back(json{{"t", tr.t_s},
                                 {"r_um", tr.estimate.roughness_um},
                                 {"chatter", tr.estimate.chatter},
                                 {"confidence", tr.estimate.confidence}});
    json events = json::array();
    for (const LoopEvent& event : report.events)
        events.push_back(json{{"t", event.t_s}, {"message", event.message}});

    json j{{"verdict", to_string(report.verdict)},
           {"mode", to_string(scenario.mode)},
           {"scenario", to_json(scenario)},
           {"estimates", estimates},
           {"roughness", roughness},
           {"events", events},
           {"final_roughness_um",
            report.roughness_series.empty()
                ? json(nullptr)
                : json(report.roughness_series.back().estimate.roughness_um)}};
    if (report.divergence_time_s)
        j["divergence_time_s"] = *report.divergence_time_s;
    atomic_write_text(out_dir / "report.json", j.dump(2) + "\n");
}

}  // namespace millstab::io
