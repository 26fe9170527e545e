#pragma once

#include <iosfwd>
#include <optional>
#include <variant>

#include "floq/config.hpp"
#include "floq/models.hpp"

namespace floq {

// ---------------------------------------------------------------------------
// Scenario description (what to simulate) and run reports (what came out).
// ---------------------------------------------------------------------------

enum class Method {
    exact,       // product-integrator trajectory (the reference)
    exact_log,   // micromotion + exp(L_F t) with L_F from the principal log
    magnus0,     // same reconstruction, L_F from averaging order 0
    magnus1,
    magnus2,
    analytic0,   // closed-form averaged generators (models 1 and 2 only)
    analytic1,
};

const char* method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);

enum class OutputFormat { csv, json };

enum class InitialStateKind { excited, ground, mixed, bloch };

struct InitialState {
    InitialStateKind kind = InitialStateKind::excited;
    double x = 0.0, y = 0.0, z = 0.0;  // only for kind == bloch
    DensityMatrix realize() const;
};

struct TimeGrid {
    int n_periods = 10;
    int points_per_period = 32;
};

struct CustomModelRef {
    std::string path;
};

using ModelParams = std::variant<Model1Params, Model2Params, CustomModelRef>;

struct ScenarioConfig {
    std::string name = "scenario";
    ModelParams model = Model1Params{};
    double t0 = 0.0;
    InitialState initial_state;
    TimeGrid time;
    std::vector<Method> methods = {Method::exact, Method::exact_log, Method::magnus1};
    int truncation = 8;                   // micromotion Fourier cutoff
    OutputFormat format = OutputFormat::csv;
    std::string out_path;                 // empty = stdout
    PropagateOptions propagate;
};

/// Parameter sweep: re-run the scenario for each value of one model parameter.
struct SweepSpec {
    std::string parameter;
    std::vector<std::string> value_texts;  // as written, reused in file names
    std::vector<double> values;
};

ScenarioConfig scenario_from_config(const ConfigFile& cfg);
std::optional<SweepSpec> sweep_from_config(const ConfigFile& cfg);

/// Set a named model parameter (for sweeps); ConfigError if the active model
/// has no such parameter.
void apply_parameter(ScenarioConfig& sc, const std::string& name, double value);

/// Build the generator declared by the scenario's model parameters.
PeriodicLindbladian make_lindbladian(const ModelParams& model);

struct MethodSeries {
    Method method = Method::exact;
    bool failed = false;
    std::string error;                  // set when failed
    std::vector<double> sx, sy, sz;     // Pauli expectations per grid time
    std::vector<double> dist;           // trace distance vs exact
    std::vector<double> fid;            // Uhlmann fidelity vs exact
    double micromotion_residual = 0.0;  // harmonic-balance defect (approx methods)
    double max_trace_drift = 0.0;
    std::vector<std::string> warnings;
    double wall_seconds = 0.0;
};

struct RunReport {
    std::string scenario_name;
    double period = 0.0;
    double t0 = 0.0;
    std::vector<double> times;
    std::vector<int> stroboscopic;     // 1 where t is an integer number of periods
    std::vector<MethodSeries> series;  // in the order requested
    bool any_failed() const;
};

/// Run every requested method on the shared time grid.  The exact trajectory
/// is always computed (it is the deviation reference) but appears as a series
/// only if requested.  Per-method numerical failures are recorded in the
/// series, not thrown.
RunReport run_scenario(const ScenarioConfig& sc);

/// Long-format table: time, method, sx, sy, sz, trace_distance_vs_exact,
/// fidelity_vs_exact, is_stroboscopic.  17 significant digits, '.' decimal
/// point, '\n' line endings; byte-identical across runs on the same input.
void write_csv(const RunReport& report, std::ostream& os);

/// Same data plus a meta block (config echo, library version, residuals,
/// warnings, per-method errors).
void write_json(const ScenarioConfig& sc, const RunReport& report, std::ostream& os);

/// Shortest-17-significant-digit decimal formatting used by both writers.
std::string format_double(double v);

// ---------------------------------------------------------------------------
// Studies
// ---------------------------------------------------------------------------

/// Micromotion amplitude vs drive frequency.  For each omega the exact
/// trajectory is relaxed onto the asymptotic cycle, and the amplitude is the
/// maximum in-period trace distance from the stroboscopic baseline
/// exp(L_F dt) rho_strobo.  The log-log slope comes with a standard error
/// from the least-squares fit.
struct ScalingPoint {
    double omega = 0.0;
    double amplitude = 0.0;
    int relax_periods = 0;
};

struct ScalingStudy {
    std::vector<ScalingPoint> points;
    double slope = 0.0;
    double slope_stderr = 0.0;
};

ScalingStudy scaling_study(const ScenarioConfig& base, const std::vector<double>& omegas,
                           int samples_per_period = 64);

void write_scaling_csv(const ScalingStudy& study, std::ostream& os);
void write_scaling_json(const ScalingStudy& study, std::ostream& os);

/// Truncation sweep: per level, the generator-series residual, steady-state
/// block diagnostics, micromotion diagnostics, and pairwise differences
/// between successive levels.  Levels whose Fourier cutoff cannot represent
/// the generator are flagged instead of failing the whole study.
struct ConvergenceRow {
    int truncation = 0;
    bool insufficient = false;          // generator harmonics beyond cutoff
    double fourier_residual = 0.0;      // generator-series reconstruction
    double steady_residual = 0.0;       // |B v| / |v|
    double steady_separation = 0.0;     // sigma_2 / sigma_1
    double micromotion_residual = 0.0;  // harmonic-balance defect
    double micromotion_vs_ode = 0.0;    // Fourier K vs direct K, max norm
    double steady_delta_prev = 0.0;     // vs previous level, max trace distance
    double micromotion_delta_prev = 0.0;
};

struct ConvergenceStudy {
    std::vector<ConvergenceRow> rows;
};

ConvergenceStudy convergence_study(const ScenarioConfig& base,
                                   const std::vector<int>& truncations);

void write_convergence_csv(const ConvergenceStudy& study, std::ostream& os);
void write_convergence_json(const ConvergenceStudy& study, std::ostream& os);

// ---------------------------------------------------------------------------
// Preset lookup
// ---------------------------------------------------------------------------

/// Locate "<name>.conf" among, in order: override_dir (if nonempty), the
/// FLOQUET_LINDBLAD_PRESETS environment variable, ./presets, the presets
/// directory next to the executable, and the build-time source presets dir.
/// ConfigError when the file is found nowhere.
std::string find_preset_file(const std::string& name, const std::string& override_dir = {},
                             const std::string& exe_dir = {});

}  // namespace floq
