#include "floq/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "floq/log.hpp"
#include "floq/version.hpp"

#ifndef FLOQ_SOURCE_PRESET_DIR
#define FLOQ_SOURCE_PRESET_DIR ""
#endif

namespace floq {

namespace {
using ordered_json = nlohmann::ordered_json;
}

// ---------------------------------------------------------------------------
// Method names / initial states
// ---------------------------------------------------------------------------

const char* method_name(Method m) {
    switch (m) {
        case Method::exact: return "exact";
        case Method::exact_log: return "exact-log";
        case Method::magnus0: return "magnus0";
        case Method::magnus1: return "magnus1";
        case Method::magnus2: return "magnus2";
        case Method::analytic0: return "analytic0";
        case Method::analytic1: return "analytic1";
    }
    return "?";
}

std::optional<Method> method_from_name(const std::string& name) {
    static const std::map<std::string, Method> table{
        {"exact", Method::exact},       {"exact-log", Method::exact_log},
        {"magnus0", Method::magnus0},   {"magnus1", Method::magnus1},
        {"magnus2", Method::magnus2},   {"analytic0", Method::analytic0},
        {"analytic1", Method::analytic1},
    };
    const auto it = table.find(name);
    if (it == table.end()) return std::nullopt;
    return it->second;
}

DensityMatrix InitialState::realize() const {
    switch (kind) {
        case InitialStateKind::excited: return states::excited();
        case InitialStateKind::ground: return states::ground();
        case InitialStateKind::mixed: return states::maximally_mixed(2);
        case InitialStateKind::bloch: return states::bloch(x, y, z);
    }
    throw InvalidInput("InitialState: unknown kind");
}

// ---------------------------------------------------------------------------
// Config -> ScenarioConfig
// ---------------------------------------------------------------------------

namespace {

InitialState parse_initial_state(const std::string& text, const std::string& where) {
    InitialState st;
    if (text == "excited") {
        st.kind = InitialStateKind::excited;
    } else if (text == "ground") {
        st.kind = InitialStateKind::ground;
    } else if (text == "mixed") {
        st.kind = InitialStateKind::mixed;
    } else if (text.rfind("bloch(", 0) == 0 && text.back() == ')') {
        st.kind = InitialStateKind::bloch;
        const std::string inner = text.substr(6, text.size() - 7);
        std::vector<std::string> parts;
        std::istringstream in(inner);
        std::string item;
        while (std::getline(in, item, ',')) parts.push_back(item);
        if (parts.size() != 3)
            throw ConfigError(where + ": bloch state needs three components, got '" + text + "'");
        st.x = ConfigFile::parse_double(parts[0], where);
        st.y = ConfigFile::parse_double(parts[1], where);
        st.z = ConfigFile::parse_double(parts[2], where);
    } else {
        throw ConfigError(where + ": unknown initial state '" + text +
                          "' (expected excited|ground|mixed|bloch(x,y,z))");
    }
    return st;
}

}  // namespace

ScenarioConfig scenario_from_config(const ConfigFile& cfg) {
    ScenarioConfig sc;
    const std::string model = cfg.get_string("scenario", "model", "model1");
    sc.name = cfg.get_string("scenario", "name", model);
    if (model == "model1") {
        Model1Params p;
        p.omega_z = cfg.get_double("model1", "omega_z", p.omega_z);
        p.gamma = cfg.get_double("model1", "gamma", p.gamma);
        p.omega = cfg.get_double("model1", "omega", p.omega);
        p.half_period = cfg.get_bool("model1", "half_period", false);
        sc.model = p;
    } else if (model == "model2") {
        Model2Params p;
        p.alpha = cfg.get_double("model2", "alpha", p.alpha);
        p.gamma = cfg.get_double("model2", "gamma", p.gamma);
        p.omega = cfg.get_double("model2", "omega", p.omega);
        p.theta = cfg.get_double("model2", "theta", p.theta);
        p.phi = cfg.get_double("model2", "phi", p.phi);
        p.beta = cfg.get_double("model2", "beta", p.beta);
        sc.model = p;
    } else if (model == "custom-file") {
        CustomModelRef ref;
        ref.path = cfg.get("custom", "path");
        sc.model = ref;
    } else {
        throw ConfigError(cfg.origin() + ": unknown model '" + model +
                          "' (expected model1|model2|custom-file)");
    }

    sc.t0 = cfg.get_double("scenario", "t0", 0.0);
    if (const auto v = cfg.find("scenario", "initial_state"))
        sc.initial_state = parse_initial_state(*v, cfg.origin() + ": initial_state");
    sc.time.n_periods = cfg.get_int("scenario", "n_periods", sc.time.n_periods);
    sc.time.points_per_period =
        cfg.get_int("scenario", "points_per_period", sc.time.points_per_period);
    if (sc.time.n_periods < 1)
        throw ConfigError(cfg.origin() + ": n_periods must be >= 1");
    if (sc.time.points_per_period < 1)
        throw ConfigError(cfg.origin() + ": points_per_period must be >= 1");

    if (cfg.has("scenario", "methods")) {
        sc.methods.clear();
        for (const auto& name : cfg.get_list("scenario", "methods")) {
            const auto m = method_from_name(name);
            if (!m)
                throw ConfigError(cfg.origin() + ": unknown method '" + name + "'");
            if (std::find(sc.methods.begin(), sc.methods.end(), *m) != sc.methods.end())
                throw ConfigError(cfg.origin() + ": duplicate method '" + name + "'");
            sc.methods.push_back(*m);
        }
    }
    sc.truncation = cfg.get_int("scenario", "truncation", sc.truncation);
    if (sc.truncation < 0) throw ConfigError(cfg.origin() + ": truncation must be >= 0");
    sc.propagate.tol = cfg.get_double("scenario", "tol", sc.propagate.tol);
    if (!(sc.propagate.tol > 0.0)) throw ConfigError(cfg.origin() + ": tol must be positive");

    const std::string fmt = cfg.get_string("output", "format", "csv");
    if (fmt == "csv") {
        sc.format = OutputFormat::csv;
    } else if (fmt == "json") {
        sc.format = OutputFormat::json;
    } else {
        throw ConfigError(cfg.origin() + ": unknown output format '" + fmt + "'");
    }
    sc.out_path = cfg.get_string("output", "path", "");
    return sc;
}

std::optional<SweepSpec> sweep_from_config(const ConfigFile& cfg) {
    if (!cfg.has_section("sweep")) return std::nullopt;
    SweepSpec sw;
    sw.parameter = cfg.get("sweep", "parameter");
    sw.value_texts = cfg.get_list("sweep", "values");
    for (const auto& text : sw.value_texts)
        sw.values.push_back(
            ConfigFile::parse_double(text, cfg.origin() + ": [sweep] values"));
    return sw;
}

void apply_parameter(ScenarioConfig& sc, const std::string& name, double value) {
    const auto fail = [&]() {
        throw ConfigError("sweep parameter '" + name + "' does not exist on the active model");
    };
    if (auto* p = std::get_if<Model1Params>(&sc.model)) {
        if (name == "omega_z") p->omega_z = value;
        else if (name == "gamma") p->gamma = value;
        else if (name == "omega") p->omega = value;
        else fail();
    } else if (auto* p = std::get_if<Model2Params>(&sc.model)) {
        if (name == "alpha") p->alpha = value;
        else if (name == "gamma") p->gamma = value;
        else if (name == "omega") p->omega = value;
        else if (name == "theta") p->theta = value;
        else if (name == "phi") p->phi = value;
        else if (name == "beta") p->beta = value;
        else fail();
    } else {
        fail();
    }
}

PeriodicLindbladian make_lindbladian(const ModelParams& model) {
    if (const auto* p = std::get_if<Model1Params>(&model)) return model1_lindbladian(*p);
    if (const auto* p = std::get_if<Model2Params>(&model)) return model2_lindbladian(*p);
    return custom_lindbladian_from_file(std::get<CustomModelRef>(model).path);
}

// ---------------------------------------------------------------------------
// run_scenario
// ---------------------------------------------------------------------------

namespace {

struct PauliExpectations {
    double sx, sy, sz;
};

PauliExpectations pauli_expectations(const Matrix& rho) {
    const auto comp = [&rho](const Matrix& sigma) {
        const Complex v = (sigma * rho).trace();
        if (std::abs(v.imag()) > 1e-10) {
            std::ostringstream os;
            os << "expectation: imaginary residue " << v.imag();
            throw NumericsError(os.str());
        }
        return v.real();
    };
    return {comp(pauli::x()), comp(pauli::y()), comp(pauli::z())};
}

double wall_since(const std::chrono::steady_clock::time_point& begin) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
}

FloquetGenerator generator_for(Method m, const PeriodicLindbladian& lind,
                               const ModelParams& model, double t0,
                               const PropagateOptions& opts) {
    switch (m) {
        case Method::exact_log:
            return floquet_generator_exact(lind, 0.0, opts);
        case Method::magnus0:
            return magnus_generator(lind, 0);
        case Method::magnus1:
            return magnus_generator(lind, 1);
        case Method::magnus2:
            return magnus_generator(lind, 2);
        case Method::analytic0:
        case Method::analytic1: {
            if (t0 != 0.0)
                throw InvalidInput(
                    "analytic generators are defined for the t0 = 0 anchor only");
            const int order = m == Method::analytic0 ? 0 : 1;
            if (const auto* p = std::get_if<Model1Params>(&model))
                return model1_analytic(*p, order);
            if (const auto* p = std::get_if<Model2Params>(&model))
                return model2_analytic(*p, order);
            throw InvalidInput("analytic generators exist only for model1 and model2");
        }
        case Method::exact:
            break;
    }
    throw InvalidInput("generator_for: not a generator-based method");
}

}  // namespace

bool RunReport::any_failed() const {
    return std::any_of(series.begin(), series.end(),
                       [](const MethodSeries& s) { return s.failed; });
}

RunReport run_scenario(const ScenarioConfig& sc) {
    const PeriodicLindbladian base = make_lindbladian(sc.model);
    const double T = base.period();
    const double t0 = sc.t0;

    // Work in the shifted frame tau = t - t0 so every method shares one
    // anchor; reported times are absolute again.
    const PeriodicLindbladian lind =
        t0 == 0.0 ? base
                  : PeriodicLindbladian([&base, t0](double tau) { return base.at(t0 + tau); },
                                        base.period(), base.label());

    const int pp = sc.time.points_per_period;
    const int np = sc.time.n_periods;
    const int n_pts = np * pp + 1;

    RunReport report;
    report.scenario_name = sc.name;
    report.period = T;
    report.t0 = t0;
    report.times.reserve(std::size_t(n_pts));
    report.stroboscopic.reserve(std::size_t(n_pts));
    for (int i = 0; i < n_pts; ++i) {
        report.times.push_back(t0 + T * double(i) / pp);
        report.stroboscopic.push_back(i % pp == 0 ? 1 : 0);
    }

    const DensityMatrix rho0 = sc.initial_state.realize();
    if (rho0.dim() != lind.dim())
        throw InvalidInput("run_scenario: initial state dimension does not match the model");

    if (log::info_enabled())
        log::info("running scenario '" + sc.name + "' (" + lind.label() + ")");

    // Reference trajectory (needed for the deviation columns regardless of
    // whether "exact" was requested as an output series).
    const auto exact_begin = std::chrono::steady_clock::now();
    const std::vector<DensityMatrix> exact = evolve_periodic_grid(lind, rho0, np, pp, sc.propagate);
    const double exact_seconds = wall_since(exact_begin);

    // The generator Fourier series is shared by all reconstruction methods.
    std::optional<FourierSeriesSuperop> l_series;
    const auto series_for_method = [&]() -> const FourierSeriesSuperop& {
        if (!l_series) l_series = lindbladian_fourier(lind, sc.truncation);
        return *l_series;
    };

    for (const Method method : sc.methods) {
        MethodSeries ms;
        ms.method = method;
        const auto begin = std::chrono::steady_clock::now();
        try {
            if (method == Method::exact) {
                for (int i = 0; i < n_pts; ++i) {
                    const auto ex = pauli_expectations(exact[std::size_t(i)].matrix());
                    ms.sx.push_back(ex.sx);
                    ms.sy.push_back(ex.sy);
                    ms.sz.push_back(ex.sz);
                    ms.dist.push_back(0.0);
                    ms.fid.push_back(1.0);
                }
                ms.wall_seconds = exact_seconds;
            } else {
                const FloquetGenerator gen =
                    generator_for(method, lind, sc.model, t0, sc.propagate);
                const FourierSeriesSuperop k_series =
                    micromotion_fourier(series_for_method(), gen, sc.truncation);
                ms.micromotion_residual = k_series.residual();
                if (k_series.residual() > 1e-6) {
                    std::ostringstream os;
                    os << "micromotion residual " << k_series.residual()
                       << " above 1e-6; increase truncation";
                    ms.warnings.push_back(os.str());
                }

                // K is periodic: the pp in-period phases repeat across the
                // whole grid, and exp(G t_i) accumulates one step power.
                std::vector<Matrix> k_phase;
                k_phase.reserve(std::size_t(pp));
                for (int j = 0; j < pp; ++j)
                    k_phase.push_back(k_series.evaluate(T * double(j) / pp).matrix());
                const Matrix step = matrix_exp(gen.generator.matrix() * (T / pp));

                Vector v = vectorize(rho0.matrix());
                for (int i = 0; i < n_pts; ++i) {
                    Matrix rho = i == 0 ? rho0.matrix()
                                        : devectorize(Vector(k_phase[std::size_t(i % pp)] * v),
                                                      rho0.dim());
                    rho = 0.5 * (rho + rho.adjoint().eval());
                    const double drift = std::abs(rho.trace() - Complex(1.0));
                    ms.max_trace_drift = std::max(ms.max_trace_drift, drift);
                    const auto ex = pauli_expectations(rho);
                    ms.sx.push_back(ex.sx);
                    ms.sy.push_back(ex.sy);
                    ms.sz.push_back(ex.sz);
                    const Matrix& ref = exact[std::size_t(i)].matrix();
                    ms.dist.push_back(trace_distance(rho, ref));
                    ms.fid.push_back(state_fidelity(rho, ref));
                    v = step * v;  // now exp(G t_{i+1}) vec(rho0)
                }
                if (ms.max_trace_drift > 1e-8) {
                    std::ostringstream os;
                    os << "trace drift " << ms.max_trace_drift
                       << " above 1e-8 (expected for truncated generators)";
                    ms.warnings.push_back(os.str());
                }
            }
        } catch (const std::exception& e) {
            ms.failed = true;
            ms.error = e.what();
            ms.sx.clear();
            ms.sy.clear();
            ms.sz.clear();
            ms.dist.clear();
            ms.fid.clear();
        }
        ms.wall_seconds = method == Method::exact ? exact_seconds : wall_since(begin);
        report.series.push_back(std::move(ms));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Writers
// ---------------------------------------------------------------------------

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s(buf);
    for (auto& ch : s)
        if (ch == ',') ch = '.';
    return s;
}

void write_csv(const RunReport& report, std::ostream& os) {
    os << "time,method,sx,sy,sz,trace_distance_vs_exact,fidelity_vs_exact,is_stroboscopic\n";
    for (const auto& ms : report.series) {
        if (ms.failed) continue;
        for (std::size_t i = 0; i < report.times.size(); ++i) {
            os << format_double(report.times[i]) << ',' << method_name(ms.method) << ','
               << format_double(ms.sx[i]) << ',' << format_double(ms.sy[i]) << ','
               << format_double(ms.sz[i]) << ',' << format_double(ms.dist[i]) << ','
               << format_double(ms.fid[i]) << ',' << report.stroboscopic[i] << '\n';
        }
    }
}

namespace {

ordered_json model_echo(const ScenarioConfig& sc) {
    ordered_json j;
    if (const auto* p = std::get_if<Model1Params>(&sc.model)) {
        j["name"] = "model1";
        j["omega_z"] = p->omega_z;
        j["gamma"] = p->gamma;
        j["omega"] = p->omega;
        j["half_period"] = p->half_period;
    } else if (const auto* p = std::get_if<Model2Params>(&sc.model)) {
        j["name"] = "model2";
        j["alpha"] = p->alpha;
        j["gamma"] = p->gamma;
        j["omega"] = p->omega;
        j["theta"] = p->theta;
        j["phi"] = p->phi;
        j["beta"] = p->beta;
    } else {
        j["name"] = "custom-file";
        j["path"] = std::get<CustomModelRef>(sc.model).path;
    }
    return j;
}

}  // namespace

void write_json(const ScenarioConfig& sc, const RunReport& report, std::ostream& os) {
    ordered_json meta;
    meta["scenario"] = report.scenario_name;
    meta["version"] = kVersion;
    meta["model"] = model_echo(sc);
    meta["t0"] = report.t0;
    meta["period"] = report.period;
    meta["n_periods"] = sc.time.n_periods;
    meta["points_per_period"] = sc.time.points_per_period;
    meta["truncation"] = sc.truncation;
    ordered_json errors = ordered_json::array();
    for (const auto& ms : report.series)
        if (ms.failed) errors.push_back({{"method", method_name(ms.method)}, {"error", ms.error}});
    meta["errors"] = errors;

    ordered_json series = ordered_json::array();
    for (const auto& ms : report.series) {
        ordered_json j;
        j["method"] = method_name(ms.method);
        j["failed"] = ms.failed;
        if (ms.failed) {
            j["error"] = ms.error;
        } else {
            j["sx"] = ms.sx;
            j["sy"] = ms.sy;
            j["sz"] = ms.sz;
            j["trace_distance_vs_exact"] = ms.dist;
            j["fidelity_vs_exact"] = ms.fid;
        }
        j["micromotion_residual"] = ms.micromotion_residual;
        j["max_trace_drift"] = ms.max_trace_drift;
        j["warnings"] = ms.warnings;
        j["wall_seconds"] = ms.wall_seconds;
        series.push_back(std::move(j));
    }

    ordered_json root;
    root["meta"] = std::move(meta);
    root["times"] = report.times;
    root["is_stroboscopic"] = report.stroboscopic;
    root["series"] = std::move(series);
    os << root.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Scaling study
// ---------------------------------------------------------------------------

ScalingStudy scaling_study(const ScenarioConfig& base, const std::vector<double>& omegas,
                           int samples_per_period) {
    if (omegas.size() < 2) throw InvalidInput("scaling_study: need at least two frequencies");
    if (samples_per_period < 4) throw InvalidInput("scaling_study: too few samples per period");

    ScalingStudy study;
    for (const double omega : omegas) {
        if (!(omega > 0.0)) throw InvalidInput("scaling_study: frequencies must be positive");
        ScenarioConfig sc = base;
        apply_parameter(sc, "omega", omega);
        const PeriodicLindbladian lind = make_lindbladian(sc.model);
        const double T = lind.period();
        const FloquetGenerator gen = floquet_generator_exact(lind, 0.0, sc.propagate);

        // Relaxation horizon from the slowest decaying mode of the spectrum.
        Eigen::ComplexEigenSolver<Matrix> es(gen.generator.matrix(), false);
        double slowest = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
            const double re = es.eigenvalues()[i].real();
            if (re < -1e-12) slowest = std::min(slowest, -re);
        }
        int n_relax = 8;
        if (std::isfinite(slowest))
            n_relax = int(std::clamp(std::ceil(14.0 / (slowest * T)), 8.0, 200000.0));

        // rho after n_relax periods, by squaring the one-period map.
        const std::vector<Superoperator> segs =
            period_segment_maps(lind, 0.0, samples_per_period, sc.propagate);
        Matrix v_period = Matrix::Identity(lind.dim() * lind.dim(), lind.dim() * lind.dim());
        for (const auto& seg : segs) v_period = seg.matrix() * v_period;
        Matrix power = Matrix::Identity(v_period.rows(), v_period.cols());
        {
            Matrix sq = v_period;
            int k = n_relax;
            while (k > 0) {
                if (k & 1) power = sq * power;
                sq = sq * sq;
                k >>= 1;
            }
        }
        Matrix rho = devectorize(Vector(power * vectorize(sc.initial_state.realize().matrix())),
                                 lind.dim());
        rho = 0.5 * (rho + rho.adjoint().eval());
        rho /= rho.trace().real();

        // Micromotion amplitude over the settled cycle: exact in-period
        // samples against the frozen-generator baseline exp(G t) rho.
        double amplitude = 0.0;
        Matrix rho_exact = rho;
        for (int j = 0; j < samples_per_period; ++j) {
            if (j > 0) rho_exact = segs[std::size_t(j - 1)].apply(rho_exact);
            const Matrix baseline = devectorize(
                Vector(matrix_exp(gen.generator.matrix() * (T * double(j) / samples_per_period)) *
                       vectorize(rho)),
                lind.dim());
            amplitude = std::max(amplitude, trace_distance(rho_exact, baseline));
        }
        study.points.push_back({omega, amplitude, n_relax});
        if (log::info_enabled()) {
            std::ostringstream os;
            os << "scaling: omega " << omega << " amplitude " << amplitude << " (relaxed "
               << n_relax << " periods)";
            log::info(os.str());
        }
    }

    // Log-log least squares with the slope's standard error.
    const std::size_t n = study.points.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& pt : study.points) {
        const double lx = std::log(pt.omega), ly = std::log(pt.amplitude);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double det = double(n) * sxx - sx * sx;
    if (std::abs(det) < 1e-12) throw InvalidInput("scaling_study: degenerate frequency set");
    study.slope = (double(n) * sxy - sx * sy) / det;
    const double intercept = (sy - study.slope * sx) / double(n);
    double ss_res = 0.0;
    for (const auto& pt : study.points) {
        const double r = std::log(pt.amplitude) - (intercept + study.slope * std::log(pt.omega));
        ss_res += r * r;
    }
    if (n > 2) {
        const double var = ss_res / double(n - 2);
        study.slope_stderr = std::sqrt(var * double(n) / det);
    }
    return study;
}

void write_scaling_csv(const ScalingStudy& study, std::ostream& os) {
    os << "omega,amplitude,relax_periods,fit_slope,fit_slope_stderr\n";
    for (const auto& pt : study.points)
        os << format_double(pt.omega) << ',' << format_double(pt.amplitude) << ','
           << pt.relax_periods << ',' << format_double(study.slope) << ','
           << format_double(study.slope_stderr) << '\n';
}

void write_scaling_json(const ScalingStudy& study, std::ostream& os) {
    ordered_json points = ordered_json::array();
    for (const auto& pt : study.points)
        points.push_back({{"omega", pt.omega},
                          {"amplitude", pt.amplitude},
                          {"relax_periods", pt.relax_periods}});
    ordered_json root;
    root["meta"] = {{"version", kVersion}};
    root["points"] = std::move(points);
    root["fit_slope"] = study.slope;
    root["fit_slope_stderr"] = study.slope_stderr;
    os << root.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Convergence study
// ---------------------------------------------------------------------------

ConvergenceStudy convergence_study(const ScenarioConfig& base,
                                   const std::vector<int>& truncations) {
    if (truncations.empty()) throw InvalidInput("convergence_study: empty truncation list");
    for (std::size_t i = 0; i < truncations.size(); ++i) {
        if (truncations[i] < 0) throw InvalidInput("convergence_study: negative truncation");
        if (i > 0 && truncations[i] <= truncations[i - 1])
            throw InvalidInput("convergence_study: truncations must be strictly ascending");
    }

    const PeriodicLindbladian lind = make_lindbladian(base.model);
    const double T = lind.period();
    const FloquetGenerator gen = floquet_generator_exact(lind, 0.0, base.propagate);

    // Shared comparison grids.
    constexpr int kOffsets = 16;
    std::vector<double> offsets;
    for (int j = 1; j <= kOffsets; ++j) offsets.push_back(T * double(j) / kOffsets);
    const std::vector<Superoperator> k_direct =
        micromotion_ode(lind, gen, offsets, base.propagate);

    ConvergenceStudy study;
    std::optional<SteadyStateSeries> prev_steady;
    std::optional<FourierSeriesSuperop> prev_k;
    for (const int M : truncations) {
        ConvergenceRow row;
        row.truncation = M;
        std::optional<FourierSeriesSuperop> l_series;
        try {
            l_series = lindbladian_fourier(lind, M);
        } catch (const NumericsError&) {
            row.insufficient = true;
            study.rows.push_back(row);
            continue;
        }
        row.fourier_residual = l_series->residual();

        const SteadyStateSeries steady = steady_state_block(*l_series, M);
        row.steady_residual = steady.residual();
        row.steady_separation = steady.separation();

        const FourierSeriesSuperop k_series = micromotion_fourier(*l_series, gen, M);
        row.micromotion_residual = k_series.residual();
        for (int j = 0; j < kOffsets; ++j)
            row.micromotion_vs_ode = std::max(
                row.micromotion_vs_ode,
                max_abs(Matrix(k_series.evaluate(offsets[std::size_t(j)]).matrix() -
                               k_direct[std::size_t(j)].matrix())));

        if (prev_steady && prev_k) {
            for (int j = 0; j <= 2 * kOffsets; ++j) {
                const double t = T * double(j) / (2 * kOffsets);
                row.steady_delta_prev =
                    std::max(row.steady_delta_prev,
                             trace_distance(steady.evaluate(t), prev_steady->evaluate(t)));
                row.micromotion_delta_prev =
                    std::max(row.micromotion_delta_prev,
                             max_abs(Matrix(k_series.evaluate(t).matrix() -
                                            prev_k->evaluate(t).matrix())));
            }
        }
        prev_steady = steady;
        prev_k = k_series;
        study.rows.push_back(row);
    }
    return study;
}

void write_convergence_csv(const ConvergenceStudy& study, std::ostream& os) {
    os << "truncation,insufficient,fourier_residual,steady_residual,steady_separation,"
          "micromotion_residual,micromotion_vs_ode,steady_delta_prev,micromotion_delta_prev\n";
    for (const auto& r : study.rows)
        os << r.truncation << ',' << (r.insufficient ? 1 : 0) << ','
           << format_double(r.fourier_residual) << ',' << format_double(r.steady_residual) << ','
           << format_double(r.steady_separation) << ',' << format_double(r.micromotion_residual)
           << ',' << format_double(r.micromotion_vs_ode) << ','
           << format_double(r.steady_delta_prev) << ','
           << format_double(r.micromotion_delta_prev) << '\n';
}

void write_convergence_json(const ConvergenceStudy& study, std::ostream& os) {
    ordered_json rows = ordered_json::array();
    for (const auto& r : study.rows)
        rows.push_back({{"truncation", r.truncation},
                        {"insufficient", r.insufficient},
                        {"fourier_residual", r.fourier_residual},
                        {"steady_residual", r.steady_residual},
                        {"steady_separation", r.steady_separation},
                        {"micromotion_residual", r.micromotion_residual},
                        {"micromotion_vs_ode", r.micromotion_vs_ode},
                        {"steady_delta_prev", r.steady_delta_prev},
                        {"micromotion_delta_prev", r.micromotion_delta_prev}});
    ordered_json root;
    root["meta"] = {{"version", kVersion}};
    root["rows"] = std::move(rows);
    os << root.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Preset lookup
// ---------------------------------------------------------------------------

std::string find_preset_file(const std::string& name, const std::string& override_dir,
                             const std::string& exe_dir) {
    if (name.empty() ||
        name.find_first_not_of(
            "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-") !=
            std::string::npos)
        throw ConfigError("invalid preset name '" + name + "'");

    namespace fs = std::filesystem;
    std::vector<std::string> dirs;
    if (!override_dir.empty()) dirs.push_back(override_dir);
    if (const char* env = std::getenv("FLOQUET_LINDBLAD_PRESETS")) dirs.push_back(env);
    dirs.push_back("presets");
    if (!exe_dir.empty()) {
        dirs.push_back((fs::path(exe_dir) / "presets").string());
        dirs.push_back((fs::path(exe_dir) / ".." / "presets").string());
    }
    if (const std::string src = FLOQ_SOURCE_PRESET_DIR; !src.empty()) dirs.push_back(src);

    for (const auto& dir : dirs) {
        const fs::path candidate = fs::path(dir) / (name + ".conf");
        std::error_code ec;
        if (fs::exists(candidate, ec)) return candidate.string();
    }
    std::ostringstream os;
    os << "preset '" << name << "' not found; searched:";
    for (const auto& dir : dirs) os << " " << dir;
    throw ConfigError(os.str());
}

}  // namespace floq
