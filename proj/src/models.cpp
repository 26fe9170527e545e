#include "floq/models.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace floq {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

FloquetGenerator wrap_analytic(Matrix gen, double period, int order, const char* who) {
    Superoperator sup{std::move(gen)};
    const double defect = sup.trace_defect();
    if (defect > 1e-12) {
        std::ostringstream os;
        os << who << ": closed-form generator violates trace preservation by " << defect;
        throw NumericsError(os.str());
    }
    return {std::move(sup), 0.0, period, GeneratorMethod::magnus, order};
}

}  // namespace

// ---------------------------------------------------------------------------
// Model 1
// ---------------------------------------------------------------------------

PeriodicLindbladian model1_lindbladian(const Model1Params& p) {
    if (!(p.omega > 0.0)) throw InvalidInput("model1: drive frequency must be positive");
    if (p.gamma < 0.0) throw InvalidInput("model1: negative rate");
    const double period = (p.half_period ? 1.0 : 2.0) * std::numbers::pi / p.omega;
    const Matrix h = p.omega_z * pauli::z();
    std::ostringstream label;
    label << "model1(omega_z=" << p.omega_z << ",gamma=" << p.gamma << ",omega=" << p.omega
          << ")";
    return PeriodicLindbladian(
        [p, h](double t) {
            const Matrix a =
                std::cos(p.omega * t) * pauli::plus() + std::sin(p.omega * t) * pauli::minus();
            return lindblad_superop({h, {{a, p.gamma}}});
        },
        period, label.str());
}

FloquetGenerator model1_analytic(const Model1Params& p, int order) {
    if (order < 0 || order > 1)
        throw InvalidInput("model1_analytic: closed forms available for orders 0 and 1");
    if (!(p.omega > 0.0)) throw InvalidInput("model1_analytic: drive frequency must be positive");
    const double period = (p.half_period ? 1.0 : 2.0) * std::numbers::pi / p.omega;

    // Averaging the channel cos(wt) s+ + sin(wt) s- kills the cross terms and
    // halves the diagonal ones; <A^dag A> = 1/2, so the anticommutator part
    // collapses to -rho.
    Matrix gen = -I_UNIT * Superoperator::commutator_with(p.omega_z * pauli::z()).matrix() +
                 p.gamma * (Superoperator::sandwich(pauli::plus(), pauli::minus()).matrix() +
                            Superoperator::sandwich(pauli::minus(), pauli::plus()).matrix() -
                            Matrix::Identity(4, 4));
    if (order >= 1) {
        gen += (2.0 * I_UNIT * p.gamma * p.omega_z / p.omega) *
               (Superoperator::sandwich(pauli::minus(), pauli::minus()).matrix() -
                Superoperator::sandwich(pauli::plus(), pauli::plus()).matrix());
    }
    return wrap_analytic(std::move(gen), period, order, "model1_analytic");
}

// ---------------------------------------------------------------------------
// Model 2
// ---------------------------------------------------------------------------

namespace {

struct Model2Frame {
    Eigen::Vector3d n, e1, e2;
};

Model2Frame model2_frame(const Model2Params& p) {
    const double ct = std::cos(p.theta), st = std::sin(p.theta);
    const double cp = std::cos(p.phi), sp = std::sin(p.phi);
    Model2Frame f;
    f.n = {ct * sp, st * sp, cp};
    f.e1 = {ct * cp, st * cp, -sp};
    f.e2 = {st, -ct, 0.0};
    return f;
}

Matrix dot_sigma(const Eigen::Vector3d& v) {
    return v.x() * pauli::x() + v.y() * pauli::y() + v.z() * pauli::z();
}

// Cumulative Simpson for sampled 3-vectors (same node rules as the
// superoperator version in floquet.cpp).
std::vector<Eigen::Vector3d> cum_simpson3(const std::vector<Eigen::Vector3d>& f, double h) {
    const std::size_t n = f.size() - 1;
    std::vector<Eigen::Vector3d> out{Eigen::Vector3d::Zero()};
    out.reserve(f.size());
    for (std::size_t k = 1; k <= n; ++k) {
        if (k % 2 == 0)
            out.push_back(out[k - 2] + (h / 3.0) * (f[k - 2] + 4.0 * f[k - 1] + f[k]));
        else if (k + 1 <= n)
            out.push_back(out[k - 1] + (h / 12.0) * (5.0 * f[k - 1] + 8.0 * f[k] - f[k + 1]));
        else
            out.push_back(out[k - 1] + (h / 12.0) * (-f[k - 2] + 8.0 * f[k - 1] + 5.0 * f[k]));
    }
    return out;
}

Eigen::Vector3d simpson3(const std::vector<Eigen::Vector3d>& f, double h) {
    const std::size_t n = f.size() - 1;
    Eigen::Vector3d acc = f[0] + f[n];
    for (std::size_t k = 1; k < n; k += 2) acc += 4.0 * f[k];
    for (std::size_t k = 2; k < n; k += 2) acc += 2.0 * f[k];
    return (h / 3.0) * acc;
}

}  // namespace

Eigen::Vector3d model2_field(const Model2Params& p, double t) {
    const Model2Frame f = model2_frame(p);
    return std::cos(p.beta) * f.n +
           std::sin(p.beta) * (std::sin(p.omega * t) * f.e1 + std::cos(p.omega * t) * f.e2);
}

PeriodicLindbladian model2_lindbladian(const Model2Params& p) {
    if (!(p.omega > 0.0)) throw InvalidInput("model2: rotation frequency must be positive");
    if (p.gamma < 0.0) throw InvalidInput("model2: negative rate");
    const double period = kTwoPi / p.omega;
    std::ostringstream label;
    label << "model2(alpha=" << p.alpha << ",gamma=" << p.gamma << ",omega=" << p.omega
          << ",theta=" << p.theta << ",phi=" << p.phi << ",beta=" << p.beta << ")";
    return PeriodicLindbladian(
        [p](double t) {
            const Matrix h = 0.5 * p.alpha * dot_sigma(model2_field(p, t));
            return lindblad_superop({h, {{pauli::minus(), p.gamma}}});
        },
        period, label.str());
}

Model2Geometry model2_geometry(const Model2Params& p) {
    if (!(p.omega > 0.0))
        throw InvalidInput("model2_geometry: rotation frequency must be positive");
    const double ct = std::cos(p.theta), st = std::sin(p.theta);
    const double cp = std::cos(p.phi), sp = std::sin(p.phi);
    const double cb = std::cos(p.beta), sb = std::sin(p.beta);
    const double w = p.omega;

    Model2Geometry g;
    g.m_vec = {(sb / (2.0 * w)) * (sb * ct * sp + 2.0 * cb * st),
               (sb / (2.0 * w)) * (sb * st * sp - 2.0 * cb * ct),
               (1.0 / (2.0 * w)) * cp * sb * sb};
    g.n_x = -(1.0 / w) * ct * cp * sb;
    g.n_y = -(1.0 / w) * st * cp * sb;
    g.h_avg = 0.5 * p.alpha * cb * (cp * pauli::z() + sp * (ct * pauli::x() + st * pauli::y()));

    // Cross-check every closed form against the defining time integrals:
    //   M      = (1/2T) int dt1 int_0^t1 dt2  B(t2) x B(t1)
    //   N_x,y  = (1/2T) int dt1 int_0^t1 dt2 (B(t1) - B(t2))_x,y
    //   h_avg  = (alpha/2) (1/T) int dt  B(t) . sigma
    const double T = kTwoPi / w;
    const int n = 1024;
    const double h = T / n;
    std::vector<Eigen::Vector3d> b;
    b.reserve(std::size_t(n) + 1);
    for (int k = 0; k <= n; ++k) b.push_back(model2_field(p, h * k));
    const std::vector<Eigen::Vector3d> cum_b = cum_simpson3(b, h);

    std::vector<Eigen::Vector3d> cross_f, bar_f;
    cross_f.reserve(b.size());
    bar_f.reserve(b.size());
    for (std::size_t k = 0; k < b.size(); ++k) {
        cross_f.push_back(cum_b[k].cross(b[k]));
        bar_f.push_back(double(k) * h * b[k] - cum_b[k]);
    }
    const Eigen::Vector3d m_quad = simpson3(cross_f, h) / (2.0 * T);
    const Eigen::Vector3d n_quad = simpson3(bar_f, h) / (2.0 * T);
    const Eigen::Vector3d b_avg = cum_b.back() / T;
    const Matrix h_quad = 0.5 * p.alpha * dot_sigma(b_avg);

    const double mismatch =
        std::max({(m_quad - g.m_vec).cwiseAbs().maxCoeff(), std::abs(n_quad.x() - g.n_x),
                  std::abs(n_quad.y() - g.n_y), max_abs(Matrix(h_quad - g.h_avg))});
    if (mismatch > 1e-7) {
        std::ostringstream os;
        os << "geometry formula inconsistency: closed forms deviate from quadrature by "
           << mismatch;
        throw NumericsError(os.str());
    }
    return g;
}

FloquetGenerator model2_analytic(const Model2Params& p, int order) {
    if (order < 0 || order > 1)
        throw InvalidInput("model2_analytic: closed forms available for orders 0 and 1");
    const Model2Geometry g = model2_geometry(p);
    const double period = kTwoPi / p.omega;

    const Matrix sp_sm = pauli::plus() * pauli::minus();
    Matrix gen = -I_UNIT * Superoperator::commutator_with(g.h_avg).matrix() +
                 p.gamma * (2.0 * Superoperator::sandwich(pauli::minus(), pauli::plus()).matrix() -
                            Superoperator::anticommutator_with(sp_sm).matrix());
    if (order >= 1) {
        gen += (0.5 * I_UNIT * p.alpha * p.alpha) *
               Superoperator::commutator_with(dot_sigma(g.m_vec)).matrix();
        const Complex n_plus(g.n_x, g.n_y);    // N_x + i N_y
        const Complex n_minus(g.n_x, -g.n_y);  // N_x - i N_y
        const Matrix rot_minus =
            2.0 * Superoperator::sandwich(pauli::minus(), pauli::z()).matrix() +
            Superoperator::anticommutator_with(pauli::minus()).matrix();
        const Matrix rot_plus =
            2.0 * Superoperator::sandwich(pauli::z(), pauli::plus()).matrix() +
            Superoperator::anticommutator_with(pauli::plus()).matrix();
        gen += (0.5 * I_UNIT * p.alpha * p.gamma) * (n_plus * rot_minus - n_minus * rot_plus);
    }
    return wrap_analytic(std::move(gen), period, order, "model2_analytic");
}

// ---------------------------------------------------------------------------
// Custom model from a JSON harmonic description
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

Complex parse_entry(const json& j, const std::string& origin) {
    if (j.is_number()) return Complex(j.get<double>(), 0.0);
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return Complex(j[0].get<double>(), j[1].get<double>());
    throw InvalidInput(origin + ": matrix entries must be numbers or [re, im] pairs");
}

Matrix parse_matrix(const json& j, Eigen::Index dim, const std::string& origin) {
    if (!j.is_array() || Eigen::Index(j.size()) != dim)
        throw InvalidInput(origin + ": expected a " + std::to_string(dim) + "-row matrix");
    Matrix m(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r) {
        const json& row = j[std::size_t(r)];
        if (!row.is_array() || Eigen::Index(row.size()) != dim)
            throw InvalidInput(origin + ": expected a " + std::to_string(dim) + "-column row");
        for (Eigen::Index c = 0; c < dim; ++c) m(r, c) = parse_entry(row[std::size_t(c)], origin);
    }
    return m;
}

std::map<int, Matrix> parse_harmonics(const json& j, Eigen::Index dim,
                                      const std::string& origin) {
    if (!j.is_object()) throw InvalidInput(origin + ": harmonics must be a {\"m\": matrix} map");
    std::map<int, Matrix> out;
    for (const auto& [key, val] : j.items()) {
        int m = 0;
        try {
            std::size_t pos = 0;
            m = std::stoi(key, &pos);
            if (pos != key.size()) throw std::invalid_argument(key);
        } catch (const std::exception&) {
            throw InvalidInput(origin + ": harmonic index '" + key + "' is not an integer");
        }
        out.emplace(m, parse_matrix(val, dim, origin + " harmonic " + key));
    }
    return out;
}

Matrix eval_harmonics(const std::map<int, Matrix>& hs, double w, double t, Eigen::Index dim) {
    Matrix acc = Matrix::Zero(dim, dim);
    for (const auto& [m, mat] : hs) acc += std::exp(I_UNIT * (w * m * t)) * mat;
    return acc;
}

}  // namespace

PeriodicLindbladian custom_lindbladian_from_json(const std::string& text,
                                                 const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidInput(origin + ": JSON parse error: " + e.what());
    }
    if (!root.is_object()) throw InvalidInput(origin + ": top level must be an object");
    if (!root.contains("omega") || !root["omega"].is_number())
        throw InvalidInput(origin + ": missing numeric field 'omega'");
    const double w = root["omega"].get<double>();
    if (!(w > 0.0)) throw InvalidInput(origin + ": 'omega' must be positive");
    const Eigen::Index dim = root.value("dim", 2);
    if (dim < 2) throw InvalidInput(origin + ": 'dim' must be at least 2");

    std::map<int, Matrix> h_harm;
    if (root.contains("hamiltonian"))
        h_harm = parse_harmonics(root["hamiltonian"], dim, origin + ": hamiltonian");
    // H(t) is Hermitian iff H_{-m} = H_m^dag for every harmonic.
    for (const auto& [m, mat] : h_harm) {
        const auto it = h_harm.find(-m);
        const Matrix partner = it == h_harm.end() ? Matrix(Matrix::Zero(dim, dim)) : it->second;
        if (max_abs(Matrix(partner - mat.adjoint())) > 1e-12)
            throw InvalidInput(origin + ": hamiltonian harmonics violate H(-m) = H(m)^dag at m = " +
                               std::to_string(m));
    }

    struct JumpHarmonics {
        double rate;
        std::map<int, Matrix> harm;
    };
    std::vector<JumpHarmonics> jumps;
    if (root.contains("jumps")) {
        if (!root["jumps"].is_array()) throw InvalidInput(origin + ": 'jumps' must be an array");
        int idx = 0;
        for (const auto& jj : root["jumps"]) {
            const std::string jorigin = origin + ": jumps[" + std::to_string(idx++) + "]";
            if (!jj.is_object() || !jj.contains("rate") || !jj["rate"].is_number())
                throw InvalidInput(jorigin + ": needs a numeric 'rate'");
            JumpHarmonics jh;
            jh.rate = jj["rate"].get<double>();
            if (jh.rate < 0.0) throw InvalidInput(jorigin + ": negative rate");
            if (jj.contains("harmonics"))
                jh.harm = parse_harmonics(jj["harmonics"], dim, jorigin);
            jumps.push_back(std::move(jh));
        }
    }
    if (h_harm.empty() && jumps.empty())
        throw InvalidInput(origin + ": model defines neither a Hamiltonian nor jump channels");

    const double period = kTwoPi / w;
    return PeriodicLindbladian(
        [w, dim, h_harm, jumps](double t) {
            LindbladTerms terms;
            terms.hamiltonian = eval_harmonics(h_harm, w, t, dim);
            for (const auto& jh : jumps)
                terms.jumps.push_back({eval_harmonics(jh.harm, w, t, dim), jh.rate});
            return lindblad_superop(terms);
        },
        period, origin);
}

PeriodicLindbladian custom_lindbladian_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("custom model: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return custom_lindbladian_from_json(buf.str(), path);
}

}  // namespace floq
