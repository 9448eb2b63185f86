#pragma once

// 13-DOF lumped-parameter model of a spur gear stage on a flexible casing:
// mass, damping, cycle-dependent stiffness and external forces.
//
// Rotations are vibratory angles about the nominal rigid motion, positive
// in the driving sense of each shaft. The mesh deflection along the line of
// action at face-width position z is
//   delta(z) = (g0 + z g1)^T u,
// with g0 the rigid projection and g1 the shaft wind-up gradient across the
// face width.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/LU>
#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "gearsim/errors.hpp"
#include "gearsim/geometry.hpp"

namespace gearsim {

enum Dof : int {
    kPinionX = 0,
    kPinionY,
    kPinionZ,
    kPinionTheta,
    kGearX,
    kGearY,
    kGearZ,
    kGearTheta,
    kMotorTheta,
    kLoadTheta,
    kCasingX,
    kCasingY,
    kCasingZ,
    kDofCount
};

struct DofLayout {
    static constexpr int size = kDofCount;
    static constexpr std::array<std::string_view, kDofCount> names{
        "x_p", "y_p", "z_p", "theta_p", "x_g", "y_g", "z_g", "theta_g", "theta_m", "theta_l", "x_c", "y_c", "z_c"};

    static int index(std::string_view name) {
        for (int i = 0; i < size; ++i)
            if (names[static_cast<std::size_t>(i)] == name) return i;
        throw ConfigError("unknown degree of freedom '" + std::string(name) + "'");
    }
    static bool is_accelerometer(int i) { return i == kCasingX || i == kCasingY || i == kCasingZ; }
};

// Shaft, bearing and casing constants. Not taken from measurements; the
// defaults are plausible magnitudes for a small test rig.
struct StructuralParameters {
    double bearing_radial_stiffness = 1e8;    // N/m, x and y, gear body to casing
    double bearing_axial_stiffness = 5e7;     // N/m, z
    double casing_support_stiffness = 5e7;    // N/m, casing to ground, each axis
    double input_shaft_stiffness = 1e4;       // N m/rad, motor to pinion
    double output_shaft_stiffness = 1e4;      // N m/rad, gear to load
    double input_shaft_length = 0.15;         // m
    double output_shaft_length = 0.15;        // m
    // The accelerometer bracket carries the input-shaft bearings; the
    // output-shaft bearings sit on a separate grounded pedestal unless set.
    bool output_bearings_on_casing = false;
};

struct LumpedInertia {
    double pinion_mass = 0.0;     // kg
    double pinion_inertia = 0.0;  // kg m^2
    double gear_mass = 0.0;
    double gear_inertia = 0.0;
    double motor_inertia = 0.01;
    double load_inertia = 0.02;
    double casing_mass = 10.0;
};

// Solid disks of pitch radius with a hub bore, one face width thick.
inline LumpedInertia lumped_inertia(const GearPair& pair, double motor_inertia = 0.01, double load_inertia = 0.02,
                                    double casing_mass = 10.0) {
    auto disk = [](const GearWheelSpec& w, double& m, double& j) {
        const double ro = w.pitch_radius(), ri = w.hub_bore_radius();
        m = w.material.density * pi * (ro * ro - ri * ri) * w.face_width();
        j = 0.5 * m * (ro * ro + ri * ri);
    };
    LumpedInertia li;
    disk(pair.pinion, li.pinion_mass, li.pinion_inertia);
    disk(pair.gear, li.gear_mass, li.gear_inertia);
    li.motor_inertia = motor_inertia;
    li.load_inertia = load_inertia;
    li.casing_mass = casing_mass;
    return li;
}

inline Eigen::MatrixXd assemble_mass(const LumpedInertia& li) {
    for (double v : {li.pinion_mass, li.pinion_inertia, li.gear_mass, li.gear_inertia, li.motor_inertia,
                     li.load_inertia, li.casing_mass})
        if (!(v > 0.0)) throw ConfigError("masses and inertias must be > 0");
    Eigen::VectorXd d(kDofCount);
    d << li.pinion_mass, li.pinion_mass, li.pinion_mass, li.pinion_inertia, li.gear_mass, li.gear_mass,
        li.gear_mass, li.gear_inertia, li.motor_inertia, li.load_inertia, li.casing_mass, li.casing_mass,
        li.casing_mass;
    return d.asDiagonal();
}

inline Eigen::MatrixXd assemble_mass(const GearPair& pair) { return assemble_mass(lumped_inertia(pair)); }

// Rayleigh damping C = a M + b K_mean.
inline Eigen::MatrixXd assemble_damping(const Eigen::MatrixXd& mass, const Eigen::MatrixXd& mean_stiffness,
                                        double rayleigh_a, double rayleigh_b) {
    if (rayleigh_a < 0.0 || rayleigh_b < 0.0) throw ConfigError("Rayleigh coefficients must be >= 0");
    return rayleigh_a * mass + rayleigh_b * mean_stiffness;
}

namespace detail {

inline void add_spring(Eigen::MatrixXd& k, int i, int j, double s) {
    k(i, i) += s;
    if (j < 0) return;
    k(j, j) += s;
    k(i, j) -= s;
    k(j, i) -= s;
}

}  // namespace detail

// Bearings, casing supports and shafts. The rigid rotation of the drive
// train is left free.
inline Eigen::MatrixXd assemble_k_const(const StructuralParameters& sp) {
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(kDofCount, kDofCount);
    using detail::add_spring;
    for (int body : {kPinionX, kGearX}) {
        const bool on_casing = body == kPinionX || sp.output_bearings_on_casing;
        add_spring(k, body + 0, on_casing ? kCasingX : -1, sp.bearing_radial_stiffness);
        add_spring(k, body + 1, on_casing ? kCasingY : -1, sp.bearing_radial_stiffness);
        add_spring(k, body + 2, on_casing ? kCasingZ : -1, sp.bearing_axial_stiffness);
    }
    for (int c : {kCasingX, kCasingY, kCasingZ}) add_spring(k, c, -1, sp.casing_support_stiffness);
    add_spring(k, kMotorTheta, kPinionTheta, sp.input_shaft_stiffness);
    add_spring(k, kGearTheta, kLoadTheta, sp.output_shaft_stiffness);
    return k;
}

// Geometric coefficients of the mesh spring: geom(z) = g(z) g(z)^T with
// g(z) = g0 + z g1, split into z-independent, linear and quadratic parts.
struct GeomCoefficients {
    Eigen::VectorXd g0;
    Eigen::VectorXd g1;
    Eigen::MatrixXd z_indep;      // g0 g0^T
    Eigen::MatrixXd z_linear;     // g0 g1^T + g1 g0^T
    Eigen::MatrixXd z_quadratic;  // g1 g1^T
    double face_width = 0.0;      // m
    double mean_z = 0.0;          // E[z] over [-W/2, W/2]
    double mean_z2 = 0.0;         // E[z^2]

    Eigen::MatrixXd at(double z) const { return z_indep + z * z_linear + z * z * z_quadratic; }
    Eigen::VectorXd projection_at(double z) const { return g0 + z * g1; }
    // E[geom(z)] over the face width.
    Eigen::MatrixXd expected() const { return z_indep + mean_z * z_linear + mean_z2 * z_quadratic; }
    Eigen::VectorXd expected_projection() const { return g0 + mean_z * g1; }
};

inline GeomCoefficients mesh_geometry(const GearPair& pair, const StructuralParameters& sp) {
    if (!(sp.input_shaft_length > 0.0) || !(sp.output_shaft_length > 0.0))
        throw ConfigError("shaft lengths must be > 0");
    const double alpha = pair.pinion.pressure_angle();
    const double rb1 = pair.pinion.base_radius(), rb2 = pair.gear.base_radius();
    GeomCoefficients g;
    g.g0 = Eigen::VectorXd::Zero(kDofCount);
    g.g1 = Eigen::VectorXd::Zero(kDofCount);
    g.g0(kPinionX) = std::sin(alpha);
    g.g0(kPinionY) = std::cos(alpha);
    g.g0(kGearX) = -std::sin(alpha);
    g.g0(kGearY) = -std::cos(alpha);
    g.g0(kPinionTheta) = rb1;
    g.g0(kGearTheta) = -rb2;
    // Twist rate of each shaft carried across the face width.
    g.g1(kPinionTheta) = rb1 / sp.input_shaft_length;
    g.g1(kMotorTheta) = -rb1 / sp.input_shaft_length;
    g.g1(kGearTheta) = -rb2 / sp.output_shaft_length;
    g.g1(kLoadTheta) = rb2 / sp.output_shaft_length;
    g.z_indep = g.g0 * g.g0.transpose();
    g.z_linear = g.g0 * g.g1.transpose() + g.g1 * g.g0.transpose();
    g.z_quadratic = g.g1 * g.g1.transpose();
    const double w = std::min(pair.pinion.face_width(), pair.gear.face_width());
    g.face_width = w;
    g.mean_z = 0.0;
    g.mean_z2 = w * w / 12.0;
    return g;
}

// Midpoint z-grid over [-W/2, W/2].
inline std::vector<double> face_width_grid(double width, int m) {
    if (m < 1) throw ConfigError("face-width grid needs at least one point");
    std::vector<double> z(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) z[static_cast<std::size_t>(j)] = -0.5 * width + (j + 0.5) * width / m;
    return z;
}

// K(cyc_i) = K_const + (1/M) sum_j geom(z_j) gms(cyc_i), by direct z summation.
inline std::vector<Eigen::MatrixXd> assemble_stiffness_cycle_naive(const Eigen::MatrixXd& k_const,
                                                                   const Eigen::VectorXd& gms,
                                                                   const GeomCoefficients& geom, int m) {
    const auto z = face_width_grid(geom.face_width, m);
    std::vector<Eigen::MatrixXd> out;
    out.reserve(static_cast<std::size_t>(gms.size()));
    const Eigen::Index n = k_const.rows();
    Eigen::MatrixXd acc(n, n);
    Eigen::VectorXd g(n);
    for (Eigen::Index i = 0; i < gms.size(); ++i) {
        acc.setZero();
        for (double zj : z) {
            g = geom.g0 + zj * geom.g1;
            acc.noalias() += g * g.transpose();
        }
        out.push_back(k_const + acc * (gms(i) / m));
    }
    return out;
}

// K(cyc) = K_const + E[geom] gms(cyc), with the expectation taken analytically.
inline std::vector<Eigen::MatrixXd> assemble_stiffness_cycle_fast(const Eigen::MatrixXd& k_const,
                                                                  const Eigen::VectorXd& gms,
                                                                  const GeomCoefficients& geom) {
    const Eigen::MatrixXd e = geom.expected();
    std::vector<Eigen::MatrixXd> out;
    out.reserve(static_cast<std::size_t>(gms.size()));
    for (Eigen::Index i = 0; i < gms.size(); ++i) out.push_back(k_const + e * gms(i));
    return out;
}

inline Eigen::MatrixXd mean_stiffness(const std::vector<Eigen::MatrixXd>& k_cycle) {
    if (k_cycle.empty()) throw ConfigError("empty stiffness cycle");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k_cycle.front().rows(), k_cycle.front().cols());
    for (const auto& k : k_cycle) m += k;
    return m / static_cast<double>(k_cycle.size());
}

struct OperatingConditions {
    double input_speed_hz = 40.0;
    double load_torque_nm = 10.0;
    double sampling_rate_hz = 25000.0;
    double duration_s = 60.0;
    bool gravity = true;

    double mesh_frequency(int pinion_teeth) const { return input_speed_hz * pinion_teeth; }

    void validate(int pinion_teeth) const {
        if (!(input_speed_hz > 0.0)) throw ConfigError("input_speed_hz must be > 0");
        if (!(load_torque_nm > 0.0)) throw ConfigError("load_torque_nm must be > 0");
        if (!(sampling_rate_hz > 0.0)) throw ConfigError("sampling_rate_hz must be > 0");
        if (!(duration_s > 0.0)) throw ConfigError("duration_s must be > 0");
        // Anti-aliasing guard: at least 20 samples per mesh period.
        if (sampling_rate_hz < 20.0 * mesh_frequency(pinion_teeth))
            throw ConfigError("sampling_rate_hz must be >= 20 x mesh frequency (" +
                              std::to_string(20.0 * mesh_frequency(pinion_teeth)) + " Hz)");
    }
};

inline constexpr double kGravity = 9.80665;

// Cycle-independent loads: motor torque balancing the output load through
// the gear ratio, load torque, and weight.
inline Eigen::VectorXd assemble_static_forces(const GearPair& pair, const LumpedInertia& li,
                                              const OperatingConditions& oc) {
    if (!(oc.input_speed_hz >= 0.0)) throw ConfigError("input_speed_hz must be >= 0");
    Eigen::VectorXd f = Eigen::VectorXd::Zero(kDofCount);
    f(kMotorTheta) = oc.load_torque_nm * pair.pinion.tooth_count / pair.gear.tooth_count;
    f(kLoadTheta) = -oc.load_torque_nm;
    if (oc.gravity) {
        f(kPinionY) = -li.pinion_mass * kGravity;
        f(kGearY) = -li.gear_mass * kGravity;
        f(kCasingY) = -li.casing_mass * kGravity;
    }
    return f;
}

// F_ex(cyc_i) = F_static + E[g] k(cyc_i) e(cyc_i): the flank deviation e
// acts as a displacement source inside the mesh spring.
inline Eigen::MatrixXd assemble_external_forces(const Eigen::VectorXd& static_force, const GeomCoefficients& geom,
                                                const Eigen::VectorXd& stiffness_times_error) {
    Eigen::MatrixXd f(static_force.size(), stiffness_times_error.size());
    const Eigen::VectorXd g = geom.expected_projection();
    for (Eigen::Index i = 0; i < stiffness_times_error.size(); ++i)
        f.col(i) = static_force + g * stiffness_times_error(i);
    return f;
}

// Same by direct z summation.
inline Eigen::MatrixXd assemble_external_forces_naive(const Eigen::VectorXd& static_force,
                                                      const GeomCoefficients& geom,
                                                      const Eigen::VectorXd& stiffness_times_error, int m) {
    const auto z = face_width_grid(geom.face_width, m);
    Eigen::MatrixXd f(static_force.size(), stiffness_times_error.size());
    for (Eigen::Index i = 0; i < stiffness_times_error.size(); ++i) {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_force.size());
        for (double zj : z) acc += geom.projection_at(zj) * stiffness_times_error(i);
        f.col(i) = static_force + acc / m;
    }
    return f;
}

// Static deflection with the load shaft held, which removes the rigid
// rotation of the drive train.
inline Eigen::VectorXd static_deflection(const Eigen::MatrixXd& k, const Eigen::VectorXd& f, int held = kLoadTheta) {
    const Eigen::Index n = k.rows();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < n; ++i)
        if (i != held) keep.push_back(i);
    const Eigen::Index r = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXd kr(r, r);
    Eigen::VectorXd fr(r);
    for (Eigen::Index a = 0; a < r; ++a) {
        fr(a) = f(keep[static_cast<std::size_t>(a)]);
        for (Eigen::Index b = 0; b < r; ++b) kr(a, b) = k(keep[static_cast<std::size_t>(a)], keep[static_cast<std::size_t>(b)]);
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(kr);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        throw NumericalError("static stiffness is singular");
    const Eigen::VectorXd ur = ldlt.solve(fr);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    for (Eigen::Index a = 0; a < r; ++a) u(keep[static_cast<std::size_t>(a)]) = ur(a);
    return u;
}

}  // namespace gearsim
