#pragma once

// End-to-end simulation of one run: geometry, profile errors and faults,
// mesh stiffness, system matrices, time integration, and the recorded
// vibration signal with its tachometer.

#include <Eigen/Core>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gearsim/dynamics.hpp"
#include "gearsim/errors.hpp"
#include "gearsim/faults.hpp"
#include "gearsim/geometry.hpp"
#include "gearsim/mesh_stiffness.hpp"
#include "gearsim/profile_errors.hpp"
#include "gearsim/rng.hpp"
#include "gearsim/solver.hpp"

namespace gearsim {

struct DampingParameters {
    double rayleigh_a = 5.0;   // 1/s
    double rayleigh_b = 1e-6;  // s
};

struct InertiaParameters {
    double motor_inertia = 0.01;  // kg m^2
    double load_inertia = 0.02;   // kg m^2
    double casing_mass = 10.0;    // kg
};

struct NumericsConfig {
    int cycle_points = kDefaultCyclePoints;  // per mesh period
    int profile_points = 1000;
    int error_points = 64;
    double newmark_beta = 0.25;
    double newmark_gamma = 0.5;
    double nr_rel_tol = 1e-8;
    int nr_max_iter = 20;
    bool cache_jacobians = true;
    // Start-up transient dropped from the output; negative selects one
    // revolution of the output shaft.
    double transient_discard_s = -1.0;
    // Start from the static equilibrium of the initial mesh position.
    bool static_initial_state = true;
};

struct RunConfig {
    GearPair transmission;
    OperatingConditions conditions;
    int din_grade = 7;
    ProfileErrorRecipe error_recipe;
    FaultSpec fault = Healthy{};
    StructuralParameters structure;
    InertiaParameters inertia;
    DampingParameters damping;
    NumericsConfig numerics;
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> error_seed;  // defaults to a stream of seed
    double sensor_noise_ms2 = 0.0;            // white noise added to the accelerometer
    bool all_axes = false;                     // also record casing x and z

    double output_speed_hz() const {
        return conditions.input_speed_hz * transmission.pinion.tooth_count / transmission.gear.tooth_count;
    }
    double transient_discard() const {
        return numerics.transient_discard_s < 0.0 ? 1.0 / output_speed_hz() : numerics.transient_discard_s;
    }
    std::uint64_t resolved_error_seed() const { return error_seed.value_or(derive_seed(seed, {0x6572})); }

    void validate() const {
        validate_wheel(transmission.pinion);
        validate_wheel(transmission.gear);
        conditions.validate(transmission.pinion.tooth_count);
        din_profile_tolerance_um(din_grade);
        if (numerics.cycle_points < 64) throw ConfigError("cycle_points must be >= 64");
        if (numerics.profile_points < 50) throw ConfigError("profile_points must be >= 50");
        if (numerics.error_points < 2) throw ConfigError("error_points must be >= 2");
        if (!(sensor_noise_ms2 >= 0.0)) throw ConfigError("sensor_noise_ms2 must be >= 0");
        const double keep = conditions.duration_s - transient_discard();
        if (!(keep >= 2.0 / output_speed_hz()))
            throw ConfigError("duration_s must cover the transient window plus two output-shaft revolutions");
    }

private:
    static void validate_wheel(const GearWheelSpec& w) {
        if (w.pressure_angle_deg > 0.0 && w.pressure_angle_deg < 90.0 &&
            w.tooth_count < minimum_tooth_count(w.pressure_angle(), w.addendum_coeff))
            throw GeometryError("undercut: tooth_count " + std::to_string(w.tooth_count) + " below the minimum");
        gearsim::validate(w);
    }
};

struct SimulationResult {
    double sampling_rate_hz = 0.0;
    Eigen::VectorXd time;             // s, from the start of the march
    Eigen::VectorXd accel_y;          // casing y acceleration, m/s^2
    Eigen::VectorXd accel_x;          // filled when all_axes is set
    Eigen::VectorXd accel_z;
    Eigen::VectorXd shaft_angle;      // input shaft angle, rad
    Eigen::VectorXd gear_angle;       // output shaft angle, rad
    std::vector<double> tach_pulses;  // fractional sample positions of input-shaft revolutions
    SolverStats stats;
    std::string label;
    std::uint64_t error_seed = 0;
    std::uint64_t profile_error_hash = 0;
    double hunting_offset = 0.0;  // mesh periods at t = 0
    double mean_mesh_stiffness = 0.0;
    double wall_time_s = 0.0;

    Eigen::Index size() const { return time.size(); }
};

// Fractional positions where angle crosses 2 pi k (angle increasing).
inline std::vector<double> tach_from_angle(const Eigen::VectorXd& angle) {
    std::vector<double> out;
    for (Eigen::Index i = 1; i < angle.size(); ++i) {
        const double k = std::floor(angle(i) / (2.0 * pi));
        const double level = 2.0 * pi * k;
        if (angle(i - 1) < level && angle(i) >= level)
            out.push_back(static_cast<double>(i - 1) + (level - angle(i - 1)) / (angle(i) - angle(i - 1)));
    }
    return out;
}

// Every quantity of a run that does not depend on time marching.
struct AssembledModel {
    ProfileErrorField errors;
    std::shared_ptr<const MeshModel> mesh;
    GmsCurve stiffness_cycle;  // one stiffness period
    GmsCurve hunting;          // hunting period, transmission error
    Eigen::VectorXd stiffness_times_error;
    GeomCoefficients geom;
    LumpedInertia inertia;
    Eigen::VectorXd static_force;
    TimeVaryingSystem system;
    double mesh_frequency = 0.0;
    double hunting_offset = 0.0;
};

inline AssembledModel assemble_model(const RunConfig& cfg) {
    cfg.validate();
    AssembledModel am;
    const GearPair& pair = cfg.transmission;
    const auto& nm = cfg.numerics;
    am.errors = generate_profile_errors(pair, cfg.din_grade, cfg.resolved_error_seed(), nm.error_points,
                                        cfg.error_recipe);
    am.mesh = std::make_shared<const MeshModel>(build_mesh(pair, am.errors, cfg.fault,
                                                           static_cast<std::size_t>(nm.profile_points)));
    am.stiffness_cycle = gms_over_cycle(*am.mesh, nm.cycle_points);
    am.hunting = mesh_over_hunting_period(*am.mesh, nm.cycle_points);
    am.stiffness_times_error = am.hunting.stiffness.cwiseProduct(am.hunting.transmission_error);

    am.geom = mesh_geometry(pair, cfg.structure);
    am.inertia = lumped_inertia(pair, cfg.inertia.motor_inertia, cfg.inertia.load_inertia, cfg.inertia.casing_mass);
    const Eigen::MatrixXd k_const = assemble_k_const(cfg.structure);
    auto& sys = am.system;
    sys.mass = assemble_mass(am.inertia);
    sys.stiffness_cycle = assemble_stiffness_cycle_fast(k_const, am.stiffness_cycle.stiffness, am.geom);
    sys.damping = assemble_damping(sys.mass, mean_stiffness(sys.stiffness_cycle), cfg.damping.rayleigh_a,
                                   cfg.damping.rayleigh_b);
    am.static_force = assemble_static_forces(pair, am.inertia, cfg.conditions);

    am.mesh_frequency = cfg.conditions.mesh_frequency(pair.pinion.tooth_count);
    std::mt19937_64 rng(derive_seed(cfg.seed, {0x68756e74}));
    const double hunting_periods = static_cast<double>(am.hunting.mesh_periods);
    am.hunting_offset = std::uniform_real_distribution<double>(0.0, hunting_periods)(rng);
    sys.cycle_duration = am.stiffness_cycle.mesh_periods / am.mesh_frequency;
    sys.cycle_offset = am.hunting_offset / am.stiffness_cycle.mesh_periods;

    // Error excitation interpolated on the hunting table.
    const Eigen::VectorXd g = am.geom.expected_projection();
    const Eigen::VectorXd ke = am.stiffness_times_error;
    const Eigen::VectorXd f0 = am.static_force;
    const double fm = am.mesh_frequency, tau0 = am.hunting_offset;
    const int ppp = am.hunting.points_per_period;
    const bool no_error = ke.cwiseAbs().maxCoeff() == 0.0;
    sys.force = [g, ke, f0, fm, tau0, ppp, hunting_periods, no_error](double t, Eigen::VectorXd& f) {
        f = f0;
        if (no_error) return;
        double tau = tau0 + fm * t;
        tau -= std::floor(tau / hunting_periods) * hunting_periods;
        const double pos = tau * ppp;
        auto i = static_cast<Eigen::Index>(pos);
        const double w = pos - static_cast<double>(i);
        if (i >= ke.size()) i = 0;
        const Eigen::Index j = (i + 1) % ke.size();
        f += g * (ke(i) + w * (ke(j) - ke(i)));
    };
    return am;
}

inline SolverSettings solver_settings(const RunConfig& cfg) {
    SolverSettings s;
    s.newmark_beta = cfg.numerics.newmark_beta;
    s.newmark_gamma = cfg.numerics.newmark_gamma;
    s.nr_rel_tol = cfg.numerics.nr_rel_tol;
    s.nr_max_iter = cfg.numerics.nr_max_iter;
    s.cache_jacobians = cfg.numerics.cache_jacobians;
    s.dt = 1.0 / cfg.conditions.sampling_rate_hz;
    return s;
}

inline SimulationResult simulate(const RunConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    AssembledModel am = assemble_model(cfg);
    SolverSettings s = solver_settings(cfg);
    const auto& sys = am.system;
    if (cfg.numerics.static_initial_state) {
        Eigen::VectorXd f0(sys.dofs());
        sys.force(0.0, f0);
        s.initial_displacement = static_deflection(sys.stiffness_at(0.0), f0);
    }

    const double fs = cfg.conditions.sampling_rate_hz;
    const long steps = static_cast<long>(std::llround(cfg.conditions.duration_s * fs));
    const long first = static_cast<long>(std::ceil(cfg.transient_discard() * fs));
    const Eigen::Index n = steps - first + 1;
    if (n < 2) throw ConfigError("nothing left after the transient window");

    SimulationResult res;
    res.sampling_rate_hz = fs;
    res.time.resize(n);
    res.accel_y.resize(n);
    if (cfg.all_axes) {
        res.accel_x.resize(n);
        res.accel_z.resize(n);
    }
    res.shaft_angle.resize(n);
    res.gear_angle.resize(n);
    const double w_in = 2.0 * pi * cfg.conditions.input_speed_hz;
    const double w_out = 2.0 * pi * cfg.output_speed_hz();
    res.stats = integrate_states(sys, s, steps, [&](long i, const NewmarkState& st) {
        if (i < first) return;
        const Eigen::Index k = i - first;
        // Time from the step count keeps the sample grid exact.
        const double t = static_cast<double>(i) / fs;
        res.time(k) = t;
        res.accel_y(k) = st.a(kCasingY);
        if (cfg.all_axes) {
            res.accel_x(k) = st.a(kCasingX);
            res.accel_z(k) = st.a(kCasingZ);
        }
        res.shaft_angle(k) = w_in * t + st.u(kPinionTheta);
        res.gear_angle(k) = w_out * t + st.u(kGearTheta);
    });
    if (cfg.sensor_noise_ms2 > 0.0) {
        std::mt19937_64 rng(derive_seed(cfg.seed, {0x73656e73}));
        std::normal_distribution<double> normal(0.0, cfg.sensor_noise_ms2);
        for (Eigen::Index k = 0; k < n; ++k) res.accel_y(k) += normal(rng);
        if (cfg.all_axes)
            for (Eigen::Index k = 0; k < n; ++k) {
                res.accel_x(k) += normal(rng);
                res.accel_z(k) += normal(rng);
            }
    }
    res.tach_pulses = tach_from_angle(res.shaft_angle);
    res.label = fault_label(cfg.fault);
    res.error_seed = cfg.resolved_error_seed();
    res.profile_error_hash = am.errors.hash();
    res.hunting_offset = am.hunting_offset;
    res.mean_mesh_stiffness = am.stiffness_cycle.mean_stiffness();
    res.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

}  // namespace gearsim
