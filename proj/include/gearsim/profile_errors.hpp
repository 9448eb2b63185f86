#pragma once

// Manufacturing profile deviations per tooth, bounded by the DIN 3962
// quality grade of the tooth surfaces.

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "gearsim/errors.hpp"
#include "gearsim/geometry.hpp"
#include "gearsim/rng.hpp"

namespace gearsim {

// Profile form tolerance f_f in micrometres for DIN 3962-1 quality grades
// 5..9, module band 2-3.55 mm, reference diameter 50-125 mm. The band
// covers both wheels of every shipped preset.
// TODO: add the remaining module/diameter bands of the standard.
inline constexpr std::array<double, 5> kDinProfileTolerance_um{7.0, 10.0, 14.0, 20.0, 28.0};

inline double din_profile_tolerance_um(int grade) {
    if (grade < 5 || grade > 9) throw ConfigError("unsupported DIN grade " + std::to_string(grade) + " (5..9)");
    return kDinProfileTolerance_um[static_cast<std::size_t>(grade - 5)];
}

// Flank deviation traces, one row per tooth, columns sampled uniformly over
// the tooth's path of contact (0 = engagement, 1 = disengagement).
// Positive values remove material.
struct ProfileErrorField {
    int din_grade = 7;
    std::uint64_t seed = 0;
    double tolerance_um = 0.0;
    Eigen::MatrixXd pinion_um;
    Eigen::MatrixXd gear_um;

    static ProfileErrorField zero(int pinion_teeth, int gear_teeth, Eigen::Index points = 64) {
        ProfileErrorField f;
        f.pinion_um = Eigen::MatrixXd::Zero(pinion_teeth, points);
        f.gear_um = Eigen::MatrixXd::Zero(gear_teeth, points);
        return f;
    }

    const Eigen::MatrixXd& of(Wheel w) const { return w == Wheel::pinion ? pinion_um : gear_um; }
    Eigen::Index points() const { return pinion_um.cols(); }
    double max_abs_um() const {
        return std::max(pinion_um.cwiseAbs().maxCoeff(), gear_um.cwiseAbs().maxCoeff());
    }
    bool is_zero() const { return max_abs_um() == 0.0; }

    std::uint64_t hash() const {
        std::uint64_t h = fnv1a(pinion_um.data(), sizeof(double) * static_cast<std::size_t>(pinion_um.size()));
        return fnv1a(gear_um.data(), sizeof(double) * static_cast<std::size_t>(gear_um.size()), h);
    }
};

// Deviation at path fraction u in [0, 1], linear between samples.
inline double trace_at(const Eigen::Ref<const Eigen::RowVectorXd>& trace, double u) {
    const Eigen::Index n = trace.size();
    if (n == 1) return trace(0);
    const double pos = std::clamp(u, 0.0, 1.0) * static_cast<double>(n - 1);
    const auto i = std::min<Eigen::Index>(static_cast<Eigen::Index>(pos), n - 2);
    const double t = pos - static_cast<double>(i);
    return trace(i) + t * (trace(i + 1) - trace(i));
}

// Shape of the deviation traces: one sine period over the path of contact
// with a phase common to the wheel, per-tooth phase jitter (rad) and a white
// component, both relative to the unit sine.
struct ProfileErrorRecipe {
    double phase_jitter = 0.02;
    double white_fraction = 0.02;
};

namespace detail {

inline Eigen::MatrixXd wheel_errors(int teeth, Eigen::Index points, double tolerance_um, std::uint64_t seed,
                                    const ProfileErrorRecipe& recipe) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double phase = 2.0 * pi * uniform(rng);
    const double peak_fraction = 0.6 + 0.4 * uniform(rng);
    Eigen::MatrixXd e(teeth, points);
    for (int t = 0; t < teeth; ++t) {
        const double jitter = recipe.phase_jitter * normal(rng);
        for (Eigen::Index k = 0; k < points; ++k) {
            const double u = points > 1 ? static_cast<double>(k) / static_cast<double>(points - 1) : 0.0;
            e(t, k) = std::sin(2.0 * pi * u + phase + jitter) + recipe.white_fraction * normal(rng);
        }
    }
    const double peak = e.cwiseAbs().maxCoeff();
    return e * (peak_fraction * tolerance_um / peak);
}

}  // namespace detail

inline ProfileErrorField generate_profile_errors(const GearPair& pair, int din_grade, std::uint64_t seed,
                                                 Eigen::Index points = 64, const ProfileErrorRecipe& recipe = {}) {
    if (points < 2) throw ConfigError("profile error traces need at least 2 points");
    ProfileErrorField f;
    f.din_grade = din_grade;
    f.seed = seed;
    f.tolerance_um = din_profile_tolerance_um(din_grade);
    f.pinion_um = detail::wheel_errors(pair.pinion.tooth_count, points, f.tolerance_um, derive_seed(seed, {1}), recipe);
    f.gear_um = detail::wheel_errors(pair.gear.tooth_count, points, f.tolerance_um, derive_seed(seed, {2}), recipe);
    return f;
}

}  // namespace gearsim
