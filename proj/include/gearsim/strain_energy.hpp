#pragma once

// Potential strain energies of a cantilever tooth under a unit contact force.
// Every *_naive function evaluates the defining integral directly for each
// grid point (O(N^2)); the fast variants combine cumulative integrals (O(N)).
// Both use the trapezoid rule on the profile grid.

#include <Eigen/Core>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include "gearsim/errors.hpp"
#include "gearsim/geometry.hpp"

namespace gearsim {

// Shear correction factor for a rectangular section.
inline constexpr double kShearCorrection = 1.2;

struct LoadDecomposition {
    double axial_force = 0.0;  // F_a, along the tooth axis, N
    double shear_force = 0.0;  // F_s, normal to the tooth axis, N
    std::size_t application_point_index = 0;
};

// Unit force applied on the flank at radius r: the angle between the force
// and the normal to the tooth axis is acos(rb/r) - psi(r).
inline double load_angle(const GearWheelSpec& w, double r) {
    const double rb = w.base_radius();
    return std::acos(std::min(1.0, rb / r)) - w.half_angle_at(r);
}

inline LoadDecomposition decompose_unit_load(const GearWheelSpec& w, double r, std::size_t index = 0) {
    const double a = load_angle(w, r);
    return {std::sin(a), std::cos(a), index};
}

namespace detail {

inline void check_sections(const std::vector<double>& s, std::size_t upto, const char* what) {
    for (std::size_t j = 0; j <= upto && j < s.size(); ++j)
        if (!(s[j] > 0.0))
            throw GeometryError(std::string("singular section: zero ") + what + " at profile index " +
                                std::to_string(j));
}

inline void check_load(const ToothProfile& p, const LoadDecomposition& load) {
    if (p.size() == 0) throw GeometryError("empty tooth profile");
    if (load.application_point_index >= p.size())
        throw GeometryError("load application point outside the profile");
}

}  // namespace detail

// U_b(X_i) for every grid point i, with the arm F_a*Y_i taken at X_i.
inline Eigen::VectorXd bending_energy_naive(const ToothProfile& p, double young_modulus,
                                            const LoadDecomposition& load) {
    detail::check_load(p, load);
    detail::check_sections(p.second_moment, load.application_point_index, "second moment");
    const std::size_t n = p.size();
    const double fs = load.shear_force, fa = load.axial_force;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t i = 1; i < n; ++i) {
        const double xi = p.x[i], yi = p.half_thickness[i];
        auto f = [&](std::size_t j) {
            const double m = fs * p.x[j] - fs * xi + fa * yi;
            return m * m / (2.0 * young_modulus * p.second_moment[j]);
        };
        double acc = 0.0;
        for (std::size_t j = 1; j <= i; ++j) acc += 0.5 * (p.x[j] - p.x[j - 1]) * (f(j - 1) + f(j));
        u(static_cast<Eigen::Index>(i)) = acc;
    }
    return u;
}

// Cumulative trapezoid integrals of x^k / (2 E I) and 1 / (2 E A), 1 / (2 G A)
// from the root. Evaluation at an arbitrary x interpolates the integrand
// linearly inside the containing segment.
class SectionIntegrals {
public:
    SectionIntegrals() = default;
    SectionIntegrals(const ToothProfile& p, const Material& m) : x_(p.x) {
        const std::size_t n = p.size();
        const double e = m.young_modulus, g = m.shear_modulus();
        for (auto* v : {&f0_, &f1_, &f2_, &fa_, &fs_, &c0_, &c1_, &c2_, &ca_, &cs_}) v->assign(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const double ei = 2.0 * e * p.second_moment[j];
            f0_[j] = 1.0 / ei;
            f1_[j] = p.x[j] / ei;
            f2_[j] = p.x[j] * p.x[j] / ei;
            fa_[j] = 1.0 / (2.0 * e * p.area[j]);
            fs_[j] = kShearCorrection / (2.0 * g * p.area[j]);
        }
        for (std::size_t j = 1; j < n; ++j) {
            const double h = 0.5 * (x_[j] - x_[j - 1]);
            c0_[j] = c0_[j - 1] + h * (f0_[j - 1] + f0_[j]);
            c1_[j] = c1_[j - 1] + h * (f1_[j - 1] + f1_[j]);
            c2_[j] = c2_[j - 1] + h * (f2_[j - 1] + f2_[j]);
            ca_[j] = ca_[j - 1] + h * (fa_[j - 1] + fa_[j]);
            cs_[j] = cs_[j - 1] + h * (fs_[j - 1] + fs_[j]);
        }
    }

    std::size_t size() const { return x_.size(); }
    double i0(std::size_t i) const { return c0_[i]; }
    double i1(std::size_t i) const { return c1_[i]; }
    double i2(std::size_t i) const { return c2_[i]; }
    double axial(std::size_t i) const { return ca_[i]; }
    double shear(std::size_t i) const { return cs_[i]; }

    struct Values {
        double i0, i1, i2, axial, shear;
    };

    // Integrals from the root to x (clamped to the profile).
    Values at(double x) const {
        if (x <= x_.front()) return {0.0, 0.0, 0.0, 0.0, 0.0};
        if (x >= x_.back()) {
            const std::size_t k = x_.size() - 1;
            return {c0_[k], c1_[k], c2_[k], ca_[k], cs_[k]};
        }
        const auto it = std::upper_bound(x_.begin(), x_.end(), x);
        const std::size_t j = static_cast<std::size_t>(it - x_.begin()) - 1;
        const double h = x - x_[j];
        const double t = h / (x_[j + 1] - x_[j]);
        auto partial = [&](const std::vector<double>& c, const std::vector<double>& f) {
            const double fx = f[j] + t * (f[j + 1] - f[j]);
            return c[j] + 0.5 * h * (f[j] + fx);
        };
        return {partial(c0_, f0_), partial(c1_, f1_), partial(c2_, f2_), partial(ca_, fa_), partial(cs_, fs_)};
    }

private:
    std::vector<double> x_;
    std::vector<double> f0_, f1_, f2_, fa_, fs_;
    std::vector<double> c0_, c1_, c2_, ca_, cs_;
};

// Bending energy from the three cumulative integrals:
// F_s^2 I2 + 2 c F_s I1 + c^2 I0 with c = -F_s X + F_a Y.
inline double bending_energy_from(double i0, double i1, double i2, double x, double y, double fs, double fa) {
    const double c = -fs * x + fa * y;
    return fs * fs * i2 + 2.0 * c * fs * i1 + c * c * i0;
}

inline Eigen::VectorXd bending_energy_fast(const ToothProfile& p, double young_modulus,
                                           const LoadDecomposition& load) {
    detail::check_load(p, load);
    detail::check_sections(p.second_moment, load.application_point_index, "second moment");
    const std::size_t n = p.size();
    Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    double c0 = 0.0, c1 = 0.0, c2 = 0.0;
    double g_prev = 1.0 / (2.0 * young_modulus * p.second_moment[0]);
    for (std::size_t i = 1; i < n; ++i) {
        const double g = 1.0 / (2.0 * young_modulus * p.second_moment[i]);
        const double x0 = p.x[i - 1], x1 = p.x[i];
        const double h = 0.5 * (x1 - x0);
        c0 += h * (g_prev + g);
        c1 += h * (x0 * g_prev + x1 * g);
        c2 += h * (x0 * x0 * g_prev + x1 * x1 * g);
        g_prev = g;
        u(static_cast<Eigen::Index>(i)) = bending_energy_from(c0, c1, c2, p.x[i], p.half_thickness[i],
                                                              load.shear_force, load.axial_force);
    }
    return u;
}

// (U_a, U_s) for every grid point by direct per-point integration.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> axial_shear_energies_naive(const ToothProfile& p,
                                                                              const Material& m,
                                                                              const LoadDecomposition& load) {
    detail::check_load(p, load);
    detail::check_sections(p.area, load.application_point_index, "area");
    const std::size_t n = p.size();
    const double fa = load.axial_force, fs = load.shear_force;
    const double e = m.young_modulus, g = m.shear_modulus();
    Eigen::VectorXd ua = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    Eigen::VectorXd us = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t i = 1; i < n; ++i) {
        double a = 0.0, s = 0.0;
        for (std::size_t j = 1; j <= i; ++j) {
            const double h = 0.5 * (p.x[j] - p.x[j - 1]);
            a += h * (fa * fa / (2.0 * e * p.area[j - 1]) + fa * fa / (2.0 * e * p.area[j]));
            s += h * (kShearCorrection * fs * fs / (2.0 * g * p.area[j - 1]) +
                      kShearCorrection * fs * fs / (2.0 * g * p.area[j]));
        }
        ua(static_cast<Eigen::Index>(i)) = a;
        us(static_cast<Eigen::Index>(i)) = s;
    }
    return {ua, us};
}

inline std::pair<Eigen::VectorXd, Eigen::VectorXd> axial_shear_energies(const ToothProfile& p, const Material& m,
                                                                        const LoadDecomposition& load) {
    detail::check_load(p, load);
    detail::check_sections(p.area, load.application_point_index, "area");
    const std::size_t n = p.size();
    const double e = m.young_modulus, g = m.shear_modulus();
    const double wa = load.axial_force * load.axial_force / (2.0 * e);
    const double ws = kShearCorrection * load.shear_force * load.shear_force / (2.0 * g);
    Eigen::VectorXd ua = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    Eigen::VectorXd us = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    double c = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        c += 0.5 * (p.x[i] - p.x[i - 1]) * (1.0 / p.area[i - 1] + 1.0 / p.area[i]);
        ua(static_cast<Eigen::Index>(i)) = wa * c;
        us(static_cast<Eigen::Index>(i)) = ws * c;
    }
    return {ua, us};
}

}  // namespace gearsim
