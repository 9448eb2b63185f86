#pragma once

// Involute spur gear geometry: wheel specifications, the healthy tooth
// profile used by the beam model, contact ratio and line-of-action
// kinematics.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "gearsim/errors.hpp"

namespace gearsim {

inline constexpr double pi = std::numbers::pi;

inline double deg_to_rad(double deg) { return deg * pi / 180.0; }

enum class Wheel { pinion, gear };

inline const char* to_string(Wheel w) { return w == Wheel::pinion ? "pinion" : "gear"; }

// Involute function inv(a) = tan(a) - a.
inline double involute_fn(double a) { return std::tan(a) - a; }

struct Material {
    double young_modulus = 2.06e11;  // Pa
    double poisson_ratio = 0.3;
    double density = 7850.0;  // kg/m^3

    double shear_modulus() const { return young_modulus / (2.0 * (1.0 + poisson_ratio)); }
};

struct GearWheelSpec {
    int tooth_count = 0;
    double module_mm = 0.0;
    double pressure_angle_deg = 20.0;
    double face_width_mm = 0.0;
    double addendum_coeff = 1.0;
    double dedendum_coeff = 1.25;
    Material material;
    double hub_bore_radius_mm = 0.0;
    // Root fillet radius as a multiple of the module (rack tip proportion).
    double fillet_radius_coeff = 0.38;

    double module() const { return module_mm * 1e-3; }
    double pressure_angle() const { return deg_to_rad(pressure_angle_deg); }
    double face_width() const { return face_width_mm * 1e-3; }
    double hub_bore_radius() const { return hub_bore_radius_mm * 1e-3; }
    double pitch_radius() const { return 0.5 * tooth_count * module(); }
    double base_radius() const { return pitch_radius() * std::cos(pressure_angle()); }
    double addendum_radius() const { return pitch_radius() + addendum_coeff * module(); }
    double root_radius() const { return pitch_radius() - dedendum_coeff * module(); }
    double fillet_radius() const { return fillet_radius_coeff * module(); }

    // Half tooth angle (tooth axis to flank) at radius r. Below the base
    // circle the flank continues as a radial line.
    double half_angle_at(double r) const {
        const double rb = base_radius();
        const double base = pi / (2.0 * tooth_count) + involute_fn(pressure_angle());
        if (r <= rb) return base;
        return base - involute_fn(std::acos(rb / r));
    }
};

// Smallest tooth count accepted for a standard (unshifted) wheel: the
// practical undercut limit, 5/6 of the theoretical 2*ha/sin^2(alpha).
inline int minimum_tooth_count(double pressure_angle_rad, double addendum_coeff) {
    const double s = std::sin(pressure_angle_rad);
    return static_cast<int>(std::floor(5.0 / 3.0 * addendum_coeff / (s * s)));
}

inline void validate(const GearWheelSpec& w) {
    if (w.tooth_count < 6) throw GeometryError("tooth_count must be >= 6");
    if (!(w.module_mm > 0.0)) throw GeometryError("module_mm must be > 0");
    if (!(w.face_width_mm > 0.0)) throw GeometryError("face_width_mm must be > 0");
    if (!(w.pressure_angle_deg > 0.0 && w.pressure_angle_deg < 90.0))
        throw GeometryError("pressure_angle_deg must lie in (0, 90)");
    if (!(w.material.poisson_ratio > 0.0 && w.material.poisson_ratio < 0.5))
        throw GeometryError("poisson_ratio must lie in (0, 0.5)");
    if (!(w.material.young_modulus > 0.0) || !(w.material.density > 0.0))
        throw GeometryError("young_modulus and density must be > 0");
    if (!(w.addendum_coeff > 0.0) || !(w.dedendum_coeff > w.addendum_coeff))
        throw GeometryError("dedendum_coeff must exceed addendum_coeff > 0");
    if (w.hub_bore_radius_mm < 0.0 || w.hub_bore_radius() >= w.root_radius())
        throw GeometryError("hub bore must lie inside the root circle");
    if (!(w.base_radius() < w.pitch_radius()))
        throw GeometryError("base radius must be below the pitch radius");
    if (!(w.fillet_radius_coeff > 0.0)) throw GeometryError("fillet_radius_coeff must be > 0");
}

// Tooth section data for the cantilever beam model. x runs along the tooth
// center line from the root (x = 0) to the tip.
struct ToothProfile {
    std::vector<double> x;               // m, strictly increasing
    std::vector<double> half_thickness;  // m
    std::vector<double> area;            // m^2, 2*Y*W
    std::vector<double> second_moment;   // m^4, (2Y)^3*W/12
    std::vector<double> radius;          // polar radius of the flank point, m
    std::size_t involute_start = 0;      // first index lying on the involute
    double axis_origin = 0.0;            // polar radius of x = 0 on the center line, m
    double face_width = 0.0;             // m
    double root_half_angle = 0.0;        // half tooth angle at the root circle, rad

    std::size_t size() const { return x.size(); }
    double tip_radius() const { return radius.back(); }

    // Recompute area and second moment from half-thickness and a per-point
    // width (pitting reduces the width locally).
    void update_sections(const std::vector<double>& width) {
        area.resize(x.size());
        second_moment.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double t = 2.0 * half_thickness[i];
            area[i] = t * width[i];
            second_moment[i] = t * t * t * width[i] / 12.0;
        }
    }
    void update_sections() { update_sections(std::vector<double>(x.size(), face_width)); }

    // Drop every point with polar radius above r_cut, adding the cut point.
    ToothProfile truncated(double r_cut) const;
};

namespace detail {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};
inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline Vec2 rotate_about(Vec2 p, Vec2 center, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    const Vec2 v = p - center;
    return center + Vec2{c * v.x - s * v.y, s * v.x + c * v.y};
}

// Flank point in tooth coordinates: (lateral, along the center line).
inline Vec2 flank_point(const GearWheelSpec& w, double r) {
    const double psi = w.half_angle_at(r);
    return {r * std::sin(psi), r * std::cos(psi)};
}

// Distance from c to the flank curve r in [r_lo, r_hi], with the radius of
// the closest point.
inline std::pair<double, double> distance_to_flank(const GearWheelSpec& w, Vec2 c, double r_lo,
                                                   double r_hi) {
    constexpr int samples = 400;
    double best_r = r_lo;
    double best_d = norm(flank_point(w, r_lo) - c);
    for (int k = 1; k <= samples; ++k) {
        const double r = r_lo + (r_hi - r_lo) * k / samples;
        const double d = norm(flank_point(w, r) - c);
        if (d < best_d) {
            best_d = d;
            best_r = r;
        }
    }
    const double h = (r_hi - r_lo) / samples;
    double a = std::max(r_lo, best_r - h), b = std::min(r_hi, best_r + h);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = norm(flank_point(w, x1) - c), f2 = norm(flank_point(w, x2) - c);
    for (int it = 0; it < 80; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = norm(flank_point(w, x1) - c);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = norm(flank_point(w, x2) - c);
        }
    }
    const double r = 0.5 * (a + b);
    return {norm(flank_point(w, r) - c), r};
}

inline double interp_linear(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - xs.begin()) - 1;
    const double t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    return ys[i] + t * (ys[i + 1] - ys[i]);
}

}  // namespace detail

inline ToothProfile ToothProfile::truncated(double r_cut) const {
    ToothProfile out;
    out.involute_start = involute_start;
    out.axis_origin = axis_origin;
    out.face_width = face_width;
    out.root_half_angle = root_half_angle;
    for (std::size_t i = 0; i < size(); ++i) {
        if (radius[i] > r_cut) {
            if (i == 0) break;
            const double t = (r_cut - radius[i - 1]) / (radius[i] - radius[i - 1]);
            if (t > 1e-9) {
                auto lerp = [t](double a, double b) { return a + t * (b - a); };
                out.x.push_back(lerp(x[i - 1], x[i]));
                out.half_thickness.push_back(lerp(half_thickness[i - 1], half_thickness[i]));
                out.area.push_back(lerp(area[i - 1], area[i]));
                out.second_moment.push_back(lerp(second_moment[i - 1], second_moment[i]));
                out.radius.push_back(r_cut);
            }
            break;
        }
        out.x.push_back(x[i]);
        out.half_thickness.push_back(half_thickness[i]);
        out.area.push_back(area[i]);
        out.second_moment.push_back(second_moment[i]);
        out.radius.push_back(radius[i]);
    }
    return out;
}

// Healthy tooth: circular root fillet tangent to the root circle and the
// flank, then the involute up to the addendum circle.
inline ToothProfile build_tooth_profile(const GearWheelSpec& w, std::size_t n_points = 1000) {
    using detail::Vec2;
    if (w.pressure_angle_deg > 0.0 && w.pressure_angle_deg < 90.0) {
        const int z_min = minimum_tooth_count(w.pressure_angle(), w.addendum_coeff);
        if (w.tooth_count < z_min)
            throw GeometryError("undercut: tooth_count " + std::to_string(w.tooth_count) +
                                " is below the minimum " + std::to_string(z_min) +
                                " for this pressure angle");
    }
    validate(w);
    if (n_points < 50) throw GeometryError("n_points must be >= 50");

    const double rf = w.root_radius();
    const double ra = w.addendum_radius();
    const double rb = w.base_radius();
    const double half_pitch = pi / w.tooth_count;
    double rho = w.fillet_radius();

    // Center of the fillet circle lies at radius rf + rho; its polar angle
    // from the tooth axis is found by bisection on the flank distance.
    auto center = [&](double phi, double rc) { return Vec2{rc * std::sin(phi), rc * std::cos(phi)}; };
    double rc = rf + rho;
    double phi_lo = w.half_angle_at(std::min(rc, ra));
    double phi_hi = half_pitch;
    auto gap = [&](double phi) { return detail::distance_to_flank(w, center(phi, rc), rf, ra).first; };
    double phi_c;
    if (gap(phi_hi) <= rho) {
        // Tooth space too narrow for the nominal radius: largest fitting arc.
        phi_c = phi_hi;
        for (int it = 0; it < 60; ++it) {
            rho = gap(phi_c);
            rc = rf + rho;
        }
    } else {
        for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (phi_lo + phi_hi);
            (gap(mid) < rho ? phi_lo : phi_hi) = mid;
        }
        phi_c = 0.5 * (phi_lo + phi_hi);
    }
    const Vec2 c = center(phi_c, rc);
    const double r_tan = detail::distance_to_flank(w, c, rf, ra).second;
    const Vec2 p_tan = detail::flank_point(w, r_tan);
    const Vec2 root_pt = center(phi_c, rf);

    ToothProfile prof;
    prof.face_width = w.face_width();
    prof.root_half_angle = phi_c;
    prof.axis_origin = root_pt.y;

    std::vector<Vec2> pts;
    std::vector<double> radii;
    const double r_inv = std::max(r_tan, rb);
    const double fillet_len = rho * std::abs(std::atan2(cross(root_pt - c, p_tan - c),
                                                        dot(root_pt - c, p_tan - c)));
    const double radial_len = std::max(0.0, rb - r_tan);
    const double inv_len = ra - r_inv;
    const double total = fillet_len + radial_len + inv_len;
    const std::size_t n_fillet = std::max<std::size_t>(10, static_cast<std::size_t>(n_points * fillet_len / total));
    const std::size_t n_radial =
        radial_len > 0.0 ? std::max<std::size_t>(2, static_cast<std::size_t>(n_points * radial_len / total)) : 0;
    const std::size_t n_inv = n_points - n_fillet - n_radial;

    const double a0 = std::atan2(root_pt.y - c.y, root_pt.x - c.x);
    double a1 = std::atan2(p_tan.y - c.y, p_tan.x - c.x);
    while (a1 - a0 > pi) a1 -= 2.0 * pi;
    while (a1 - a0 < -pi) a1 += 2.0 * pi;
    for (std::size_t k = 0; k < n_fillet; ++k) {
        const double a = a0 + (a1 - a0) * static_cast<double>(k) / static_cast<double>(n_fillet);
        const Vec2 p{c.x + rho * std::cos(a), c.y + rho * std::sin(a)};
        pts.push_back(p);
        radii.push_back(detail::norm(p));
    }
    for (std::size_t k = 0; k < n_radial; ++k) {
        const double r = r_tan + (rb - r_tan) * static_cast<double>(k) / static_cast<double>(n_radial);
        pts.push_back(detail::flank_point(w, r));
        radii.push_back(r);
    }
    const std::size_t first_involute = pts.size();
    for (std::size_t k = 0; k < n_inv; ++k) {
        const double r = r_inv + (ra - r_inv) * static_cast<double>(k) / static_cast<double>(n_inv - 1);
        pts.push_back(detail::flank_point(w, r));
        radii.push_back(r);
    }

    for (std::size_t k = 0; k < pts.size(); ++k) {
        const double xk = pts[k].y - prof.axis_origin;
        if (!prof.x.empty() && xk <= prof.x.back()) continue;
        if (k >= first_involute && prof.involute_start == 0) prof.involute_start = prof.x.size();
        prof.x.push_back(prof.x.empty() ? 0.0 : xk);
        prof.half_thickness.push_back(std::max(0.0, pts[k].x));
        prof.radius.push_back(radii[k]);
    }
    prof.update_sections();
    return prof;
}

struct GearPair {
    GearWheelSpec pinion;
    GearWheelSpec gear;

    double center_distance() const { return pinion.pitch_radius() + gear.pitch_radius(); }
    double ratio() const { return static_cast<double>(gear.tooth_count) / pinion.tooth_count; }
};

struct ContactProperties {
    double contact_ratio = 0.0;
    // Positions along the line of action measured from the pinion base
    // tangency point T1, m.
    double initial_contact_point = 0.0;
    double final_contact_point = 0.0;
    double base_pitch = 0.0;             // m
    double line_of_action_length = 0.0;  // |T1 T2|, m
    double mesh_period_rad = 0.0;        // pinion rotation per mesh cycle
};

// Line of action in a fixed frame: pinion center at the origin, gear center
// at (a, 0). Contact travels from T1 toward T2 (direction dir).
class LineOfAction {
public:
    explicit LineOfAction(const GearPair& pair)
        : rb1_(pair.pinion.base_radius()), rb2_(pair.gear.base_radius()) {
        const double alpha = pair.pinion.pressure_angle();
        const double r1 = pair.pinion.pitch_radius();
        const double r2 = pair.gear.pitch_radius();
        o2_ = {r1 + r2, 0.0};
        dir_ = {std::sin(alpha), std::cos(alpha)};
        const detail::Vec2 p{r1, 0.0};
        t1_ = p - (detail::dot(p - o1_, dir_)) * dir_;
        t2_ = p + (detail::dot(o2_ - p, dir_)) * dir_;
        length_ = detail::norm(t2_ - t1_);
        sigma1_ = detail::cross(t1_ - o1_, dir_) > 0.0 ? 1.0 : -1.0;
        sigma2_ = detail::cross(t2_ - o2_, dir_) > 0.0 ? 1.0 : -1.0;
        // Contact points sit on the +dir side of T1 and the -dir side of T2.
        tau1_ = pick_tangent_branch(o1_, t1_, dir_);
        tau2_ = pick_tangent_branch(o2_, t2_, -1.0 * dir_);
    }

    double length() const { return length_; }
    double base_radius_pinion() const { return rb1_; }
    double base_radius_gear() const { return rb2_; }
    detail::Vec2 point(double s) const { return t1_ + s * dir_; }
    detail::Vec2 t1() const { return t1_; }
    detail::Vec2 t2() const { return t2_; }
    detail::Vec2 direction() const { return dir_; }
    double pinion_radius(double s) const { return std::hypot(rb1_, s); }
    double gear_radius(double s) const { return std::hypot(rb2_, length_ - s); }
    // Position on the line where the pinion (gear) flank reaches radius r.
    double s_at_pinion_radius(double r) const { return std::sqrt(std::max(0.0, r * r - rb1_ * rb1_)); }
    double s_at_gear_radius(double r) const { return length_ - std::sqrt(std::max(0.0, r * r - rb2_ * rb2_)); }

    // Involute phase of a point relative to the pinion (gear) flank family
    // that is in contact on this line. Two points lie on the same flank
    // when their phases agree; rb * (phase difference) is their normal
    // separation.
    double pinion_phase(detail::Vec2 p) const { return phase(p, o1_, rb1_, tau1_, sigma1_); }
    double gear_phase(detail::Vec2 p) const { return phase(p, o2_, rb2_, tau2_, -sigma2_); }

    // Normal gap between the pinion tip corner (radius r_tip) and the gear
    // flank when rigid kinematics have carried the pair to position s past
    // the end of its path of contact.
    double pinion_corner_gap(double s, double r_tip) const {
        const double s_tip = s_at_pinion_radius(r_tip);
        if (s <= s_tip) return 0.0;
        const detail::Vec2 corner = detail::rotate_about(point(s_tip), o1_, sigma1_ * (s - s_tip) / rb1_);
        return rb2_ * std::abs(gear_phase(corner) - gear_phase(point(s)));
    }

    // Same for the gear tip corner before the pair reaches the start of
    // its path of contact.
    double gear_corner_gap(double s, double r_tip) const {
        const double s_tip = s_at_gear_radius(r_tip);
        if (s >= s_tip) return 0.0;
        const detail::Vec2 corner = detail::rotate_about(point(s_tip), o2_, sigma2_ * (s - s_tip) / rb2_);
        return rb1_ * std::abs(pinion_phase(corner) - pinion_phase(point(s)));
    }

    double pinion_rotation_sense() const { return sigma1_; }
    double gear_rotation_sense() const { return sigma2_; }

private:
    static double tangent_angle(detail::Vec2 p, detail::Vec2 o, double rb, double tau) {
        const detail::Vec2 v = p - o;
        const double rho = detail::norm(v);
        return std::atan2(v.y, v.x) + tau * std::acos(std::min(1.0, rb / rho));
    }
    static double pick_tangent_branch(detail::Vec2 o, detail::Vec2 t, detail::Vec2 side) {
        const detail::Vec2 v = t - o;
        const double rb = detail::norm(v);
        const detail::Vec2 probe = t + (0.5 * rb) * side;
        const double target = std::atan2(v.y, v.x);
        const double e_plus = std::abs(std::remainder(tangent_angle(probe, o, rb, 1.0) - target, 2.0 * pi));
        const double e_minus = std::abs(std::remainder(tangent_angle(probe, o, rb, -1.0) - target, 2.0 * pi));
        return e_plus < e_minus ? 1.0 : -1.0;
    }
    static double phase(detail::Vec2 p, detail::Vec2 o, double rb, double tau, double kappa) {
        const double rho = detail::norm(p - o);
        const double ell = std::sqrt(std::max(0.0, rho * rho - rb * rb));
        return tangent_angle(p, o, rb, tau) + kappa * ell / rb;
    }

    double rb1_;
    double rb2_;
    detail::Vec2 o1_{0.0, 0.0};
    detail::Vec2 o2_;
    detail::Vec2 dir_;
    detail::Vec2 t1_;
    detail::Vec2 t2_;
    double length_ = 0.0;
    double sigma1_ = 1.0;
    double sigma2_ = -1.0;
    double tau1_ = 1.0;
    double tau2_ = 1.0;
};

// Contact ratio and path of contact, found by intersecting the line of
// action with both addendum circles.
inline ContactProperties contact_properties(const GearWheelSpec& pinion, const GearWheelSpec& gear) {
    if (!(gear.pressure_angle_deg > 0.0 && gear.pressure_angle_deg < 90.0) ||
        !(pinion.pressure_angle_deg > 0.0 && pinion.pressure_angle_deg < 90.0))
        throw GeometryError("degenerate line of action: pressure angle must lie in (0, 90) degrees");
    if (pinion.module_mm != gear.module_mm || pinion.pressure_angle_deg != gear.pressure_angle_deg)
        throw GeometryError("pinion and gear must share module and pressure angle");
    validate(pinion);
    validate(gear);

    const GearPair pair{pinion, gear};
    const LineOfAction loa(pair);
    using detail::Vec2;
    // Intersection of the line with a circle (center o, radius r): returns
    // the parameter s measured from T1, on the side given by `far`.
    auto intersect = [&](Vec2 o, double r, bool far) {
        const Vec2 f = loa.t1() - o;
        const double b = detail::dot(f, loa.direction());
        const double c = detail::dot(f, f) - r * r;
        const double disc = std::sqrt(b * b - c);
        return far ? -b + disc : -b - disc;
    };
    const double s_end = intersect({0.0, 0.0}, pinion.addendum_radius(), true);
    const double s_start = intersect({pair.center_distance(), 0.0}, gear.addendum_radius(), false);

    ContactProperties cp;
    cp.base_pitch = 2.0 * pi * pinion.base_radius() / pinion.tooth_count;
    cp.line_of_action_length = loa.length();
    cp.initial_contact_point = std::max(0.0, s_start);
    cp.final_contact_point = std::min(loa.length(), s_end);
    cp.contact_ratio = (cp.final_contact_point - cp.initial_contact_point) / cp.base_pitch;
    cp.mesh_period_rad = 2.0 * pi / pinion.tooth_count;
    if (!(cp.contact_ratio > 1.0))
        throw GeometryError("contact ratio " + std::to_string(cp.contact_ratio) +
                            " <= 1: transmission would lose contact");
    return cp;
}

}  // namespace gearsim
