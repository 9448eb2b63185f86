#pragma once

// Time-varying gear mesh stiffness and static transmission error from the
// potential energy method: bending, shear and axial tooth compliance, Hertz
// contact and fillet-foundation compliance, combined in series per pair and
// summed over the pairs in contact.

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <vector>

#include "gearsim/errors.hpp"
#include "gearsim/faults.hpp"
#include "gearsim/geometry.hpp"
#include "gearsim/profile_errors.hpp"
#include "gearsim/strain_energy.hpp"

namespace gearsim {

inline constexpr int kDefaultCyclePoints = 512;
// Largest tip-corner gap accepted when a fault interrupts contact, m.
inline constexpr double kMaxContactGap = 1e-3;

inline double series_stiffness(std::initializer_list<double> compliances) {
    return 1.0 / std::accumulate(compliances.begin(), compliances.end(), 0.0);
}

// Hertz contact compliance of two flat-faced teeth over width w. Reduces to
// 4(1 - nu^2) / (pi E W) for identical materials.
inline double hertz_compliance(const Material& a, const Material& b, double width) {
    if (!(width > 0.0)) throw GeometryError("contact width must be > 0");
    const double ca = (1.0 - a.poisson_ratio * a.poisson_ratio) / a.young_modulus;
    const double cb = (1.0 - b.poisson_ratio * b.poisson_ratio) / b.young_modulus;
    return 2.0 * (ca + cb) / (pi * width);
}

// Polynomial fit X* = A/theta^2 + B h^2 + C h/theta + D/theta + E h + F of the
// fillet-foundation coefficients, h = r_f / r_int.
struct FoundationFit {
    double a, b, c, d, e, f;
    double operator()(double h, double theta) const {
        return a / (theta * theta) + b * h * h + c * h / theta + d / theta + e * h + f;
    }
};
inline constexpr FoundationFit kFoundationL{-5.574e-5, -1.9986e-3, -2.3015e-4, 4.7702e-3, 0.0271, 6.8045};
inline constexpr FoundationFit kFoundationM{60.111e-5, 28.100e-3, -83.431e-4, -9.9256e-3, 0.1624, 0.9086};
inline constexpr FoundationFit kFoundationP{-50.952e-5, 185.50e-3, 0.0538e-4, 53.300e-3, 0.2895, 0.9236};
inline constexpr FoundationFit kFoundationQ{-6.2042e-5, 9.0889e-3, -4.0964e-4, 7.8297e-3, -0.1472, 0.6904};

// u_f: distance from the root circle to where the load line crosses the
// tooth axis; s_f: root chord of the tooth.
inline double foundation_compliance(double young_modulus, double width, double load_angle, double u_f,
                                    double s_f, double h, double theta_f) {
    const double l = kFoundationL(h, theta_f), m = kFoundationM(h, theta_f);
    const double p = kFoundationP(h, theta_f), q = kFoundationQ(h, theta_f);
    const double ratio = u_f / s_f;
    const double c = std::cos(load_angle), t = std::tan(load_angle);
    return c * c / (young_modulus * width) * (l * ratio * ratio + m * ratio + p * (1.0 + q * t * t));
}

struct ToothCompliance {
    double bending = 0.0;
    double shear = 0.0;
    double axial = 0.0;
    double foundation = 0.0;
    double total() const { return bending + shear + axial + foundation; }
};

// One tooth ready for compliance queries at any flank radius.
class ToothModel {
public:
    ToothModel(const GearWheelSpec& spec, std::shared_ptr<const ToothProfile> profile)
        : spec_(spec), profile_(std::move(profile)), integrals_(*profile_, spec.material) {
        if (!(spec.hub_bore_radius_mm > 0.0))
            throw GeometryError("foundation compliance needs hub_bore_radius_mm > 0");
        detail::check_sections(profile_->second_moment, profile_->size() - 1, "second moment");
        detail::check_sections(profile_->area, profile_->size() - 1, "area");
    }

    const GearWheelSpec& spec() const { return spec_; }
    const ToothProfile& profile() const { return *profile_; }
    double tip_radius() const { return profile_->tip_radius(); }

    // Compliance for a unit normal force on the flank at radius r.
    ToothCompliance compliance_at(double r) const {
        const double a = load_angle(spec_, r);
        const double fs = std::cos(a), fa = std::sin(a);
        const auto fp = detail::flank_point(spec_, r);
        const double x = fp.y - profile_->axis_origin;
        const double y = fp.x;
        const auto v = integrals_.at(x);
        ToothCompliance c;
        c.bending = 2.0 * bending_energy_from(v.i0, v.i1, v.i2, x, y, fs, fa);
        c.axial = 2.0 * fa * fa * v.axial;
        c.shear = 2.0 * fs * fs * v.shear;
        const double rf = spec_.root_radius();
        const double theta_f = profile_->root_half_angle;
        const double u_f = x + profile_->axis_origin - rf - y * std::tan(a);
        c.foundation = foundation_compliance(spec_.material.young_modulus, spec_.face_width(), a, u_f,
                                             2.0 * rf * theta_f, rf / spec_.hub_bore_radius(), theta_f);
        return c;
    }

private:
    GearWheelSpec spec_;
    std::shared_ptr<const ToothProfile> profile_;
    SectionIntegrals integrals_;
};

struct PairCompliance {
    ToothCompliance pinion;
    ToothCompliance gear;
    double hertz = 0.0;
    double total() const { return pinion.total() + gear.total() + hertz; }
    double stiffness() const { return 1.0 / total(); }
};

// Compliance of a pair in contact at position s on the line of action;
// nullopt when either flank does not reach the contact radius (broken away).
inline std::optional<PairCompliance> pair_compliance(const ToothModel& p, const ToothModel& g,
                                                     const LineOfAction& loa, double s,
                                                     double width_factor = 1.0) {
    const double r1 = loa.pinion_radius(s), r2 = loa.gear_radius(s);
    constexpr double slack = 1e-12;
    if (r1 > p.tip_radius() + slack || r2 > g.tip_radius() + slack) return std::nullopt;
    PairCompliance c;
    c.pinion = p.compliance_at(r1);
    c.gear = g.compliance_at(r2);
    const double w = std::min(p.spec().face_width(), g.spec().face_width()) * width_factor;
    c.hertz = hertz_compliance(p.spec().material, g.spec().material, w);
    return c;
}

inline std::optional<double> pair_stiffness(const ToothModel& p, const ToothModel& g, const LineOfAction& loa,
                                            double s, double width_factor = 1.0) {
    auto c = pair_compliance(p, g, loa, s, width_factor);
    if (!c) return std::nullopt;
    return c->stiffness();
}

struct PairContact {
    long pair = 0;  // pair counter n; pinion tooth n mod z_p, gear tooth n mod z_g
    int pinion_tooth = 0;
    int gear_tooth = 0;
    double s = 0.0;  // position on the line of action, m
    double stiffness = 0.0;
    double deviation = 0.0;  // combined flank deviation, m
    double gap = 0.0;        // tip-corner gap when out of its path, m
    bool in_contact = false;
};

struct MeshState {
    double stiffness = 0.0;          // N/m
    double transmission_error = 0.0;  // stiffness-weighted static transmission error, m
    bool contact_interrupted = false;
    std::array<PairContact, 6> pairs{};
    int pair_count = 0;
};

inline long floor_mod(long a, long n) { return ((a % n) + n) % n; }

// Mesh of a specific tooth geometry set. The mesh position tau counts mesh
// periods: pinion rotation = tau * 2 pi / z_p. Pair n engages at tau = n.
class MeshModel {
public:
    explicit MeshModel(ToothGeometrySet set) : set_(std::move(set)), pair_{set_.pinion.spec, set_.gear.spec},
                                               loa_(pair_) {
        const auto& cp = set_.contact;
        s0_ = cp.initial_contact_point;
        s1_ = cp.final_contact_point;
        pb_ = cp.base_pitch;
        build(set_.pinion, pinion_, nominal_pinion_);
        build(set_.gear, gear_, nominal_gear_);
        stiffness_period_ = 1;
        for (Wheel w : {Wheel::pinion, Wheel::gear})
            if (alters_stiffness(w)) stiffness_period_ = std::lcm(stiffness_period_, set_.of(w).spec.tooth_count);
    }

    const ToothGeometrySet& geometry() const { return set_; }
    const GearPair& pair() const { return pair_; }
    const LineOfAction& line_of_action() const { return loa_; }
    // Mesh periods after which the stiffness repeats.
    int stiffness_period() const { return stiffness_period_; }
    // Mesh periods after which every tooth combination repeats.
    int hunting_period() const { return std::lcm(pair_.pinion.tooth_count, pair_.gear.tooth_count); }

    MeshState evaluate(double tau) const {
        MeshState st;
        const long zp = pair_.pinion.tooth_count, zg = pair_.gear.tooth_count;
        const double span = (s1_ - s0_) / pb_;
        const long n_lo = static_cast<long>(std::floor(tau - span)) - 1;
        const long n_hi = static_cast<long>(std::floor(tau)) + 1;
        double k_sum = 0.0, ke_sum = 0.0;
        int best_gap = -1;
        for (long n = n_lo; n <= n_hi && st.pair_count < static_cast<int>(st.pairs.size()); ++n) {
            const double s = s0_ + (tau - static_cast<double>(n)) * pb_;
            if (s < s0_ - pb_ || s > s1_ + pb_) continue;
            PairContact pc;
            pc.pair = n;
            pc.pinion_tooth = static_cast<int>(floor_mod(n, zp));
            pc.gear_tooth = static_cast<int>(floor_mod(n, zg));
            pc.s = s;
            const auto& tp = set_.pinion.teeth[static_cast<std::size_t>(pc.pinion_tooth)];
            const auto& tg = set_.gear.teeth[static_cast<std::size_t>(pc.gear_tooth)];
            const double s_lo = std::max(s0_, loa_.s_at_gear_radius(tg.tip_radius));
            const double s_hi = std::min(s1_, loa_.s_at_pinion_radius(tp.tip_radius));
            const double sc = std::clamp(s, s_lo, std::max(s_lo, s_hi));
            pc.in_contact = s >= s_lo && s <= s_hi;
            if (!pc.in_contact)
                pc.gap = s < s_lo ? loa_.gear_corner_gap(s, tg.tip_radius) : loa_.pinion_corner_gap(s, tp.tip_radius);
            pc.stiffness = stiffness_at(pc.pinion_tooth, pc.gear_tooth, sc);
            const double u = (sc - s0_) / (s1_ - s0_);
            pc.deviation = 1e-6 * (trace_at(tp.deviation_um, u) + trace_at(tg.deviation_um, u));
            if (pc.in_contact) {
                k_sum += pc.stiffness;
                ke_sum += pc.stiffness * pc.deviation;
            } else if (best_gap < 0 || pc.gap < st.pairs[static_cast<std::size_t>(best_gap)].gap) {
                best_gap = st.pair_count;
            }
            st.pairs[static_cast<std::size_t>(st.pair_count++)] = pc;
        }
        if (k_sum > 0.0) {
            st.stiffness = k_sum;
            st.transmission_error = ke_sum / k_sum;
            return st;
        }
        // No pair on its path: the mesh closes the smallest tip-corner gap.
        if (best_gap < 0) throw ConfigError("no tooth pair near contact (unsupported regime)");
        const auto& pc = st.pairs[static_cast<std::size_t>(best_gap)];
        if (pc.gap > kMaxContactGap)
            throw ConfigError("contact lost with a tip gap of " + std::to_string(pc.gap * 1e3) +
                              " mm (unsupported regime)");
        st.contact_interrupted = true;
        st.stiffness = corner_stiffness(pc);
        st.transmission_error = pc.gap + pc.deviation;
        return st;
    }

    // Pair stiffness at s, honouring pitted contact width on either tooth.
    double stiffness_at(int pinion_tooth, int gear_tooth, double s) const {
        const auto& tp = set_.pinion.teeth[static_cast<std::size_t>(pinion_tooth)];
        const auto& tg = set_.gear.teeth[static_cast<std::size_t>(gear_tooth)];
        const double r1 = loa_.pinion_radius(s), r2 = loa_.gear_radius(s);
        const double wf = std::min(tp.contact_width_factor(r1), tg.contact_width_factor(r2));
        const auto& mp = *pinion_[static_cast<std::size_t>(pinion_tooth)];
        const auto& mg = *gear_[static_cast<std::size_t>(gear_tooth)];
        auto c = pair_compliance(mp, mg, loa_, s, wf);
        if (!c) {
            // Clamped positions may sit a rounding step above a cut tip.
            PairCompliance pc;
            pc.pinion = mp.compliance_at(std::min(r1, mp.tip_radius()));
            pc.gear = mg.compliance_at(std::min(r2, mg.tip_radius()));
            pc.hertz = hertz_compliance(mp.spec().material, mg.spec().material,
                                        std::min(mp.spec().face_width(), mg.spec().face_width()) * wf);
            return pc.stiffness();
        }
        return c->stiffness();
    }

    // Stiffness of a pair closing a tip-corner gap: the nominal (uncut)
    // flank pair at the same position, so a cut tip never stiffens the mesh.
    double corner_stiffness(const PairContact& pc) const {
        const double s = std::clamp(pc.s, s0_, s1_);
        const auto& tp = set_.pinion.teeth[static_cast<std::size_t>(pc.pinion_tooth)];
        const auto& tg = set_.gear.teeth[static_cast<std::size_t>(pc.gear_tooth)];
        const bool cut_p = tp.tip_radius < pair_.pinion.addendum_radius();
        const bool cut_g = tg.tip_radius < pair_.gear.addendum_radius();
        const auto& mp = cut_p ? *nominal_pinion_ : *pinion_[static_cast<std::size_t>(pc.pinion_tooth)];
        const auto& mg = cut_g ? *nominal_gear_ : *gear_[static_cast<std::size_t>(pc.gear_tooth)];
        const double wf = std::min(tp.contact_width_factor(loa_.pinion_radius(s)),
                                   tg.contact_width_factor(loa_.gear_radius(s)));
        if (auto c = pair_compliance(mp, mg, loa_, s, wf)) return c->stiffness();
        return pc.stiffness;
    }

private:
    bool alters_stiffness(Wheel w) const {
        const auto& teeth = set_.of(w).teeth;
        for (const auto& t : teeth)
            if (t.profile != teeth.front().profile || t.pit_width_factor != 1.0 ||
                t.tip_radius != teeth.front().tip_radius)
                return true;
        return false;
    }

    void build(const WheelTeeth& wt, std::vector<std::shared_ptr<const ToothModel>>& out,
               std::shared_ptr<const ToothModel>& nominal) {
        std::map<const ToothProfile*, std::shared_ptr<const ToothModel>> cache;
        for (const auto& t : wt.teeth) {
            auto& m = cache[t.profile.get()];
            if (!m) m = std::make_shared<const ToothModel>(wt.spec, t.profile);
            out.push_back(m);
            if (!nominal && !t.faulted) nominal = m;
        }
        if (!nominal) nominal = std::make_shared<const ToothModel>(
                          wt.spec, std::make_shared<const ToothProfile>(build_tooth_profile(wt.spec)));
    }

    ToothGeometrySet set_;
    GearPair pair_;
    LineOfAction loa_;
    std::vector<std::shared_ptr<const ToothModel>> pinion_;
    std::vector<std::shared_ptr<const ToothModel>> gear_;
    std::shared_ptr<const ToothModel> nominal_pinion_;
    std::shared_ptr<const ToothModel> nominal_gear_;
    double s0_ = 0.0, s1_ = 0.0, pb_ = 0.0;
    int stiffness_period_ = 1;
};

// Mesh quantities sampled uniformly over a whole number of mesh periods,
// starting at tau = 0.
struct GmsCurve {
    int mesh_periods = 1;
    int points_per_period = kDefaultCyclePoints;
    Eigen::VectorXd position;            // tau, mesh periods
    Eigen::VectorXd stiffness;           // N/m
    Eigen::VectorXd transmission_error;  // m
    Eigen::MatrixXd pair_stiffness;      // per pair slot, zero when out of contact
    std::vector<std::uint8_t> interrupted;

    Eigen::Index size() const { return position.size(); }
    double mean_stiffness() const { return stiffness.mean(); }
};

inline GmsCurve sample_mesh(const MeshModel& mesh, int periods, int n_cyc) {
    if (n_cyc < 64) throw ConfigError("n_cyc must be >= 64");
    if (periods < 1) throw ConfigError("cycle must span at least one mesh period");
    GmsCurve c;
    c.mesh_periods = periods;
    c.points_per_period = n_cyc;
    const Eigen::Index n = static_cast<Eigen::Index>(periods) * n_cyc;
    c.position.resize(n);
    c.stiffness.resize(n);
    c.transmission_error.resize(n);
    c.pair_stiffness = Eigen::MatrixXd::Zero(n, 3);
    c.interrupted.assign(static_cast<std::size_t>(n), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double tau = static_cast<double>(i) / n_cyc;
        const MeshState st = mesh.evaluate(tau);
        c.position(i) = tau;
        c.stiffness(i) = st.stiffness;
        c.transmission_error(i) = st.transmission_error;
        c.interrupted[static_cast<std::size_t>(i)] = st.contact_interrupted ? 1 : 0;
        // Slot by pair parity so a pair keeps its column while engaged.
        for (int k = 0; k < st.pair_count; ++k) {
            const auto& pc = st.pairs[static_cast<std::size_t>(k)];
            if (pc.in_contact) c.pair_stiffness(i, floor_mod(pc.pair, 3)) = pc.stiffness;
        }
    }
    return c;
}

// Stiffness over one stiffness cycle: one mesh period when healthy, one
// revolution of the faulted wheel otherwise.
inline GmsCurve gms_over_cycle(const MeshModel& mesh, int n_cyc = kDefaultCyclePoints) {
    return sample_mesh(mesh, mesh.stiffness_period(), n_cyc);
}

// Stiffness and transmission error over the hunting period, after which
// every pinion/gear tooth combination has met.
inline GmsCurve mesh_over_hunting_period(const MeshModel& mesh, int n_cyc = kDefaultCyclePoints) {
    return sample_mesh(mesh, mesh.hunting_period(), n_cyc);
}

inline MeshModel build_mesh(const GearPair& pair, const ProfileErrorField& errors, const FaultSpec& fault,
                            std::size_t profile_points = 1000) {
    const ToothProfile pp = build_tooth_profile(pair.pinion, profile_points);
    const ToothProfile pg = build_tooth_profile(pair.gear, profile_points);
    return MeshModel(apply_fault(pair, pp, pg, errors, fault));
}

inline GmsCurve gms_over_cycle(const GearPair& pair, const ProfileErrorField& errors, const FaultSpec& fault,
                               int n_cyc = kDefaultCyclePoints) {
    return gms_over_cycle(build_mesh(pair, errors, fault), n_cyc);
}

inline void write_gms_csv(std::ostream& os, const GmsCurve& c) {
    os.precision(17);
    os << "position_mesh_periods,stiffness_n_per_m,transmission_error_m,pair0_n_per_m,pair1_n_per_m,pair2_n_per_m\n";
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        os << c.position(i) << ',' << c.stiffness(i) << ',' << c.transmission_error(i);
        for (Eigen::Index k = 0; k < c.pair_stiffness.cols(); ++k) os << ',' << c.pair_stiffness(i, k);
        os << '\n';
    }
}

}  // namespace gearsim
