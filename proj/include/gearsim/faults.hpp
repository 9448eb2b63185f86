#pragma once

// Tooth faults and the per-tooth geometry they produce.

#include <memory>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "gearsim/errors.hpp"
#include "gearsim/geometry.hpp"
#include "gearsim/profile_errors.hpp"

namespace gearsim {

struct Healthy {};

struct ToothBreakage {
    double tip_loss_fraction = 0.0;  // of the active flank, [0, 1)
    int tooth_index = 0;
    Wheel wheel = Wheel::gear;
};

// Pit modelled as a loss of effective face width over a radial band of
// height 2*pit_depth centred at flank_position (fraction of active flank).
struct Pitting {
    double pit_depth_mm = 0.5;
    double flank_position = 0.5;
    double axial_extent_fraction = 0.3;
    std::vector<int> tooth_indices;
    Wheel wheel = Wheel::gear;
};

// Worn involute: a half-sine material loss added along the flank.
struct InvoluteDestruction {
    double deviation_amplitude_um = 10.0;
    std::vector<int> tooth_indices;
    Wheel wheel = Wheel::gear;
};

using FaultSpec = std::variant<Healthy, ToothBreakage, Pitting, InvoluteDestruction>;

inline bool is_healthy(const FaultSpec& f) { return std::holds_alternative<Healthy>(f); }

// Wheel carrying the fault; gear for the healthy case.
inline Wheel faulted_wheel(const FaultSpec& f) {
    return std::visit(
        [](const auto& v) {
            if constexpr (std::is_same_v<std::decay_t<decltype(v)>, Healthy>)
                return Wheel::gear;
            else
                return v.wheel;
        },
        f);
}

// Health-state label used to group signals ("healthy", "tooth_breakage_0.25", ...).
inline std::string fault_label(const FaultSpec& f) {
    std::ostringstream os;
    std::visit(
        [&os](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Healthy>) os << "healthy";
            if constexpr (std::is_same_v<T, ToothBreakage>) {
                if (v.tip_loss_fraction == 0.0)
                    os << "healthy";
                else
                    os << "tooth_breakage_" << v.tip_loss_fraction;
            }
            if constexpr (std::is_same_v<T, Pitting>) os << "pitting_" << v.pit_depth_mm;
            if constexpr (std::is_same_v<T, InvoluteDestruction>)
                os << "involute_destruction_" << v.deviation_amplitude_um;
        },
        f);
    return os.str();
}

struct ToothState {
    std::shared_ptr<const ToothProfile> profile;
    Eigen::RowVectorXd deviation_um;  // flank deviation trace over the path of contact
    double tip_radius = 0.0;          // addendum or broken-tip radius, m
    // Radial band with reduced contact width (pitting); empty when lo >= hi.
    double pit_radius_lo = 0.0;
    double pit_radius_hi = 0.0;
    double pit_width_factor = 1.0;
    bool faulted = false;

    double contact_width_factor(double r) const {
        return (r >= pit_radius_lo && r <= pit_radius_hi) ? pit_width_factor : 1.0;
    }
};

struct WheelTeeth {
    GearWheelSpec spec;
    std::vector<ToothState> teeth;
};

struct ToothGeometrySet {
    WheelTeeth pinion;
    WheelTeeth gear;
    ContactProperties contact;

    const WheelTeeth& of(Wheel w) const { return w == Wheel::pinion ? pinion : gear; }
    WheelTeeth& of(Wheel w) { return w == Wheel::pinion ? pinion : gear; }
};

// Radius range of the flank that takes part in contact: from the lowest
// contact point to the addendum circle.
inline std::pair<double, double> active_flank(const GearPair& pair, const ContactProperties& cp, Wheel w) {
    const LineOfAction loa(pair);
    if (w == Wheel::pinion)
        return {loa.pinion_radius(cp.initial_contact_point), pair.pinion.addendum_radius()};
    return {loa.gear_radius(cp.final_contact_point), pair.gear.addendum_radius()};
}

namespace detail {

inline void check_tooth(const GearPair& pair, Wheel w, int index) {
    const int n = (w == Wheel::pinion ? pair.pinion : pair.gear).tooth_count;
    if (index < 0 || index >= n)
        throw ConfigError("fault tooth index " + std::to_string(index) + " outside " + to_string(w) +
                          " (" + std::to_string(n) + " teeth)");
}

}  // namespace detail

inline ToothGeometrySet apply_fault(const GearPair& pair, const ToothProfile& pinion_profile,
                                    const ToothProfile& gear_profile, const ProfileErrorField& errors,
                                    const FaultSpec& fault) {
    ToothGeometrySet set;
    set.contact = contact_properties(pair.pinion, pair.gear);
    if (errors.pinion_um.rows() != pair.pinion.tooth_count || errors.gear_um.rows() != pair.gear.tooth_count)
        throw ConfigError("profile error field does not match the tooth counts");

    auto fill = [&](WheelTeeth& wt, const GearWheelSpec& spec, const ToothProfile& prof, const Eigen::MatrixXd& e) {
        wt.spec = spec;
        auto shared = std::make_shared<const ToothProfile>(prof);
        wt.teeth.resize(static_cast<std::size_t>(spec.tooth_count));
        for (int t = 0; t < spec.tooth_count; ++t) {
            auto& ts = wt.teeth[static_cast<std::size_t>(t)];
            ts.profile = shared;
            ts.deviation_um = e.row(t);
            ts.tip_radius = spec.addendum_radius();
        }
    };
    fill(set.pinion, pair.pinion, pinion_profile, errors.pinion_um);
    fill(set.gear, pair.gear, gear_profile, errors.gear_um);

    std::visit(
        [&](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, ToothBreakage>) {
                detail::check_tooth(pair, f.wheel, f.tooth_index);
                if (!(f.tip_loss_fraction >= 0.0 && f.tip_loss_fraction < 1.0))
                    throw ConfigError("tip_loss_fraction must lie in [0, 1): no active flank would remain");
                if (f.tip_loss_fraction == 0.0) return;
                const auto [r_lo, r_hi] = active_flank(pair, set.contact, f.wheel);
                const double r_cut = r_lo + (1.0 - f.tip_loss_fraction) * (r_hi - r_lo);
                auto& ts = set.of(f.wheel).teeth[static_cast<std::size_t>(f.tooth_index)];
                auto cut = ts.profile->truncated(r_cut);
                if (cut.size() < 2 || !(r_cut > r_lo))
                    throw ConfigError("tip loss leaves no active flank");
                ts.profile = std::make_shared<const ToothProfile>(std::move(cut));
                ts.tip_radius = r_cut;
                ts.faulted = true;
            } else if constexpr (std::is_same_v<T, Pitting>) {
                if (!(f.flank_position >= 0.0 && f.flank_position <= 1.0))
                    throw ConfigError("pitting flank_position must lie in [0, 1]");
                if (!(f.axial_extent_fraction > 0.0 && f.axial_extent_fraction <= 1.0))
                    throw ConfigError("pitting axial_extent_fraction must lie in (0, 1]");
                if (!(f.pit_depth_mm > 0.0)) throw ConfigError("pit_depth_mm must be > 0");
                const auto [r_lo, r_hi] = active_flank(pair, set.contact, f.wheel);
                const double rc = r_lo + f.flank_position * (r_hi - r_lo);
                const double half = f.pit_depth_mm * 1e-3;
                // A pit through the whole width would leave a zero section.
                const double factor = std::max(1e-3, 1.0 - f.axial_extent_fraction);
                for (int idx : f.tooth_indices) {
                    detail::check_tooth(pair, f.wheel, idx);
                    auto& ts = set.of(f.wheel).teeth[static_cast<std::size_t>(idx)];
                    ToothProfile p = *ts.profile;
                    std::vector<double> width(p.size(), p.face_width);
                    for (std::size_t i = 0; i < p.size(); ++i)
                        if (std::abs(p.radius[i] - rc) <= half) width[i] *= factor;
                    p.update_sections(width);
                    ts.profile = std::make_shared<const ToothProfile>(std::move(p));
                    ts.pit_radius_lo = rc - half;
                    ts.pit_radius_hi = rc + half;
                    ts.pit_width_factor = factor;
                    ts.faulted = true;
                }
            } else if constexpr (std::is_same_v<T, InvoluteDestruction>) {
                for (int idx : f.tooth_indices) {
                    detail::check_tooth(pair, f.wheel, idx);
                    auto& ts = set.of(f.wheel).teeth[static_cast<std::size_t>(idx)];
                    const Eigen::Index n = ts.deviation_um.size();
                    for (Eigen::Index k = 0; k < n; ++k) {
                        const double u = n > 1 ? static_cast<double>(k) / static_cast<double>(n - 1) : 0.5;
                        ts.deviation_um(k) += f.deviation_amplitude_um * std::sin(pi * u);
                    }
                    ts.faulted = true;
                }
            }
        },
        fault);
    return set;
}

}  // namespace gearsim
