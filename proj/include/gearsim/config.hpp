#pragma once

// JSON form of a run configuration and the shipped presets. Parsing is
// strict: every object rejects keys it does not know, and values must have
// the expected JSON type.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gearsim/errors.hpp"
#include "gearsim/faults.hpp"
#include "gearsim/model.hpp"

namespace gearsim {

using json = nlohmann::json;

inline constexpr int kConfigSchemaVersion = 1;

namespace detail {

class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + " must be a JSON object");
    }
    ~ObjectReader() = default;

    bool has(const std::string& key) const { return j_.contains(key); }

    void get(const std::string& key, double& out) {
        if (const json* v = take(key)) {
            if (!v->is_number()) throw ConfigError(where(key) + " must be a number");
            out = v->get<double>();
        }
    }
    void get(const std::string& key, int& out) {
        if (const json* v = take(key)) {
            if (!v->is_number_integer()) throw ConfigError(where(key) + " must be an integer");
            const auto x = v->get<std::int64_t>();
            if (x < INT32_MIN || x > INT32_MAX) throw ConfigError(where(key) + " out of range");
            out = static_cast<int>(x);
        }
    }
    void get(const std::string& key, std::uint64_t& out) {
        if (const json* v = take(key)) {
            if (!v->is_number_unsigned()) throw ConfigError(where(key) + " must be a non-negative integer");
            out = v->get<std::uint64_t>();
        }
    }
    void get(const std::string& key, bool& out) {
        if (const json* v = take(key)) {
            if (!v->is_boolean()) throw ConfigError(where(key) + " must be true or false");
            out = v->get<bool>();
        }
    }
    void get(const std::string& key, std::string& out) {
        if (const json* v = take(key)) {
            if (!v->is_string()) throw ConfigError(where(key) + " must be a string");
            out = v->get<std::string>();
        }
    }
    void get(const std::string& key, std::vector<int>& out) {
        if (const json* v = take(key)) {
            if (!v->is_array()) throw ConfigError(where(key) + " must be an array of integers");
            out.clear();
            for (const auto& e : *v) {
                if (!e.is_number_integer()) throw ConfigError(where(key) + " must be an array of integers");
                out.push_back(e.get<int>());
            }
        }
    }
    template <class F>
    void object(const std::string& key, F&& f) {
        if (const json* v = take(key)) {
            ObjectReader sub(*v, path_.empty() ? key : path_ + "." + key);
            f(sub);
            sub.finish();
        }
    }
    const json* take(const std::string& key) {
        const auto it = j_.find(key);
        if (it == j_.end()) return nullptr;
        seen_.insert(key);
        return &*it;
    }
    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k)) throw ConfigError("unknown key " + where(k));
    }
    std::string where(const std::string& key = "") const {
        const std::string p = key.empty() ? path_ : (path_.empty() ? key : path_ + "." + key);
        return p.empty() ? "<root>" : "'" + p + "'";
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline Wheel parse_wheel(const std::string& s) {
    if (s == "pinion") return Wheel::pinion;
    if (s == "gear") return Wheel::gear;
    throw ConfigError("wheel must be 'pinion' or 'gear', got '" + s + "'");
}

inline json wheel_to_json(const GearWheelSpec& w) {
    return {{"tooth_count", w.tooth_count},
            {"module_mm", w.module_mm},
            {"pressure_angle_deg", w.pressure_angle_deg},
            {"face_width_mm", w.face_width_mm},
            {"addendum_coeff", w.addendum_coeff},
            {"dedendum_coeff", w.dedendum_coeff},
            {"hub_bore_radius_mm", w.hub_bore_radius_mm},
            {"fillet_radius_coeff", w.fillet_radius_coeff},
            {"material",
             {{"young_modulus_pa", w.material.young_modulus},
              {"poisson_ratio", w.material.poisson_ratio},
              {"density_kg_m3", w.material.density}}}};
}

inline void wheel_from_json(ObjectReader& r, GearWheelSpec& w) {
    r.get("tooth_count", w.tooth_count);
    r.get("module_mm", w.module_mm);
    r.get("pressure_angle_deg", w.pressure_angle_deg);
    r.get("face_width_mm", w.face_width_mm);
    r.get("addendum_coeff", w.addendum_coeff);
    r.get("dedendum_coeff", w.dedendum_coeff);
    r.get("hub_bore_radius_mm", w.hub_bore_radius_mm);
    r.get("fillet_radius_coeff", w.fillet_radius_coeff);
    r.object("material", [&](ObjectReader& m) {
        m.get("young_modulus_pa", w.material.young_modulus);
        m.get("poisson_ratio", w.material.poisson_ratio);
        m.get("density_kg_m3", w.material.density);
    });
}

}  // namespace detail

inline json fault_to_json(const FaultSpec& f) {
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Healthy>) return {{"type", "healthy"}};
            if constexpr (std::is_same_v<T, ToothBreakage>)
                return {{"type", "tooth_breakage"},
                        {"tip_loss_fraction", v.tip_loss_fraction},
                        {"tooth_index", v.tooth_index},
                        {"wheel", to_string(v.wheel)}};
            if constexpr (std::is_same_v<T, Pitting>)
                return {{"type", "pitting"},
                        {"pit_depth_mm", v.pit_depth_mm},
                        {"flank_position", v.flank_position},
                        {"axial_extent_fraction", v.axial_extent_fraction},
                        {"tooth_indices", v.tooth_indices},
                        {"wheel", to_string(v.wheel)}};
            if constexpr (std::is_same_v<T, InvoluteDestruction>)
                return {{"type", "involute_destruction"},
                        {"deviation_amplitude_um", v.deviation_amplitude_um},
                        {"tooth_indices", v.tooth_indices},
                        {"wheel", to_string(v.wheel)}};
        },
        f);
}

inline FaultSpec fault_from_json(const json& j, const std::string& path = "fault") {
    detail::ObjectReader r(j, path);
    std::string type = "healthy", wheel = "gear";
    r.get("type", type);
    r.get("wheel", wheel);
    FaultSpec out;
    if (type == "healthy") {
        if (r.has("wheel")) throw ConfigError("a healthy fault takes no wheel");
        out = Healthy{};
    } else if (type == "tooth_breakage") {
        ToothBreakage b;
        r.get("tip_loss_fraction", b.tip_loss_fraction);
        r.get("tooth_index", b.tooth_index);
        b.wheel = detail::parse_wheel(wheel);
        out = b;
    } else if (type == "pitting") {
        Pitting p;
        p.tooth_indices = {0};
        r.get("pit_depth_mm", p.pit_depth_mm);
        r.get("flank_position", p.flank_position);
        r.get("axial_extent_fraction", p.axial_extent_fraction);
        r.get("tooth_indices", p.tooth_indices);
        p.wheel = detail::parse_wheel(wheel);
        out = p;
    } else if (type == "involute_destruction") {
        InvoluteDestruction d;
        d.tooth_indices = {0};
        r.get("deviation_amplitude_um", d.deviation_amplitude_um);
        r.get("tooth_indices", d.tooth_indices);
        d.wheel = detail::parse_wheel(wheel);
        out = d;
    } else {
        throw ConfigError("unknown fault type '" + type + "'");
    }
    r.finish();
    return out;
}

// Command-line fault shorthand:
//   healthy
//   breakage:<tip_loss>[:tooth=<i>][:wheel=pinion|gear]
//   pitting:<depth_mm>[:teeth=<i,j,..>][:position=<u>][:extent=<f>][:wheel=..]
//   involute:<amplitude_um>[:teeth=<i,j,..>][:wheel=..]
inline FaultSpec parse_fault(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.empty()) throw ConfigError("empty fault specification");
    auto number = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size() || s.empty()) throw ConfigError("bad number '" + s + "' in fault '" + text + "'");
        return v;
    };
    auto integer = [&](const std::string& s) {
        const double v = number(s);
        if (v != std::floor(v)) throw ConfigError("bad integer '" + s + "' in fault '" + text + "'");
        return static_cast<int>(v);
    };
    auto indices = [&](const std::string& s) {
        std::vector<int> out;
        std::stringstream is(s);
        for (std::string t; std::getline(is, t, ',');) out.push_back(integer(t));
        return out;
    };
    json j;
    const std::string& kind = parts[0];
    if (kind == "healthy") {
        if (parts.size() != 1) throw ConfigError("healthy takes no arguments");
        return Healthy{};
    }
    if (parts.size() < 2) throw ConfigError("fault '" + text + "' needs a severity value");
    if (kind == "breakage") j = {{"type", "tooth_breakage"}, {"tip_loss_fraction", number(parts[1])}};
    else if (kind == "pitting") j = {{"type", "pitting"}, {"pit_depth_mm", number(parts[1])}};
    else if (kind == "involute") j = {{"type", "involute_destruction"}, {"deviation_amplitude_um", number(parts[1])}};
    else throw ConfigError("unknown fault kind '" + kind + "'");
    for (std::size_t i = 2; i < parts.size(); ++i) {
        const auto eq = parts[i].find('=');
        if (eq == std::string::npos) throw ConfigError("expected key=value in fault '" + text + "'");
        const std::string k = parts[i].substr(0, eq), v = parts[i].substr(eq + 1);
        if (k == "tooth" && kind == "breakage") j["tooth_index"] = integer(v);
        else if (k == "teeth" && kind != "breakage") j["tooth_indices"] = indices(v);
        else if (k == "wheel") j["wheel"] = v;
        else if (k == "position" && kind == "pitting") j["flank_position"] = number(v);
        else if (k == "extent" && kind == "pitting") j["axial_extent_fraction"] = number(v);
        else throw ConfigError("unknown option '" + k + "' in fault '" + text + "'");
    }
    return fault_from_json(j);
}

// Full echo of a configuration; from_json(to_json(c)) reproduces c.
inline json to_json(const RunConfig& c) {
    json j;
    j["schema_version"] = kConfigSchemaVersion;
    j["transmission"] = {{"pinion", detail::wheel_to_json(c.transmission.pinion)},
                         {"gear", detail::wheel_to_json(c.transmission.gear)}};
    const auto& oc = c.conditions;
    j["conditions"] = {{"input_speed_hz", oc.input_speed_hz},
                       {"load_torque_nm", oc.load_torque_nm},
                       {"sampling_rate_hz", oc.sampling_rate_hz},
                       {"duration_s", oc.duration_s},
                       {"gravity", oc.gravity}};
    j["din_grade"] = c.din_grade;
    j["profile_errors"] = {{"phase_jitter", c.error_recipe.phase_jitter},
                           {"white_fraction", c.error_recipe.white_fraction}};
    j["fault"] = fault_to_json(c.fault);
    const auto& s = c.structure;
    j["structure"] = {{"bearing_radial_stiffness", s.bearing_radial_stiffness},
                      {"bearing_axial_stiffness", s.bearing_axial_stiffness},
                      {"casing_support_stiffness", s.casing_support_stiffness},
                      {"input_shaft_stiffness", s.input_shaft_stiffness},
                      {"output_shaft_stiffness", s.output_shaft_stiffness},
                      {"input_shaft_length", s.input_shaft_length},
                      {"output_shaft_length", s.output_shaft_length},
                      {"output_bearings_on_casing", s.output_bearings_on_casing}};
    j["inertia"] = {{"motor_inertia", c.inertia.motor_inertia},
                    {"load_inertia", c.inertia.load_inertia},
                    {"casing_mass", c.inertia.casing_mass}};
    j["damping"] = {{"rayleigh_a", c.damping.rayleigh_a}, {"rayleigh_b", c.damping.rayleigh_b}};
    const auto& n = c.numerics;
    j["numerics"] = {{"cycle_points", n.cycle_points},
                     {"profile_points", n.profile_points},
                     {"error_points", n.error_points},
                     {"newmark_beta", n.newmark_beta},
                     {"newmark_gamma", n.newmark_gamma},
                     {"nr_rel_tol", n.nr_rel_tol},
                     {"nr_max_iter", n.nr_max_iter},
                     {"cache_jacobians", n.cache_jacobians},
                     {"transient_discard_s", n.transient_discard_s},
                     {"static_initial_state", n.static_initial_state}};
    j["seed"] = c.seed;
    j["error_seed"] = c.error_seed ? json(*c.error_seed) : json(nullptr);
    j["sensor_noise_ms2"] = c.sensor_noise_ms2;
    j["all_axes"] = c.all_axes;
    return j;
}

// Reads a configuration over `base`; absent keys keep the base values.
inline RunConfig from_json(const json& j, RunConfig c = {}) {
    detail::ObjectReader r(j, "");
    int version = 0;
    if (!r.has("schema_version")) throw ConfigError("missing schema_version");
    r.get("schema_version", version);
    if (version != kConfigSchemaVersion)
        throw ConfigError("unsupported schema_version " + std::to_string(version) + " (expected " +
                          std::to_string(kConfigSchemaVersion) + ")");
    r.object("transmission", [&](detail::ObjectReader& t) {
        t.object("pinion", [&](detail::ObjectReader& w) { detail::wheel_from_json(w, c.transmission.pinion); });
        t.object("gear", [&](detail::ObjectReader& w) { detail::wheel_from_json(w, c.transmission.gear); });
    });
    r.object("conditions", [&](detail::ObjectReader& o) {
        o.get("input_speed_hz", c.conditions.input_speed_hz);
        o.get("load_torque_nm", c.conditions.load_torque_nm);
        o.get("sampling_rate_hz", c.conditions.sampling_rate_hz);
        o.get("duration_s", c.conditions.duration_s);
        o.get("gravity", c.conditions.gravity);
    });
    r.get("din_grade", c.din_grade);
    r.object("profile_errors", [&](detail::ObjectReader& o) {
        o.get("phase_jitter", c.error_recipe.phase_jitter);
        o.get("white_fraction", c.error_recipe.white_fraction);
    });
    if (const json* f = r.take("fault")) c.fault = fault_from_json(*f);
    r.object("structure", [&](detail::ObjectReader& o) {
        auto& s = c.structure;
        o.get("bearing_radial_stiffness", s.bearing_radial_stiffness);
        o.get("bearing_axial_stiffness", s.bearing_axial_stiffness);
        o.get("casing_support_stiffness", s.casing_support_stiffness);
        o.get("input_shaft_stiffness", s.input_shaft_stiffness);
        o.get("output_shaft_stiffness", s.output_shaft_stiffness);
        o.get("input_shaft_length", s.input_shaft_length);
        o.get("output_shaft_length", s.output_shaft_length);
        o.get("output_bearings_on_casing", s.output_bearings_on_casing);
    });
    r.object("inertia", [&](detail::ObjectReader& o) {
        o.get("motor_inertia", c.inertia.motor_inertia);
        o.get("load_inertia", c.inertia.load_inertia);
        o.get("casing_mass", c.inertia.casing_mass);
    });
    r.object("damping", [&](detail::ObjectReader& o) {
        o.get("rayleigh_a", c.damping.rayleigh_a);
        o.get("rayleigh_b", c.damping.rayleigh_b);
    });
    r.object("numerics", [&](detail::ObjectReader& o) {
        auto& n = c.numerics;
        o.get("cycle_points", n.cycle_points);
        o.get("profile_points", n.profile_points);
        o.get("error_points", n.error_points);
        o.get("newmark_beta", n.newmark_beta);
        o.get("newmark_gamma", n.newmark_gamma);
        o.get("nr_rel_tol", n.nr_rel_tol);
        o.get("nr_max_iter", n.nr_max_iter);
        o.get("cache_jacobians", n.cache_jacobians);
        o.get("transient_discard_s", n.transient_discard_s);
        o.get("static_initial_state", n.static_initial_state);
    });
    r.get("seed", c.seed);
    if (const json* e = r.take("error_seed")) {
        if (e->is_null()) c.error_seed.reset();
        else if (e->is_number_unsigned()) c.error_seed = e->get<std::uint64_t>();
        else throw ConfigError("'error_seed' must be a non-negative integer or null");
    }
    r.get("sensor_noise_ms2", c.sensor_noise_ms2);
    r.get("all_axes", c.all_axes);
    r.finish();
    return c;
}

inline json parse_json_text(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(source + ": invalid JSON: " + e.what());
    }
}

// Presets reproduce the three experimental setups. Face width, hub bores and
// everything outside the setup table are model defaults, not measured values.
inline const std::map<std::string, std::string>& preset_sources() {
    static const std::map<std::string, std::string> presets{
        {"tooth-breakage", R"({
  "schema_version": 1,
  "transmission": {
    "pinion": {"tooth_count": 17, "module_mm": 3, "face_width_mm": 20, "hub_bore_radius_mm": 10},
    "gear":   {"tooth_count": 38, "module_mm": 3, "face_width_mm": 20, "hub_bore_radius_mm": 20}
  },
  "conditions": {"input_speed_hz": 40, "load_torque_nm": 10, "sampling_rate_hz": 25000, "duration_s": 60},
  "din_grade": 7
})"},
        {"pitting", R"({
  "schema_version": 1,
  "transmission": {
    "pinion": {"tooth_count": 17, "module_mm": 3, "face_width_mm": 20, "hub_bore_radius_mm": 10},
    "gear":   {"tooth_count": 38, "module_mm": 3, "face_width_mm": 20, "hub_bore_radius_mm": 20}
  },
  "conditions": {"input_speed_hz": 40, "load_torque_nm": 10, "sampling_rate_hz": 25000, "duration_s": 60},
  "din_grade": 7
})"},
        {"involute-destruction", R"({
  "schema_version": 1,
  "transmission": {
    "pinion": {"tooth_count": 18, "module_mm": 3, "face_width_mm": 20, "hub_bore_radius_mm": 10},
    "gear":   {"tooth_count": 35, "module_mm": 3, "face_width_mm": 20, "hub_bore_radius_mm": 20}
  },
  "conditions": {"input_speed_hz": 45, "load_torque_nm": 15, "sampling_rate_hz": 50000, "duration_s": 60},
  "din_grade": 8
})"},
    };
    return presets;
}

inline std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (const auto& [k, v] : preset_sources()) out.push_back(k);
    return out;
}

inline RunConfig preset(const std::string& name) {
    const auto& p = preset_sources();
    const auto it = p.find(name);
    if (it == p.end()) throw ConfigError("unknown preset '" + name + "'");
    return from_json(parse_json_text(it->second, "preset " + name));
}

}  // namespace gearsim
