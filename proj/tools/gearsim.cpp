// gearsim command-line tool: simulate, batch, features, enhance, bench.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

#include "gearsim/gearsim.hpp"

namespace {

using namespace gearsim;
using nlohmann::json;

constexpr const char* kOutputDirEnv = "GEARSIM_OUTPUT_DIR";

fs::path default_output_dir() {
    const char* env = std::getenv(kOutputDirEnv);
    return env && *env ? fs::path(env) : fs::path(".");
}

int default_jobs() { return std::max(1, static_cast<int>(std::thread::hardware_concurrency())); }

// ---------------------------------------------------------------- config

struct ConfigOptions {
    std::string preset;
    std::string config_file;
    std::string from_manifest;
    std::string fault;
    std::vector<std::string> set;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> error_seed;
    std::optional<double> duration;
    bool all_axes = false;
};

void add_config_options(CLI::App* app, ConfigOptions& o, bool with_fault = true) {
    app->add_option("--preset", o.preset, "Named preset: " + [] {
        std::string s;
        for (const auto& n : preset_names()) s += (s.empty() ? "" : ", ") + n;
        return s;
    }());
    app->add_option("--config", o.config_file, "JSON configuration file (applied over the preset)");
    app->add_option("--from-manifest", o.from_manifest, "Reuse the configuration echoed in a run manifest");
    if (with_fault)
        app->add_option("--fault", o.fault,
                        "Fault shorthand: healthy | breakage:<tip_loss>[:tooth=i][:wheel=w] | "
                        "pitting:<depth_mm>[:teeth=i,j][:position=u][:extent=f] | involute:<um>[:teeth=i,j]");
    app->add_option("--set", o.set, "Override a configuration value: dotted.key=<json value>");
    app->add_option("--seed", o.seed, "Master seed");
    app->add_option("--error-seed", o.error_seed, "Seed of the manufacturing profile errors");
    app->add_option("--duration", o.duration, "Simulated duration in seconds");
    app->add_flag("--all-axes", o.all_axes, "Also record casing x and z acceleration");
}

void apply_set(json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + assignment + "'");
    const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    json* node = &j;
    std::stringstream ss(key);
    std::vector<std::string> parts;
    for (std::string p; std::getline(ss, p, '.');) parts.push_back(p);
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!node->is_object()) throw ConfigError("--set path '" + key + "' crosses a non-object");
        node = &(*node)[parts[i]];
        if (node->is_null()) *node = json::object();
    }
    (*node)[parts.back()] = value;
}

// Patch `base` with `patch`; a fault object replaces the previous one.
void patch_config(json& base, const json& patch) {
    if (!patch.is_object()) throw ConfigError("configuration must be a JSON object");
    json p = patch;
    std::optional<json> fault;
    if (p.contains("fault")) {
        fault = p["fault"];
        p.erase("fault");
    }
    base.merge_patch(p);
    if (fault) base["fault"] = *fault;
}

json resolve_config_json(const ConfigOptions& o) {
    json j;
    if (!o.from_manifest.empty()) {
        if (!o.preset.empty() || !o.config_file.empty())
            throw ConfigError("--from-manifest cannot be combined with --preset or --config");
        const json m = parse_json_text(read_file(o.from_manifest), o.from_manifest);
        if (!m.contains("config")) throw ConfigError(o.from_manifest + ": no config echo");
        j = m["config"];
    } else {
        if (o.preset.empty() && o.config_file.empty()) throw ConfigError("give --preset, --config or --from-manifest");
        j = to_json(RunConfig{});
        if (!o.preset.empty()) {
            const auto& src = preset_sources();
            const auto it = src.find(o.preset);
            if (it == src.end()) throw ConfigError("unknown preset '" + o.preset + "'");
            patch_config(j, parse_json_text(it->second, "preset " + o.preset));
        }
        if (!o.config_file.empty()) patch_config(j, parse_json_text(read_file(o.config_file), o.config_file));
    }
    for (const auto& s : o.set) apply_set(j, s);
    if (!o.fault.empty()) j["fault"] = fault_to_json(parse_fault(o.fault));
    if (o.seed) j["seed"] = *o.seed;
    if (o.error_seed) j["error_seed"] = *o.error_seed;
    if (o.duration) j["conditions"]["duration_s"] = *o.duration;
    if (o.all_axes) j["all_axes"] = true;
    // Normalize to the full echo form.
    return to_json(from_json(j));
}

// ---------------------------------------------------------------- simulate

struct RunFiles {
    fs::path signal, manifest;
};

RunFiles run_files(const fs::path& dir, const std::string& name) {
    return {dir / (name + ".csv"), dir / (name + ".manifest.json")};
}

// Simulates and writes both files; the signal is committed only after the
// manifest is fully built, and the manifest last.
SimulationResult run_and_write(const json& echo, const fs::path& dir, const std::string& name, bool record_timing,
                               bool write_gms) {
    const RunConfig cfg = from_json(echo);
    const SimulationResult r = simulate(cfg);
    const RunFiles f = run_files(dir, name);
    const json manifest = manifest_json(echo, r, f.signal.filename().string(), record_timing);
    AtomicFile sig(f.signal);
    write_signal_csv(sig.stream(), r);
    std::optional<AtomicFile> gms;
    if (write_gms) {
        gms.emplace(dir / (name + ".gms.csv"));
        const AssembledModel am = assemble_model(cfg);
        write_gms_csv(gms->stream(), am.stiffness_cycle);
    }
    AtomicFile man(f.manifest);
    man.stream() << manifest.dump(2) << '\n';
    sig.commit();
    if (gms) gms->commit();
    man.commit();
    return r;
}

struct SimulateOptions {
    ConfigOptions config;
    std::string out;
    std::string name = "signal";
    bool record_timing = false;
    bool gms = false;
};

int cmd_simulate(const SimulateOptions& o) {
    const json echo = resolve_config_json(o.config);
    const fs::path dir = o.out.empty() ? default_output_dir() : fs::path(o.out);
    const SimulationResult r = run_and_write(echo, dir, o.name, o.record_timing, o.gms);
    std::cerr << "wrote " << (dir / (o.name + ".csv")).string() << " (" << r.size() << " samples, label "
              << r.label << ")\n";
    return 0;
}

// ---------------------------------------------------------------- batch

struct BatchOptions {
    ConfigOptions config;
    std::vector<std::string> faults;
    int n = 1;
    std::string out;
    int jobs = 0;
    long max_runs = -1;
    bool record_timing = false;
};

std::string run_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "run_%04zu", i);
    return buf;
}

int cmd_batch(const BatchOptions& o) {
    if (o.n < 1) throw ConfigError("--n must be >= 1");
    const json base = resolve_config_json(o.config);
    const RunConfig base_cfg = from_json(base);
    const std::uint64_t error_seed = base_cfg.resolved_error_seed();
    std::vector<std::string> faults = o.faults;
    if (faults.empty()) faults.push_back("");

    struct Planned {
        std::string name;
        json config;
    };
    std::vector<Planned> plan;
    for (const auto& f : faults)
        for (int i = 0; i < o.n; ++i) {
            json c = base;
            if (!f.empty()) c["fault"] = fault_to_json(parse_fault(f));
            c["seed"] = base_cfg.seed + static_cast<std::uint64_t>(i);
            c["error_seed"] = error_seed;
            plan.push_back({run_name(plan.size()), to_json(from_json(c))});
        }

    const fs::path dir = o.out.empty() ? default_output_dir() : fs::path(o.out);
    const fs::path index_path = dir / "index.json";
    json index = {{"schema_version", 1}, {"runs", json::array()}};
    std::map<std::string, json> entries;
    if (fs::exists(index_path)) {
        const json old = parse_json_text(read_file(index_path), index_path.string());
        for (const auto& e : old.value("runs", json::array())) entries[e.at("name").get<std::string>()] = e;
    }
    auto done = [&](const Planned& p) {
        const auto it = entries.find(p.name);
        if (it == entries.end() || it->second.value("status", "") != "ok") return false;
        if (it->second.value("config", json()) != p.config) return false;
        const RunFiles f = run_files(dir, p.name);
        return fs::exists(f.signal) && fs::exists(f.manifest);
    };
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < plan.size(); ++i)
        if (!done(plan[i])) todo.push_back(i);
    if (o.max_runs >= 0 && static_cast<long>(todo.size()) > o.max_runs) todo.resize(static_cast<std::size_t>(o.max_runs));

    std::mutex mutex;
    auto write_index = [&] {
        json runs = json::array();
        for (const auto& p : plan)
            if (const auto it = entries.find(p.name); it != entries.end()) runs.push_back(it->second);
        index["runs"] = runs;
        index["error_seed"] = error_seed;
        index["planned"] = plan.size();
        write_file_atomic(index_path, index.dump(2) + "\n");
    };
    std::atomic<std::size_t> next{0};
    std::atomic<int> failures{0};
    auto worker = [&] {
        for (std::size_t k; (k = next.fetch_add(1)) < todo.size();) {
            const Planned& p = plan[todo[k]];
            json entry = {{"name", p.name}, {"seed", p.config.at("seed")}, {"config", p.config}};
            try {
                const SimulationResult r = run_and_write(p.config, dir, p.name, o.record_timing, false);
                entry["status"] = "ok";
                entry["label"] = r.label;
                entry["profile_error_hash"] = hex64(r.profile_error_hash);
                entry["signal_file"] = p.name + ".csv";
                entry["manifest_file"] = p.name + ".manifest.json";
            } catch (const Error& e) {
                entry["status"] = "failed";
                entry["error"] = e.what();
                ++failures;
            }
            const std::lock_guard<std::mutex> lock(mutex);
            entries[p.name] = entry;
            write_index();
        }
    };
    const int jobs = std::max(1, std::min<int>(o.jobs > 0 ? o.jobs : default_jobs(), static_cast<int>(todo.size())));
    if (todo.empty()) {
        write_index();
    } else if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    std::cerr << "batch: " << todo.size() << " run(s) executed, " << (plan.size() - todo.size())
              << " skipped, " << failures << " failed\n";
    return failures > 0 ? 3 : 0;
}

// ---------------------------------------------------------------- features

struct FeaturesOptions {
    std::vector<std::string> inputs;
    std::string out;
    int points_per_rev = 1024;
    std::string shaft = "auto";
    std::optional<double> shaft_ratio;
    std::optional<int> mesh_order;
    int harmonics = -1;
    int sidebands = 2;
};

struct Input {
    std::string name;
    fs::path csv;
    std::optional<json> manifest;
    std::string label;
};

std::vector<Input> collect_inputs(const std::vector<std::string>& args) {
    std::vector<Input> out;
    auto add_file = [&](const fs::path& csv, const std::string& label) {
        Input in;
        in.csv = csv;
        in.name = csv.stem().string();
        fs::path man = csv;
        man.replace_extension(".manifest.json");
        if (fs::exists(man)) in.manifest = parse_json_text(read_file(man), man.string());
        in.label = label;
        if (in.label.empty() && in.manifest) in.label = in.manifest->value("label", "");
        out.push_back(std::move(in));
    };
    for (const auto& a : args) {
        std::string label;
        fs::path p = a;
        if (const auto eq = a.find('='); eq != std::string::npos && !fs::exists(a)) {
            label = a.substr(0, eq);
            p = a.substr(eq + 1);
        }
        if (fs::is_directory(p)) {
            const fs::path index = p / "index.json";
            if (fs::exists(index)) {
                const json idx = parse_json_text(read_file(index), index.string());
                for (const auto& e : idx.value("runs", json::array()))
                    if (e.value("status", "") == "ok") add_file(p / e.at("signal_file").get<std::string>(), label);
            } else {
                std::vector<fs::path> files;
                for (const auto& de : fs::directory_iterator(p))
                    if (de.path().extension() == ".csv" && fs::exists(fs::path(de.path()).replace_extension(".manifest.json")))
                        files.push_back(de.path());
                std::sort(files.begin(), files.end());
                for (const auto& f : files) add_file(f, label);
            }
        } else if (fs::exists(p)) {
            add_file(p, label);
        } else {
            throw IoError("no such input: " + p.string());
        }
    }
    if (out.empty()) throw ConfigError("no input signals");
    return out;
}

ProcessingConfig processing_config(const FeaturesOptions& o, const std::vector<Input>& inputs) {
    ProcessingConfig pc;
    pc.points_per_rev = o.points_per_rev;
    pc.difference.harmonics = o.harmonics;
    pc.difference.sidebands = o.sidebands;
    std::optional<RunConfig> cfg;
    if (inputs.front().manifest && inputs.front().manifest->contains("config"))
        cfg = from_json(inputs.front().manifest->at("config"));
    std::string shaft = o.shaft;
    if (shaft == "auto") shaft = cfg ? (faulted_wheel(cfg->fault) == Wheel::gear ? "output" : "input") : "input";
    if (shaft != "input" && shaft != "output") throw ConfigError("--shaft must be auto, input or output");
    if (o.shaft_ratio) {
        pc.shaft_ratio = *o.shaft_ratio;
    } else if (shaft == "output") {
        if (!cfg) throw ConfigError("--shaft output needs --shaft-ratio when inputs have no manifest");
        pc.shaft_ratio = static_cast<double>(cfg->transmission.pinion.tooth_count) / cfg->transmission.gear.tooth_count;
    }
    if (o.mesh_order) {
        pc.difference.mesh_order = *o.mesh_order;
    } else {
        if (!cfg) throw ConfigError("--mesh-order is required when inputs have no manifest");
        pc.difference.mesh_order =
            shaft == "output" ? cfg->transmission.gear.tooth_count : cfg->transmission.pinion.tooth_count;
    }
    pc.validate();
    return pc;
}

struct FeatureSet {
    std::vector<std::string> names, labels;
    std::vector<Eigen::VectorXd> averages, differences;  // normalized
    ProcessingConfig config;
    double healthy_rms = 0.0;
};

FeatureSet compute_features(const std::vector<Input>& inputs, const ProcessingConfig& pc) {
    FeatureSet fs_;
    fs_.config = pc;
    std::vector<Eigen::VectorXd> healthy;
    for (const auto& in : inputs) {
        if (in.label.empty()) throw ConfigError(in.csv.string() + ": no health-state label (use label=path)");
        const LoadedSignal ls = load_signal(in.csv, in.manifest ? &*in.manifest : nullptr);
        const ProcessedSignal ps = process_signal(ls.signal, pc);
        fs_.names.push_back(in.name);
        fs_.labels.push_back(in.label);
        fs_.averages.push_back(ps.average.cycle_signal);
        fs_.differences.push_back(ps.difference.cycle_signal);
        if (in.label == kHealthyLabel) healthy.push_back(ps.difference.cycle_signal);
    }
    if (healthy.empty()) throw ConfigError("no healthy signals: normalization needs a healthy reference set");
    fs_.healthy_rms = mean_rms(healthy);
    fs_.differences = normalize_by_healthy(fs_.differences, fs_.healthy_rms);
    fs_.averages = normalize_by_healthy(fs_.averages, fs_.healthy_rms);
    return fs_;
}

int cmd_features(const FeaturesOptions& o) {
    const auto inputs = collect_inputs(o.inputs);
    const ProcessingConfig pc = processing_config(o, inputs);
    const FeatureSet f = compute_features(inputs, pc);
    const fs::path dir = o.out.empty() ? default_output_dir() : fs::path(o.out);

    CiTable raw, logt;
    raw.labels = logt.labels = f.labels;
    for (const char* c : ConditionIndicatorSet::names) raw.columns.emplace_back(c);
    for (const char* c : ConditionIndicatorSet::log_names) logt.columns.emplace_back(c);
    raw.values.resize(static_cast<Eigen::Index>(f.names.size()), 6);
    logt.values.resize(static_cast<Eigen::Index>(f.names.size()), 6);
    std::vector<Eigen::VectorXd> envelopes;
    for (std::size_t i = 0; i < f.names.size(); ++i) {
        envelopes.push_back(envelope(f.differences[i]));
        const ConditionIndicatorSet ci = condition_indicators(f.differences[i], envelopes.back());
        const auto v = ci.values();
        const auto lv = ci.log_values();
        for (int j = 0; j < 6; ++j) {
            raw.values(static_cast<Eigen::Index>(i), j) = v[static_cast<std::size_t>(j)];
            logt.values(static_cast<Eigen::Index>(i), j) = lv[static_cast<std::size_t>(j)];
        }
    }
    AtomicFile a(dir / "cis.csv"), b(dir / "cis_log.csv"), c(dir / "sync_average.csv"), d(dir / "difference.csv"),
        e(dir / "envelope.csv"), s(dir / "features.json");
    // Raw table columns are not CI-log names, so write it by hand.
    a.stream() << "signal,label";
    for (const auto& col : raw.columns) a.stream() << ',' << col;
    a.stream() << '\n';
    for (std::size_t i = 0; i < f.names.size(); ++i) {
        a.stream() << f.names[i] << ',' << f.labels[i];
        for (int j = 0; j < 6; ++j) a.stream() << ',' << format_double(raw.values(static_cast<Eigen::Index>(i), j));
        a.stream() << '\n';
    }
    write_ci_table(b.stream(), f.names, logt);
    write_cycle_csv(c.stream(), f.names, f.averages);
    write_cycle_csv(d.stream(), f.names, f.differences);
    write_cycle_csv(e.stream(), f.names, envelopes);
    const json summary = {{"points_per_rev", pc.points_per_rev},
                          {"shaft_ratio", pc.shaft_ratio},
                          {"mesh_order", pc.difference.mesh_order},
                          {"sidebands", pc.difference.sidebands},
                          {"removed_orders", removed_orders(pc.points_per_rev, pc.difference)},
                          {"healthy_mean_rms", f.healthy_rms},
                          {"signals", f.names},
                          {"labels", f.labels}};
    s.stream() << summary.dump(2) << '\n';
    for (auto* file : {&a, &b, &c, &d, &e, &s}) file->commit();
    std::cerr << "features: " << f.names.size() << " signal(s) -> " << dir.string() << '\n';
    return 0;
}

// ---------------------------------------------------------------- enhance

struct EnhanceOptions {
    std::string sim, exp, grid_file, out;
    std::vector<std::string> columns;
    FeaturesOptions processing;
    int jobs = 0;
};

GridSpec grid_from_json(const json& j) {
    GridSpec g = default_grid();
    detail::ObjectReader r(j, "grid");
    auto list = [&](const char* key, std::vector<double>& out) {
        if (const json* v = r.take(key)) {
            if (!v->is_array()) throw ConfigError(std::string("grid.") + key + " must be an array of numbers");
            out.clear();
            for (const auto& e : *v) {
                if (!e.is_number()) throw ConfigError(std::string("grid.") + key + " must be an array of numbers");
                out.push_back(e.get<double>());
            }
        }
    };
    list("width_ratios", g.width_ratios);
    list("fault_to_harmonics", g.fault_to_harmonics);
    list("noise_levels", g.noise_levels);
    r.get("n_noise", g.n_noise);
    r.get("seed", g.seed);
    r.finish();
    return g;
}

json grid_to_json(const GridSpec& g) {
    return {{"width_ratios", g.width_ratios},
            {"fault_to_harmonics", g.fault_to_harmonics},
            {"noise_levels", g.noise_levels},
            {"n_noise", g.n_noise},
            {"seed", g.seed}};
}

// A dataset directory is either a features output (difference.csv +
// cis_log.csv) or raw signals processed on the fly.
LabeledSignals load_difference_dataset(const std::string& path, const FeaturesOptions& proc) {
    const fs::path p = path;
    LabeledSignals out;
    if (fs::is_directory(p) && fs::exists(p / "difference.csv") && fs::exists(p / "cis_log.csv")) {
        std::vector<std::string> names;
        const CiTable t = read_ci_table(p / "cis_log.csv", &names);
        const auto [cols, signals] = read_cycle_csv(p / "difference.csv");
        if (cols != names) throw ConfigError(path + ": difference.csv and cis_log.csv list different signals");
        out.labels = t.labels;
        out.signals = signals;
        return out;
    }
    FeaturesOptions o = proc;
    o.inputs = {path};
    const auto inputs = collect_inputs(o.inputs);
    const FeatureSet f = compute_features(inputs, processing_config(o, inputs));
    out.labels = f.labels;
    out.signals = f.differences;
    return out;
}

int cmd_enhance(const EnhanceOptions& o) {
    const std::vector<std::string> columns = o.columns.empty() ? default_error_columns() : o.columns;
    const LabeledSignals sim = load_difference_dataset(o.sim, o.processing);
    if (!sim.has_healthy()) throw ConfigError(o.sim + ": no healthy subset");
    CiTable exp;
    if (fs::is_regular_file(o.exp)) {
        const CiTable full = read_ci_table(o.exp);
        exp.labels = full.labels;
        exp.columns = columns;
        exp.values.resize(full.values.rows(), static_cast<Eigen::Index>(columns.size()));
        for (std::size_t j = 0; j < columns.size(); ++j) {
            const auto it = std::find(full.columns.begin(), full.columns.end(), columns[j]);
            if (it == full.columns.end()) throw ConfigError(o.exp + ": missing CI column " + columns[j]);
            exp.values.col(static_cast<Eigen::Index>(j)) = full.values.col(it - full.columns.begin());
        }
    } else {
        exp = ci_table(load_difference_dataset(o.exp, o.processing), columns);
    }
    if (std::count(exp.labels.begin(), exp.labels.end(), kHealthyLabel) == 0)
        throw ConfigError(o.exp + ": no healthy subset");
    const GridSpec grid =
        o.grid_file.empty() ? default_grid() : grid_from_json(parse_json_text(read_file(o.grid_file), o.grid_file));
    const TuneResult res = tune(sim, exp, grid, o.jobs > 0 ? o.jobs : default_jobs());

    const fs::path dir = o.out.empty() ? default_output_dir() : fs::path(o.out);
    AtomicFile table(dir / "error_table.csv"), summary(dir / "enhance_summary.json");
    auto& ts = table.stream();
    ts << "width_ratio,fault_to_harmonics,noise_level,score";
    for (const auto& st : res.table.states)
        for (const auto& c : res.table.columns) ts << ",err:" << st << ':' << c;
    ts << '\n';
    for (const auto& row : res.table.rows) {
        ts << format_double(row.params.width_ratio) << ',' << format_double(row.params.fault_to_harmonics) << ','
           << format_double(row.params.noise_level) << ',' << format_double(row.score);
        for (Eigen::Index s = 0; s < row.state_errors.rows(); ++s)
            for (Eigen::Index c = 0; c < row.state_errors.cols(); ++c) ts << ',' << format_double(row.state_errors(s, c));
        ts << '\n';
    }
    const json sj = {{"best_params",
                      {{"width_ratio", res.best.width_ratio},
                       {"fault_to_harmonics", res.best.fault_to_harmonics},
                       {"noise_level", res.best.noise_level}}},
                     {"score", res.best_score},
                     {"grid", grid_to_json(grid)},
                     {"seed", grid.seed},
                     {"columns", res.table.columns},
                     {"states", res.table.states}};
    summary.stream() << sj.dump(2) << '\n';
    table.commit();
    summary.commit();
    std::cout << "best width_ratio=" << res.best.width_ratio << " fault_to_harmonics=" << res.best.fault_to_harmonics
              << " noise_level=" << res.best.noise_level << " score=" << res.best_score << '\n';
    return 0;
}

// ---------------------------------------------------------------- bench

struct BenchOptions {
    std::vector<long> sizes{16, 1000, 8000};
    int assembly_cycles = 512;
    int assembly_m = 1000;
    double jacobian_cycles = 10.0;
    int reps = 3;
    std::string out;
};

int cmd_bench(const BenchOptions& o) {
    std::vector<BenchRow> rows;
    for (long n : o.sizes) {
        if (n < 3) throw ConfigError("strain-energy size must be >= 3");
        rows.push_back(bench_strain_energy(static_cast<std::size_t>(n), n > 2000 ? 1 : o.reps));
    }
    const RunConfig cfg = preset("tooth-breakage");
    rows.push_back(bench_assembly(cfg.transmission, 16, 1, o.reps));
    rows.push_back(bench_assembly(cfg.transmission, o.assembly_cycles, o.assembly_m, 1));
    if (o.jacobian_cycles > 0.0) {
        RunConfig jc = cfg;
        jc.numerics.nr_rel_tol = 1e-12;
        rows.push_back(bench_jacobian(jc, o.jacobian_cycles));
    }
    const fs::path dir = o.out.empty() ? default_output_dir() : fs::path(o.out);
    AtomicFile f(dir / "bench.csv");
    write_bench_csv(f.stream(), rows);
    f.commit();
    bool ok = true;
    for (const auto& r : rows) {
        std::cout << r.kernel << " size=" << r.size << " naive=" << r.naive_s << "s fast=" << r.fast_s
                  << "s ratio=" << r.ratio() << (r.asserted ? "" : " (not asserted)") << ' '
                  << (r.pass() ? "ok" : "FAIL") << '\n';
        ok = ok && r.pass();
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gearsim: spur gear vibration simulation, signal processing and calibration"};
    app.name("gearsim");
    app.require_subcommand(1);
    app.set_version_flag("--version", "gearsim 1.0.0");
    app.set_help_all_flag("--help-all", "Print help for every subcommand and exit");

    SimulateOptions sim;
    auto* s = app.add_subcommand("simulate", "Simulate one run and write the signal CSV and manifest");
    add_config_options(s, sim.config);
    s->add_option("--out", sim.out, std::string("Output directory (default $") + kOutputDirEnv + " or .)");
    s->add_option("--name", sim.name, "File stem of the outputs")->capture_default_str();
    s->add_flag("--record-timing", sim.record_timing, "Store wall time in the manifest (breaks byte identity)");
    s->add_flag("--gms-csv", sim.gms, "Also write the mesh stiffness over one stiffness period");

    BatchOptions batch;
    auto* b = app.add_subcommand("batch", "Simulate a dataset sharing one profile-error field");
    add_config_options(b, batch.config, false);
    b->add_option("--fault", batch.faults, "Fault shorthand; repeat for several health states");
    b->add_option("--n", batch.n, "Runs per health state")->capture_default_str();
    b->add_option("--out", batch.out, "Dataset directory");
    b->add_option("--jobs", batch.jobs, "Worker threads (default: available cores)");
    b->add_option("--max-runs", batch.max_runs, "Execute at most this many pending runs");
    b->add_flag("--record-timing", batch.record_timing, "Store wall time in the manifests");

    FeaturesOptions feat;
    auto add_processing = [](CLI::App* a, FeaturesOptions& f) {
        a->add_option("--points-per-rev", f.points_per_rev, "Angular points per revolution")->capture_default_str();
        a->add_option("--shaft", f.shaft, "Averaged shaft: auto, input or output")->capture_default_str();
        a->add_option("--shaft-ratio", f.shaft_ratio, "Averaged-shaft revolutions per tach revolution");
        a->add_option("--mesh-order", f.mesh_order, "Mesh order on the averaged shaft (its tooth count)");
        a->add_option("--harmonics", f.harmonics, "Mesh harmonics removed (-1: all below Nyquist)")
            ->capture_default_str();
        a->add_option("--sidebands", f.sidebands, "Sideband pairs removed per harmonic")->capture_default_str();
    };
    auto* f = app.add_subcommand("features", "Synchronous average, difference signal and condition indicators");
    f->add_option("inputs", feat.inputs, "Signal CSVs or dataset directories, optionally label=path")->required();
    f->add_option("--out", feat.out, "Output directory");
    add_processing(f, feat);

    EnhanceOptions enh;
    auto* e = app.add_subcommand("enhance", "Grid-search enhancement parameters against experimental CIs");
    e->add_option("--sim", enh.sim, "Simulated dataset directory")->required();
    e->add_option("--exp", enh.exp, "Experimental dataset directory or log CI table")->required();
    e->add_option("--grid", enh.grid_file, "Grid JSON (width_ratios, fault_to_harmonics, noise_levels, n_noise, seed)");
    e->add_option("--columns", enh.columns, "CI columns scored (default log_diff_rms log_diff_kurtosis)");
    e->add_option("--jobs", enh.jobs, "Worker threads (default: available cores)");
    e->add_option("--out", enh.out, "Output directory");
    add_processing(e, enh.processing);

    BenchOptions bench;
    auto* bn = app.add_subcommand("bench", "Time naive against fast kernels after an equivalence check");
    bn->add_option("--sizes", bench.sizes, "Strain-energy profile sizes")->capture_default_str();
    bn->add_option("--assembly-cycles", bench.assembly_cycles, "Cycle points of the assembly case")
        ->capture_default_str();
    bn->add_option("--assembly-m", bench.assembly_m, "Face-width points of the naive assembly")->capture_default_str();
    bn->add_option("--jacobian-cycles", bench.jacobian_cycles, "Mesh cycles of the stepping case (0 skips)")
        ->capture_default_str();
    bn->add_option("--reps", bench.reps, "Repetitions (best time kept)")->capture_default_str();
    bn->add_option("--out", bench.out, "Directory of bench.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::CallForAllHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::CallForVersion& ex) {
        return app.exit(ex);
    } catch (const CLI::ParseError& ex) {
        app.exit(ex);
        return 2;
    }

    try {
        if (*s) return cmd_simulate(sim);
        if (*b) return cmd_batch(batch);
        if (*f) return cmd_features(feat);
        if (*e) return cmd_enhance(enh);
        if (*bn) return cmd_bench(bench);
    } catch (const ConfigError& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 2;
    } catch (const NumericalError& ex) {
        std::cerr << "numerical error: " << ex.what() << '\n';
        return 3;
    } catch (const IoError& ex) {
        std::cerr << "i/o error: " << ex.what() << '\n';
        return 4;
    } catch (const fs::filesystem_error& ex) {
        std::cerr << "i/o error: " << ex.what() << '\n';
        return 4;
    } catch (const nlohmann::json::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 2;
    }
    return 2;
}
