#pragma once

// File formats: signal CSV, run manifest, CI tables, cycle-domain CSV.
// Every writer goes through AtomicFile, so a failed run leaves no partial
// output behind.

#include <nlohmann/json.hpp>

#include <Eigen/Core>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "gearsim/enhancement.hpp"
#include "gearsim/errors.hpp"
#include "gearsim/model.hpp"
#include "gearsim/sigproc.hpp"

namespace gearsim {

namespace fs = std::filesystem;

// Decimal text that round-trips a double exactly.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Stream to a temporary sibling; commit() renames it over the target.
// Destruction without commit removes the temporary.
class AtomicFile {
public:
    explicit AtomicFile(fs::path target) : target_(std::move(target)) {
        static std::atomic<unsigned> counter{0};
        if (target_.has_parent_path()) {
            std::error_code ec;
            fs::create_directories(target_.parent_path(), ec);
            if (ec) throw IoError("cannot create directory " + target_.parent_path().string() + ": " + ec.message());
        }
        tmp_ = target_;
        tmp_ += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
        out_.open(tmp_, std::ios::binary | std::ios::trunc);
        if (!out_) throw IoError("cannot open " + tmp_.string() + " for writing");
    }
    AtomicFile(const AtomicFile&) = delete;
    AtomicFile& operator=(const AtomicFile&) = delete;
    ~AtomicFile() {
        if (!committed_) {
            out_.close();
            std::error_code ec;
            fs::remove(tmp_, ec);
        }
    }

    std::ostream& stream() { return out_; }

    void commit() {
        out_.flush();
        if (!out_) throw IoError("write failed for " + target_.string());
        out_.close();
        std::error_code ec;
        fs::rename(tmp_, target_, ec);
        if (ec) throw IoError("cannot rename onto " + target_.string() + ": " + ec.message());
        committed_ = true;
    }

private:
    fs::path target_;
    fs::path tmp_;
    std::ofstream out_;
    bool committed_ = false;
};

inline void write_file_atomic(const fs::path& path, const std::string& content) {
    AtomicFile f(path);
    f.stream() << content;
    f.commit();
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed for " + path.string());
    return ss.str();
}

inline void write_signal_csv(std::ostream& os, const SimulationResult& r) {
    const bool xyz = r.accel_x.size() == r.size();
    os << "time_s,accel_y_ms2";
    if (xyz) os << ",accel_x_ms2,accel_z_ms2";
    os << ",shaft_angle_rad\n";
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        os << format_double(r.time(i)) << ',' << format_double(r.accel_y(i));
        if (xyz) os << ',' << format_double(r.accel_x(i)) << ',' << format_double(r.accel_z(i));
        os << ',' << format_double(r.shaft_angle(i)) << '\n';
    }
}

// Columns of a numeric CSV with a header row.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    int index(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }
    Eigen::VectorXd column(int i) const {
        const auto& c = columns.at(static_cast<std::size_t>(i));
        return Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
    }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        out.push_back(cell);
    }
    return out;
}

inline CsvTable read_numeric_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty CSV");
    t.header = split_csv_line(line);
    t.columns.resize(t.header.size());
    long row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != t.header.size())
            throw ConfigError(path.string() + ": row " + std::to_string(row) + " has the wrong number of cells");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            char* end = nullptr;
            const double v = std::strtod(cells[i].c_str(), &end);
            if (cells[i].empty() || *end != '\0')
                throw ConfigError(path.string() + ": row " + std::to_string(row) + ": not a number: " + cells[i]);
            t.columns[i].push_back(v);
        }
    }
    return t;
}

inline nlohmann::json manifest_json(const nlohmann::json& config_echo, const SimulationResult& r,
                                    const std::string& signal_file, bool record_timing) {
    nlohmann::json m;
    m["schema_version"] = 1;
    m["config"] = config_echo;
    m["seed"] = config_echo.at("seed");
    m["error_seed"] = r.error_seed;
    m["label"] = r.label;
    m["profile_error_hash"] = hex64(r.profile_error_hash);
    m["hunting_offset_mesh_periods"] = r.hunting_offset;
    m["mean_mesh_stiffness_n_per_m"] = r.mean_mesh_stiffness;
    m["signal_file"] = signal_file;
    m["samples"] = r.size();
    m["sampling_rate_hz"] = r.sampling_rate_hz;
    m["tach_pulses"] = r.tach_pulses;
    nlohmann::json hist = nlohmann::json::object();
    for (const auto& [it, count] : r.stats.iteration_histogram) hist[std::to_string(it)] = count;
    m["solver"] = {{"steps", r.stats.steps}, {"fallbacks", r.stats.fallbacks}, {"iteration_histogram", hist}};
    if (record_timing) m["wall_time_s"] = r.wall_time_s;
    return m;
}

// A recorded signal read from a CSV. The tach comes from an embedded 0/1
// "tach" column, else the manifest's tach_pulses, else the shaft angle
// column.
struct LoadedSignal {
    RecordedSignal signal;
    std::string label;
};

inline LoadedSignal load_signal(const fs::path& csv, const nlohmann::json* manifest) {
    const CsvTable t = read_numeric_csv(csv);
    LoadedSignal out;
    int acc = t.index("accel_y_ms2");
    if (acc < 0) acc = t.index("accel_ms2");
    if (acc < 0) throw ConfigError(csv.string() + ": no accel_y_ms2 or accel_ms2 column");
    out.signal.samples = t.column(acc);
    const int time = t.index("time_s");
    if (time < 0 || t.columns[static_cast<std::size_t>(time)].size() < 2)
        throw ConfigError(csv.string() + ": need a time_s column with at least two rows");
    const auto& tc = t.columns[static_cast<std::size_t>(time)];
    out.signal.rate = static_cast<double>(tc.size() - 1) / (tc.back() - tc.front());
    if (const int tach = t.index("tach"); tach >= 0) {
        const auto& c = t.columns[static_cast<std::size_t>(tach)];
        for (std::size_t i = 0; i < c.size(); ++i)
            if (c[i] != 0.0) out.signal.tach.push_back(static_cast<double>(i));
    } else if (manifest && manifest->contains("tach_pulses")) {
        out.signal.tach = manifest->at("tach_pulses").get<std::vector<double>>();
    } else if (const int ang = t.index("shaft_angle_rad"); ang >= 0) {
        out.signal.tach = tach_from_angle(t.column(ang));
    } else {
        throw ConfigError(csv.string() + ": no tach data (tach column, manifest or shaft_angle_rad)");
    }
    if (out.signal.tach.size() < 2) throw ConfigError(csv.string() + ": fewer than two tach pulses");
    if (manifest && manifest->contains("label")) out.label = manifest->at("label").get<std::string>();
    return out;
}

inline void write_cycle_csv(std::ostream& os, const std::vector<std::string>& names,
                            const std::vector<Eigen::VectorXd>& signals) {
    os << "point";
    for (const auto& n : names) os << ',' << n;
    os << '\n';
    const Eigen::Index p = signals.empty() ? 0 : signals.front().size();
    for (Eigen::Index i = 0; i < p; ++i) {
        os << i;
        for (const auto& s : signals) os << ',' << format_double(s(i));
        os << '\n';
    }
}

// Cycle-domain CSV back into named columns (skipping "point").
inline std::pair<std::vector<std::string>, std::vector<Eigen::VectorXd>> read_cycle_csv(const fs::path& path) {
    const CsvTable t = read_numeric_csv(path);
    std::pair<std::vector<std::string>, std::vector<Eigen::VectorXd>> out;
    for (std::size_t i = 0; i < t.header.size(); ++i) {
        if (t.header[i] == "point") continue;
        out.first.push_back(t.header[i]);
        out.second.push_back(t.column(static_cast<int>(i)));
    }
    return out;
}

// CI table: "signal,label,<columns...>".
inline void write_ci_table(std::ostream& os, const std::vector<std::string>& names, const CiTable& t) {
    os << "signal,label";
    for (const auto& c : t.columns) os << ',' << c;
    os << '\n';
    for (Eigen::Index i = 0; i < t.values.rows(); ++i) {
        os << names.at(static_cast<std::size_t>(i)) << ',' << t.labels.at(static_cast<std::size_t>(i));
        for (Eigen::Index j = 0; j < t.values.cols(); ++j) os << ',' << format_double(t.values(i, j));
        os << '\n';
    }
}

inline CiTable read_ci_table(const fs::path& path, std::vector<std::string>* names = nullptr) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty CI table");
    const auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "signal" || header[1] != "label")
        throw ConfigError(path.string() + ": CI table header must start with signal,label");
    CiTable t;
    t.columns.assign(header.begin() + 2, header.end());
    for (const auto& c : t.columns) ci_column_index(c);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) throw ConfigError(path.string() + ": ragged CI table row");
        if (names) names->push_back(cells[0]);
        t.labels.push_back(cells[1]);
        std::vector<double> r;
        for (std::size_t j = 2; j < cells.size(); ++j) {
            char* end = nullptr;
            r.push_back(std::strtod(cells[j].c_str(), &end));
            if (cells[j].empty() || *end != '\0') throw ConfigError(path.string() + ": not a number: " + cells[j]);
        }
        rows.push_back(std::move(r));
    }
    t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.columns.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return t;
}

}  // namespace gearsim
