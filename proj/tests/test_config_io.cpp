#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gearsim/config.hpp"
#include "gearsim/io.hpp"
#include "test_support.hpp"

using namespace gearsim;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() / ("gearsim_io_" + std::to_string(::getpid()) + "_" +
                                             ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }
    std::vector<std::string> listing() const {
        std::vector<std::string> out;
        for (const auto& e : fs::directory_iterator(path_)) out.push_back(e.path().filename().string());
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    fs::path path_;
};

json minimal() { return {{"schema_version", 1}}; }

}  // namespace

TEST(Config, RoundTripIsExact) {
    RunConfig c = preset("involute-destruction");
    c.seed = 1234567890123ULL;
    c.error_seed = 42;
    c.fault = Pitting{0.35, 0.4, 0.25, {1, 5}, Wheel::pinion};
    c.damping.rayleigh_b = 1.0 / 3.0;
    c.numerics.nr_rel_tol = 1.2345678901234567e-9;
    const json j = to_json(c);
    const RunConfig back = from_json(json::parse(j.dump()));
    EXPECT_EQ(to_json(back), j);
    EXPECT_EQ(back.damping.rayleigh_b, 1.0 / 3.0);
    EXPECT_EQ(*back.error_seed, 42u);
}

TEST(Config, NullErrorSeedRoundTrips) {
    RunConfig c;
    const RunConfig back = from_json(to_json(c));
    EXPECT_FALSE(back.error_seed.has_value());
}

TEST(Config, AbsentKeysKeepDefaults) {
    const RunConfig c = from_json(minimal());
    EXPECT_EQ(to_json(c), to_json(RunConfig{}));
}

TEST(Config, UnknownKeysRejectedAtEveryLevel) {
    json j = minimal();
    j["sed"] = 3;
    EXPECT_THROW(from_json(j), ConfigError);
    j = minimal();
    j["numerics"] = {{"cycle_point", 512}};
    EXPECT_THROW(from_json(j), ConfigError);
    j = minimal();
    j["transmission"] = {{"gear", {{"material", {{"young_modulus", 2e11}}}}}};
    EXPECT_THROW(from_json(j), ConfigError);
    j = minimal();
    j["fault"] = {{"type", "tooth_breakage"}, {"tip_loss", 0.2}};
    EXPECT_THROW(from_json(j), ConfigError);
}

TEST(Config, UnknownKeyMessageNamesPath) {
    json j = minimal();
    j["numerics"] = {{"cycle_point", 512}};
    try {
        from_json(j);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("numerics.cycle_point"), std::string::npos);
    }
}

TEST(Config, SchemaVersionRequired) {
    EXPECT_THROW(from_json(json::object()), ConfigError);
    EXPECT_THROW(from_json({{"schema_version", 2}}), ConfigError);
    EXPECT_THROW(from_json({{"schema_version", "1"}}), ConfigError);
}

TEST(Config, TypeMismatchRejected) {
    json j = minimal();
    j["din_grade"] = 7.5;
    EXPECT_THROW(from_json(j), ConfigError);
    j = minimal();
    j["seed"] = -1;
    EXPECT_THROW(from_json(j), ConfigError);
    j = minimal();
    j["conditions"] = {{"input_speed_hz", "40"}};
    EXPECT_THROW(from_json(j), ConfigError);
    EXPECT_THROW(parse_json_text("{\"schema_version\": 1,", "x.json"), ConfigError);
}

TEST(Config, PresetsMatchSetups) {
    EXPECT_EQ(preset_names(), (std::vector<std::string>{"involute-destruction", "pitting", "tooth-breakage"}));
    for (const char* name : {"tooth-breakage", "pitting"}) {
        const RunConfig c = preset(name);
        EXPECT_EQ(c.transmission.pinion.tooth_count, 17);
        EXPECT_EQ(c.transmission.gear.tooth_count, 38);
        EXPECT_EQ(c.conditions.input_speed_hz, 40.0);
        EXPECT_EQ(c.conditions.load_torque_nm, 10.0);
        EXPECT_EQ(c.conditions.sampling_rate_hz, 25000.0);
        EXPECT_EQ(c.din_grade, 7);
        EXPECT_NO_THROW(c.validate());
    }
    const RunConfig c = preset("involute-destruction");
    EXPECT_EQ(c.transmission.pinion.tooth_count, 18);
    EXPECT_EQ(c.transmission.gear.tooth_count, 35);
    EXPECT_EQ(c.conditions.input_speed_hz, 45.0);
    EXPECT_EQ(c.conditions.load_torque_nm, 15.0);
    EXPECT_EQ(c.conditions.sampling_rate_hz, 50000.0);
    EXPECT_EQ(c.din_grade, 8);
    EXPECT_EQ(c.transmission.gear.module_mm, 3.0);
    EXPECT_THROW(preset("nope"), ConfigError);
}

TEST(Config, ValidateRejectsShortDuration) {
    RunConfig c = preset("tooth-breakage");
    c.conditions.duration_s = 0.05;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Fault, ShorthandParses) {
    EXPECT_TRUE(is_healthy(parse_fault("healthy")));
    const auto b = std::get<ToothBreakage>(parse_fault("breakage:0.25:tooth=4:wheel=pinion"));
    EXPECT_EQ(b.tip_loss_fraction, 0.25);
    EXPECT_EQ(b.tooth_index, 4);
    EXPECT_EQ(b.wheel, Wheel::pinion);
    const auto p = std::get<Pitting>(parse_fault("pitting:0.4:teeth=2,7:position=0.3:extent=0.5"));
    EXPECT_EQ(p.pit_depth_mm, 0.4);
    EXPECT_EQ(p.tooth_indices, (std::vector<int>{2, 7}));
    EXPECT_EQ(p.flank_position, 0.3);
    EXPECT_EQ(p.axial_extent_fraction, 0.5);
    EXPECT_EQ(p.wheel, Wheel::gear);
    const auto d = std::get<InvoluteDestruction>(parse_fault("involute:12"));
    EXPECT_EQ(d.deviation_amplitude_um, 12.0);
    EXPECT_EQ(d.tooth_indices, (std::vector<int>{0}));
}

TEST(Fault, ShorthandRejectsMalformed) {
    for (const char* bad : {"", "healthy:1", "breakage", "breakage:x", "breakage:0.2:teeth=1", "crack:0.1",
                            "pitting:0.3:position", "involute:5:wheel=ring", "breakage:0.2:tooth=1.5"})
        EXPECT_THROW(parse_fault(bad), ConfigError) << bad;
}

TEST(Fault, JsonRoundTrip) {
    for (const char* s : {"healthy", "breakage:0.5:tooth=11", "pitting:0.2:teeth=0,3:wheel=pinion", "involute:7.5"}) {
        const FaultSpec f = parse_fault(s);
        EXPECT_EQ(fault_to_json(fault_from_json(fault_to_json(f))), fault_to_json(f)) << s;
    }
    EXPECT_THROW(fault_from_json({{"type", "healthy"}, {"wheel", "gear"}}), ConfigError);
}

TEST(Io, FormatDoubleRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) EXPECT_EQ(std::stod(format_double(v)), v);
    EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(Io, AtomicFileCommits) {
    TempDir d;
    const fs::path f = d.path() / "sub" / "out.txt";
    write_file_atomic(f, "hello\n");
    EXPECT_EQ(read_file(f), "hello\n");
    EXPECT_EQ(d.listing(), (std::vector<std::string>{"sub"}));
    EXPECT_EQ(fs::directory_iterator(d.path() / "sub")->path().filename(), "out.txt");
}

TEST(Io, AtomicFileLeavesNothingOnFailure) {
    TempDir d;
    const fs::path f = d.path() / "out.txt";
    try {
        AtomicFile a(f);
        a.stream() << "partial";
        throw NumericalError("boom");
    } catch (const NumericalError&) {
    }
    EXPECT_TRUE(d.listing().empty());
}

TEST(Io, AtomicFileKeepsOldContentOnFailure) {
    TempDir d;
    const fs::path f = d.path() / "out.txt";
    write_file_atomic(f, "old");
    {
        AtomicFile a(f);
        a.stream() << "new";
    }
    EXPECT_EQ(read_file(f), "old");
    EXPECT_EQ(d.listing(), (std::vector<std::string>{"out.txt"}));
}

TEST(Io, UnwritableTargetIsIoError) {
    TempDir d;
    write_file_atomic(d.path() / "file", "x");
    EXPECT_THROW(write_file_atomic(d.path() / "file" / "child.txt", "y"), IoError);
    EXPECT_THROW(read_file(d.path() / "missing"), IoError);
}

TEST(Io, SignalCsvRoundTrip) {
    TempDir d;
    SimulationResult r;
    r.sampling_rate_hz = 1000.0;
    const Eigen::Index n = 50;
    r.time = Eigen::VectorXd::LinSpaced(n, 0.0, 0.049);
    r.accel_y = gearsim::testing::gaussian_noise(n, 3);
    r.shaft_angle = 2.0 * pi * 100.0 * r.time;
    const fs::path csv = d.path() / "signal.csv";
    {
        AtomicFile a(csv);
        write_signal_csv(a.stream(), r);
        a.commit();
    }
    const CsvTable t = read_numeric_csv(csv);
    EXPECT_EQ(t.header, (std::vector<std::string>{"time_s", "accel_y_ms2", "shaft_angle_rad"}));
    EXPECT_EQ(t.column(1), r.accel_y);
    EXPECT_EQ(t.column(0), r.time);
}

TEST(Io, ManifestEchoesConfigAndSolver) {
    RunConfig c = preset("pitting");
    c.seed = 9;
    SimulationResult r;
    r.label = "healthy";
    r.stats.steps = 10;
    r.stats.iteration_histogram[1] = 7;
    r.stats.iteration_histogram[2] = 3;
    r.tach_pulses = {0.5, 10.25};
    const json m = manifest_json(to_json(c), r, "signal.csv", false);
    EXPECT_EQ(m.at("seed"), 9);
    EXPECT_FALSE(m.contains("wall_time_s"));
    EXPECT_EQ(m.at("solver").at("iteration_histogram").at("2"), 3);
    EXPECT_EQ(to_json(from_json(m.at("config"))), to_json(c));
    EXPECT_TRUE(manifest_json(to_json(c), r, "signal.csv", true).contains("wall_time_s"));
}

TEST(Io, LoadSignalTachSources) {
    TempDir d;
    const fs::path a = d.path() / "a.csv";
    write_file_atomic(a, "time_s,accel_ms2,tach\n0,1,1\n0.001,2,0\n0.002,3,0\n0.003,4,1\n0.004,5,0\n");
    const LoadedSignal s = load_signal(a, nullptr);
    EXPECT_NEAR(s.signal.rate, 1000.0, 1e-9);
    EXPECT_EQ(s.signal.tach, (std::vector<double>{0.0, 3.0}));
    EXPECT_EQ(s.signal.samples.size(), 5);

    const fs::path b = d.path() / "b.csv";
    write_file_atomic(b, "time_s,accel_y_ms2\n0,1\n0.5,2\n1,3\n");
    const json m = {{"tach_pulses", {0.25, 1.75}}, {"label", "pitting_0.2"}};
    const LoadedSignal sb = load_signal(b, &m);
    EXPECT_EQ(sb.signal.tach, (std::vector<double>{0.25, 1.75}));
    EXPECT_EQ(sb.label, "pitting_0.2");
    EXPECT_THROW(load_signal(b, nullptr), ConfigError);

    const fs::path c = d.path() / "c.csv";
    std::ostringstream os;
    os << "time_s,accel_y_ms2,shaft_angle_rad\n";
    for (int i = 0; i < 100; ++i) os << i * 0.01 << ",0," << format_double(2.0 * pi * 0.03 * i) << '\n';
    write_file_atomic(c, os.str());
    const LoadedSignal sc = load_signal(c, nullptr);
    ASSERT_EQ(sc.signal.tach.size(), 2u);
    EXPECT_NEAR(sc.signal.tach[1] - sc.signal.tach[0], 1.0 / 0.03, 1e-6);
}

TEST(Io, MalformedCsvRejected) {
    TempDir d;
    const fs::path a = d.path() / "a.csv";
    write_file_atomic(a, "time_s,accel_ms2\n0,1\n0.1\n");
    EXPECT_THROW(read_numeric_csv(a), ConfigError);
    write_file_atomic(a, "time_s,accel_ms2\n0,abc\n");
    EXPECT_THROW(read_numeric_csv(a), ConfigError);
    write_file_atomic(a, "time_s,pressure\n0,1\n1,2\n");
    EXPECT_THROW(load_signal(a, nullptr), ConfigError);
}

TEST(Io, CycleCsvRoundTrip) {
    TempDir d;
    const std::vector<std::string> names{"s0", "s1"};
    const std::vector<Eigen::VectorXd> sig{gearsim::testing::gaussian_noise(16, 1),
                                           gearsim::testing::gaussian_noise(16, 2)};
    const fs::path f = d.path() / "difference.csv";
    {
        AtomicFile a(f);
        write_cycle_csv(a.stream(), names, sig);
        a.commit();
    }
    const auto [n, s] = read_cycle_csv(f);
    EXPECT_EQ(n, names);
    EXPECT_EQ(s[0], sig[0]);
    EXPECT_EQ(s[1], sig[1]);
}

TEST(Io, CiTableRoundTrip) {
    TempDir d;
    CiTable t;
    t.labels = {"healthy", "tooth_breakage_0.5"};
    t.columns = default_error_columns();
    t.values.resize(2, 2);
    t.values << 0.1, 1.0 / 3.0, -0.2, 1e-17;
    const fs::path f = d.path() / "cis.csv";
    {
        AtomicFile a(f);
        write_ci_table(a.stream(), {"a", "b"}, t);
        a.commit();
    }
    std::vector<std::string> names;
    const CiTable back = read_ci_table(f, &names);
    EXPECT_EQ(names, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(back.labels, t.labels);
    EXPECT_EQ(back.columns, t.columns);
    EXPECT_EQ(back.values, t.values);
    write_file_atomic(f, "signal,label,bogus\na,healthy,1\n");
    EXPECT_THROW(read_ci_table(f), ConfigError);
    write_file_atomic(f, "name,label,log_diff_rms\na,healthy,1\n");
    EXPECT_THROW(read_ci_table(f), ConfigError);
}
