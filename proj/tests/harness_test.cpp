#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "rilab/experiments.hpp"

using namespace rilab;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() / ("rilab_test_" + std::to_string(::getpid()) + "_" +
                                                         std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

int run_cli(const std::string& args, const std::string& env = "") {
    std::string cmd = env + (env.empty() ? "" : " ") + RILAB_CLI + std::string(" ") + args + " 2>/dev/null";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class ScopedEnv {
public:
    ScopedEnv(const char* name, const char* value) : name_(name) {
        if (const char* old = std::getenv(name)) old_ = old, had_ = true;
        ::setenv(name, value, 1);
    }
    ~ScopedEnv() {
        if (had_) ::setenv(name_.c_str(), old_.c_str(), 1);
        else ::unsetenv(name_.c_str());
    }

private:
    std::string name_, old_;
    bool had_ = false;
};

ExperimentConfig small_pair_law() {
    ExperimentConfig c;
    c.experiment = "pair-law-check";
    c.k = "pair";
    c.window = 3;
    c.replicas = 3000;
    c.seed = 7;
    return c;
}

} // namespace

TEST(Config, SerializeParseRoundTrip) {
    ExperimentConfig c;
    EXPECT_EQ(parse_config(serialize(c)), c);
    c.experiment = "bk-audit";
    c.dim = 4;
    c.u = 0.1 + 0.2; // not exactly representable in short decimal
    c.levels = {0.5, 1.0 / 3};
    c.window = 20;
    c.windows = {4, 9};
    c.k = "file:/tmp/k set.txt";
    c.kprime = {3, 5, 11};
    c.t = {1, 2, 3};
    c.replicas = 123456789012ull;
    c.seed = 18446744073709551615ull;
    c.tolerance_cap = 2.5e-4;
    c.cap_radius_max = 48;
    c.bridge_tail = 1e-2;
    c.horizon = 77;
    c.field_format = "coords";
    c.out = "run.json";
    c.csv = "run.csv";
    auto text = serialize(c);
    EXPECT_EQ(parse_config(text), c);
    EXPECT_EQ(serialize(parse_config(text)), text);
}

TEST(Config, CommentsBlankLinesAndOverrides) {
    auto c = parse_config("# header\n\nexperiment = eq1-check  # trailing\nu=2\nu = 0.5\n");
    EXPECT_EQ(c.experiment, "eq1-check");
    EXPECT_DOUBLE_EQ(c.u, 0.5);
    EXPECT_EQ(c.window, ExperimentConfig{}.window);
}

TEST(Config, ParseErrors) {
    EXPECT_THROW(parse_config("nonsense = 1\n"), ConfigError);
    EXPECT_THROW(parse_config("u\n"), ConfigError);
    EXPECT_THROW(parse_config("dim = three\n"), ConfigError);
    EXPECT_THROW(parse_config("window = 3.5\n"), ConfigError);
    EXPECT_THROW(parse_config("kprime = 8,,16\n"), ConfigError);
}

TEST(Config, Validation) {
    ExperimentConfig c;
    c.experiment = "eq1-check";
    EXPECT_NO_THROW(validate(c));
    auto bad = [&](auto mutate) {
        auto d = c;
        mutate(d);
        EXPECT_THROW(validate(d), ConfigError);
    };
    bad([](ExperimentConfig& d) { d.replicas = 0; });
    bad([](ExperimentConfig& d) { d.experiment = "nope"; });
    bad([](ExperimentConfig& d) { d.dim = 2; });
    bad([](ExperimentConfig& d) { d.dim = 6; });
    bad([](ExperimentConfig& d) { d.u = 0; });
    bad([](ExperimentConfig& d) { d.levels = {-1}; });
    bad([](ExperimentConfig& d) { d.kprime = {16, 8}; });
    bad([](ExperimentConfig& d) { d.kprime = {}; });
    bad([](ExperimentConfig& d) { d.t = {0}; });
    bad([](ExperimentConfig& d) { d.tolerance_cap = 0; });
    bad([](ExperimentConfig& d) { d.bridge_tail = 1; });
    bad([](ExperimentConfig& d) { d.cap_radius_max = 4; });
    bad([](ExperimentConfig& d) { d.field_format = "png"; });
    bad([](ExperimentConfig& d) { d.window = 0; });
}

TEST(Config, AllLevelsSortedUnique) {
    ExperimentConfig c;
    c.u = 1.0;
    c.levels = {2.0, 0.5, 1.0};
    EXPECT_EQ(c.all_levels(), (std::vector<double>{0.5, 1.0, 2.0}));
}

TEST(KSpec, Shapes) {
    EXPECT_EQ(parse_k_spec<3>("point").size(), 1u);
    auto pair = parse_k_spec<3>("pair");
    EXPECT_EQ(pair.size(), 2u);
    EXPECT_TRUE(pair.contains(unit<3>(0)));
    auto box = parse_k_spec<3>("box:2");
    EXPECT_EQ(box.size(), 8u);
    for (const auto& x : box)
        for (int c : x) EXPECT_TRUE(c == 0 || c == 1);
    EXPECT_EQ(parse_k_spec<3>("cube:1").size(), 27u);
    EXPECT_EQ(parse_k_spec<3>("ball:1").size(), 7u);
    EXPECT_EQ(parse_k_spec<4>("ball:2").size(), ball_size<4>(2));
    EXPECT_THROW(parse_k_spec<3>("blob"), ConfigError);
    EXPECT_THROW(parse_k_spec<3>("box:"), ConfigError);
    EXPECT_THROW(parse_k_spec<3>("box:0"), ConfigError);
    EXPECT_THROW(parse_k_spec<3>("point:3"), ConfigError);
    EXPECT_THROW(parse_k_spec<3>("file:/nonexistent/k.txt"), ConfigError);
}

TEST(KSpec, FileRoundTrip) {
    TempDir dir;
    auto path = dir.path / "k.txt";
    FiniteSet<3> k{Site<3>{0, 0, 0}, Site<3>{2, -1, 5}, Site<3>{1, 1, 1}};
    {
        std::ofstream os(path);
        write_finite_set(os, k);
    }
    EXPECT_EQ(parse_k_spec<3>("file:" + path.string()), k);
    EXPECT_THROW(parse_k_spec<4>("file:" + path.string()), ConfigError);
}

TEST(Blocks, ReductionIndependentOfWorkers) {
    auto fn = [](std::uint64_t b, std::uint64_t e) {
        double s = 0;
        for (auto r = b; r < e; ++r) {
            auto rng = Rng::stream(3, r);
            s += rng.uniform() / 3.0;
        }
        return s;
    };
    auto sum = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x;
        return s;
    };
    const auto one = run_blocks<double>(5000, fn, 1);
    for (unsigned w : {2u, 3u, 7u, 64u}) {
        auto many = run_blocks<double>(5000, fn, w);
        EXPECT_EQ(many, one);
        EXPECT_EQ(sum(many), sum(one)); // bit-identical, not just close
    }
    EXPECT_EQ(one.size(), (5000 + kReplicaBlock - 1) / kReplicaBlock);
    EXPECT_TRUE(run_blocks<double>(0, fn, 4).empty());
}

TEST(Blocks, ExceptionsPropagate) {
    auto fn = [](std::uint64_t b, std::uint64_t) -> int {
        if (b >= 512) throw ToleranceError("late block");
        return 1;
    };
    EXPECT_THROW(run_blocks<int>(2000, fn, 3), ToleranceError);
}

TEST(Blocks, WorkerEnvironment) {
    {
        ScopedEnv env("RILAB_WORKERS", "3");
        EXPECT_EQ(worker_count(), 3u);
    }
    {
        ScopedEnv env("RILAB_WORKERS", "zero");
        EXPECT_THROW(worker_count(), ConfigError);
    }
}

TEST(Record, BudgetIsSumOfIngredients) {
    ErrorBudget b;
    b.add("a", 1e-4);
    b.add("b", 2.5e-5);
    b.add("c", 0.0);
    EXPECT_DOUBLE_EQ(b.total(), 1.25e-4);
    auto j = b.to_json();
    EXPECT_DOUBLE_EQ(j["total"].get<double>(), b.total());
    EXPECT_EQ(j.begin().key(), "a");
}

TEST(Record, FieldOrderAndTiming) {
    ResultRecord rec{ExperimentConfig{}};
    rec.estimates.push_back({"x", 1.0, 0.1, 0.01});
    rec.checks["fine"] = true;
    auto j = rec.to_json();
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    EXPECT_EQ(keys, (std::vector<std::string>{"version", "config", "rng", "estimates", "systematic_budget", "checks",
                                              "passed", "rows"}));
    const auto& e = j["estimates"][0];
    EXPECT_TRUE(e.contains("se"));
    EXPECT_TRUE(e.contains("systematic"));
    EXPECT_FALSE(j.contains("wall_clock_seconds"));
    rec.wall_clock = 1.5;
    EXPECT_TRUE(rec.to_json().contains("wall_clock_seconds"));
    rec.checks["broken"] = false;
    EXPECT_FALSE(rec.passed());
}

TEST(Record, CsvUsesFirstRowKeys) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    rows.push_back({{"a", 1}, {"b", "x"}});
    rows.push_back({{"a", 2.5}, {"c", 0}});
    EXPECT_EQ(rows_to_csv(rows), "a,b\n1,x\n2.5,\n");
    EXPECT_EQ(rows_to_csv(nlohmann::ordered_json::array()), "");
}

TEST(RunExperiment, DeterministicAcrossRunsAndWorkers) {
    auto c = small_pair_law();
    std::string ref;
    {
        ScopedEnv env("RILAB_WORKERS", "1");
        ref = run_experiment(c).to_json().dump();
        EXPECT_EQ(run_experiment(c).to_json().dump(), ref);
    }
    {
        ScopedEnv env("RILAB_WORKERS", "4");
        EXPECT_EQ(run_experiment(c).to_json().dump(), ref);
    }
    c.seed = 8;
    EXPECT_NE(run_experiment(c).to_json().dump(), ref);
}

TEST(RunExperiment, RejectsBeforeComputing) {
    auto c = small_pair_law();
    c.replicas = 0;
    EXPECT_THROW(run_experiment(c), ConfigError);
    c = small_pair_law();
    c.k = "ball:5"; // not inside a radius-3 window
    EXPECT_THROW(run_experiment(c), ConfigError);
    c = small_pair_law();
    c.k = "point;pair";
    EXPECT_THROW(run_experiment(c), ConfigError);
}

// P[I^u ∩ {0} = ∅] at u = 1 against exp(-cap{0}), cap{0} = 1/g(0) ≈ 0.6595.
TEST(RunExperiment, VacancyOfTheOrigin) {
    ExperimentConfig c;
    c.experiment = "eq1-check";
    c.k = "point";
    c.u = 1.0;
    c.window = 4;
    c.replicas = 100000;
    c.seed = 42;
    auto rec = run_experiment(c);
    ASSERT_EQ(rec.estimates.size(), 1u);
    const auto& e = rec.estimates[0];
    const double ref = std::exp(-1.0 / 1.5163860591519780);
    EXPECT_NEAR(e.value, ref, 3 * e.se + e.systematic);
    EXPECT_NEAR(e.extra["reference"].get<double>(), ref, 1e-5);
    EXPECT_TRUE(rec.passed());
    EXPECT_GE(rec.budget.total(), 0.0);
}

TEST(RunExperiment, IsoperimetryExact) {
    ExperimentConfig c;
    c.experiment = "isoperimetry-table";
    c.windows = {2, 4};
    auto rec = run_experiment(c);
    ASSERT_EQ(rec.rows.size(), 2u);
    // side 2: every site is on the boundary; side 4: 56 of 64
    EXPECT_EQ(rec.rows[0]["ratio_num"].get<int>(), 1);
    EXPECT_EQ(rec.rows[1]["ratio_num"].get<int>(), 7);
    EXPECT_EQ(rec.rows[1]["ratio_den"].get<int>(), 8);
    EXPECT_TRUE(rec.passed());
}

TEST(Cli, ZeroReplicasIsConfigErrorWithoutOutput) {
    TempDir dir;
    auto out = dir.path / "run.json";
    EXPECT_EQ(run_cli("eq1-check --replicas 0 --out " + out.string()), 2);
    EXPECT_FALSE(std::filesystem::exists(out));
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run_cli("no-such-experiment"), 2);
    EXPECT_EQ(run_cli("eq1-check --dim 7"), 2);
    EXPECT_EQ(run_cli("eq1-check --bogus-flag 1"), 2);
    EXPECT_EQ(run_cli("eq1-check --config /nonexistent.cfg"), 2);
    EXPECT_EQ(run_cli("--list"), 0);
    // a capacity tolerance the capped solver cannot reach
    EXPECT_EQ(run_cli("potential --tolerance-cap 1e-7 --cap-radius-max 24"), 3);
}

TEST(Cli, ByteIdenticalOutputAcrossRunsAndWorkers) {
    TempDir dir;
    // same output paths every time, since they are echoed in the record
    auto out = dir.path / "run.json", csv = dir.path / "run.csv";
    const std::string args = "pair-law-check --k pair --window 3 --replicas 2000 --seed 11 --out " + out.string() +
                             " --csv " + csv.string();
    ASSERT_EQ(run_cli(args, "RILAB_WORKERS=1"), 0);
    const auto first = slurp(out), first_csv = slurp(csv);
    EXPECT_FALSE(first.empty());
    ASSERT_EQ(run_cli(args, "RILAB_WORKERS=1"), 0);
    EXPECT_EQ(slurp(out), first);
    ASSERT_EQ(run_cli(args, "RILAB_WORKERS=3"), 0);
    EXPECT_EQ(slurp(out), first);
    EXPECT_EQ(slurp(csv), first_csv);
    EXPECT_EQ(first_csv, rows_to_csv(nlohmann::ordered_json::parse(first)["rows"]));
}

TEST(Cli, ConfigFileAndFlagOverride) {
    TempDir dir;
    auto cfg = dir.path / "run.cfg";
    {
        std::ofstream os(cfg);
        os << "experiment = isoperimetry-table\nwindows = 2,4\nseed = 5\n";
    }
    auto printed = dir.path / "printed.cfg";
    ASSERT_EQ(run_cli("--config " + cfg.string() + " --seed 9 --print-config > " + printed.string()), 0);
    auto c = parse_config(slurp(printed));
    EXPECT_EQ(c.experiment, "isoperimetry-table");
    EXPECT_EQ(c.windows, (std::vector<int>{2, 4}));
    EXPECT_EQ(c.seed, 9u);
    auto out = dir.path / "iso.json";
    ASSERT_EQ(run_cli("--config " + cfg.string() + " --out " + out.string()), 0);
    auto j = nlohmann::ordered_json::parse(slurp(out));
    EXPECT_EQ(j["config"]["seed"].get<int>(), 5);
    EXPECT_EQ(j["version"].get<std::string>(), kVersion);
    EXPECT_FALSE(j.contains("wall_clock_seconds"));
    ASSERT_EQ(run_cli("--config " + cfg.string() + " --timing --out " + out.string()), 0);
    EXPECT_TRUE(nlohmann::ordered_json::parse(slurp(out)).contains("wall_clock_seconds"));
}
