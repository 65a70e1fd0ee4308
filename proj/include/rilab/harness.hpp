#pragma once
//
// Experiment plumbing: the flat key = value configuration, K specifications,
// deterministic replica-parallel reduction, and the result record.
//

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rilab/error.hpp"
#include "rilab/lattice.hpp"

namespace rilab {

inline constexpr const char* kVersion = "rilab 0.1.0";

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{
        "eq1-check",  "poisson-check",       "pair-law-check",   "lastvisit-check", "bridge-law-check",
        "trace-vs-structured", "ikn-connectivity", "reroute-merge", "trifurcation-census", "bk-audit",
        "isoperimetry-table",  "oracle-check",     "potential",        "trace",           "structured"};
    return names;
}

struct ExperimentConfig {
    std::string experiment;
    int dim = 3;
    double u = 1.0;
    std::vector<double> levels;        // extra intensities sharing one cloud (eq1-check); empty: just u
    int window = 12;                   // L∞ radius of the window W
    std::vector<int> windows{8, 16, 32}; // bk-audit / isoperimetry sizes
    std::string k = "point";
    std::vector<int> kprime{8, 16, 24};
    std::vector<int> t{1};
    std::uint64_t replicas = 1000;
    std::uint64_t seed = 42;
    double tolerance_cap = 1e-3;
    int cap_radius_max = 96;           // largest box radius of the adaptive capacity solver
    double bridge_tail = 1e-3;
    std::uint64_t horizon = 0;         // step cap per walk, 0 = none
    std::string field_format = "rle";  // trace dumps: rle or coords
    std::string out;
    std::string csv;

    bool operator==(const ExperimentConfig&) const = default;

    std::vector<double> all_levels() const {
        std::vector<double> v = levels;
        v.push_back(u);
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v); // shortest round-trip form
    return std::string(buf, res.ptr);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
    T v{};
    auto s = trim(text);
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ConfigError("bad value for " + key + ": '" + text + "'");
    return v;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
    std::vector<T> out;
    if (trim(text).empty()) return out;
    std::istringstream is(text);
    std::string part;
    while (std::getline(is, part, ',')) out.push_back(parse_number<T>(key, part));
    return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        if constexpr (std::is_floating_point_v<T>) s += format_double(v[i]);
        else s += std::to_string(v[i]);
    }
    return s;
}

} // namespace detail

/// Sets one key; unknown keys are errors.
inline void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& value) {
    using namespace detail;
    if (key == "experiment") c.experiment = trim(value);
    else if (key == "dim") c.dim = parse_number<int>(key, value);
    else if (key == "u") c.u = parse_number<double>(key, value);
    else if (key == "levels") c.levels = parse_list<double>(key, value);
    else if (key == "window") c.window = parse_number<int>(key, value);
    else if (key == "windows") c.windows = parse_list<int>(key, value);
    else if (key == "k") c.k = trim(value);
    else if (key == "kprime") c.kprime = parse_list<int>(key, value);
    else if (key == "t") c.t = parse_list<int>(key, value);
    else if (key == "replicas") c.replicas = parse_number<std::uint64_t>(key, value);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "tolerance_cap") c.tolerance_cap = parse_number<double>(key, value);
    else if (key == "cap_radius_max") c.cap_radius_max = parse_number<int>(key, value);
    else if (key == "bridge_tail") c.bridge_tail = parse_number<double>(key, value);
    else if (key == "horizon") c.horizon = parse_number<std::uint64_t>(key, value);
    else if (key == "field_format") c.field_format = trim(value);
    else if (key == "out") c.out = trim(value);
    else if (key == "csv") c.csv = trim(value);
    else throw ConfigError("unknown config key '" + key + "'");
}

/// Reads "key = value" lines; '#' starts a comment.
inline void apply_config_text(ExperimentConfig& c, const std::string& text) {
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + " has no '='");
        set_config_value(c, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
    }
}

inline ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    apply_config_text(c, text);
    return c;
}

inline std::string serialize(const ExperimentConfig& c) {
    using detail::format_double;
    using detail::join;
    std::ostringstream os;
    os << "experiment = " << c.experiment << "\n"
       << "dim = " << c.dim << "\n"
       << "u = " << format_double(c.u) << "\n"
       << "levels = " << join(c.levels) << "\n"
       << "window = " << c.window << "\n"
       << "windows = " << join(c.windows) << "\n"
       << "k = " << c.k << "\n"
       << "kprime = " << join(c.kprime) << "\n"
       << "t = " << join(c.t) << "\n"
       << "replicas = " << c.replicas << "\n"
       << "seed = " << c.seed << "\n"
       << "tolerance_cap = " << format_double(c.tolerance_cap) << "\n"
       << "cap_radius_max = " << c.cap_radius_max << "\n"
       << "bridge_tail = " << format_double(c.bridge_tail) << "\n"
       << "horizon = " << c.horizon << "\n"
       << "field_format = " << c.field_format << "\n"
       << "out = " << c.out << "\n"
       << "csv = " << c.csv << "\n";
    return os.str();
}

inline nlohmann::ordered_json to_json(const ExperimentConfig& c) {
    return {{"experiment", c.experiment}, {"dim", c.dim},           {"u", c.u},
            {"levels", c.levels},         {"window", c.window},     {"windows", c.windows},
            {"k", c.k},                   {"kprime", c.kprime},     {"t", c.t},
            {"replicas", c.replicas},     {"seed", c.seed},         {"tolerance_cap", c.tolerance_cap},
            {"cap_radius_max", c.cap_radius_max},
            {"bridge_tail", c.bridge_tail}, {"horizon", c.horizon}, {"field_format", c.field_format},
            {"out", c.out},               {"csv", c.csv}};
}

/// Throws ConfigError naming the first bad field.
inline void validate(const ExperimentConfig& c) {
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), c.experiment) == names.end())
        throw ConfigError("unknown experiment '" + c.experiment + "'");
    if (c.dim < 3 || c.dim > 5) throw ConfigError("dim must be 3, 4 or 5 (got " + std::to_string(c.dim) + ")");
    if (!(c.u > 0)) throw ConfigError("u must be > 0");
    for (double v : c.levels)
        if (!(v > 0)) throw ConfigError("levels must be > 0");
    if (c.window < 1) throw ConfigError("window radius must be >= 1");
    if (c.windows.empty()) throw ConfigError("windows must not be empty");
    for (int w : c.windows)
        if (w < 1) throw ConfigError("window radii must be >= 1");
    if (c.kprime.empty()) throw ConfigError("kprime must not be empty");
    for (std::size_t i = 0; i < c.kprime.size(); ++i)
        if (c.kprime[i] < 1 || (i && c.kprime[i] <= c.kprime[i - 1]))
            throw ConfigError("kprime radii must be positive and increasing");
    if (c.t.empty()) throw ConfigError("t must not be empty");
    for (int t : c.t)
        if (t < 1) throw ConfigError("trifurcation radius t must be >= 1");
    if (c.replicas == 0) throw ConfigError("replicas must be >= 1");
    if (!(c.tolerance_cap > 0)) throw ConfigError("tolerance_cap must be > 0");
    if (c.cap_radius_max < 12) throw ConfigError("cap_radius_max must be >= 12");
    if (!(c.bridge_tail > 0 && c.bridge_tail < 1)) throw ConfigError("bridge_tail must lie in (0, 1)");
    if (c.field_format != "rle" && c.field_format != "coords") throw ConfigError("field_format must be rle or coords");
    if (c.k.empty()) throw ConfigError("k must not be empty");
}

/// K from a spec: point, pair, box:L (corner at the origin, side L),
/// cube:r (L∞ radius r around the origin), ball:r (L1), file:path.
template <int D>
FiniteSet<D> parse_k_spec(const std::string& spec) {
    auto colon = spec.find(':');
    std::string kind = spec.substr(0, colon);
    std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
    auto number = [&]() {
        if (arg.empty()) throw ConfigError("K spec '" + spec + "' needs a size");
        return detail::parse_number<int>("k", arg);
    };
    if (kind == "point" && arg.empty()) return FiniteSet<D>{origin<D>()};
    if (kind == "pair" && arg.empty()) return FiniteSet<D>{origin<D>(), unit<D>(0)};
    if (kind == "box") {
        int l = number();
        if (l < 1) throw ConfigError("box side must be >= 1");
        Box<D> hull(Site<D>{}, l);
        std::vector<Site<D>> v;
        for (std::size_t i = 0; i < hull.size(); ++i) {
            auto x = hull.site(i);
            bool in = true;
            for (int a = 0; a < D; ++a) in = in && x[a] >= 0 && x[a] < l;
            if (in) v.push_back(x);
        }
        return FiniteSet<D>(std::move(v));
    }
    if (kind == "cube") {
        int r = number();
        if (r < 0) throw ConfigError("cube radius must be >= 0");
        return Box<D>(origin<D>(), r).to_set();
    }
    if (kind == "ball") {
        int r = number();
        if (r < 0) throw ConfigError("ball radius must be >= 0");
        return ball<D>(origin<D>(), r);
    }
    if (kind == "file") {
        std::ifstream is(arg);
        if (!is) throw ConfigError("cannot open K file '" + arg + "'");
        auto k = read_finite_set<D>(is);
        if (k.empty()) throw ConfigError("K file '" + arg + "' is empty");
        return k;
    }
    throw ConfigError("unknown K spec '" + spec + "'");
}

/// Worker count from RILAB_WORKERS (default: hardware threads).
inline unsigned worker_count() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("RILAB_WORKERS")) {
        try {
            int v = std::stoi(env);
            if (v >= 1) return unsigned(v);
        } catch (const std::exception&) {
        }
        throw ConfigError(std::string("RILAB_WORKERS must be a positive integer, got '") + env + "'");
    }
    return hw;
}

inline constexpr std::uint64_t kReplicaBlock = 256;

/// Runs fn(begin, end) over fixed blocks of replica indices and returns the
/// partials in block order. Blocks do not depend on the worker count, so an
/// in-order reduction of the result is worker-independent.
template <class Partial>
std::vector<Partial> run_blocks(std::uint64_t replicas, const std::function<Partial(std::uint64_t, std::uint64_t)>& fn,
                                unsigned workers = worker_count(), std::uint64_t block = kReplicaBlock) {
    const std::uint64_t nblocks = (replicas + block - 1) / block;
    std::vector<Partial> out(nblocks);
    if (nblocks == 0) return out;
    workers = unsigned(std::min<std::uint64_t>(workers, nblocks));
    std::vector<std::exception_ptr> errors(workers);
    auto work = [&](unsigned w) {
        try {
            for (std::uint64_t b = w; b < nblocks; b += workers)
                out[b] = fn(b * block, std::min(replicas, (b + 1) * block));
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    if (workers <= 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

/// Named estimate: statistical SE and systematic budget kept apart.
struct Estimate {
    Estimate() = default;
    Estimate(std::string n, double v, double s, double sys) : name(std::move(n)), value(v), se(s), systematic(sys) {}

    std::string name;
    double value = 0;
    double se = 0;
    double systematic = 0;
    nlohmann::ordered_json extra = nlohmann::ordered_json::object();

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j{{"name", name}, {"value", value}, {"se", se}, {"systematic", systematic}};
        for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
        return j;
    }
};

/// Systematic-error ingredients of a run; the total is their sum.
class ErrorBudget {
public:
    void add(const std::string& name, double value) { items_.emplace_back(name, value); }
    double total() const {
        double s = 0;
        for (const auto& [n, v] : items_) s += v;
        return s;
    }
    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j = nlohmann::ordered_json::object();
        for (const auto& [n, v] : items_) j[n] = v;
        j["total"] = total();
        return j;
    }

private:
    std::vector<std::pair<std::string, double>> items_;
};

struct ResultRecord {
    ResultRecord() = default;
    explicit ResultRecord(ExperimentConfig c) : config(std::move(c)) {}

    ExperimentConfig config;
    std::vector<Estimate> estimates;
    ErrorBudget budget;
    nlohmann::ordered_json checks = nlohmann::ordered_json::object();
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    nlohmann::ordered_json details = nlohmann::ordered_json::object();
    double wall_clock = -1; // reported only when timing was requested

    bool passed() const {
        for (auto it = checks.begin(); it != checks.end(); ++it)
            if (!it.value().get<bool>()) return false;
        return true;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["version"] = kVersion;
        j["config"] = rilab::to_json(config);
        j["rng"] = {{"generator", "xoshiro256**"},
                    {"streams", "splitmix64(seed, replica, trajectory)"},
                    {"seed", config.seed}};
        j["estimates"] = nlohmann::ordered_json::array();
        for (const auto& e : estimates) j["estimates"].push_back(e.to_json());
        j["systematic_budget"] = budget.to_json();
        j["checks"] = checks;
        j["passed"] = passed();
        if (!details.empty()) j["details"] = details;
        j["rows"] = rows;
        if (wall_clock >= 0) j["wall_clock_seconds"] = wall_clock;
        return j;
    }
};

/// Rows as CSV; the header is the key order of the first row.
inline std::string rows_to_csv(const nlohmann::ordered_json& rows) {
    std::ostringstream os;
    if (rows.empty()) return "";
    std::vector<std::string> keys;
    for (auto it = rows[0].begin(); it != rows[0].end(); ++it) keys.push_back(it.key());
    for (std::size_t i = 0; i < keys.size(); ++i) os << (i ? "," : "") << keys[i];
    os << "\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < keys.size(); ++i) {
            if (i) os << ",";
            if (!r.contains(keys[i])) continue;
            const auto& v = r[keys[i]];
            if (v.is_string()) os << v.get<std::string>();
            else os << v.dump();
        }
        os << "\n";
    }
    return os.str();
}

} // namespace rilab
