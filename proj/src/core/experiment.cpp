#include "core/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "core/distribution.hpp"
#include "core/population.hpp"

namespace bubblesim {

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace

Config Config::parse(const std::string& text) {
    Config cfg;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
        cfg.set(key, value);
    }
    return cfg;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

void Config::set(const std::string& key, const std::string& value) {
    for (auto& e : entries_)
        if (e.first == key) {
            e.second = value;
            return;
        }
    entries_.emplace_back(key, value);
}

bool Config::has(const std::string& key) const { return find(key) != nullptr; }

const std::string* Config::find(const std::string& key) const {
    for (const auto& e : entries_)
        if (e.first == key) return &e.second;
    return nullptr;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const std::string* v = find(key);
    return v ? *v : fallback;
}

double Config::get_double(const std::string& key, double fallback) const {
    const std::string* v = find(key);
    if (!v) return fallback;
    char* end = nullptr;
    const double x = std::strtod(v->c_str(), &end);
    if (end == v->c_str() || *end != '\0')
        throw std::invalid_argument("config key " + key + ": not a number: " + *v);
    return x;
}

long long Config::get_int(const std::string& key, long long fallback) const {
    const std::string* v = find(key);
    if (!v) return fallback;
    char* end = nullptr;
    const long long x = std::strtoll(v->c_str(), &end, 10);
    if (end == v->c_str() || *end != '\0')
        throw std::invalid_argument("config key " + key + ": not an integer: " + *v);
    return x;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    const std::string* v = find(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
    throw std::invalid_argument("config key " + key + ": not a boolean: " + *v);
}

std::string Config::serialize() const {
    std::string out;
    for (const auto& e : entries_) out += e.first + " = " + e.second + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

namespace {

// Lattice starts for the squashed intensity drivers, chosen so the squashed
// initial values equal the published ones: quarter_squash(x) = 0.2 and
// arctan_squash(x) = 0.5.
constexpr const char* kEtaLatticeStart = "3.0776835371752531";
constexpr const char* kThetaLatticeStart = "1";

void apply_study_common(Config& c) {
    c.set("grid.periods", "100");
    c.set("grid.horizon", "1");
    c.set("engine", "distribution");
    c.set("model", "simulation-study");
    c.set("market.kappa", "0.01");
    c.set("market.theta_scale", "1");
    c.set("market.x0_zero", "false");
    c.set("up_factor", "literal");
    c.set("output.trajectories", "0");
    if (!c.has("seed")) c.set("seed", "20240101");
    if (!c.has("threads")) c.set("threads", "0");

    c.set("driver.F.x0", "100");
    c.set("driver.F.sigma", "0");
    c.set("driver.Lambda.x0", "1");
    c.set("driver.Lambda.sigma", "0.3");
    c.set("driver.M.x0", "1");
    c.set("driver.M.sigma", "0.3");
    c.set("driver.Z_Theta.x0", "5");
    c.set("driver.Z_Theta.sigma", "0.2");
    c.set("driver.Z_theta.x0", kThetaLatticeStart);
    c.set("driver.Z_theta.sigma", "0.2");
    for (int i = 1; i <= 3; ++i)
        for (int j = 1; j <= 3; ++j) {
            const std::string suffix = std::to_string(i) + std::to_string(j);
            c.set("driver.Z_eta_" + suffix + ".x0", kEtaLatticeStart);
            c.set("driver.Z_eta_" + suffix + ".sigma", "0.4");
            c.set("driver.Z_varsigma_" + suffix + ".x0", kEtaLatticeStart);
            c.set("driver.Z_varsigma_" + suffix + ".sigma", "0.4");
        }
}

// p1 and p3 must match bitwise: the sentiment maps have unbounded slope at a
// balanced market, so any rounding asymmetry between optimists and pessimists
// self-amplifies. p2 absorbs the residual.
void set_initial_thirds(Config& c) {
    c.set("initial.p1", "0.3333333333333333");
    c.set("initial.p2", "0.3333333333333334");
    c.set("initial.p3", "0.3333333333333333");
}

} // namespace

void apply_preset(Config& c, const std::string& name) {
    if (name == "figure1") {
        apply_study_common(c);
        set_initial_thirds(c);
        c.set("paths", "6");
        c.set("output.trajectories", "6");
        return;
    }
    if (name == "figure2") {
        apply_study_common(c);
        set_initial_thirds(c);
        c.set("paths", "100000");
        return;
    }
    if (name == "figure3" || name == "figure3-tilt") {
        apply_study_common(c);
        c.set("initial.p1", "0.4444444444444444");
        c.set("initial.p2", "0.2222222222222222");
        c.set("initial.p3", "0.3333333333333333");
        c.set("paths", "1000000");
        // The published mean bubble of 0.1 at t_1 is only reproduced with the
        // true initial volume X_0 = Theta_0 (p1_0 - p3_0); forcing X_0 = 0
        // (market.x0_zero = true) lands at 0.267 instead. The flag stays
        // available for the alternative convention.
        c.set("market.x0_zero", "false");
        if (name == "figure3-tilt")
            c.set("tilt",
                  "Z_eta_13:1:0.95; Z_varsigma_13:1:0.95; Z_eta_31:1:0.1; Z_varsigma_31:1:0.1");
        return;
    }
    throw std::invalid_argument("unknown preset: " + name);
}

// ---------------------------------------------------------------------------
// Config -> engine pieces
// ---------------------------------------------------------------------------

DriverSet driver_set_from_config(const Config& cfg) {
    DriverSet set;
    set.grid = TimeGrid::uniform(static_cast<int>(cfg.get_int("grid.periods", 100)),
                                 cfg.get_double("grid.horizon", 1.0));
    const std::string conv = cfg.get_string("up_factor", "literal");
    if (conv == "literal") set.convention = UpFactor::paper_literal;
    else if (conv == "sqrt") set.convention = UpFactor::square_root;
    else throw std::invalid_argument("up_factor must be literal or sqrt, got " + conv);

    // Declaration order in the config defines the driver order (and with it
    // the draw order and CSV column order).
    for (const auto& entry : cfg.entries()) {
        const std::string& key = entry.first;
        if (key.rfind("driver.", 0) != 0) continue;
        const std::string name = key.substr(7, key.rfind('.') - 7);
        if (set.id_of(name) >= 0) continue;
        BinomialDriverSpec spec;
        spec.name = name;
        spec.x0 = cfg.get_double("driver." + name + ".x0", 1.0);
        spec.sigma = cfg.get_double("driver." + name + ".sigma", 0.0);
        set.drivers.push_back(spec);
    }

    if (cfg.get_string("model", "simulation-study") == "arbitrage") {
        set.with_two_state = true;
        set.state1_prob = cfg.get_double("model.arbitrage.state_prob", 0.5);
    }
    return set;
}

namespace {

Binding parse_binding(const Config& cfg, const DriverSet& set, const std::string& key,
                      double fallback, Binding::Map driver_map) {
    const std::string* v = cfg.find(key);
    if (!v) return Binding::of(fallback);
    const int id = set.id_of(*v);
    if (id >= 0) {
        Binding b;
        b.map = driver_map;
        b.driver_id = id;
        return b;
    }
    return Binding::of(cfg.get_double(key, fallback));
}

ArbitrageStateParams arbitrage_state_from_config(const Config& cfg, const std::string& prefix) {
    ArbitrageStateParams s;
    s.theta = cfg.get_double(prefix + ".theta", 0.2);
    s.eta13 = cfg.get_double(prefix + ".eta13", 0.0);
    s.eta31 = cfg.get_double(prefix + ".eta31", 0.0);
    s.eta21 = cfg.get_double(prefix + ".eta21", 0.0);
    s.eta23 = cfg.get_double(prefix + ".eta23", 0.0);
    s.vs31 = cfg.get_double(prefix + ".vs31", 0.0);
    s.vs13 = cfg.get_double(prefix + ".vs13", 0.0);
    return s;
}

} // namespace

std::unique_ptr<TransitionModel> model_from_config(const Config& cfg, const DriverSet& set) {
    const std::string model = cfg.get_string("model", "simulation-study");
    if (model == "simulation-study") return std::make_unique<SimulationStudyModel>(set);
    if (model == "example1") {
        Example1Model::Params p;
        p.F121 = parse_binding(cfg, set, "model.F121", 0.0, Binding::Map::quarter);
        p.F122 = parse_binding(cfg, set, "model.F122", 0.0, Binding::Map::quarter);
        p.F232 = parse_binding(cfg, set, "model.F232", 0.0, Binding::Map::quarter);
        p.F233 = parse_binding(cfg, set, "model.F233", 0.0, Binding::Map::quarter);
        p.F131 = parse_binding(cfg, set, "model.F131", 0.0, Binding::Map::quarter);
        p.F132 = parse_binding(cfg, set, "model.F132", 0.0, Binding::Map::quarter);
        p.F133 = parse_binding(cfg, set, "model.F133", 0.0, Binding::Map::quarter);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                p.C[i][j] = parse_binding(
                    cfg, set, "model.C" + std::to_string(i + 1) + std::to_string(j + 1), 0.0,
                    Binding::Map::quarter);
        p.theta_level = parse_binding(cfg, set, "model.theta_level", 0.3, Binding::Map::arctan);
        p.xi = cfg.get_double("model.xi", 0.0);
        return std::make_unique<Example1Model>(p);
    }
    if (model == "arbitrage") {
        ArbitrageModelParams p;
        p.state1 = arbitrage_state_from_config(cfg, "model.arbitrage.state1");
        p.state2 = arbitrage_state_from_config(cfg, "model.arbitrage.state2");
        return std::make_unique<ArbitrageModel>(p);
    }
    if (model == "memory") {
        MemoryModel::Params p;
        p.horizon = static_cast<int>(cfg.get_int("model.memory.horizon", 1));
        p.theta_level = cfg.get_double("model.theta_level", 0.3);
        p.xi = cfg.get_double("model.xi", 1.0);
        p.F121 = cfg.get_double("model.F121", 0.0);
        p.F122 = cfg.get_double("model.F122", 0.0);
        p.F232 = cfg.get_double("model.F232", 0.0);
        p.F233 = cfg.get_double("model.F233", 0.0);
        p.F131 = cfg.get_double("model.F131", 0.0);
        p.F132 = cfg.get_double("model.F132", 0.0);
        p.F133 = cfg.get_double("model.F133", 0.0);
        return std::make_unique<MemoryModel>(p);
    }
    throw std::invalid_argument("unknown model: " + model);
}

MeasureTilt tilt_from_config(const Config& cfg) {
    MeasureTilt tilt;
    const std::string spec = cfg.get_string("tilt", "");
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ';')) {
        item = trim(item);
        if (item.empty()) continue;
        const size_t c1 = item.find(':');
        const size_t c2 = (c1 == std::string::npos) ? std::string::npos : item.find(':', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw std::invalid_argument("tilt entry must be driver:period:p_up, got " + item);
        MeasureTilt::Override ov;
        ov.driver = trim(item.substr(0, c1));
        ov.period = std::atoi(item.substr(c1 + 1, c2 - c1 - 1).c_str());
        ov.p_up = std::atof(item.substr(c2 + 1).c_str());
        tilt.overrides.push_back(ov);
    }
    return tilt;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

std::string ConfigIssues::str() const {
    std::string out;
    for (const auto& e : errors) out += "error: " + e + "\n";
    for (const auto& w : warnings) out += "warning: " + w + "\n";
    if (out.empty()) out = "ok\n";
    return out;
}

ConfigIssues validate_config(const Config& cfg) {
    ConfigIssues issues;
    auto fail = [&issues](const std::string& m) { issues.errors.push_back(m); };

    const long long periods = cfg.get_int("grid.periods", 100);
    if (periods < 1) fail("grid.periods must be >= 1");
    if (cfg.get_double("grid.horizon", 1.0) <= 0.0) fail("grid.horizon must be > 0");
    if (cfg.get_int("paths", 1) < 1) fail("paths must be >= 1");

    const std::string engine = cfg.get_string("engine", "distribution");
    if (engine != "distribution" && engine != "population")
        fail("engine must be distribution or population");
    if (engine == "population" && cfg.get_int("population.size", 0) < 1)
        fail("population.size must be >= 1 for the population engine");

    const double p1 = cfg.get_double("initial.p1", -1.0);
    const double p2 = cfg.get_double("initial.p2", -1.0);
    const double p3 = cfg.get_double("initial.p3", -1.0);
    if (p1 < 0.0 || p2 < 0.0 || p3 < 0.0) fail("initial.p1/p2/p3 must be set and nonnegative");
    else if (std::abs(p1 + p2 + p3 - 1.0) > 1e-9) fail("initial fractions must sum to 1");

    const std::string model = cfg.get_string("model", "simulation-study");
    if (model != "simulation-study" && model != "example1" && model != "arbitrage" &&
        model != "memory")
        fail("unknown model: " + model);

    try {
        const DriverSet set = driver_set_from_config(cfg);
        for (const auto& d : set.drivers) {
            if (d.x0 <= 0.0) fail("driver " + d.name + ": x0 must be > 0");
            if (d.sigma < 0.0) fail("driver " + d.name + ": sigma must be >= 0");
        }
        if (model == "simulation-study") {
            std::vector<std::string> needed = {"Z_theta"};
            for (int i = 1; i <= 3; ++i)
                for (int j = 1; j <= 3; ++j) {
                    if (i == j) continue;
                    needed.push_back(SimulationStudyModel::eta_driver_name(i, j));
                    needed.push_back(SimulationStudyModel::varsigma_driver_name(i, j));
                }
            for (const auto& n : needed)
                if (set.id_of(n) < 0) fail("model requires driver " + n);
        }
        for (const char* n : {"F", "Lambda", "M"})
            if (set.id_of(n) < 0) fail(std::string("market requires driver ") + n);
        if (set.id_of("Z_Theta") < 0 && set.id_of("Theta") < 0)
            fail("market requires driver Z_Theta (squashed) or Theta (raw)");
        const int lam = set.id_of("Lambda");
        if (lam >= 0 && set.drivers[lam].sigma > 0.0)
            issues.warnings.push_back(
                "Lambda is a lattice with positive volatility; values can leave [0,1], so the "
                "resiliency reading R = 1 - Lambda is only approximate");
        try {
            ScenarioSampler probe(set, tilt_from_config(cfg));
        } catch (const std::exception& e) {
            fail(e.what());
        }
    } catch (const std::exception& e) {
        fail(e.what());
    }

    const std::string conv = cfg.get_string("up_factor", "literal");
    if (conv != "literal" && conv != "sqrt") fail("up_factor must be literal or sqrt");

    // Unrecognized keys are almost always typos; warn, never reject.
    static const char* exact[] = {"engine", "model", "paths", "seed", "threads", "up_factor",
                                  "tilt"};
    static const char* prefixes[] = {"grid.",   "initial.", "population.", "market.",
                                     "driver.", "model.",   "output.",     "verify.",
                                     "demo."};
    for (const auto& entry : cfg.entries()) {
        const std::string& key = entry.first;
        bool known = false;
        for (const char* k : exact) known = known || key == k;
        for (const char* p : prefixes) known = known || key.rfind(p, 0) == 0;
        if (!known) issues.warnings.push_back("unrecognized key: " + key);
    }
    return issues;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

namespace {

// Per-period running mean and M2, combined across blocks with the pairwise
// update so that the merged result does not depend on the worker count.
struct SeriesWelford {
    long long n = 0;
    std::vector<double> mean, m2;

    void init(size_t len) {
        n = 0;
        mean.assign(len, 0.0);
        m2.assign(len, 0.0);
    }

    void add(const double* xs) {
        ++n;
        for (size_t i = 0; i < mean.size(); ++i) {
            const double delta = xs[i] - mean[i];
            mean[i] += delta / n;
            m2[i] += delta * (xs[i] - mean[i]);
        }
    }

    void merge(const SeriesWelford& o) {
        if (o.n == 0) return;
        if (n == 0) {
            *this = o;
            return;
        }
        const long long total = n + o.n;
        for (size_t i = 0; i < mean.size(); ++i) {
            const double delta = o.mean[i] - mean[i];
            mean[i] += delta * o.n / total;
            m2[i] += o.m2[i] + delta * delta * (static_cast<double>(n) * o.n / total);
        }
        n = total;
    }
};

struct BlockStats {
    SeriesWelford beta, p_diff;
};

constexpr long long kBlockSize = 1024;

struct MarketInputs {
    int f_id = -1, lambda_id = -1, m_id = -1, theta_id = -1;
    bool theta_squashed = true;
    double theta_scale = 1.0;
    MarketParams params;
};

MarketInputs market_inputs(const Config& cfg, const DriverSet& set) {
    MarketInputs mi;
    mi.f_id = set.require("F");
    mi.lambda_id = set.require("Lambda");
    mi.m_id = set.require("M");
    if (set.id_of("Z_Theta") >= 0) {
        mi.theta_id = set.require("Z_Theta");
        mi.theta_squashed = true;
    } else {
        mi.theta_id = set.require("Theta");
        mi.theta_squashed = false;
    }
    mi.theta_scale = cfg.get_double("market.theta_scale", 1.0);
    mi.params.kappa = cfg.get_double("market.kappa", 0.0);
    mi.params.x0_zero = cfg.get_bool("market.x0_zero", false);
    return mi;
}

// Everything one worker needs to turn a trajectory index into per-period
// beta and p-difference series.
struct TrajectoryRunner {
    const DriverSet* set;
    const ScenarioSampler* sampler;
    const TransitionModel* model;
    MarketInputs mi;
    SeedScheme seeds;
    ExtendedTypeDistribution p0;
    std::string engine;
    int population_size = 0;

    // reused storage
    ScenarioPath path;
    GammaWorkspace ws;
    std::vector<double> p_diff, theta_series, beta;

    void run(uint64_t index) {
        const int N = set->grid.periods();
        sampler->sample_into(seeds, index, path);
        p_diff.resize(N + 1);
        theta_series.resize(N + 1);
        beta.resize(N + 1);

        if (engine == "population") {
            AgentPopulation pop = AgentPopulation::unmatched(population_size, fractions(p0));
            Rng rng = seeds.stream(index, 1);
            p_diff[0] = model->p_difference(empirical_distribution(pop));
            for (int n = 1; n <= N; ++n) {
                const PeriodDistributions dists = run_period(pop, *model, path, n, rng);
                p_diff[n] = model->p_difference(dists.end_of_period);
            }
        } else {
            evolve_fraction_difference(p0, *model, path, N, p_diff.data(), ws);
        }

        for (int n = 0; n <= N; ++n) {
            const double z = path.value(mi.theta_id, n);
            theta_series[n] = mi.theta_scale * (mi.theta_squashed ? arctan_squash(z) : z);
        }

        double x_prev = mi.params.x0_zero ? 0.0 : theta_series[0] * p_diff[0];
        beta[0] = 0.0;
        for (int n = 1; n <= N; ++n) {
            const double x = theta_series[n] * p_diff[n];
            beta[n] = bubble_step(beta[n - 1], mi.params.kappa, set->grid.dt(n),
                                  path.value(mi.lambda_id, n), path.value(mi.m_id, n), x - x_prev);
            x_prev = x;
        }
    }

    std::string trajectory_rows(uint64_t index) const {
        std::string rows;
        for (size_t n = 0; n < beta.size(); ++n)
            rows += std::to_string(n) + "," + std::to_string(index) + "," + fmt_g17(beta[n]) +
                    "," + fmt_g17(p_diff[n]) + "\n";
        return rows;
    }

    std::string market_csv() const {
        const int N = set->grid.periods();
        std::vector<double> f(N + 1), lam(N + 1), ill(N + 1);
        for (int n = 0; n <= N; ++n) {
            f[n] = path.value(mi.f_id, n);
            lam[n] = path.value(mi.lambda_id, n);
            ill[n] = path.value(mi.m_id, n);
        }
        const MarketPath mp =
            simulate_market_path(p_diff, f, lam, ill, theta_series, mi.params, set->grid.times);
        return mp.csv();
    }
};

} // namespace

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

namespace {

ExperimentResult run_with_tilt(const Config& cfg, const MeasureTilt* tilt) {
    const auto t0 = std::chrono::steady_clock::now();

    const DriverSet set = driver_set_from_config(cfg);
    const ScenarioSampler sampler = tilt ? ScenarioSampler(set, *tilt) : ScenarioSampler(set);
    const std::unique_ptr<TransitionModel> model = model_from_config(cfg, set);

    const long long paths = cfg.get_int("paths", 1);
    const long long dump = std::min(cfg.get_int("output.trajectories", 0), paths);
    const long long market_dump = std::min(cfg.get_int("output.market_paths", 0), paths);
    const long long scenario_dump = std::min(cfg.get_int("output.scenarios", 0), paths);
    const int N = set.grid.periods();

    std::vector<double> init = {cfg.get_double("initial.p1", 1.0 / 3),
                                cfg.get_double("initial.p2", 1.0 / 3),
                                cfg.get_double("initial.p3", 1.0 / 3)};
    ExtendedTypeDistribution p0;
    if (cfg.get_string("model", "simulation-study") == "memory") {
        // Mass sits on the zero-count types of each view.
        const int H = static_cast<int>(cfg.get_int("model.memory.horizon", 1));
        p0 = ExtendedTypeDistribution(static_cast<int>(memory_type_count(H)));
        for (int v = 1; v <= 3; ++v)
            p0.unmatched_cell(static_cast<int>(memory_encode(MemoryType{0, 0, 0, v}, H))) =
                init[v - 1];
    } else {
        p0 = ExtendedTypeDistribution::unmatched(init);
    }

    const long long n_blocks = (paths + kBlockSize - 1) / kBlockSize;
    std::vector<BlockStats> blocks(static_cast<size_t>(n_blocks));
    std::vector<std::string> dump_rows(static_cast<size_t>(dump));
    std::vector<std::string> market_rows(static_cast<size_t>(market_dump));
    std::vector<std::string> scenario_rows(static_cast<size_t>(scenario_dump));

    long long threads = cfg.get_int("threads", 0);
    if (threads <= 0) threads = std::thread::hardware_concurrency();
    threads = std::max<long long>(1, std::min<long long>(threads, n_blocks));

    std::atomic<long long> next_block{0};
    std::mutex error_mutex;
    std::string first_error;

    auto worker = [&]() {
        TrajectoryRunner runner;
        runner.set = &set;
        runner.sampler = &sampler;
        runner.model = model.get();
        runner.mi = market_inputs(cfg, set);
        runner.seeds.base = static_cast<uint64_t>(cfg.get_int("seed", 0));
        runner.p0 = p0;
        runner.engine = cfg.get_string("engine", "distribution");
        runner.population_size = static_cast<int>(cfg.get_int("population.size", 0));

        for (;;) {
            const long long b = next_block.fetch_add(1);
            if (b >= n_blocks) return;
            BlockStats& stats = blocks[static_cast<size_t>(b)];
            stats.beta.init(N + 1);
            stats.p_diff.init(N + 1);
            const long long lo = b * kBlockSize;
            const long long hi = std::min(paths, lo + kBlockSize);
            for (long long i = lo; i < hi; ++i) {
                {
                    std::lock_guard<std::mutex> lk(error_mutex);
                    if (!first_error.empty()) return;
                }
                try {
                    runner.run(static_cast<uint64_t>(i));
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lk(error_mutex);
                    if (first_error.empty())
                        first_error = "trajectory " + std::to_string(i) + ": " + e.what();
                    return;
                }
                stats.beta.add(runner.beta.data());
                stats.p_diff.add(runner.p_diff.data());
                if (i < dump) dump_rows[static_cast<size_t>(i)] = runner.trajectory_rows(i);
                if (i < market_dump) market_rows[static_cast<size_t>(i)] = runner.market_csv();
                if (i < scenario_dump)
                    scenario_rows[static_cast<size_t>(i)] = sampler.csv(runner.path);
            }
        }
    };

    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (!first_error.empty()) throw std::runtime_error(first_error);

    SeriesWelford beta_total, pdiff_total;
    beta_total.init(N + 1);
    pdiff_total.init(N + 1);
    for (const auto& b : blocks) {
        beta_total.merge(b.beta);
        pdiff_total.merge(b.p_diff);
    }

    ExperimentResult result;
    result.times = set.grid.times;
    result.trajectory_rows = std::move(dump_rows);
    result.market_path_csvs = std::move(market_rows);
    result.scenario_csvs = std::move(scenario_rows);
    AggregateReport& agg = result.aggregate;
    agg.paths = paths;
    agg.mean_beta = beta_total.mean;
    agg.mean_p_diff = pdiff_total.mean;
    agg.se_beta.resize(N + 1);
    agg.se_p_diff.resize(N + 1);
    for (int n = 0; n <= N; ++n) {
        const auto se = [&](const SeriesWelford& w, int i) {
            return (w.n > 1) ? std::sqrt(w.m2[i] / (w.n - 1) / w.n) : 0.0;
        };
        agg.se_beta[n] = se(beta_total, n);
        agg.se_p_diff[n] = se(pdiff_total, n);
    }
    const auto t1 = std::chrono::steady_clock::now();
    agg.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    agg.paths_per_second = (agg.wall_seconds > 0.0) ? paths / agg.wall_seconds : 0.0;
    return result;
}

} // namespace

ExperimentResult run_experiment(const Config& cfg) { return run_with_tilt(cfg, nullptr); }

TiltResult run_tilt_experiment(const Config& cfg) {
    TiltResult r;
    r.base = run_with_tilt(cfg, nullptr);
    const MeasureTilt tilt = tilt_from_config(cfg);
    r.tilted = run_with_tilt(cfg, &tilt);
    return r;
}

void emit_figure_data(const ExperimentResult& r, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    const auto write = [&](const std::string& name, const std::string& content) {
        std::ofstream out(fs::path(out_dir) / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + name + " in " + out_dir);
        out << content;
    };

    std::string averages = "period,mean_beta,stderr\n";
    std::string pdiff = "period,mean_p_diff,stderr\n";
    for (size_t n = 0; n < r.aggregate.mean_beta.size(); ++n) {
        averages += std::to_string(n) + "," + fmt_g17(r.aggregate.mean_beta[n]) + "," +
                    fmt_g17(r.aggregate.se_beta[n]) + "\n";
        pdiff += std::to_string(n) + "," + fmt_g17(r.aggregate.mean_p_diff[n]) + "," +
                 fmt_g17(r.aggregate.se_p_diff[n]) + "\n";
    }
    write("averages.csv", averages);
    write("averages_p_diff.csv", pdiff);

    if (!r.trajectory_rows.empty()) {
        std::string rows = "period,trajectory,beta,p1_minus_p3\n";
        for (const auto& tr : r.trajectory_rows) rows += tr;
        write("trajectories.csv", rows);
    }
    for (size_t i = 0; i < r.market_path_csvs.size(); ++i)
        write("market_path_" + std::to_string(i) + ".csv", r.market_path_csvs[i]);
    for (size_t i = 0; i < r.scenario_csvs.size(); ++i)
        write("scenario_" + std::to_string(i) + ".csv", r.scenario_csvs[i]);
}

// ---------------------------------------------------------------------------
// Martingale verification and matching demo entry points
// ---------------------------------------------------------------------------

MartingaleReport run_verify_martingale(const Config& cfg) {
    const int periods = static_cast<int>(cfg.get_int("grid.periods", 20));
    const TimeGrid grid = TimeGrid::uniform(periods, cfg.get_double("grid.horizon", 1.0));
    PriceDrivers dr;
    dr.theta0 = cfg.get_double("verify.theta0", 5.0);
    dr.sigma_theta = cfg.get_double("verify.sigma_theta", 0.2);
    dr.f0 = cfg.get_double("verify.f0", 100.0);
    dr.sigma_f = cfg.get_double("verify.sigma_f", 0.2);
    dr.lambda0 = cfg.get_double("verify.lambda0", 1.0);
    dr.sigma_lambda = cfg.get_double("verify.sigma_lambda", 0.3);
    dr.m0 = cfg.get_double("verify.m0", 1.0);
    dr.sigma_m = cfg.get_double("verify.sigma_m", 0.3);
    const ExtendedTypeDistribution p0 = ExtendedTypeDistribution::unmatched(
        {cfg.get_double("initial.p1", 0.4), cfg.get_double("initial.p2", 0.35),
         cfg.get_double("initial.p3", 0.25)});
    const std::string conv = cfg.get_string("up_factor", "literal");
    return verify_martingale(p0, grid, dr, static_cast<int>(cfg.get_int("verify.resamples", 100000)),
                             static_cast<uint64_t>(cfg.get_int("seed", 0)),
                             conv == "sqrt" ? UpFactor::square_root : UpFactor::paper_literal);
}

MatchingDemoResult run_matching_demo(const Config& cfg) {
    MatchingDemoResult r;
    const int n = static_cast<int>(cfg.get_int("demo.agents", 12));
    const double level = cfg.get_double("demo.theta_level", 0.8);
    AgentPopulation pop = AgentPopulation::unmatched(
        n, {cfg.get_double("initial.p1", 1.0 / 3), cfg.get_double("initial.p2", 1.0 / 3),
            cfg.get_double("initial.p3", 1.0 / 3)});
    r.before = empirical_distribution(pop);

    Mat theta(3, 3);
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) theta(k, l) = level * r.before.unmatched_cell(l);
    std::vector<double> b(3);
    for (int k = 0; k < 3; ++k)
        b[k] = 1.0 - theta(k, 0) - theta(k, 1) - theta(k, 2);

    Rng rng(static_cast<uint64_t>(cfg.get_int("seed", 0)), 0);
    match_step(pop, theta, b, rng);

    r.after = empirical_distribution(pop);
    r.agents = n;
    for (int i = 0; i < n; ++i)
        if (pop.partner[i] > i) ++r.pairs_formed;
    r.population_csv = pop.csv();
    return r;
}

} // namespace bubblesim
