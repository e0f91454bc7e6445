#pragma once

// Run configuration as `key = value` lines.  `#` starts a comment, lists are
// comma separated (optionally in brackets), and every key has a default, so
// an empty file is a valid run.  Serialization is canonical: every key in
// sorted order with 17 significant digits.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "snsm/analysis/martingale.hpp"
#include "snsm/analysis/studies.hpp"
#include "snsm/model_builder.hpp"

namespace snsm::cli {

struct StudyParams {
    std::size_t audit_samples = 10000;
    double audit_radius = 5.0;

    double martingale_radius = 4.0;
    std::vector<double> martingale_weights{1.0, 2.0};
    std::size_t martingale_rho_mode = 1;
    std::vector<double> martingale_pairs{0.2, 0.5, 0.3, 0.8, 0.5, 1.0};  // s1, t1, s2, t2, ...
    double martingale_clip = 4.0;
    int martingale_indicator_state = 0;
    double martingale_control_nu_scale = 2.0;

    std::vector<double> continuity_deltas{0.2, 0.1, 0.05, 0.025};
    std::size_t continuity_mode = 1;
    std::size_t continuity_paths = 1000;

    std::vector<double> eps_levels{0.4, 0.2, 0.1, 0.05};
    std::size_t eps_paths = 200;

    RefineAxis refine_axis = RefineAxis::dt;
    std::vector<double> refine_levels{0.004, 0.002, 0.001, 0.0005};
    std::size_t refine_paths = 1;
    bool refine_deterministic = true;

    double increment_t0 = 0.5;
    std::vector<double> increment_deltas{0.4, 0.2, 0.1, 0.05};
    std::size_t increment_paths = 1000;

    std::vector<double> energy_order_dts{0.004, 0.002, 0.001, 0.0005};

    std::size_t chain_test_paths = 10000;
    double chain_test_horizon = 10.0;

    bool operator==(const StudyParams&) const = default;

    MartingaleSetup martingale_setup() const {
        MartingaleSetup m;
        m.phi.radius = martingale_radius;
        m.phi.weights = martingale_weights;
        m.rho_mode = martingale_rho_mode;
        m.pairs.clear();
        for (std::size_t k = 0; k + 1 < martingale_pairs.size(); k += 2)
            m.pairs.emplace_back(martingale_pairs[k], martingale_pairs[k + 1]);
        m.clip = martingale_clip;
        m.indicator_state = martingale_indicator_state;
        m.control_nu_scale = martingale_control_nu_scale;
        return m;
    }
};

struct RunConfig {
    SimConfig sim;
    NoiseParams noise;
    StudyParams study;

    bool operator==(const RunConfig&) const = default;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("expected a number, got '" + s + "'");
    }
    if (pos != s.size()) throw std::invalid_argument("expected a number, got '" + s + "'");
    return v;
}

inline long long parse_int(const std::string& s) {
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("expected an integer, got '" + s + "'");
    }
    if (pos != s.size()) throw std::invalid_argument("expected an integer, got '" + s + "'");
    return v;
}

inline std::uint64_t parse_u64(const std::string& s) {
    std::size_t pos = 0;
    std::uint64_t v = 0;
    if (!s.empty() && s[0] == '-') throw std::invalid_argument("expected an unsigned integer, got '" + s + "'");
    try {
        v = std::stoull(s, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("expected an unsigned integer, got '" + s + "'");
    }
    if (pos != s.size()) throw std::invalid_argument("expected an unsigned integer, got '" + s + "'");
    return v;
}

inline bool parse_bool(const std::string& s) {
    if (s == "true") return true;
    if (s == "false") return false;
    throw std::invalid_argument("expected true or false, got '" + s + "'");
}

inline std::vector<double> parse_list(std::string s) {
    if (!s.empty() && s.front() == '[') {
        if (s.back() != ']') throw std::invalid_argument("unterminated list");
        s = s.substr(1, s.size() - 2);
    }
    std::vector<double> out;
    if (trim(s).empty()) return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item)));
    return out;
}

inline std::string format_list(const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_double(v[i]);
    return out + "]";
}

inline std::size_t parse_count(const std::string& s, long long min) {
    const auto v = parse_int(s);
    if (v < min) throw std::invalid_argument("must be >= " + std::to_string(min));
    return std::size_t(v);
}

struct Field {
    std::function<void(RunConfig&, const std::string&)> parse;
    std::function<std::string(const RunConfig&)> format;
};

template <class Get>
Field number(Get get, std::function<void(double)> check = {}) {
    return {[get, check](RunConfig& c, const std::string& v) {
                const double x = parse_double(v);
                if (check) check(x);
                get(c) = x;
            },
            [get](const RunConfig& c) { return format_double(get(c)); }};
}

template <class Get>
Field count(Get get, long long min) {
    return {[get, min](RunConfig& c, const std::string& v) { get(c) = std::remove_reference_t<decltype(get(c))>(parse_count(v, min)); },
            [get](const RunConfig& c) { return std::to_string(get(c)); }};
}

/// 1-based in the file, 0-based in memory.
template <class Get>
Field state_index(Get get) {
    return {[get](RunConfig& c, const std::string& v) { get(c) = int(parse_count(v, 1)) - 1; },
            [get](const RunConfig& c) { return std::to_string(get(c) + 1); }};
}

template <class Get>
Field list(Get get) {
    return {[get](RunConfig& c, const std::string& v) { get(c) = parse_list(v); },
            [get](const RunConfig& c) { return format_list(get(c)); }};
}

template <class Get>
Field boolean(Get get) {
    return {[get](RunConfig& c, const std::string& v) { get(c) = parse_bool(v); },
            [get](const RunConfig& c) { return std::string(get(c) ? "true" : "false"); }};
}

template <class E, class Get>
Field choice(Get get, std::vector<std::pair<std::string, E>> names) {
    return {[get, names](RunConfig& c, const std::string& v) {
                for (const auto& [n, e] : names)
                    if (n == v) {
                        get(c) = e;
                        return;
                    }
                std::string opts;
                for (const auto& [n, e] : names) opts += (opts.empty() ? "" : ", ") + n;
                throw std::invalid_argument("expected one of " + opts + ", got '" + v + "'");
            },
            [get, names](const RunConfig& c) {
                for (const auto& [n, e] : names)
                    if (e == get(c)) return n;
                return std::string("?");
            }};
}

inline auto positive(const char* what) {
    return [what](double x) {
        if (!(x > 0.0)) throw std::invalid_argument(std::string(what) + " must be positive");
    };
}
inline auto non_negative(const char* what) {
    return [what](double x) {
        if (!(x >= 0.0)) throw std::invalid_argument(std::string(what) + " must be >= 0");
    };
}

#define SNSM_GET(expr) [](auto& c) -> auto& { return c.expr; }

inline const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> table = [] {
        std::map<std::string, Field> f;
        f["nu"] = number(SNSM_GET(sim.nu), [](double x) {
            if (!(x > 0.0)) throw std::invalid_argument("viscosity must be positive");
        });
        f["epsilon"] = number(SNSM_GET(sim.epsilon), non_negative("epsilon"));
        f["k_max"] = {[](RunConfig& c, const std::string& v) {
                          const auto k = parse_int(v);
                          if (k < 1) throw std::invalid_argument("empty basis: k_max must be >= 1");
                          if (k > 3) throw std::invalid_argument("k_max above 3 is outside the supported scale");
                          c.sim.k_max = int(k);
                      },
                      [](const RunConfig& c) { return std::to_string(c.sim.k_max); }};
        f["galerkin_n"] = count(SNSM_GET(sim.galerkin_n), 0);
        f["dt"] = number(SNSM_GET(sim.dt), positive("dt"));
        f["T"] = number(SNSM_GET(sim.horizon), positive("T"));
        f["sample_interval"] = number(SNSM_GET(sim.sample_interval), non_negative("sample_interval"));
        f["nonlinear"] = boolean(SNSM_GET(sim.nonlinear));
        f["seed"] = {[](RunConfig& c, const std::string& v) { c.sim.seed = parse_u64(v); },
                     [](const RunConfig& c) { return std::to_string(c.sim.seed); }};
        f["paths"] = count(SNSM_GET(sim.paths), 1);

        f["forcing.kind"] = choice<ForcingKind>(SNSM_GET(sim.forcing.kind), {{"zero", ForcingKind::zero},
                                                                             {"constant", ForcingKind::constant},
                                                                             {"sinusoidal", ForcingKind::sinusoidal}});
        f["forcing.mode"] = count(SNSM_GET(sim.forcing.mode), 1);
        f["forcing.amplitude"] = number(SNSM_GET(sim.forcing.amplitude));
        f["forcing.frequency"] = number(SNSM_GET(sim.forcing.frequency));

        f["u0.kind"] = choice<InitialKind>(SNSM_GET(sim.initial.kind), {{"zero", InitialKind::zero},
                                                                        {"mode", InitialKind::mode},
                                                                        {"random", InitialKind::random}});
        f["u0.mode"] = count(SNSM_GET(sim.initial.mode), 1);
        f["u0.amplitude"] = number(SNSM_GET(sim.initial.amplitude));
        f["u0.decay"] = number(SNSM_GET(sim.initial.decay));
        f["u0.perturbation"] = number(SNSM_GET(sim.initial.perturbation));
        f["u0.perturbation_mode"] = count(SNSM_GET(sim.initial.perturbation_mode), 1);
        f["u0.mollify"] = boolean(SNSM_GET(sim.initial.mollify));

        f["noise.q_exponent"] = number(SNSM_GET(noise.q_exponent));
        f["noise.q_scale"] = number(SNSM_GET(noise.q_scale), non_negative("noise.q_scale"));
        f["noise.s"] = list(SNSM_GET(noise.regime_amplitude));
        f["noise.a"] = number(SNSM_GET(noise.a));
        f["noise.b"] = number(SNSM_GET(noise.b));

        f["jump.rate"] = number(SNSM_GET(noise.jump_rate), non_negative("jump rate"));
        f["jump.gain"] = list(SNSM_GET(noise.jump_gain));
        f["jump.coupling"] = number(SNSM_GET(noise.jump_coupling));
        f["jump.direction_mode"] = count(SNSM_GET(noise.jump_direction_mode), 1);

        f["chain.states"] = {[](RunConfig& c, const std::string& v) { c.noise.states = int(parse_count(v, 1)); },
                             [](const RunConfig& c) { return std::to_string(c.noise.states); }};
        f["chain.generator"] = list(SNSM_GET(noise.generator));
        f["chain.initial_state"] = state_index(SNSM_GET(noise.initial_state));
        f["chain.method"] = choice<ChainMethod>(SNSM_GET(noise.chain_method),
                                                {{"gillespie", ChainMethod::gillespie}, {"prm", ChainMethod::prm}});

        f["audit.samples"] = count(SNSM_GET(study.audit_samples), 1000);
        f["audit.radius"] = number(SNSM_GET(study.audit_radius), positive("audit.radius"));

        f["martingale.radius"] = number(SNSM_GET(study.martingale_radius), positive("martingale.radius"));
        f["martingale.weights"] = list(SNSM_GET(study.martingale_weights));
        f["martingale.rho_mode"] = count(SNSM_GET(study.martingale_rho_mode), 1);
        f["martingale.pairs"] = list(SNSM_GET(study.martingale_pairs));
        f["martingale.clip"] = number(SNSM_GET(study.martingale_clip), positive("martingale.clip"));
        f["martingale.indicator_state"] = state_index(SNSM_GET(study.martingale_indicator_state));
        f["martingale.control_nu_scale"] = number(SNSM_GET(study.martingale_control_nu_scale));

        f["continuity.deltas"] = list(SNSM_GET(study.continuity_deltas));
        f["continuity.mode"] = count(SNSM_GET(study.continuity_mode), 1);
        f["continuity.paths"] = count(SNSM_GET(study.continuity_paths), 1);

        f["eps.levels"] = list(SNSM_GET(study.eps_levels));
        f["eps.paths"] = count(SNSM_GET(study.eps_paths), 1);

        f["refine.axis"] = choice<RefineAxis>(SNSM_GET(study.refine_axis), {{"dt", RefineAxis::dt}, {"n", RefineAxis::n}});
        f["refine.levels"] = list(SNSM_GET(study.refine_levels));
        f["refine.paths"] = count(SNSM_GET(study.refine_paths), 1);
        f["refine.deterministic"] = boolean(SNSM_GET(study.refine_deterministic));

        f["increment.t0"] = number(SNSM_GET(study.increment_t0), non_negative("increment.t0"));
        f["increment.deltas"] = list(SNSM_GET(study.increment_deltas));
        f["increment.paths"] = count(SNSM_GET(study.increment_paths), 1);

        f["energy.order_dts"] = list(SNSM_GET(study.energy_order_dts));

        f["chain_test.paths"] = count(SNSM_GET(study.chain_test_paths), 100);
        f["chain_test.horizon"] = number(SNSM_GET(study.chain_test_horizon), positive("chain_test.horizon"));
        return f;
    }();
    return table;
}

#undef SNSM_GET

}  // namespace detail

/// Checks that span several keys; each failure names the key it is charged to.
inline void validate(const RunConfig& c, const std::function<std::string(const std::string&)>& where) {
    auto fail = [&](const std::string& key, const std::string& msg) { throw ConfigError(where(key) + key + ": " + msg); };
    const auto& s = c.sim;
    const auto& n = c.noise;
    const auto& st = c.study;
    const std::size_t dim = ModeSet(s.k_max).size();

    try {
        grid_cells(s.horizon, s.dt);
    } catch (const std::invalid_argument& e) {
        fail("dt", e.what());
    }
    try {
        s.sample_stride();
    } catch (const std::invalid_argument& e) {
        fail("sample_interval", e.what());
    }
    if (s.galerkin_n > dim) fail("galerkin_n", "exceeds the mode-set dimension " + std::to_string(dim));
    if (s.forcing.mode > dim) fail("forcing.mode", "out of range 1.." + std::to_string(dim));
    if (s.initial.mode > dim) fail("u0.mode", "out of range 1.." + std::to_string(dim));
    if (s.initial.perturbation_mode > dim) fail("u0.perturbation_mode", "out of range 1.." + std::to_string(dim));

    if (int(n.regime_amplitude.size()) != n.states) fail("noise.s", "needs one amplitude per regime state");
    if (int(n.jump_gain.size()) != n.states) fail("jump.gain", "needs one gain per regime state");
    if (n.jump_direction_mode > dim) fail("jump.direction_mode", "out of range 1.." + std::to_string(dim));
    if (n.initial_state >= n.states) fail("chain.initial_state", "out of range 1.." + std::to_string(n.states));
    if (n.generator.size() != std::size_t(n.states * n.states))
        fail("chain.generator", "needs states^2 = " + std::to_string(n.states * n.states) + " entries");
    try {
        GeneratorMatrix(n.states, n.generator);
    } catch (const std::invalid_argument& e) {
        fail("chain.generator", e.what());
    }

    if (int(st.martingale_weights.size()) < n.states) fail("martingale.weights", "needs one weight per regime state");
    if (st.martingale_pairs.empty() || st.martingale_pairs.size() % 2)
        fail("martingale.pairs", "needs a nonempty list of (s, t) pairs");
    for (std::size_t k = 0; k + 1 < st.martingale_pairs.size(); k += 2) {
        const double a = st.martingale_pairs[k], b = st.martingale_pairs[k + 1];
        if (!(0.0 <= a && a < b && b <= s.horizon)) fail("martingale.pairs", "each pair needs 0 <= s < t <= T");
    }
    if (st.martingale_rho_mode > dim) fail("martingale.rho_mode", "out of range 1.." + std::to_string(dim));
    if (st.martingale_indicator_state >= n.states) fail("martingale.indicator_state", "out of range");

    for (double d : st.continuity_deltas)
        if (!(d >= 0.0)) fail("continuity.deltas", "perturbation sizes must be >= 0");
    if (st.continuity_mode > dim) fail("continuity.mode", "out of range 1.." + std::to_string(dim));
    for (std::size_t k = 1; k < st.eps_levels.size(); ++k)
        if (!(st.eps_levels[k] < st.eps_levels[k - 1])) fail("eps.levels", "epsilon levels must decrease");
    if (st.eps_levels.size() < 2) fail("eps.levels", "needs at least two levels");
    if (st.refine_levels.size() < 2) fail("refine.levels", "needs at least two levels");
    for (double h : st.refine_levels) {
        if (!(h > 0.0)) fail("refine.levels", "levels must be positive");
        if (st.refine_axis == RefineAxis::n && (h != std::floor(h) || h > double(dim)))
            fail("refine.levels", "Galerkin levels must be integers in 1.." + std::to_string(dim));
        if (st.refine_axis == RefineAxis::dt) {
            try {
                grid_cells(s.horizon, h);
            } catch (const std::invalid_argument& e) {
                fail("refine.levels", e.what());
            }
        }
    }
    for (double d : st.increment_deltas)
        if (!(d > 0.0) || st.increment_t0 + d > s.horizon + 1e-12)
            fail("increment.deltas", "need 0 < delta and t0 + delta <= T");
    for (double h : st.energy_order_dts) {
        try {
            grid_cells(s.horizon, h);
        } catch (const std::invalid_argument& e) {
            fail("energy.order_dts", e.what());
        }
    }
}

inline RunConfig parse_config(std::string_view text, const std::string& source = "config") {
    RunConfig c;
    std::map<std::string, int> line_of;
    const auto& table = detail::fields();
    std::istringstream in{std::string(text)};
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string body = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (body.empty()) continue;
        const auto anchor = source + ":" + std::to_string(line) + ": ";
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ConfigError(anchor + "expected 'key = value'");
        const std::string key = detail::trim(body.substr(0, eq));
        const std::string value = detail::trim(body.substr(eq + 1));
        const auto it = table.find(key);
        if (it == table.end()) throw ConfigError(anchor + "unknown key '" + key + "'");
        if (line_of.count(key)) throw ConfigError(anchor + key + ": duplicate key (first set on line " +
                                                  std::to_string(line_of[key]) + ")");
        line_of[key] = line;
        try {
            it->second.parse(c, value);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(anchor + key + ": " + e.what());
        }
    }
    validate(c, [&](const std::string& key) {
        const auto it = line_of.find(key);
        return it == line_of.end() ? source + ": " : source + ":" + std::to_string(it->second) + ": ";
    });
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError(path + ": cannot open config file");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), path);
}

/// Every key, sorted, one per line.
inline std::string serialize(const RunConfig& c) {
    std::string out;
    for (const auto& [key, field] : detail::fields()) out += key + " = " + field.format(c) + "\n";
    return out;
}

/// FNV-1a 64 of the canonical serialization, as 16 hex digits.
inline std::string config_hash(const RunConfig& c) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : serialize(c)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [key, f] : detail::fields()) k.push_back(key);
        return k;
    }();
    return keys;
}

}  // namespace snsm::cli
