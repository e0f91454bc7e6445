#pragma once

// Subcommand pipelines.  Each one runs the library operations for a
// RunConfig, applies the pass/fail gates and returns the reports to emit.
// Gates: 3-SE statistical checks, order fits >= 0.9, p-values > 0.01.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "snsm/analysis/energy.hpp"
#include "snsm/analysis/gronwall.hpp"
#include "snsm/analysis/martingale.hpp"
#include "snsm/analysis/moments.hpp"
#include "snsm/analysis/studies.hpp"
#include "snsm/cli/config.hpp"
#include "snsm/cli/emit.hpp"
#include "snsm/model_builder.hpp"
#include "snsm/stats.hpp"

namespace snsm::cli {

inline constexpr double z_gate = 3.0;
inline constexpr double order_gate = 0.9;
inline constexpr double p_gate = 0.01;
inline constexpr double quadratic_ratio_lo = 2.0;
inline constexpr double quadratic_ratio_hi = 8.0;

struct RunOptions {
    int threads = 1;
    bool emit_events = false;
};

struct CommandResult {
    bool pass = true;
    std::vector<Report> reports;
};

namespace detail {

inline Json mean_se_json(const stats::MeanSE& m) {
    Json j = Json::object();
    j.set("mean", m.mean);
    j.set("se", m.se);
    j.set("count", m.count);
    return j;
}

inline bool strictly_decreasing(const std::vector<double>& v) {
    for (std::size_t k = 1; k < v.size(); ++k)
        if (!(v[k] < v[k - 1])) return false;
    return true;
}

inline std::vector<double> sample_times(const SimConfig& c, std::size_t count) {
    const double h = c.dt * double(c.sample_stride());
    std::vector<double> t(count);
    for (std::size_t k = 0; k < count; ++k) t[k] = std::min(double(k) * h, c.horizon);
    return t;
}

inline Json header(const std::string& subcommand, const RunConfig& c) {
    Json j = Json::object();
    j.set("subcommand", subcommand);
    j.set("config_hash", config_hash(c));
    j.set("seed", c.sim.seed);
    return j;
}

/// Compact number for human-readable labels.
inline std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

inline std::string verdict(bool ok) { return ok ? "PASS" : "FAIL"; }

}  // namespace detail

inline CommandResult cmd_simulate(const RunConfig& c, const RunOptions& opt) {
    const auto models = build_models(c.sim.k_max, c.noise);
    const Integrator integ(c.sim, models);
    struct Out {
        PathRecord rec;
        bool blew_up = false;
        std::string message;
    };
    auto per = parallel_map(c.sim.paths, opt.threads, [&](std::size_t i) {
        Out o;
        RecordOptions ro;
        ro.path_id = long(i);
        ro.keep_events = opt.emit_events;
        try {
            o.rec = integ.run(realization_for(models, path_seed(c.sim.seed, i), c.sim.horizon, c.sim.dt), ro);
        } catch (const BlowUpError& e) {
            o.blew_up = true;
            o.message = e.what();
        }
        return o;
    });

    CsvTable traj({"run_id", "path_id", "t", "h_norm_sq", "v_norm_sq", "h_norm_cubed", "regime", "n_jumps_so_far"});
    CsvTable events({"run_id", "path_id", "t", "kind", "regime_before", "regime_after", "mark", "h_norm_before",
                     "h_norm_after"});
    Json blow = Json::array();
    std::vector<double> final_h2;
    for (const auto& o : per) {
        if (o.blew_up) {
            blow.push(o.message);
            continue;
        }
        for (const auto& s : o.rec.samples)
            traj.row() << o.rec.run_id << o.rec.path_id << s.t << s.h_norm_sq << s.v_norm_sq << s.h_norm_cubed
                       << s.regime + 1 << s.n_jumps;
        for (const auto& e : o.rec.events)
            events.row() << o.rec.run_id << o.rec.path_id << e.t << node_kind_name(e.kind) << e.regime_before + 1
                         << e.regime_after + 1 << e.mark << e.h_norm_before << e.h_norm_after;
        final_h2.push_back(o.rec.samples.back().h_norm_sq);
    }
    const std::size_t blow_ups = c.sim.paths - final_h2.size();
    const bool pass = blow_ups == 0;

    Json j = detail::header("simulate", c);
    j.set("paths", c.sim.paths);
    j.set("blow_ups", blow_ups);
    j.set("blow_up_messages", blow);
    j.set("final_h_norm_sq", detail::mean_se_json(stats::mean_se(final_h2)));
    j.set("pass", pass);

    TextSummary t;
    t.add("subcommand", "simulate");
    t.add("paths", std::to_string(c.sim.paths));
    t.add("blow-ups", std::to_string(blow_ups));
    t.add("E|u(T)|^2", stats::mean_se(final_h2).mean);
    t.add("result", detail::verdict(pass));

    Report r{"simulate", j, {}, t};
    r.tables.emplace_back("trajectory", std::move(traj));
    if (opt.emit_events) r.tables.emplace_back("events", std::move(events));
    return {pass, {std::move(r)}};
}

inline CommandResult cmd_moments(const RunConfig& c, const RunOptions& opt) {
    const auto models = build_models(c.sim.k_max, c.noise);
    const double K = closed_form_growth_constant(models);
    const auto m = run_moment_study(c.sim, models, K, opt.threads);

    Json est = Json::object();
    est.set("sup_h2", detail::mean_se_json(m.sup_h2));
    est.set("nu_int_v2", detail::mean_se_json(m.nu_int_v2));
    est.set("sup_h3", detail::mean_se_json(m.sup_h3));
    est.set("int_h_v2", detail::mean_se_json(m.int_h_v2));
    est.set("l2_sup", detail::mean_se_json(m.l2_sup));
    est.set("l3_sup", detail::mean_se_json(m.l3_sup));
    est.set("l2_pointwise", detail::mean_se_json(m.l2_pointwise));
    Json bounds = Json::object();
    bounds.set("K", K);
    bounds.set("c_t", m.bounds.c_t);
    bounds.set("c1", m.bounds.c1);
    bounds.set("c2", m.bounds.c2);
    bounds.set("c3", m.bounds.c3 ? Json(*m.bounds.c3) : Json());
    Json flags = Json::object();
    flags.set("c1", m.pass_c1());
    flags.set("c2", m.pass_c2());
    flags.set("c3", m.pass_c3());

    Json j = detail::header("moments", c);
    j.set("paths", m.paths);
    j.set("blow_ups", m.blow_ups);
    j.set("estimates", est);
    j.set("bounds", bounds);
    j.set("pass_flags", flags);
    j.set("pass", m.pass());

    CsvTable series({"t", "mean_h_norm_sq"});
    const auto t = detail::sample_times(c.sim, m.mean_h2.size());
    for (std::size_t k = 0; k < t.size(); ++k) series.row() << t[k] << m.mean_h2[k];

    TextSummary s;
    s.add("subcommand", "moments");
    s.add("paths", std::to_string(m.paths));
    s.add("blow-ups", std::to_string(m.blow_ups));
    s.add("max_t E[|u|^2 + nu int ||u||^2]", m.l2_pointwise.mean);
    s.add("  bound C1", m.bounds.c1);
    s.add("E[sup |u|^2 + nu int ||u||^2]", m.l2_sup.mean);
    s.add("  bound C2", m.bounds.c2);
    s.add("E[sup |u|^3 + 2 nu int |u| ||u||^2]", m.l3_sup.mean);
    s.add("  bound C3", m.bounds.c3 ? *m.bounds.c3 : NAN);
    s.add("result", detail::verdict(m.pass()));

    Report r{"moments", j, {}, s};
    r.tables.emplace_back("moments_series", std::move(series));
    return {m.pass(), {std::move(r)}};
}

inline CommandResult cmd_energy(const RunConfig& c, const RunOptions& opt) {
    const auto models = build_models(c.sim.k_max, c.noise);
    const auto e = run_energy_study(c.sim, models, opt.threads);
    const bool pass_mean = std::abs(e.z()) <= z_gate;

    const auto quiet = build_models(c.sim.k_max, c.noise.without_noise());
    std::vector<double> h, err;
    CsvTable order({"dt", "max_abs_residual"});
    for (double dt : c.study.energy_order_dts) {
        SimConfig s = c.sim;
        s.dt = dt;
        s.sample_interval = 0.0;
        h.push_back(dt);
        err.push_back(energy_max_abs_residual(s, quiet));
        order.row() << dt << err.back();
    }
    const double p = h.size() >= 2 ? stats::order_fit(h, err) : NAN;
    const bool pass_order = p >= order_gate;
    const bool pass = pass_mean && pass_order;

    Json j = detail::header("energy", c);
    j.set("paths", e.paths);
    j.set("residual_T", detail::mean_se_json(e.residual_T));
    j.set("z", e.z());
    j.set("max_abs_residual", detail::mean_se_json(e.max_abs));
    j.set("ito_T", detail::mean_se_json(e.ito_T));
    j.set("noise_off_order", p);
    Json flags = Json::object();
    flags.set("mean_zero", pass_mean);
    flags.set("order", pass_order);
    j.set("pass_flags", flags);
    j.set("pass", pass);

    TextSummary s;
    s.add("subcommand", "energy");
    s.add("paths", std::to_string(e.paths));
    s.add("mean residual at T", e.residual_T.mean);
    s.add("standard error", e.residual_T.se);
    s.add("z", e.z());
    s.add("noise-off order", p);
    s.add("result", detail::verdict(pass));

    Report r{"energy", j, {}, s};
    r.tables.emplace_back("energy_order", std::move(order));
    return {pass, {std::move(r)}};
}

inline CommandResult cmd_martingale(const RunConfig& c, const RunOptions& opt) {
    const auto models = build_models(c.sim.k_max, c.noise);
    const auto setup = c.study.martingale_setup();
    const auto m = martingale_test(c.sim, models, setup, opt.threads);
    const bool pass = m.pass() && m.control_detected();

    CsvTable cells({"s", "t", "psi", "mean", "se", "z", "control_mean", "control_se", "control_z", "inconclusive"});
    Json jc = Json::array();
    for (const auto& cell : m.cells) {
        cells.row() << cell.s << cell.t << psi_name(cell.family) << cell.stat.mean << cell.stat.se << cell.z()
                    << cell.control.mean << cell.control.se << cell.z_control() << cell.inconclusive;
        Json o = Json::object();
        o.set("s", cell.s);
        o.set("t", cell.t);
        o.set("psi", psi_name(cell.family));
        o.set("z", cell.z());
        o.set("control_z", cell.z_control());
        o.set("inconclusive", cell.inconclusive);
        o.set("pass", cell.pass());
        jc.push(o);
    }
    Json j = detail::header("martingale-test", c);
    j.set("paths", m.paths);
    j.set("blow_ups", m.blow_ups);
    j.set("control_nu_scale", setup.control_nu_scale);
    j.set("cells", jc);
    Json flags = Json::object();
    flags.set("all_cells", m.pass());
    flags.set("control_detected", m.control_detected());
    j.set("pass_flags", flags);
    j.set("pass", pass);

    TextSummary s;
    s.add("subcommand", "martingale-test");
    s.add("paths", std::to_string(m.paths));
    for (const auto& cell : m.cells)
        s.add("z(" + detail::label(cell.s) + ", " + detail::label(cell.t) + ", " + psi_name(cell.family) + ")", cell.z());
    s.add("control detected", m.control_detected() ? "yes" : "no");
    s.add("result", detail::verdict(pass));

    Report r{"martingale", j, {}, s};
    r.tables.emplace_back("martingale_cells", std::move(cells));
    return {pass, {std::move(r)}};
}

inline CommandResult cmd_continuity(const RunConfig& c, const RunOptions& opt) {
    const auto& st = c.study;
    const auto noisy = build_models(c.sim.k_max, c.noise);
    const auto quiet = build_models(c.sim.k_max, c.noise.without_noise());
    const auto off = continuity_study(c.sim, quiet, st.continuity_deltas, 1, st.continuity_mode, opt.threads);
    const auto on = continuity_study(c.sim, noisy, st.continuity_deltas, st.continuity_paths, st.continuity_mode,
                                     opt.threads);

    bool pass_quadratic = off.size() >= 2;
    for (std::size_t k = 1; k < off.size(); ++k)
        pass_quadratic = pass_quadratic && off[k].ratio >= quadratic_ratio_lo && off[k].ratio <= quadratic_ratio_hi;
    std::vector<double> means;
    for (const auto& row : on) means.push_back(row.functional.mean);
    const bool pass_monotone = detail::strictly_decreasing(means);
    const bool pass = pass_quadratic && pass_monotone;

    CsvTable table({"noise", "delta", "mean", "se", "ratio"});
    Json jo = Json::array(), jn = Json::array();
    for (const auto& row : off) {
        table.row() << "off" << row.delta << row.functional.mean << row.functional.se << row.ratio;
        Json o = Json::object();
        o.set("delta", row.delta);
        o.set("mean", row.functional.mean);
        o.set("ratio", row.ratio);
        jo.push(o);
    }
    for (const auto& row : on) {
        table.row() << "on" << row.delta << row.functional.mean << row.functional.se << row.ratio;
        Json o = Json::object();
        o.set("delta", row.delta);
        o.set("mean", row.functional.mean);
        o.set("se", row.functional.se);
        o.set("ratio", row.ratio);
        jn.push(o);
    }
    Json j = detail::header("continuity", c);
    j.set("paths", st.continuity_paths);
    j.set("noise_off", jo);
    j.set("noise_on", jn);
    Json flags = Json::object();
    flags.set("noise_off_quadratic", pass_quadratic);
    flags.set("noise_on_monotone", pass_monotone);
    j.set("pass_flags", flags);
    j.set("pass", pass);

    TextSummary s;
    s.add("subcommand", "continuity");
    for (const auto& row : off) s.add("noise off, delta " + detail::label(row.delta) + ", ratio", row.ratio);
    for (const auto& row : on) s.add("noise on, delta " + detail::label(row.delta) + ", mean", row.functional.mean);
    s.add("result", detail::verdict(pass));

    Report r{"continuity", j, {}, s};
    r.tables.emplace_back("continuity", std::move(table));
    return {pass, {std::move(r)}};
}

inline void distance_rows(const std::vector<DistanceRow>& rows, CsvTable& table, Json& arr) {
    for (const auto& row : rows) {
        table.row() << row.level_a << row.level_b << row.squared.mean << row.squared.se << row.distance();
        Json o = Json::object();
        o.set("level_a", row.level_a);
        o.set("level_b", row.level_b);
        o.set("mean_sq", row.squared.mean);
        o.set("se_sq", row.squared.se);
        o.set("distance", row.distance());
        arr.push(o);
    }
}

inline CommandResult cmd_eps(const RunConfig& c, const RunOptions& opt) {
    const auto models = build_models(c.sim.k_max, c.noise);
    const auto rows = eps_cauchy_study(c.sim, models, c.study.eps_levels, c.study.eps_paths, opt.threads);
    std::vector<double> d;
    for (const auto& row : rows) d.push_back(row.distance());
    const bool pass = detail::strictly_decreasing(d);

    CsvTable table({"level_a", "level_b", "mean_sq", "se_sq", "distance"});
    Json arr = Json::array();
    distance_rows(rows, table, arr);
    Json j = detail::header("eps-study", c);
    j.set("paths", c.study.eps_paths);
    j.set("rows", arr);
    j.set("pass", pass);

    TextSummary s;
    s.add("subcommand", "eps-study");
    for (const auto& row : rows) s.add("D(" + row.level_a + ")", row.distance());
    s.add("result", detail::verdict(pass));

    Report r{"eps_study", j, {}, s};
    r.tables.emplace_back("eps_study", std::move(table));
    return {pass, {std::move(r)}};
}

inline CommandResult cmd_refine(const RunConfig& c, const RunOptions& opt) {
    const auto& st = c.study;
    const auto noisy = build_models(c.sim.k_max, c.noise);
    const auto& ref_models = st.refine_deterministic ? build_models(c.sim.k_max, c.noise.without_noise()) : noisy;
    const auto rows = refinement_study(c.sim, ref_models, st.refine_axis, st.refine_levels, st.refine_paths,
                                       opt.threads);
    std::vector<double> h, d;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        h.push_back(st.refine_levels[k]);
        d.push_back(rows[k].distance());
    }
    double order = NAN;
    bool pass_refine = false;
    if (st.refine_axis == RefineAxis::dt) {
        if (h.size() >= 2 && std::all_of(d.begin(), d.end(), [](double x) { return x > 0.0; })) order = stats::order_fit(h, d);
        pass_refine = order >= order_gate;
    } else {
        pass_refine = std::is_sorted(d.rbegin(), d.rend());
    }

    const auto inc = increment_proxy(c.sim, noisy, st.increment_t0, st.increment_deltas, st.increment_paths,
                                     opt.threads);
    std::vector<double> im;
    for (const auto& row : inc) im.push_back(row.increment.mean);
    const bool pass_increment = detail::strictly_decreasing(im);
    const bool pass = pass_refine && pass_increment;

    CsvTable table({"level_a", "level_b", "mean_sq", "se_sq", "distance"});
    Json arr = Json::array();
    distance_rows(rows, table, arr);
    CsvTable inc_table({"delta", "mean", "se"});
    Json ji = Json::array();
    for (const auto& row : inc) {
        inc_table.row() << row.delta << row.increment.mean << row.increment.se;
        Json o = Json::object();
        o.set("delta", row.delta);
        o.set("mean", row.increment.mean);
        o.set("se", row.increment.se);
        ji.push(o);
    }
    Json j = detail::header("refine", c);
    j.set("axis", st.refine_axis == RefineAxis::dt ? "dt" : "n");
    j.set("deterministic", st.refine_deterministic);
    j.set("rows", arr);
    j.set("order", order);
    j.set("increment_t0", st.increment_t0);
    j.set("increments", ji);
    Json flags = Json::object();
    flags.set("refinement", pass_refine);
    flags.set("increment_monotone", pass_increment);
    j.set("pass_flags", flags);
    j.set("pass", pass);

    TextSummary s;
    s.add("subcommand", "refine");
    for (const auto& row : rows) s.add(row.level_a + " vs " + row.level_b, row.distance());
    if (st.refine_axis == RefineAxis::dt) s.add("order", order);
    for (const auto& row : inc) s.add("E|u(t0 + " + detail::label(row.delta) + ") - u(t0)|^2", row.increment.mean);
    s.add("result", detail::verdict(pass));

    Report r{"refine", j, {}, s};
    r.tables.emplace_back("refine", std::move(table));
    r.tables.emplace_back("increment_proxy", std::move(inc_table));
    return {pass, {std::move(r)}};
}

/// Chain ensembles for the chain test.  Gillespie path i uses the chain
/// stream of path seed i, the Poisson-representation path i that of path
/// seed paths + i, and the stationary-start path i that of 2 paths + i.
struct ChainEnsembles {
    std::vector<ChainPath> gillespie, prm, stationary;
};

inline ChainEnsembles chain_ensembles(const GeneratorMatrix& g, int r0, double horizon, std::size_t paths,
                                      std::uint64_t seed) {
    const IntervalTable table(g);
    const auto pi = g.stationary();
    ChainEnsembles e;
    for (std::size_t i = 0; i < paths; ++i) {
        RngStream a(stream_seed(path_seed(seed, i), Stream::chain));
        e.gillespie.push_back(simulate_chain_gillespie(g, r0, horizon, a));
        RngStream b(stream_seed(path_seed(seed, paths + i), Stream::chain));
        e.prm.push_back(simulate_chain_prm(table, r0, horizon, b));
        RngStream s(stream_seed(path_seed(seed, 2 * paths + i), Stream::chain));
        double u = s.uniform();
        int start = g.states() - 1;
        for (int k = 0; k < g.states(); ++k) {
            if (u < pi[k]) {
                start = k;
                break;
            }
            u -= pi[k];
        }
        e.stationary.push_back(simulate_chain_gillespie(g, start, horizon, s));
    }
    return e;
}

inline CommandResult cmd_chain(const RunConfig& c, const RunOptions&) {
    const GeneratorMatrix g(c.noise.states, c.noise.generator);
    const int m = g.states();
    const int r0 = c.noise.initial_state;
    const auto ens = chain_ensembles(g, r0, c.study.chain_test_horizon, c.study.chain_test_paths, c.sim.seed);

    CsvTable gen({"simulator", "i", "j", "gamma", "estimate", "se", "z"});
    bool pass_gen = true;
    auto check = [&](const char* name, const std::vector<ChainPath>& paths) {
        const auto est = empirical_generator(paths, m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                if (i == j || !est.has_data[i]) continue;
                const double diff = est(i, j) - g(i, j);
                const double z = est.se(i, j) > 0.0 ? diff / est.se(i, j) : (diff == 0.0 ? 0.0 : INFINITY);
                pass_gen = pass_gen && std::abs(z) <= z_gate;
                gen.row() << name << i + 1 << j + 1 << g(i, j) << est(i, j) << est.se(i, j) << z;
            }
    };
    check("gillespie", ens.gillespie);
    check("prm", ens.prm);

    const double rate = g.exit_rate(r0);
    const auto hold_g = first_holding_times(ens.gillespie, r0);
    const auto hold_p = first_holding_times(ens.prm, r0);
    stats::KSResult ks1, ks2;
    bool pass_ks = true;
    if (rate > 0.0) {
        ks1 = stats::ks_one_sample(hold_g, [rate](double x) { return 1.0 - std::exp(-rate * x); });
        ks2 = stats::ks_two_sample(hold_g, hold_p);
        pass_ks = ks1.p_value > p_gate && ks2.p_value > p_gate;
    }

    CsvTable chi({"simulator", "from", "statistic", "dof", "p_value"});
    bool pass_chi = true;
    for (const auto& [name, paths] : {std::pair{"gillespie", &ens.gillespie}, std::pair{"prm", &ens.prm}}) {
        const auto counts = transition_counts(*paths, m);
        for (int i = 0; i < m; ++i) {
            if (g.exit_rate(i) <= 0.0) continue;
            std::vector<long long> obs;
            std::vector<double> prob;
            for (int j = 0; j < m; ++j) {
                if (j == i) continue;
                obs.push_back(counts[std::size_t(i) * m + j]);
                prob.push_back(g(i, j) / g.exit_rate(i));
            }
            const auto r = stats::chi_square_gof(obs, prob);
            if (r.dof > 0) pass_chi = pass_chi && r.p_value > p_gate;
            chi.row() << name << i + 1 << r.statistic << r.dof << r.p_value;
        }
    }

    const auto pi = g.stationary();
    CsvTable occ({"state", "stationary", "mean", "se", "z"});
    bool pass_occ = true;
    for (int k = 0; k < m; ++k) {
        std::vector<double> frac;
        for (const auto& p : ens.stationary) frac.push_back(p.occupation(k));
        const auto f = stats::mean_se(frac);
        const double diff = f.mean - pi[k];
        const double z = f.se > 0.0 ? diff / f.se : (std::abs(diff) < 1e-12 ? 0.0 : INFINITY);
        pass_occ = pass_occ && std::abs(z) <= z_gate;
        occ.row() << k + 1 << pi[k] << f.mean << f.se << z;
    }
    const bool pass = pass_gen && pass_ks && pass_chi && pass_occ;

    Json j = detail::header("chain-test", c);
    j.set("states", m);
    j.set("paths", c.study.chain_test_paths);
    j.set("horizon", c.study.chain_test_horizon);
    j.set("ks_one_sample_p", ks1.p_value);
    j.set("ks_two_sample_p", ks2.p_value);
    Json flags = Json::object();
    flags.set("generator", pass_gen);
    flags.set("holding_times", pass_ks);
    flags.set("transition_proportions", pass_chi);
    flags.set("occupation", pass_occ);
    j.set("pass_flags", flags);
    j.set("pass", pass);

    TextSummary s;
    s.add("subcommand", "chain-test");
    s.add("generator within 3 SE", pass_gen ? "yes" : "no");
    s.add("KS one-sample p", ks1.p_value);
    s.add("KS two-sample p", ks2.p_value);
    s.add("transition chi-square", pass_chi ? "pass" : "fail");
    s.add("occupation within 3 SE", pass_occ ? "yes" : "no");
    s.add("result", detail::verdict(pass));

    Report r{"chain_test", j, {}, s};
    r.tables.emplace_back("generator_estimate", std::move(gen));
    r.tables.emplace_back("transition_chi_square", std::move(chi));
    r.tables.emplace_back("occupation", std::move(occ));
    return {pass, {std::move(r)}};
}

inline CommandResult cmd_audit(const RunConfig& c, const RunOptions&) {
    const auto models = build_models(c.sim.k_max, c.noise);
    const auto a = hypotheses_audit(models.diffusion, models.jump, models.modes, c.study.audit_samples,
                                    c.study.audit_radius, c.sim.horizon, stream_seed(c.sim.seed, Stream::audit));
    CsvTable table({"hypothesis", "empirical", "closed_form", "ratio", "pass"});
    Json arr = Json::array();
    auto row = [&](const char* name, double hat, double bound) {
        const bool ok = AuditReport::within(hat, bound, a.slack);
        const double ratio = bound > 0.0 ? hat / bound : (hat == 0.0 ? 0.0 : INFINITY);
        table.row() << name << hat << bound << ratio << ok;
        Json o = Json::object();
        o.set("hypothesis", name);
        o.set("empirical", hat);
        o.set("closed_form", bound);
        o.set("pass", ok);
        arr.push(o);
    };
    row("H1 p=2", a.h1_p2, a.h1_p2_bound);
    row("H1 p=3", a.h1_p3, a.h1_p3_bound);
    row("H2", a.h2, a.h2_bound);
    row("H3 p=1", a.h3_p1, a.h3_p1_bound);
    row("H3 p=2", a.h3_p2, a.h3_p2_bound);
    row("H3 p=3", a.h3_p3, a.h3_p3_bound);
    row("H4", a.h4, a.h4_bound);

    Json j = detail::header("audit-hypotheses", c);
    j.set("samples", a.samples);
    j.set("slack", a.slack);
    j.set("k_hat", a.k_hat());
    j.set("k_closed", a.k_closed());
    j.set("l_hat", a.l_hat());
    j.set("l_closed", a.l_closed());
    j.set("checks", arr);
    j.set("pass", a.pass());

    TextSummary s;
    s.add("subcommand", "audit-hypotheses");
    s.add("samples", std::to_string(a.samples));
    s.add("K hat / closed form", fmt17(a.k_hat()) + " / " + fmt17(a.k_closed()));
    s.add("L hat / closed form", fmt17(a.l_hat()) + " / " + fmt17(a.l_closed()));
    s.add("result", detail::verdict(a.pass()));

    Report r{"audit", j, {}, s};
    r.tables.emplace_back("audit", std::move(table));
    return {a.pass(), {std::move(r)}};
}

using Command = std::function<CommandResult(const RunConfig&, const RunOptions&)>;

inline const std::map<std::string, Command>& commands() {
    static const std::map<std::string, Command> table{
        {"simulate", cmd_simulate},     {"moments", cmd_moments},       {"energy", cmd_energy},
        {"martingale-test", cmd_martingale}, {"continuity", cmd_continuity}, {"eps-study", cmd_eps},
        {"refine", cmd_refine},         {"chain-test", cmd_chain},      {"audit-hypotheses", cmd_audit},
    };
    return table;
}

inline CommandResult run_command(const std::string& name, const RunConfig& config, const RunOptions& opt = {}) {
    const auto it = commands().find(name);
    if (it == commands().end()) throw std::invalid_argument("unknown subcommand '" + name + "'");
    return it->second(config, opt);
}

}  // namespace snsm::cli
