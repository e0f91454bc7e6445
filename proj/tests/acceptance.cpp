// Acceptance run: one PASS/FAIL line per criterion, exit status 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "snsm/analysis/energy.hpp"
#include "snsm/analysis/gronwall.hpp"
#include "snsm/analysis/martingale.hpp"
#include "snsm/analysis/moments.hpp"
#include "snsm/analysis/studies.hpp"
#include "snsm/cli/commands.hpp"
#include "snsm/model_builder.hpp"
#include "snsm/nonlinearity.hpp"
#include "snsm/stats.hpp"

using namespace snsm;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double identity_tol = 1e-12;
constexpr double resolvent_tol = 1e-12;
constexpr double z_max = 3.0;
constexpr double p_min = 0.01;
constexpr double audit_slack = 0.05;
constexpr double order_min = 0.9;
constexpr double ratio_lo = 2.0, ratio_hi = 8.0;

const int threads = int(std::max(1u, std::thread::hardware_concurrency()));

struct Outcome {
    bool pass;
    std::string detail;
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

SpectralField random_field(const ModeSetPtr& m, RngStream& rng) {
    SpectralField f(m);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double re = rng.normal();
        const double im = rng.normal();
        f[i] = {re, im};
    }
    return f;
}

bool strictly_decreasing(const std::vector<double>& v) {
    for (std::size_t k = 1; k < v.size(); ++k)
        if (!(v[k] < v[k - 1])) return false;
    return true;
}

Outcome ac1_algebraic_identities() {
    const auto m = build_modes(2);
    const ConvolutionPlan plan(m);
    const MollifierTable table(0.2, 2);
    RngStream rng(101);
    double worst_vv = 0.0, worst_anti = 0.0, worst_b = 0.0;
    for (int r = 0; r < 100; ++r) {
        const auto u = random_field(m, rng), v = random_field(m, rng), w = random_field(m, rng);
        worst_vv = std::max(worst_vv, std::abs(b_form(plan, u, v, v)) / (v_norm(u) * v_norm_sq(v)));
        worst_anti = std::max(worst_anti, std::abs(b_form(plan, u, v, w) + b_form(plan, u, w, v)) /
                                              (v_norm(u) * v_norm(v) * v_norm(w)));
        worst_b = std::max(worst_b, std::abs(h_inner(B_mollified_apply(plan, table, u), u)) / std::pow(v_norm(u), 3));
    }
    const bool pass = worst_vv <= identity_tol && worst_anti <= identity_tol && worst_b <= identity_tol;
    return {pass, "max relative |b(u,v,v)| " + num(worst_vv) + ", |b(u,v,w)+b(u,w,v)| " + num(worst_anti) +
                      ", |<B_eps(u),u>| " + num(worst_b) + " (tol " + num(identity_tol) + ")"};
}

Outcome ac2_mollifier() {
    const std::vector<double> eps{0.4, 0.2, 0.1, 0.05};
    double max_m = 0.0;
    for (double e : eps)
        for (int a = -6; a <= 6; ++a)
            for (int b = -6; b <= 6; ++b)
                for (int c = -6; c <= 6; ++c)
                    if (a || b || c) max_m = std::max(max_m, std::abs(mollifier_multiplier(e, {a, b, c})));
    const auto m = build_modes(3);
    RngStream rng(202);
    bool contraction = true, monotone = true;
    for (int r = 0; r < 20; ++r) {
        const auto u = random_field(m, rng);
        double prev = INFINITY;
        for (double e : eps) {
            const auto ku = apply_mollifier(MollifierTable(e, 3), u);
            contraction = contraction && h_norm(ku) <= h_norm(u);
            const double gap = h_norm(ku - u);
            monotone = monotone && gap < prev;
            prev = gap;
        }
    }
    const bool pass = max_m <= 1.0 && contraction && monotone;
    return {pass, "max |m_eps(k)| " + num(max_m) + ", contraction " + (contraction ? "yes" : "no") +
                      ", gap monotone over 20 fields " + (monotone ? "yes" : "no")};
}

Outcome ac3_stokes_exactness() {
    const auto models = build_models(2, NoiseParams{}.without_noise().frozen_chain());
    const double nu = 1.0, T = 1.0;
    double worst_discrete = 0.0, worst_rel_excess = 0.0;
    for (std::size_t mode : {std::size_t(1), std::size_t(19)}) {  // |k|^2 = 1 and 3
        const double k2 = (*models.modes)[mode - 1].k2;
        SimConfig cfg;
        cfg.nu = nu;
        cfg.dt = 1e-3;
        cfg.horizon = T;
        cfg.nonlinear = false;
        cfg.initial = {InitialKind::mode, mode, 1.0};
        const auto rec = integrate_path(cfg, models, realization_for(models, 1, T, cfg.dt));
        for (std::size_t n = 0; n < rec.samples.size(); ++n) {
            const double u = std::sqrt(rec.samples[n].h_norm_sq);
            worst_discrete = std::max(worst_discrete, std::abs(u - std::pow(1.0 + nu * k2 * cfg.dt, -double(n))));
            const double exact = std::exp(-nu * k2 * rec.samples[n].t);
            const double rel = std::abs(u - exact) / exact;
            worst_rel_excess = std::max(worst_rel_excess, rel / (2.0 * nu * k2 * cfg.dt * T));
        }
    }
    std::vector<double> h, err;
    const auto quiet1 = build_models(1, NoiseParams{}.without_noise().frozen_chain());
    for (double dt : {0.02, 0.01, 0.005, 0.0025}) {
        SimConfig cfg;
        cfg.k_max = 1;
        cfg.dt = dt;
        cfg.nonlinear = false;
        cfg.initial = {InitialKind::mode, 1, 1.0};
        const auto rec = integrate_path(cfg, quiet1, realization_for(quiet1, 1, 1.0, dt));
        h.push_back(dt);
        err.push_back(std::abs(std::sqrt(rec.samples.back().h_norm_sq) - std::exp(-1.0)));
    }
    const double order = stats::order_fit(h, err);
    const bool pass = worst_discrete <= resolvent_tol && worst_rel_excess <= 1.0 && order >= order_min;
    return {pass, "max |u - (1+nu|k|^2 dt)^-n| " + num(worst_discrete) + ", max rel. error / (2 nu |k|^2 dt T) " +
                      num(worst_rel_excess) + ", order " + num(order)};
}

Outcome ac4_markov_chain() {
    const GeneratorMatrix g(2, {-1.0, 1.0, 2.0, -2.0});
    const std::size_t paths = 10000;
    const double horizon = 10.0;
    const auto ens = cli::chain_ensembles(g, 0, horizon, paths, 404);
    double worst_z = 0.0;
    for (const auto* e : {&ens.gillespie, &ens.prm}) {
        const auto est = empirical_generator(*e, 2);
        for (auto [i, j] : {std::pair{0, 1}, std::pair{1, 0}})
            worst_z = std::max(worst_z, std::abs(est(i, j) - g(i, j)) / est.se(i, j));
    }
    const auto hg = first_holding_times(ens.gillespie, 0), hp = first_holding_times(ens.prm, 0);
    const double ks1 = stats::ks_one_sample(hg, [](double x) { return 1.0 - std::exp(-x); }).p_value;
    const double ks2 = stats::ks_two_sample(hg, hp).p_value;

    // Three states for the transition proportions.
    const auto g3 = GeneratorMatrix::from_rates(3, {0, 0.5, 1.5, 1.0, 0, 1.0, 0.2, 0.8, 0});
    const auto ens3 = cli::chain_ensembles(g3, 0, horizon, paths, 405);
    double min_chi_p = 1.0;
    for (const auto* e : {&ens3.gillespie, &ens3.prm}) {
        const auto counts = transition_counts(*e, 3);
        for (int i = 0; i < 3; ++i) {
            std::vector<long long> obs;
            std::vector<double> prob;
            for (int j = 0; j < 3; ++j)
                if (j != i) {
                    obs.push_back(counts[std::size_t(i) * 3 + j]);
                    prob.push_back(g3(i, j) / g3.exit_rate(i));
                }
            min_chi_p = std::min(min_chi_p, stats::chi_square_gof(obs, prob).p_value);
        }
    }
    std::vector<double> occ;
    for (const auto& p : ens.stationary) occ.push_back(p.occupation(0));
    const auto o = stats::mean_se(occ);
    const double z_occ = (o.mean - 2.0 / 3.0) / o.se;

    const bool pass = worst_z <= z_max && ks1 > p_min && ks2 > p_min && min_chi_p > p_min && std::abs(z_occ) <= z_max;
    return {pass, "max generator |z| " + num(worst_z) + ", KS p " + num(ks1) + " / " + num(ks2) +
                      ", min chi-square p " + num(min_chi_p) + ", occupation " + num(o.mean) + " (z " + num(z_occ) +
                      ")"};
}

Outcome ac5_audit() {
    const auto models = build_models(2, NoiseParams{});
    const auto a = hypotheses_audit(models.diffusion, models.jump, models.modes, 10000, 5.0, 1.0, 505);
    const double rk = a.k_hat() / a.k_closed(), rl = a.l_hat() / a.l_closed();
    const bool pass = a.slack == audit_slack && a.pass() && rk <= 1.0 + audit_slack && rl <= 1.0 + audit_slack;
    return {pass, "K_hat/K " + num(rk) + ", L_hat/L " + num(rl) + ", all hypotheses within " +
                      num(100 * audit_slack) + "%: " + (a.pass() ? "yes" : "no")};
}

Outcome ac6_moment_bounds() {
    SimConfig cfg;
    cfg.paths = 1000;
    cfg.seed = 606;
    const auto models = build_models(cfg.k_max, NoiseParams{});
    const auto m = run_moment_study(cfg, models, closed_form_growth_constant(models), threads);
    return {m.pass() && m.blow_ups == 0,
            "E[sup|u|^2 + nu int||u||^2] " + num(m.l2_sup.mean) + " +3SE <= C2 " + num(m.bounds.c2) +
                ", pointwise " + num(m.l2_pointwise.mean) + " <= C1 " + num(m.bounds.c1) + ", E sup|u|^3 part " +
                num(m.l3_sup.mean) + " <= C3 " + num(m.bounds.c3.value_or(NAN)) + ", blow-ups " +
                std::to_string(m.blow_ups)};
}

Outcome ac7_energy_equality() {
    SimConfig cfg;
    cfg.paths = 1000;
    cfg.seed = 707;
    const auto e = run_energy_study(cfg, build_models(cfg.k_max, NoiseParams{}), threads);
    const auto quiet = build_models(cfg.k_max, NoiseParams{}.without_noise());
    std::vector<double> h, err;
    for (double dt : {0.004, 0.002, 0.001, 0.0005}) {
        SimConfig c = cfg;
        c.dt = dt;
        c.forcing = {ForcingKind::constant, 2, 1.0};
        h.push_back(dt);
        err.push_back(energy_max_abs_residual(c, quiet));
    }
    const double order = stats::order_fit(h, err);
    const bool pass = std::abs(e.z()) <= z_max && order >= order_min;
    return {pass, "mean residual " + num(e.residual_T.mean) + " (SE " + num(e.residual_T.se) + ", z " + num(e.z()) +
                      "), noise-off order " + num(order)};
}

Outcome ac8_martingale() {
    SimConfig cfg;
    cfg.k_max = 1;
    cfg.paths = 10000;
    cfg.seed = 808;
    MartingaleSetup setup;
    const auto r = martingale_test(cfg, build_models(1, NoiseParams{}), setup, threads);
    double worst = 0.0, control = 0.0;
    for (const auto& c : r.cells) {
        if (!c.inconclusive) worst = std::max(worst, std::abs(c.z()));
        control = std::max(control, std::abs(c.z_control()));
    }
    return {r.pass() && r.control_detected(),
            std::to_string(r.cells.size()) + " cells, max |z| " + num(worst) + ", control max |z| " + num(control) +
                ", blow-ups " + std::to_string(r.blow_ups)};
}

Outcome ac9_uniqueness_mechanism() {
    SimConfig cfg;
    cfg.k_max = 1;
    cfg.seed = 909;
    const std::vector<double> deltas{0.2, 0.1, 0.05, 0.025};
    const auto off = continuity_study(cfg, build_models(1, NoiseParams{}.without_noise()), deltas, 1, 1, threads);
    const auto on = continuity_study(cfg, build_models(1, NoiseParams{}), deltas, 1000, 1, threads);
    bool quadratic = true;
    std::string ratios;
    for (std::size_t k = 1; k < off.size(); ++k) {
        quadratic = quadratic && off[k].ratio >= ratio_lo && off[k].ratio <= ratio_hi;
        ratios += (k > 1 ? ", " : "") + num(off[k].ratio);
    }
    std::vector<double> means;
    for (const auto& row : on) means.push_back(row.functional.mean);
    const bool monotone = strictly_decreasing(means);
    return {quadratic && monotone, "noise-off ratios " + ratios + ", noisy means " + num(means.front()) + " -> " +
                                       num(means.back()) + " monotone " + (monotone ? "yes" : "no")};
}

Outcome ac10_eps_and_refinement() {
    SimConfig cfg;
    cfg.seed = 1010;
    const auto models = build_models(2, NoiseParams{});
    const auto rows = eps_cauchy_study(cfg, models, {0.4, 0.2, 0.1, 0.05}, 200, threads);
    std::vector<double> d;
    for (const auto& r : rows) d.push_back(r.distance());
    const bool eps_ok = strictly_decreasing(d);

    const std::vector<double> levels{0.004, 0.002, 0.001, 0.0005};
    SimConfig det = cfg;
    det.initial = {InitialKind::random, 1, 1.0, 1.0};
    const auto ref = refinement_study(det, build_models(2, NoiseParams{}.without_noise()), RefineAxis::dt, levels, 1,
                                      threads);
    std::vector<double> h, dist;
    for (std::size_t k = 0; k < ref.size(); ++k) {
        h.push_back(levels[k]);
        dist.push_back(ref[k].distance());
    }
    const double order = stats::order_fit(h, dist);

    SimConfig inc = cfg;
    inc.k_max = 1;
    const auto rows_inc = increment_proxy(inc, build_models(1, NoiseParams{}), 0.5, {0.4, 0.2, 0.1, 0.05}, 1000, threads);
    std::vector<double> im;
    for (const auto& r : rows_inc) im.push_back(r.increment.mean);
    const bool inc_ok = strictly_decreasing(im);

    return {eps_ok && order >= order_min && inc_ok,
            "D(eps) " + num(d.front()) + " -> " + num(d.back()) + " decreasing " + (eps_ok ? "yes" : "no") +
                ", dt order " + num(order) + ", increment proxy " + num(im.front()) + " -> " + num(im.back()) +
                " decreasing " + (inc_ok ? "yes" : "no")};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string strip_wall_clock(const std::string& s) {
    std::string out, line;
    std::istringstream in(s);
    while (std::getline(in, line))
        if (line.find("wall_clock_seconds") == std::string::npos) out += line + "\n";
    return out;
}

Outcome ac11_determinism() {
    const auto root = fs::temp_directory_path() / "snsm_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    const std::string conf = (root / "run.conf").string();
    std::ofstream(conf) << "k_max = 1\ndt = 0.01\npaths = 20\nchain_test.paths = 500\naudit.samples = 2000\n"
                           "eps.paths = 10\ncontinuity.paths = 10\nincrement.paths = 10\n";
    const std::vector<std::string> subcommands{"simulate", "chain-test", "audit-hypotheses", "eps-study",
                                               "continuity", "energy", "refine"};
    std::size_t compared = 0;
    for (const auto& sub : subcommands) {
        std::vector<fs::path> outs;
        for (const char* run : {"a", "b"}) {
            const auto out = root / (sub + "_" + run);
            const std::string th = std::string(run) == "a" ? "1" : "2";
            const std::string cmd = std::string(SNSM_CLI_PATH) + " " + sub + " --emit-events --threads " + th +
                                    " --config " + conf + " --out " + out.string() + " > /dev/null 2>&1";
            const int status = std::system(cmd.c_str());
            if (!WIFEXITED(status) || WEXITSTATUS(status) > 1)
                return {false, sub + " exited abnormally (status " + std::to_string(status) + ")"};
            outs.push_back(out);
        }
        auto count = [](const fs::path& p) { return std::distance(fs::directory_iterator(p), fs::directory_iterator{}); };
        if (count(outs[0]) != count(outs[1])) return {false, sub + ": reruns wrote different file sets"};
        for (const auto& entry : fs::directory_iterator(outs[0])) {
            const auto name = entry.path().filename();
            std::string a = slurp(outs[0] / name), b = slurp(outs[1] / name);
            if (name == "manifest.json") {
                a = strip_wall_clock(a);
                b = strip_wall_clock(b);
            }
            if (a != b) return {false, sub + ": " + name.string() + " differs between reruns"};
            ++compared;
        }
    }
    fs::remove_all(root);
    return {compared > 0, std::to_string(subcommands.size()) + " subcommands, " + std::to_string(compared) +
                              " files bit-identical across reruns with 1 and 2 threads"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"AC1  algebraic identities", ac1_algebraic_identities},
        {"AC2  mollifier properties", ac2_mollifier},
        {"AC3  Stokes/linear exactness", ac3_stokes_exactness},
        {"AC4  Markov chain", ac4_markov_chain},
        {"AC5  hypothesis audit", ac5_audit},
        {"AC6  a priori moment bounds", ac6_moment_bounds},
        {"AC7  energy equality", ac7_energy_equality},
        {"AC8  martingale test", ac8_martingale},
        {"AC9  uniqueness mechanism", ac9_uniqueness_mechanism},
        {"AC10 eps -> 0 and refinement", ac10_eps_and_refinement},
        {"AC11 determinism", ac11_determinism},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s %s | %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
