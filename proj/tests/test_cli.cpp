#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "snsm/cli/commands.hpp"
#include "snsm/cli/config.hpp"
#include "snsm/cli/emit.hpp"

using namespace snsm;
using namespace snsm::cli;
namespace fs = std::filesystem;

namespace {

std::string parse_error(const std::string& text) {
    try {
        parse_config(text, "run.conf");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("snsm_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(SNSM_CLI_PATH) + " " + args + " >" + (log / "stdout.txt").string() + " 2>" +
                            (log / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string without_wall_clock(const std::string& manifest) {
    std::string out, line;
    std::istringstream in(manifest);
    while (std::getline(in, line))
        if (line.find("wall_clock_seconds") == std::string::npos) out += line + "\n";
    return out;
}

}  // namespace

TEST(ConfigParse, EmptyFileGivesDocumentedDefaults) {
    const auto c = parse_config("", "empty");
    EXPECT_EQ(c, RunConfig{});
    EXPECT_EQ(c.sim.k_max, 2);
    EXPECT_EQ(c.noise.states, 2);
    EXPECT_NO_THROW(build_models(c.sim.k_max, c.noise));
    EXPECT_NO_THROW(c.sim.validate(ModeSet(c.sim.k_max).size()));
}

TEST(ConfigParse, NegativeViscosityIsRejectedWithLineAndKey) {
    const auto msg = parse_error("# header\nnu = -1\n");
    EXPECT_NE(msg.find("viscosity must be positive"), std::string::npos) << msg;
    EXPECT_EQ(msg.rfind("run.conf:2: nu:", 0), 0u) << msg;
}

TEST(ConfigParse, ErrorsNameTheKey) {
    EXPECT_NE(parse_error("foo = 1").find("unknown key 'foo'"), std::string::npos);
    EXPECT_NE(parse_error("dt = 0.01\ndt = 0.02").find("run.conf:2: dt: duplicate key"), std::string::npos);
    EXPECT_NE(parse_error("\n\nnu 1").find("run.conf:3: expected 'key = value'"), std::string::npos);
    EXPECT_NE(parse_error("paths = many").find("paths: expected an integer"), std::string::npos);
    EXPECT_NE(parse_error("k_max = 0").find("empty basis"), std::string::npos);
    EXPECT_NE(parse_error("nonlinear = yes").find("expected true or false"), std::string::npos);
    EXPECT_NE(parse_error("chain.method = exact").find("expected one of gillespie, prm"), std::string::npos);
}

TEST(ConfigParse, CrossFieldChecksPointAtTheirKey) {
    EXPECT_NE(parse_error("x = 1").find("run.conf:1:"), std::string::npos);
    auto msg = parse_error("nu = 1\nchain.generator = [1, -1, 2, -2]\n");
    EXPECT_EQ(msg.rfind("run.conf:2: chain.generator:", 0), 0u) << msg;
    msg = parse_error("chain.states = 3\n");
    EXPECT_NE(msg.find("noise.s"), std::string::npos) << msg;
    msg = parse_error("dt = 0.3");
    EXPECT_EQ(msg.rfind("run.conf:1: dt:", 0), 0u) << msg;
    msg = parse_error("k_max = 1\ngalerkin_n = 27");
    EXPECT_NE(msg.find("run.conf:2: galerkin_n"), std::string::npos) << msg;
    msg = parse_error("eps.levels = 0.1, 0.2");
    EXPECT_NE(msg.find("must decrease"), std::string::npos) << msg;
}

TEST(ConfigParse, CommentsBracketsAndWhitespace) {
    const auto c = parse_config("  nu=0.5   # viscosity\n\tnoise.s = [0.1,0.2]\n\n# done\n");
    EXPECT_EQ(c.sim.nu, 0.5);
    EXPECT_EQ(c.noise.regime_amplitude, (std::vector<double>{0.1, 0.2}));
    EXPECT_EQ(parse_config("noise.s = 0.1, 0.2").noise.regime_amplitude, c.noise.regime_amplitude);
}

TEST(ConfigRoundTrip, SerializeParseIsIdentity) {
    RngStream rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        RunConfig c;
        c.sim.nu = 0.1 + rng.uniform();
        c.sim.epsilon = rng.uniform() / 3.0;
        c.sim.seed = rng.next_u64();
        c.sim.paths = 1 + rng.next_u64() % 5000;
        c.sim.initial.amplitude = rng.normal();
        c.sim.forcing = {ForcingKind::sinusoidal, 1 + rng.next_u64() % 26, rng.normal(), rng.uniform()};
        c.noise.a = rng.uniform();
        c.noise.b = rng.normal();
        c.noise.regime_amplitude = {rng.uniform(), rng.uniform() * 1e-300};
        c.noise.chain_method = trial % 2 ? ChainMethod::prm : ChainMethod::gillespie;
        c.noise.initial_state = trial % 2;
        c.study.martingale_clip = 1.0 + rng.uniform();
        c.study.refine_deterministic = trial % 3 == 0;
        const auto text = serialize(c);
        const auto back = parse_config(text, "roundtrip");
        EXPECT_EQ(back, c) << text;
        EXPECT_EQ(serialize(back), text);
        EXPECT_EQ(config_hash(back), config_hash(c));
    }
}

TEST(ConfigRoundTrip, HashSeparatesConfigs) {
    RunConfig a, b;
    b.sim.seed += 1;
    EXPECT_NE(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
    EXPECT_EQ(config_keys().size(), cli::detail::fields().size());
}

TEST(Emit, JsonReparseReproducesValuesExactly) {
    RngStream rng(11);
    Json arr = Json::array();
    std::vector<double> values{0.1, 1.0 / 3.0, 1e-310, -2.5e300, std::numeric_limits<double>::max(),
                               std::numeric_limits<double>::denorm_min(), -0.0, 123456789.0};
    for (int k = 0; k < 500; ++k) values.push_back(std::ldexp(rng.uniform() - 0.5, int(rng.next_u64() % 200) - 100));
    for (double v : values) arr.push(v);
    Json j = Json::object();
    j.set("zeta", "quote \" and backslash \\ and\nnewline");
    j.set("alpha", arr);
    j.set("big", std::uint64_t(18446744073709551615ULL));
    j.set("nan", std::numeric_limits<double>::quiet_NaN());
    j.set("flag", true);

    const auto parsed = nlohmann::json::parse(j.dump());
    ASSERT_EQ(parsed["alpha"].size(), values.size());
    for (std::size_t k = 0; k < values.size(); ++k) EXPECT_EQ(parsed["alpha"][k].get<double>(), values[k]);
    EXPECT_EQ(parsed["zeta"].get<std::string>(), "quote \" and backslash \\ and\nnewline");
    EXPECT_EQ(parsed["big"].get<std::uint64_t>(), 18446744073709551615ULL);
    EXPECT_TRUE(parsed["nan"].is_null());
    EXPECT_TRUE(parsed["flag"].get<bool>());
    // Insertion order is kept.
    EXPECT_LT(j.dump().find("zeta"), j.dump().find("alpha"));
}

TEST(Emit, SeventeenSignificantDigits) {
    EXPECT_EQ(fmt17(0.1), "0.10000000000000001");
    EXPECT_EQ(fmt17(1.0), "1");
    CsvTable t({"a", "b"});
    t.row() << 0.1 << 2;
    EXPECT_EQ(t.str(), "a,b\n0.10000000000000001,2\n");
}

TEST(Emit, CsvWidthIsEnforced) {
    CsvTable t({"a", "b", "c"});
    t.row() << 1 << 2 << 3;
    t.row() << 1 << 2;
    EXPECT_THROW(t.str(), std::logic_error);
}

TEST(Emit, EmptyReportListWritesNothing) {
    const auto dir = fs::temp_directory_path() / "snsm_cli_test_never_created";
    fs::remove_all(dir);
    EXPECT_TRUE(emit_reports({}, dir).empty());
    EXPECT_FALSE(fs::exists(dir));
}

TEST(Emit, UnwritableDirectoryThrows) {
    const auto base = scratch("unwritable");
    write_file(base / "plain_file", "x");
    Report r{"r", Json::object(), {}, std::nullopt};
    EXPECT_THROW(emit_reports({r}, base / "plain_file" / "sub"), std::runtime_error);
}

TEST(Emit, ReportPartsBecomeFilesInOrder) {
    const auto dir = scratch("parts");
    Report r{"main", Json::object(), {}, TextSummary{}};
    r.tables.emplace_back("table_one", CsvTable({"x"}));
    const auto files = emit_reports({r}, dir);
    EXPECT_EQ(files, (std::vector<std::string>{"main.json", "table_one.csv", "main.txt"}));
    for (const auto& f : files) EXPECT_TRUE(fs::exists(dir / f));
}

TEST(Commands, UnknownSubcommandThrows) {
    EXPECT_THROW(run_command("plot", RunConfig{}), std::invalid_argument);
}

TEST(Commands, ChainTestPassesOnTwoStateGenerator) {
    auto c = parse_config("chain_test.paths = 2000\n");
    const auto r = run_command("chain-test", c);
    EXPECT_TRUE(r.pass);
    ASSERT_EQ(r.reports.size(), 1u);
    EXPECT_EQ(r.reports[0].tables.front().first, "generator_estimate");
}

TEST(Commands, AuditPassesAndFlagsAreConsistent) {
    const auto r = run_command("audit-hypotheses", parse_config("audit.samples = 2000"));
    EXPECT_TRUE(r.pass);
    const auto parsed = nlohmann::json::parse(r.reports[0].json->dump());
    for (const auto& check : parsed["checks"]) EXPECT_TRUE(check["pass"].get<bool>());
}

TEST(Binary, ChainTestWritesParsableOutputsAndManifest) {
    const auto dir = scratch("chain");
    write_file(dir / "run.conf", "chain_test.paths = 1000\n");
    ASSERT_EQ(run_cli("chain-test --config " + (dir / "run.conf").string() + " --out " + (dir / "out").string(), dir), 0)
        << slurp(dir / "stderr.txt");
    const auto manifest = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
    EXPECT_EQ(manifest["subcommand"], "chain-test");
    EXPECT_EQ(manifest["config_hash"], config_hash(parse_config("chain_test.paths = 1000\n")));
    for (const auto& f : manifest["files"]) EXPECT_TRUE(fs::exists(dir / "out" / f.get<std::string>())) << f;
    const auto report = nlohmann::json::parse(slurp(dir / "out" / "chain_test.json"));
    EXPECT_TRUE(report["pass"].get<bool>());

    std::istringstream csv(slurp(dir / "out" / "generator_estimate.csv"));
    std::string line;
    std::size_t width = 0, rows = 0;
    while (std::getline(csv, line)) {
        const auto cols = std::size_t(std::count(line.begin(), line.end(), ',')) + 1;
        if (rows++ == 0) width = cols;
        EXPECT_EQ(cols, width) << line;
    }
    EXPECT_EQ(rows, 5u);
}

TEST(Binary, NoiseOffSimulateIsBitIdenticalOnRerun) {
    const auto dir = scratch("simulate");
    write_file(dir / "run.conf",
               "k_max = 1\ndt = 0.01\npaths = 3\nnoise.s = 0, 0\njump.rate = 0\nu0.kind = random\n");
    const std::string base = "simulate --emit-events --config " + (dir / "run.conf").string();
    ASSERT_EQ(run_cli(base + " --threads 1 --out " + (dir / "a").string(), dir), 0) << slurp(dir / "stderr.txt");
    ASSERT_EQ(run_cli(base + " --threads 3 --out " + (dir / "b").string(), dir), 0) << slurp(dir / "stderr.txt");
    for (const char* f : {"simulate.json", "trajectory.csv", "events.csv", "simulate.txt"})
        EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    EXPECT_EQ(without_wall_clock(slurp(dir / "a" / "manifest.json")),
              without_wall_clock(slurp(dir / "b" / "manifest.json")));
    const auto traj = slurp(dir / "a" / "trajectory.csv");
    EXPECT_EQ(traj.rfind("run_id,path_id,t,h_norm_sq,v_norm_sq,h_norm_cubed,regime,n_jumps_so_far\n", 0), 0u);
    EXPECT_EQ(std::count(traj.begin(), traj.end(), '\n'), 1 + 3 * 101);
}

TEST(Binary, SeedFlagOverridesConfig) {
    const auto dir = scratch("seed");
    write_file(dir / "run.conf", "k_max = 1\ndt = 0.01\npaths = 2\nseed = 5\n");
    const std::string base = "simulate --config " + (dir / "run.conf").string();
    ASSERT_EQ(run_cli(base + " --out " + (dir / "a").string(), dir), 0);
    ASSERT_EQ(run_cli(base + " --seed 6 --out " + (dir / "b").string(), dir), 0);
    EXPECT_NE(slurp(dir / "a" / "trajectory.csv"), slurp(dir / "b" / "trajectory.csv"));
    EXPECT_EQ(nlohmann::json::parse(slurp(dir / "b" / "manifest.json"))["seed"], 6);
}

TEST(Binary, ExitCodes) {
    const auto dir = scratch("exit");
    write_file(dir / "bad.conf", "# viscosity\nnu = -1\n");
    EXPECT_EQ(run_cli("simulate --config " + (dir / "bad.conf").string() + " --out " + (dir / "x").string(), dir), 2);
    EXPECT_NE(slurp(dir / "stderr.txt").find("bad.conf:2: nu: viscosity must be positive"), std::string::npos)
        << slurp(dir / "stderr.txt");
    EXPECT_FALSE(fs::exists(dir / "x"));

    EXPECT_EQ(run_cli("no-such-command", dir), 2);

    // A blow-up is a failed pass flag, not a crash.
    write_file(dir / "blow.conf",
               "k_max = 1\nepsilon = 0\nnu = 0.001\ndt = 0.5\nT = 50\npaths = 1\nnoise.s = 0, 0\njump.rate = 0\n"
               "chain.generator = 0, 0, 0, 0\nu0.kind = random\nu0.amplitude = 1e8\nu0.decay = 0\n");
    EXPECT_EQ(run_cli("simulate --config " + (dir / "blow.conf").string() + " --out " + (dir / "y").string(), dir), 1);
    const auto report = nlohmann::json::parse(slurp(dir / "y" / "simulate.json"));
    EXPECT_EQ(report["blow_ups"], 1);
    EXPECT_NE(report["blow_up_messages"][0].get<std::string>().find("blow-up at t="), std::string::npos);
}
