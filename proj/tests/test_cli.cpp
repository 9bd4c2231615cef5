#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "cli/csv.hpp"
#include "cli/manifest.hpp"
#include "liquidex/errors.hpp"

using namespace liquidex;
using namespace liquidex::cli;

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() /
               ("liquidex_test_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

std::string write_config(const TempDir& dir, const std::string& name, const std::string& body) {
    const fs::path p = dir.path / name;
    std::ofstream out(p);
    out << body;
    return p.string();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Parse one CSV produced by the tool into a column-major table of doubles.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

Table read_csv(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    Table t;
    std::string line;
    REQUIRE(static_cast<bool>(std::getline(in, line)));
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) t.header.push_back(cell);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream rs(line);
        while (std::getline(rs, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
        REQUIRE(row.size() == t.header.size());
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::size_t column(const Table& t, const std::string& prefix) {
    for (std::size_t i = 0; i < t.header.size(); ++i)
        if (t.header[i].rfind(prefix, 0) == 0) return i;
    REQUIRE(false);
    return 0;
}

CommandOptions options(const std::string& config, const std::string& out) {
    CommandOptions opt;
    opt.config_path = config;
    opt.out_dir = out;
    return opt;
}

}  // namespace

TEST_CASE("config parsing: defaults, infinite penalty, unknown keys, bad types") {
    const auto [cfg, rc] = parse_paths_config(nlohmann::json::object(), CliOverrides{});
    CHECK(cfg.model.params.lambda == 0.2);
    CHECK(cfg.model.params.theta0 == doctest::Approx(1e5));
    CHECK(cfg.model.params.penalty_is_infinite());
    CHECK(cfg.n_steps == 2000);
    CHECK(rc.seed == 1);
    CHECK(!rc.defaults_applied.empty());
    CHECK(rc.resolved["model"]["a"] == "infinite");

    CHECK_THROWS_AS(parse_paths_config(nlohmann::json::parse(R"({"mode1":{}})"), CliOverrides{}),
                    ConfigError);
    CHECK_THROWS_AS(
        parse_paths_config(nlohmann::json::parse(R"({"model":{"lambda":"big"}})"), CliOverrides{}),
        ConfigError);
    CHECK_THROWS_AS(
        parse_paths_config(nlohmann::json::parse(R"({"model":{"lambdaa":0.2}})"), CliOverrides{}),
        ConfigError);
    CHECK_THROWS_AS(
        parse_paths_config(nlohmann::json::parse(R"({"model":{"a":"huge"}})"), CliOverrides{}),
        ConfigError);
    CHECK_THROWS_AS(
        parse_sweep_config(nlohmann::json::parse(R"({"sweep":{"parameter":"mu"}})"),
                           CliOverrides{}),
        ConfigError);

    const auto [cfg2, rc2] =
        parse_paths_config(nlohmann::json::parse(R"({"model":{"a":25.0},"seed":9})"),
                           CliOverrides{});
    CHECK(cfg2.model.params.a == 25.0);
    CHECK(rc2.seed == 9);
    CliOverrides ov;
    ov.seed = 777;
    const auto [cfg3, rc3] = parse_paths_config(nlohmann::json::object(), ov);
    CHECK(rc3.seed == 777);
    (void)cfg3;

    CHECK_THROWS_AS(parse_drift_config(nlohmann::json::parse(
                        R"({"grid":{"n_steps":10},"drift":{"cond_exp_table":[0.1,0.2]}})"),
                                       CliOverrides{}),
                    ConfigError);
}

TEST_CASE("paths command: files, terminal liquidation, reproducibility") {
    TempDir dir("paths");
    const std::string cfg = write_config(dir, "cfg.json",
                                         R"({"grid":{"n_steps":400},"seed":12})");
    const fs::path out1 = dir.path / "out1";
    CHECK(run_paths(options(cfg, out1.string())) == kExitOk);
    CHECK(fs::exists(out1 / "paths.csv"));
    CHECK(fs::exists(out1 / "manifest.json"));

    const Table t = read_csv(out1 / "paths.csv");
    CHECK(t.rows.size() == 401);
    CHECK(t.rows.front()[column(t, "W")] == 0.0);
    CHECK(t.rows.back()[column(t, "theta")] == 0.0);
    CHECK(t.rows.back()[column(t, "q_gatheral")] == 0.0);
    const std::size_t theta_col = column(t, "theta");
    for (std::size_t r = 0; r + 1 < t.rows.size(); ++r) CHECK(t.rows[r][theta_col] > 0.0);

    // byte-identical rerun, and the manifest checksum matches the file
    const fs::path out2 = dir.path / "out2";
    CHECK(run_paths(options(cfg, out2.string())) == kExitOk);
    CHECK(slurp(out1 / "paths.csv") == slurp(out2 / "paths.csv"));
    CHECK(slurp(out1 / "manifest.json") == slurp(out2 / "manifest.json"));
    const auto manifest = nlohmann::json::parse(slurp(out1 / "manifest.json"));
    CHECK(manifest["output_checksums"]["paths.csv"] == file_checksum(out1 / "paths.csv"));
    CHECK(manifest["master_seed"] == 12);

    // a different seed changes the data
    CommandOptions opt = options(cfg, (dir.path / "out3").string());
    opt.seed = 13;
    CHECK(run_paths(opt) == kExitOk);
    CHECK(slurp(dir.path / "out3" / "paths.csv") != slurp(out1 / "paths.csv"));
}

TEST_CASE("sweep command: kappa speeds liquidation, lambda shrinks the first order") {
    TempDir dir("sweep");
    const std::string kappa_cfg = write_config(
        dir, "kappa.json",
        R"({"grid":{"n_steps":100},"sweep":{"parameter":"kappa","values":[0.05,0.2,0.8]}})");
    const fs::path kout = dir.path / "kappa";
    CHECK(run_sweep(options(kappa_cfg, kout.string())) == kExitOk);
    const Table k1 = read_csv(kout / "sweep_kappa_0.05.csv");
    const Table k2 = read_csv(kout / "sweep_kappa_0.2.csv");
    const Table k3 = read_csv(kout / "sweep_kappa_0.8.csv");
    const std::size_t dcol = column(k1, "decay_factor");
    for (std::size_t r = 1; r + 1 < k1.rows.size(); ++r) {
        CHECK(k2.rows[r][dcol] < k1.rows[r][dcol]);
        CHECK(k3.rows[r][dcol] < k2.rows[r][dcol]);
    }

    const std::string lambda_cfg = write_config(
        dir, "lambda.json",
        R"({"grid":{"n_steps":100},"sweep":{"parameter":"lambda","values":[0.05,0.2,0.8]}})");
    const fs::path lout = dir.path / "lambda";
    CHECK(run_sweep(options(lambda_cfg, lout.string())) == kExitOk);
    const Table l1 = read_csv(lout / "sweep_lambda_0.05.csv");
    const Table l2 = read_csv(lout / "sweep_lambda_0.2.csv");
    const Table l3 = read_csv(lout / "sweep_lambda_0.8.csv");
    const std::size_t ucol = column(l1, "u ");
    CHECK(std::abs(l2.rows[0][ucol]) < std::abs(l1.rows[0][ucol]));
    CHECK(std::abs(l3.rows[0][ucol]) < std::abs(l2.rows[0][ucol]));
}

TEST_CASE("drift-demo command: zero preset reproduces the paths command") {
    TempDir dir("drift");
    const std::string shared = R"({"grid":{"n_steps":250},"seed":31)";
    const std::string paths_cfg = write_config(dir, "p.json", shared + "}");
    const std::string drift_cfg =
        write_config(dir, "d.json", shared + R"(,"drift":{"preset":"zero"}})");
    const fs::path pout = dir.path / "p";
    const fs::path dout = dir.path / "d";
    CHECK(run_paths(options(paths_cfg, pout.string())) == kExitOk);
    CHECK(run_drift_demo(options(drift_cfg, dout.string())) == kExitOk);
    const Table tp = read_csv(pout / "paths.csv");
    const Table td = read_csv(dout / "drift_demo.csv");
    const std::size_t p_theta = column(tp, "theta"), d_theta = column(td, "theta");
    const std::size_t p_u = column(tp, "u "), d_u = column(td, "u ");
    REQUIRE(tp.rows.size() == td.rows.size());
    for (std::size_t r = 0; r < tp.rows.size(); ++r) {
        CHECK(tp.rows[r][p_theta] == td.rows[r][d_theta]);
        CHECK(tp.rows[r][p_u] == td.rows[r][d_u]);
    }
}

TEST_CASE("drift-demo command: offset slopes have the documented signs") {
    TempDir dir("drift2");
    const std::string cfg = write_config(
        dir, "c.json",
        R"({"grid":{"n_steps":200},"drift":{"preset":"constant","alpha0":0.05}})");
    const fs::path out = dir.path / "out";
    CHECK(run_drift_demo(options(cfg, out.string())) == kExitOk);
    const Table t = read_csv(out / "drift_demo.csv");
    const std::size_t da = column(t, "dnu_dalpha");
    const std::size_t dc = column(t, "dnu_dcond_exp");
    const std::size_t th = column(t, "theta");
    for (std::size_t r = 0; r + 1 < t.rows.size(); ++r) {
        CHECK(t.rows[r][da] > 0.0);
        CHECK(t.rows[r][dc] < 0.0);
    }
    CHECK(t.rows.back()[th] == 0.0);

    const std::string mr_cfg = write_config(
        dir, "mr.json",
        R"({"grid":{"n_steps":200},"drift":{"preset":"mean_reverting","alpha0":0.08,"rate":0.6}})");
    const fs::path mrout = dir.path / "mr";
    CHECK(run_drift_demo(options(mr_cfg, mrout.string())) == kExitOk);
    const Table m = read_csv(mrout / "drift_demo.csv");
    CHECK(m.rows.back()[column(m, "theta")] == 0.0);
}

TEST_CASE("multi command: schedule, paths, and all structural checks pass") {
    TempDir dir("multi");
    const std::string cfg = write_config(
        dir, "m.json", R"({"multi":{"n_steps":400,"n_paths":20,"a_list":[100.0]}})");
    const fs::path out = dir.path / "out";
    CHECK(run_multi(options(cfg, out.string())) == kExitOk);
    for (const char* f : {"multi_gain_schedule.csv", "multi_paths.csv", "multi_terminal_vs_a.csv",
                          "multi_checks.csv", "manifest.json"})
        CHECK(fs::exists(out / f));
    const Table checks = read_csv(out / "multi_checks.csv");
    const std::size_t pass = column(checks, "pass");
    for (const auto& row : checks.rows) CHECK(row[pass] == 1.0);
    const Table sched = read_csv(out / "multi_gain_schedule.csv");
    CHECK(sched.rows.size() == 400);
    // symmetric gain, negative diagonal
    const std::size_t g12 = column(sched, "G_1_2");
    const std::size_t g21 = column(sched, "G_2_1");
    const std::size_t g11 = column(sched, "G_1_1");
    for (const auto& row : sched.rows) {
        CHECK(row[g11] < 0.0);
        CHECK(row[g12] == doctest::Approx(row[g21]).epsilon(1e-9));
    }
}

TEST_CASE("oracle-check command: passes and is byte-identical across thread counts") {
    TempDir dir("oracle");
    const std::string cfg = write_config(
        dir, "o.json",
        R"({"oracle":{"n_grid":[200,400,800],"headline_n":5000,"a_grid":[10000.0,100000000.0]}})");
    CommandOptions o1 = options(cfg, (dir.path / "t1").string());
    o1.threads = 1;
    CommandOptions o2 = options(cfg, (dir.path / "t2").string());
    o2.threads = 4;
    CHECK(run_oracle_check(o1) == kExitOk);
    CHECK(run_oracle_check(o2) == kExitOk);
    for (const char* f :
         {"oracle_gain_convergence.csv", "oracle_checks.csv", "manifest.json"}) {
        CHECK(slurp(dir.path / "t1" / f) == slurp(dir.path / "t2" / f));
    }
    const Table checks = read_csv(dir.path / "t1" / "oracle_checks.csv");
    const std::size_t pass = column(checks, "pass");
    for (const auto& row : checks.rows) CHECK(row[pass] == 1.0);
}

TEST_CASE("sweep config: documented default grid") {
    const auto [cfg, rc] = parse_sweep_config(nlohmann::json::object(), CliOverrides{});
    CHECK(cfg.parameter == "sigma");
    CHECK(cfg.values == std::vector<double>{0.05, 0.1, 0.2, 0.4});
    bool found = false;
    for (const auto& line : rc.defaults_applied)
        if (line.rfind("sweep.values", 0) == 0) found = true;
    CHECK(found);
}

TEST_CASE("drift-demo command: flat start with a drift makes a round trip") {
    TempDir dir("drift3");
    const std::string cfg = write_config(
        dir, "c.json",
        R"({"model":{"q0":0.0},"grid":{"n_steps":300},"drift":{"preset":"constant"}})");
    const fs::path out = dir.path / "out";
    CHECK(run_drift_demo(options(cfg, out.string())) == kExitOk);
    const Table t = read_csv(out / "drift_demo.csv");
    const std::size_t th = column(t, "theta");
    double peak = 0.0;
    for (const auto& row : t.rows) peak = std::max(peak, row[th]);
    CHECK(peak > 0.0);
    CHECK(t.rows.front()[th] == 0.0);
    CHECK(t.rows.back()[th] == 0.0);
}

TEST_CASE("oracle-check command: tolerance breach exits with the dedicated code") {
    TempDir dir("breach");
    const std::string cfg = write_config(
        dir, "c.json",
        R"({"oracle":{"n_grid":[100,200],"headline_n":100,"gain_tolerance":1e-09}})");
    CHECK(run_oracle_check(options(cfg, (dir.path / "out").string())) == kExitTolerance);
}

TEST_CASE("paths command: optional plot script emission") {
    TempDir dir("gnuplot");
    const std::string cfg =
        write_config(dir, "c.json", R"({"grid":{"n_steps":20},"emit_gnuplot":true})");
    const fs::path out = dir.path / "out";
    CHECK(run_paths(options(cfg, out.string())) == kExitOk);
    CHECK(fs::exists(out / "paths.gp"));
    const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
    CHECK(manifest["output_checksums"].contains("paths.gp"));
}

TEST_CASE("unwritable output directory raises an I/O error") {
    TempDir dir("iofail");
    const std::string cfg = write_config(dir, "c.json", "{}");
    std::ofstream blocker(dir.path / "file");
    blocker << "x";
    blocker.close();
    CHECK_THROWS_AS(run_paths(options(cfg, (dir.path / "file" / "out").string())), IoError);
    try {
        run_paths(options(cfg, (dir.path / "file" / "out").string()));
    } catch (...) {
        CHECK(exit_code_for_current_exception() == kExitIo);
    }
}

TEST_CASE("error mapping: config problems and missing directories") {
    CHECK_THROWS_AS(run_paths(options("/nonexistent/config.json", "/tmp/x")), ConfigError);
    TempDir dir("errs");
    const std::string bad = write_config(dir, "bad.json", "{not json");
    CHECK_THROWS_AS(run_paths(options(bad, dir.str())), ConfigError);
    const std::string cfg = write_config(dir, "ok.json", "{}");
    CHECK_THROWS_AS(run_paths(options(cfg, "")), ConfigError);
    try {
        run_paths(options("/nonexistent/config.json", "/tmp/x"));
    } catch (...) {
        CHECK(exit_code_for_current_exception() == kExitConfig);
    }
}

TEST_CASE("csv formatting: shortest round-trip representation") {
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(1.5) == "1.5");
    CHECK(format_double(-0.1) == "-0.1");
    CHECK(std::strtod(format_double(1.0 / 3.0).c_str(), nullptr) == 1.0 / 3.0);
    CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
}

#ifdef LIQUIDEX_BIN
TEST_CASE("command-line binary: end-to-end run and exit codes") {
    TempDir dir("bin");
    const std::string cfg = write_config(dir, "c.json", R"({"grid":{"n_steps":50}})");
    const std::string cmd = std::string(LIQUIDEX_BIN) + " paths --config " + cfg + " --out " +
                            (dir.path / "o").string();
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(dir.path / "o" / "paths.csv"));
    const std::string bad = std::string(LIQUIDEX_BIN) + " paths --config " + cfg +
                            " 2>/dev/null";  // missing --out
    const int rc = std::system(bad.c_str());
    CHECK(WEXITSTATUS(rc) == kExitConfig);
}
#endif
