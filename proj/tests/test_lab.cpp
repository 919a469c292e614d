#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "qszego/lab.hpp"

using namespace qszego;
using namespace qszego::lab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("qszego_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

json flow(double dt, double t_end, int cutoff, int stride, int rank) {
    return {{"dt", dt}, {"t_end", t_end}, {"cutoff", cutoff}, {"monitor_stride", stride}, {"spectrum_rank", rank}};
}

RunSpec spec_for(const json& j, Experiment kind, const fs::path& out) {
    RunSpec s = parse_run_spec(j, kind);
    s.out_dir = out;
    return s;
}

TrajectoryRecord record(std::vector<std::vector<double>> rows) {
    TrajectoryRecord r;
    r.columns = {"t", "Q", "M"};
    r.rows = std::move(rows);
    return r;
}

}  // namespace

TEST_SUITE("lab") {

TEST_CASE("config validation") {
    const json good{{"initial", {{"coefficients", {0, 1}}}}, {"flow", flow(1e-3, 0.1, 8, 10, 2)}};
    CHECK_NOTHROW(parse_run_spec(good, Experiment::evolve_pde));

    json unknown = good;
    unknown["flow"]["tolerance"] = 1.0;
    CHECK_THROWS_AS(parse_run_spec(unknown, Experiment::evolve_pde), ConfigError);

    json top = good;
    top["extra"] = 1;
    CHECK_THROWS_AS(parse_run_spec(top, Experiment::evolve_pde), ConfigError);

    json two = good;
    two["initial"]["rational"] = {{"b", 1}, {"c", 1}, {"p", 0.5}};
    CHECK_THROWS_AS(parse_run_spec(two, Experiment::evolve_pde), ConfigError);

    json missing = good;
    missing["flow"].erase("dt");
    CHECK_THROWS_AS(parse_run_spec(missing, Experiment::evolve_pde), ConfigError);

    json no_initial = good;
    no_initial.erase("initial");
    CHECK_THROWS_AS(parse_run_spec(no_initial, Experiment::evolve_pde), ConfigError);

    json wrong_kind = good;
    wrong_kind["experiment"] = "compare";
    CHECK_THROWS_AS(parse_run_spec(wrong_kind, Experiment::evolve_pde), ConfigError);

    // explicit coefficients cannot feed the reduced system
    CHECK_THROWS_AS(parse_run_spec(good, Experiment::evolve_l1), ConfigError);

    json off_disc = good;
    off_disc["initial"] = {{"rational", {{"b", 1}, {"c", 1}, {"p", {0.8, 0.8}}}}};
    CHECK_THROWS_AS(parse_run_spec(off_disc, Experiment::evolve_l1), ConfigError);

    json bad_rank = good;
    bad_rank["flow"]["spectrum_rank"] = 9;
    CHECK_THROWS_AS(parse_run_spec(bad_rank, Experiment::evolve_pde), ConfigError);

    CHECK_THROWS_AS(experiment_from_string("plot"), ConfigError);
    CHECK(experiment_from_string("evolve") == Experiment::evolve_pde);
}

TEST_CASE("evolve-pde with u0 = z") {
    const fs::path out = scratch("evolve_z");
    const json j{{"initial", {{"coefficients", {0, 1}}}}, {"flow", flow(1e-3, 1.0, 16, 100, 3)}};
    const RunResult r = run(spec_for(j, Experiment::evolve_pde, out));
    REQUIRE(r.exit_code == kExitOk);
    const TrajectoryRecord rec = read_trajectory_csv(out / "trajectory.csv");
    CHECK(rec.columns.front() == "t");
    CHECK(rec.columns.back() == "sigma3");
    CHECK(rec.rows.size() == 11);
    for (const auto& row : rec.rows)
        for (std::size_t k = 1; k < row.size(); ++k) CHECK(row[k] == rec.rows.front()[k]);
    const json s = read_json(out / "summary.json");
    for (const char* c : {"Q", "M", "E", "absJ"}) CHECK(s["conservation_drift"][c]["max_abs_drift"].get<double>() < 1e-14);
    CHECK(s["truncation"]["flagged"] == false);
    CHECK(s["exit_code"] == 0);
}

TEST_CASE("csv output is byte-identical across runs") {
    const json j{{"initial", {{"rational", {{"b", 1}, {"c", 1}, {"p", 0.5}}}}}, {"flow", flow(1e-3, 0.2, 24, 20, 2)}};
    const fs::path a = scratch("det_a");
    const fs::path b = scratch("det_b");
    REQUIRE(run(spec_for(j, Experiment::evolve_pde, a)).exit_code == kExitOk);
    REQUIRE(run(spec_for(j, Experiment::evolve_pde, b)).exit_code == kExitOk);
    CHECK(slurp(a / "trajectory.csv") == slurp(b / "trajectory.csv"));
    CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));
    CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("numerical abort keeps partial output") {
    const fs::path out = scratch("abort");
    const json j{{"initial", {{"coefficients", {10}}}}, {"flow", flow(1.0, 50.0, 4, 1, 1)}};
    const RunResult r = run(spec_for(j, Experiment::evolve_pde, out));
    CHECK(r.exit_code == kExitNumerical);
    CHECK(fs::exists(out / "trajectory.csv"));
    const json s = read_json(out / "summary.json");
    CHECK(s["aborted"] == true);
    CHECK(s.contains("conservation_drift"));
    CHECK(s.contains("truncation"));
}

TEST_CASE("infeasible blow-up request is a config error") {
    const fs::path out = scratch("infeasible");
    const json j{{"initial", {{"blowup", {{"Q", 5.0}, {"M", 1.0}, {"p_abs", 0.5}}}}}, {"flow", flow(1e-3, 1.0, 8, 10, 1)}};
    const RunResult r = run(spec_for(j, Experiment::blowup_hunt, out));
    CHECK(r.exit_code == kExitConfig);
    CHECK(read_json(out / "summary.json").contains("error"));
}

TEST_CASE("blowup-hunt pipeline") {
    const fs::path out = scratch("hunt");
    const json j{{"initial", {{"blowup", {{"Q", 2.0}, {"M", 1.0}, {"p_abs", 0.5}}}}}, {"flow", flow(1e-4, 6.0, 256, 100, 5)}};
    const RunResult r = run(spec_for(j, Experiment::blowup_hunt, out));
    REQUIRE(r.exit_code == kExitOk);
    const json s = read_json(out / "summary.json");
    CHECK(std::abs(s["initial_state"]["resonance_residual"].get<double>()) < 1e-10);
    CHECK(s["fits"]["abs_c"]["slope"].get<double>() == doctest::Approx(-4.0).epsilon(0.02));
    CHECK(s["fits"]["H1_squared"]["slope"].get<double>() == doctest::Approx(4.0).epsilon(0.05));
    CHECK(s["kappa"].get<double>() == doctest::Approx(4.0));
    CHECK(fs::exists(out / "rational.csv"));
    // |p| -> 1 pushes the tail past the threshold at N = 256.
    CHECK(s["truncation"]["flagged"] == true);
}

TEST_CASE("evolve-l1 and fit round trip") {
    const fs::path out = scratch("l1fit");
    const json j{{"initial", {{"blowup", {{"Q", 2.0}, {"M", 1.0}, {"p_abs", 0.5}}}}}, {"flow", flow(1e-4, 4.0, 50, 256, 2)}};
    REQUIRE(run(spec_for(j, Experiment::evolve_l1, out)).exit_code == kExitOk);

    const json fj{{"fit", {{"input", (out / "trajectory.csv").string()}, {"column", "H1"}, {"t_start", 1.0}, {"t_end", 4.0}}}};
    const fs::path fout = scratch("l1fit_out");
    const RunResult r = run(spec_for(fj, Experiment::fit, fout));
    REQUIRE(r.exit_code == kExitOk);
    // H1 grows like exp(kappa t / 2)
    CHECK(r.summary["fit"]["slope"].get<double>() == doctest::Approx(2.0).epsilon(0.05));

    json bad = fj;
    bad["fit"]["column"] = "nope";
    CHECK(run(spec_for(bad, Experiment::fit, fout)).exit_code == kExitConfig);
}

TEST_CASE("lax-audit and xy-demo") {
    const fs::path out = scratch("lax");
    const json j{{"initial", {{"rational", {{"b", 1}, {"c", 1}, {"p", 0.5}}}}},
                 {"lax", {{"cutoff", 64}, {"N", 32}, {"dts", {1e-3, 5e-4}}}}};
    const RunResult r = run(spec_for(j, Experiment::lax_audit, out));
    REQUIRE(r.exit_code == kExitOk);
    CHECK(r.summary["ratios"][0].get<double>() == doctest::Approx(4.0).epsilon(0.1));

    const fs::path xo = scratch("xy");
    const json x{{"xy", {{"x0", 0.0}, {"y0", 1.0}, {"Q", 1.0}, {"dt", 1e-3}, {"cutoff", 16}}}};
    const RunResult rx = run(spec_for(x, Experiment::xy_demo, xo));
    REQUIRE(rx.exit_code == kExitOk);
    CHECK(rx.summary["within_bound"] == true);
    CHECK(fs::exists(xo / "xy.csv"));

    const json bad{{"xy", {{"x0", 1.0}, {"y0", 1.0}, {"Q", 1.0}, {"dt", 1e-3}, {"cutoff", 16}}}};
    CHECK(run(spec_for(bad, Experiment::xy_demo, scratch("xy_bad"))).exit_code == kExitConfig);
}

TEST_CASE("compare_trajectories") {
    const auto a = record({{0.0, 1.0, 2.0}, {0.5, 1.0, 2.5}, {1.0, 1.0, 3.0}});
    const auto same = compare_trajectories(a, a);
    CHECK(same.pass);
    for (const auto& c : same.columns) {
        CHECK(c.max_abs == 0.0);
        CHECK(c.rms == 0.0);
    }

    auto b = a;
    b.rows[1][2] = 2.6;
    const auto rep = compare_trajectories(a, b, {{"M", 0.05}}, 1e-6);
    CHECK(rep.at("M").max_abs == doctest::Approx(0.1));
    CHECK(rep.at("M").rms == doctest::Approx(0.1 / std::sqrt(3.0)));
    CHECK_FALSE(rep.at("M").pass);
    CHECK(rep.at("Q").pass);
    CHECK_FALSE(rep.pass);

    // b on a finer grid: rejected unless interpolating
    const auto fine = record({{0.0, 1.0, 2.0}, {0.25, 1.0, 2.25}, {0.5, 1.0, 2.5}, {0.75, 1.0, 2.75}, {1.0, 1.0, 3.0}});
    CHECK_THROWS_AS(compare_trajectories(a, fine), std::invalid_argument);
    const auto interp = compare_trajectories(fine, a, {}, 1e-12, true);
    CHECK(interp.rows == 5);
    CHECK(interp.at("M").max_abs < 1e-15);

    auto shifted = a;
    shifted.rows[1][0] = 0.6;
    CHECK_THROWS_AS(compare_trajectories(a, shifted), std::invalid_argument);
}

TEST_CASE("dt refinement of the rk4 flow converges at fourth order") {
    auto traj = [](double dt, std::size_t stride) {
        FlowConfig cfg;
        cfg.dt = dt;
        cfg.t_end = 1.0;
        cfg.cutoff = 32;
        cfg.monitor_stride = stride;
        cfg.spectrum_rank = 2;
        cfg.integrator = Integrator::rk4;
        return evolve(to_spectrum({1.0, 1.0, 0.5}, 32), cfg);
    };
    // Top modes are stiff here; coarser steps sit outside the asymptotic range.
    const auto a = traj(2.5e-3, 40);
    const auto b = traj(1.25e-3, 80);
    const auto c = traj(6.25e-4, 160);
    const double d1 = compare_trajectories(a, b).at("H1").max_abs;
    const double d2 = compare_trajectories(b, c).at("H1").max_abs;
    MESSAGE("refinement ratio " << d1 / d2);
    CHECK(d1 / d2 == doctest::Approx(16.0).epsilon(0.2));
}

TEST_CASE("truncation tail estimate") {
    SpectrumPlus geo(20);
    for (std::size_t k = 1; k <= 20; ++k) geo[k] = 2.0 * std::pow(0.5, static_cast<double>(k - 1));
    const RationalState s{0.0, 2.0, 0.5};
    CHECK(truncation_tail_estimate(geo) == doctest::Approx(tail_magnitude(s, 20)).epsilon(1e-12));
    CHECK(truncation_tail_estimate(SpectrumPlus::monomial(1, 1.0, 8)) == 0.0);
}

}  // TEST_SUITE
