#pragma once

// Experiment orchestration behind the qszego-lab command line tool.
//
// A RunSpec is read from a JSON config, executed, and leaves a CSV trajectory
// plus a JSON summary in its output directory. Exit codes: 0 success,
// 2 configuration error, 3 numerical abort (partial output kept).

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "qszego/fit.hpp"
#include "qszego/flow.hpp"
#include "qszego/l1_manifold.hpp"

namespace qszego::lab {

enum class Experiment { evolve_pde, evolve_l1, compare, blowup_hunt, lax_audit, xy_demo, fit };

/// "evolve-pde", "evolve-l1", ... as used in configs.
std::string to_string(Experiment e);
/// Accepts config names and the CLI subcommand alias "evolve".
Experiment experiment_from_string(const std::string& name);

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BlowupRequest {
    double Q = 0.0;
    double M = 0.0;
    double p_abs = 0.0;
};

using InitialData = std::variant<std::monostate, std::vector<cplx>, RationalState, BlowupRequest>;

struct CompareParams {
    double p_limit = 0.9;
    double default_tolerance = 1e-6;
    std::map<std::string, double> tolerances;
};

struct LaxParams {
    std::size_t N = 32;
    std::vector<double> dts;
};

struct XYParams {
    double x0 = 0.0;
    double y0 = 0.0;
    double Q = 0.0;
    double dt = 1e-3;
    std::size_t cutoff = 16;
};

struct FitParams {
    std::filesystem::path input;
    std::string column;
    double t_start = 0.0;
    double t_end = 0.0;
};

struct RunSpec {
    Experiment kind = Experiment::evolve_pde;
    InitialData initial;
    FlowConfig flow;
    CompareParams compare;
    LaxParams lax;
    XYParams xy;
    FitParams fit;
    std::filesystem::path out_dir = ".";
    /// Directory the config came from; relative input paths resolve against it.
    std::filesystem::path base_dir = ".";
};

/// Validates a JSON config for the given experiment. Unknown keys, sections
/// that do not belong to the experiment and missing required keys are
/// ConfigErrors. A "experiment" key, if present, must agree with `kind`.
RunSpec parse_run_spec(const nlohmann::json& config, Experiment kind);
RunSpec load_run_spec(const std::filesystem::path& config_path, Experiment kind);

struct RunResult {
    int exit_code = kExitOk;
    nlohmann::json summary;
    std::vector<std::filesystem::path> files;
};

/// Executes the experiment and writes its files to spec.out_dir. Library
/// precondition failures map to exit code 2, instability to 3.
RunResult run(const RunSpec& spec);

/// The initial state of a run at the given cutoff (resolving blow-up requests).
SpectrumPlus initial_spectrum(const InitialData& init, std::size_t cutoff);
/// The (b,c,p) state of a run; ConfigError for explicit coefficient data.
RationalState initial_rational(const InitialData& init);

/// |u(N)| |p| / (1 - |p|) with p = u(N)/u(N-1): the dropped l^1 mass if the
/// tail continues geometrically, which is exact on rank-one data.
double truncation_tail_estimate(const SpectrumPlus& u);

inline constexpr double kTailFlagThreshold = 1e-10;

struct ColumnDeviation {
    std::string column;
    double max_abs = 0.0;
    double rms = 0.0;
    double tolerance = 0.0;
    bool pass = true;
};

struct CompareReport {
    std::vector<ColumnDeviation> columns;
    std::size_t rows = 0;
    bool pass = true;

    const ColumnDeviation& at(const std::string& column) const;
};

/// Per-column max and RMS deviations of b from a over the columns they share
/// (except t). Without interpolation the time grids must match to 1e-12;
/// with it, b is linearly interpolated onto the times of a that fall inside
/// b's range. Throws std::invalid_argument on incomparable grids.
CompareReport compare_trajectories(const TrajectoryRecord& a, const TrajectoryRecord& b,
                                   const std::map<std::string, double>& tolerances = {},
                                   double default_tolerance = 1e-6, bool interpolate = false);

/// Fixed 17-significant-digit formatting used for every emitted number.
std::string format_double(double x);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryRecord& rec);
TrajectoryRecord read_trajectory_csv(const std::filesystem::path& path);

}  // namespace qszego::lab
