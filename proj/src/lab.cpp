#include "qszego/lab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace qszego::lab {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Experiment e) {
    switch (e) {
        case Experiment::evolve_pde: return "evolve-pde";
        case Experiment::evolve_l1: return "evolve-l1";
        case Experiment::compare: return "compare";
        case Experiment::blowup_hunt: return "blowup-hunt";
        case Experiment::lax_audit: return "lax-audit";
        case Experiment::xy_demo: return "xy-demo";
        case Experiment::fit: return "fit";
    }
    return "unknown";
}

Experiment experiment_from_string(const std::string& name) {
    if (name == "evolve" || name == "evolve-pde") return Experiment::evolve_pde;
    if (name == "evolve-l1") return Experiment::evolve_l1;
    if (name == "compare") return Experiment::compare;
    if (name == "blowup-hunt") return Experiment::blowup_hunt;
    if (name == "lax-audit") return Experiment::lax_audit;
    if (name == "xy-demo") return Experiment::xy_demo;
    if (name == "fit") return Experiment::fit;
    throw ConfigError("unknown experiment '" + name + "'");
}

// ---------------------------------------------------------------------------
// config parsing

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

const json& require(const json& obj, const std::string& key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError(where + ": missing required key '" + key + "'");
    return *it;
}

double as_double(const json& v, const std::string& what) {
    if (!v.is_number()) throw ConfigError(what + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(what + ": not finite");
    return x;
}

std::size_t as_size(const json& v, const std::string& what) {
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ConfigError(what + ": expected a nonnegative integer");
    return v.get<std::size_t>();
}

cplx as_cplx(const json& v, const std::string& what) {
    if (v.is_number()) return {as_double(v, what), 0.0};
    if (v.is_array() && v.size() == 2) return {as_double(v[0], what + "[0]"), as_double(v[1], what + "[1]")};
    throw ConfigError(what + ": expected a number or [re, im]");
}

Integrator as_integrator(const json& v, const std::string& what) {
    if (v == "rk4") return Integrator::rk4;
    if (v == "rk6") return Integrator::rk6;
    throw ConfigError(what + ": expected \"rk4\" or \"rk6\"");
}

const char* integrator_name(Integrator m) { return m == Integrator::rk4 ? "rk4" : "rk6"; }

InitialData parse_initial(const json& j) {
    check_keys(j, {"coefficients", "rational", "blowup"}, "initial");
    if (j.size() != 1) throw ConfigError("initial: exactly one of coefficients, rational, blowup is required");
    if (j.contains("coefficients")) {
        const json& c = j["coefficients"];
        if (!c.is_array() || c.empty()) throw ConfigError("initial.coefficients: expected a nonempty array");
        std::vector<cplx> out;
        for (std::size_t k = 0; k < c.size(); ++k)
            out.push_back(as_cplx(c[k], "initial.coefficients[" + std::to_string(k) + "]"));
        return out;
    }
    if (j.contains("rational")) {
        const json& r = j["rational"];
        check_keys(r, {"b", "c", "p"}, "initial.rational");
        RationalState s{as_cplx(require(r, "b", "initial.rational"), "initial.rational.b"),
                        as_cplx(require(r, "c", "initial.rational"), "initial.rational.c"),
                        as_cplx(require(r, "p", "initial.rational"), "initial.rational.p")};
        if (!s.on_manifold()) throw ConfigError("initial.rational: need |p| < 1 and c != 0");
        return s;
    }
    const json& b = j["blowup"];
    check_keys(b, {"Q", "M", "p_abs"}, "initial.blowup");
    BlowupRequest req{as_double(require(b, "Q", "initial.blowup"), "initial.blowup.Q"),
                      as_double(require(b, "M", "initial.blowup"), "initial.blowup.M"),
                      as_double(require(b, "p_abs", "initial.blowup"), "initial.blowup.p_abs")};
    if (!(req.p_abs > 0.0 && req.p_abs < 1.0)) throw ConfigError("initial.blowup.p_abs: must lie in (0, 1)");
    return req;
}

FlowConfig parse_flow(const json& j) {
    check_keys(j, {"dt", "t_end", "cutoff", "monitor_stride", "spectrum_rank", "integrator"}, "flow");
    FlowConfig cfg;
    cfg.dt = as_double(require(j, "dt", "flow"), "flow.dt");
    cfg.t_end = as_double(require(j, "t_end", "flow"), "flow.t_end");
    cfg.cutoff = as_size(require(j, "cutoff", "flow"), "flow.cutoff");
    cfg.monitor_stride = as_size(require(j, "monitor_stride", "flow"), "flow.monitor_stride");
    cfg.spectrum_rank = as_size(require(j, "spectrum_rank", "flow"), "flow.spectrum_rank");
    if (j.contains("integrator")) cfg.integrator = as_integrator(j["integrator"], "flow.integrator");
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("flow: ") + e.what());
    }
    return cfg;
}

CompareParams parse_compare(const json& j) {
    check_keys(j, {"p_limit", "default_tolerance", "tolerances"}, "compare");
    CompareParams c;
    c.p_limit = as_double(require(j, "p_limit", "compare"), "compare.p_limit");
    c.default_tolerance = as_double(require(j, "default_tolerance", "compare"), "compare.default_tolerance");
    if (!(c.p_limit > 0.0 && c.p_limit < 1.0)) throw ConfigError("compare.p_limit: must lie in (0, 1)");
    if (!(c.default_tolerance > 0.0)) throw ConfigError("compare.default_tolerance: must be positive");
    if (j.contains("tolerances")) {
        const json& t = j["tolerances"];
        if (!t.is_object()) throw ConfigError("compare.tolerances: expected an object");
        for (const auto& [k, v] : t.items()) c.tolerances[k] = as_double(v, "compare.tolerances." + k);
    }
    return c;
}

std::pair<LaxParams, FlowConfig> parse_lax(const json& j) {
    check_keys(j, {"cutoff", "N", "dts", "integrator"}, "lax");
    LaxParams p;
    FlowConfig cfg;
    cfg.cutoff = as_size(require(j, "cutoff", "lax"), "lax.cutoff");
    cfg.spectrum_rank = 0;
    p.N = as_size(require(j, "N", "lax"), "lax.N");
    const json& dts = require(j, "dts", "lax");
    if (!dts.is_array() || dts.empty()) throw ConfigError("lax.dts: expected a nonempty array");
    for (std::size_t k = 0; k < dts.size(); ++k) {
        const double dt = as_double(dts[k], "lax.dts[" + std::to_string(k) + "]");
        if (!(dt > 0.0)) throw ConfigError("lax.dts: entries must be positive");
        p.dts.push_back(dt);
    }
    if (j.contains("integrator")) cfg.integrator = as_integrator(j["integrator"], "lax.integrator");
    if (p.N == 0 || p.N > cfg.cutoff) throw ConfigError("lax.N: must satisfy 1 <= N <= cutoff");
    return {p, cfg};
}

XYParams parse_xy(const json& j) {
    check_keys(j, {"x0", "y0", "Q", "dt", "cutoff"}, "xy");
    XYParams p;
    p.x0 = as_double(require(j, "x0", "xy"), "xy.x0");
    p.y0 = as_double(require(j, "y0", "xy"), "xy.y0");
    p.Q = as_double(require(j, "Q", "xy"), "xy.Q");
    p.dt = as_double(require(j, "dt", "xy"), "xy.dt");
    p.cutoff = as_size(require(j, "cutoff", "xy"), "xy.cutoff");
    if (!(p.dt > 0.0)) throw ConfigError("xy.dt: must be positive");
    return p;
}

FitParams parse_fit(const json& j) {
    check_keys(j, {"input", "column", "t_start", "t_end"}, "fit");
    FitParams p;
    const json& in = require(j, "input", "fit");
    const json& col = require(j, "column", "fit");
    if (!in.is_string() || !col.is_string()) throw ConfigError("fit: input and column must be strings");
    p.input = in.get<std::string>();
    p.column = col.get<std::string>();
    p.t_start = as_double(require(j, "t_start", "fit"), "fit.t_start");
    p.t_end = as_double(require(j, "t_end", "fit"), "fit.t_end");
    if (!(p.t_end > p.t_start)) throw ConfigError("fit: window must satisfy t_start < t_end");
    return p;
}

}  // namespace

RunSpec parse_run_spec(const json& config, Experiment kind) {
    RunSpec spec;
    spec.kind = kind;
    std::set<std::string> allowed{"experiment"};
    switch (kind) {
        case Experiment::evolve_pde:
        case Experiment::evolve_l1:
        case Experiment::blowup_hunt: allowed.insert({"initial", "flow"}); break;
        case Experiment::compare: allowed.insert({"initial", "flow", "compare"}); break;
        case Experiment::lax_audit: allowed.insert({"initial", "lax"}); break;
        case Experiment::xy_demo: allowed.insert("xy"); break;
        case Experiment::fit: allowed.insert("fit"); break;
    }
    check_keys(config, allowed, "config (" + to_string(kind) + ")");
    if (config.contains("experiment")) {
        const json& e = config["experiment"];
        if (!e.is_string() || experiment_from_string(e.get<std::string>()) != kind)
            throw ConfigError("config: experiment '" + e.dump() + "' does not match '" + to_string(kind) + "'");
    }
    for (const auto& key : allowed) {
        if (key != "experiment" && !config.contains(key)) throw ConfigError("config: missing section '" + key + "'");
    }

    if (config.contains("initial")) spec.initial = parse_initial(config["initial"]);
    if (config.contains("flow")) spec.flow = parse_flow(config["flow"]);
    if (config.contains("compare")) spec.compare = parse_compare(config["compare"]);
    if (config.contains("lax")) std::tie(spec.lax, spec.flow) = parse_lax(config["lax"]);
    if (config.contains("xy")) spec.xy = parse_xy(config["xy"]);
    if (config.contains("fit")) spec.fit = parse_fit(config["fit"]);

    const bool needs_rational = kind == Experiment::evolve_l1 || kind == Experiment::compare ||
                                kind == Experiment::blowup_hunt;
    if (needs_rational && std::holds_alternative<std::vector<cplx>>(spec.initial))
        throw ConfigError("initial: " + to_string(kind) + " needs rational or blowup initial data");
    if (auto* c = std::get_if<std::vector<cplx>>(&spec.initial); c && c->size() > spec.flow.cutoff + 1)
        throw ConfigError("initial.coefficients: more entries than cutoff + 1");
    return spec;
}

RunSpec load_run_spec(const fs::path& config_path, Experiment kind) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot read config " + config_path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(config_path.string() + ": " + e.what());
    }
    RunSpec spec = parse_run_spec(j, kind);
    spec.base_dir = config_path.has_parent_path() ? config_path.parent_path() : fs::path(".");
    return spec;
}

// ---------------------------------------------------------------------------
// initial data

RationalState initial_rational(const InitialData& init) {
    if (const auto* s = std::get_if<RationalState>(&init)) return *s;
    if (const auto* r = std::get_if<BlowupRequest>(&init)) return find_blowup_initial(r->Q, r->M, r->p_abs);
    throw ConfigError("initial data is not on the rational manifold");
}

SpectrumPlus initial_spectrum(const InitialData& init, std::size_t cutoff) {
    if (const auto* c = std::get_if<std::vector<cplx>>(&init)) {
        std::vector<cplx> v = *c;
        v.resize(cutoff + 1);
        return SpectrumPlus(std::move(v));
    }
    if (std::holds_alternative<std::monostate>(init)) throw ConfigError("no initial data");
    return to_spectrum(initial_rational(init), cutoff);
}

double truncation_tail_estimate(const SpectrumPlus& u) {
    const std::size_t N = u.cutoff();
    const double top = std::abs(u[N]);
    if (top == 0.0) return 0.0;
    if (N == 0) return std::numeric_limits<double>::infinity();
    const double below = std::abs(u[N - 1]);
    if (below == 0.0) return std::numeric_limits<double>::infinity();
    const double ratio = top / below;
    if (ratio >= 1.0) return std::numeric_limits<double>::infinity();
    return top * ratio / (1.0 - ratio);
}

// ---------------------------------------------------------------------------
// comparison

const ColumnDeviation& CompareReport::at(const std::string& column) const {
    for (const auto& c : columns)
        if (c.column == column) return c;
    throw std::out_of_range("CompareReport: no column '" + column + "'");
}

CompareReport compare_trajectories(const TrajectoryRecord& a, const TrajectoryRecord& b,
                                   const std::map<std::string, double>& tolerances, double default_tolerance,
                                   bool interpolate) {
    const std::size_t ta = a.column_index("t");
    const std::size_t tb = b.column_index("t");
    if (a.rows.empty() || b.rows.empty()) throw std::invalid_argument("compare_trajectories: empty trajectory");

    // Pairs (row of a, value source in b) on the common grid.
    std::vector<std::size_t> a_rows;
    std::vector<std::pair<std::size_t, double>> b_pos;  // lower row index, interpolation weight
    if (!interpolate) {
        if (a.rows.size() != b.rows.size())
            throw std::invalid_argument("compare_trajectories: different row counts (" +
                                        std::to_string(a.rows.size()) + " vs " + std::to_string(b.rows.size()) +
                                        "); enable interpolation");
        for (std::size_t i = 0; i < a.rows.size(); ++i) {
            const double t1 = a.rows[i][ta];
            const double t2 = b.rows[i][tb];
            if (std::abs(t1 - t2) > 1e-12 * std::max(1.0, std::abs(t1)))
                throw std::invalid_argument("compare_trajectories: time grids differ at row " + std::to_string(i) +
                                            "; enable interpolation");
            a_rows.push_back(i);
            b_pos.emplace_back(i, 0.0);
        }
    } else {
        const double lo = b.rows.front()[tb];
        const double hi = b.rows.back()[tb];
        std::size_t j = 0;
        for (std::size_t i = 0; i < a.rows.size(); ++i) {
            const double t = a.rows[i][ta];
            if (t < lo || t > hi) continue;
            while (j + 1 < b.rows.size() && b.rows[j + 1][tb] < t) ++j;
            double w = 0.0;
            if (j + 1 < b.rows.size() && t > b.rows[j][tb]) {
                w = (t - b.rows[j][tb]) / (b.rows[j + 1][tb] - b.rows[j][tb]);
            }
            a_rows.push_back(i);
            b_pos.emplace_back(j, w);
        }
        if (a_rows.empty()) throw std::invalid_argument("compare_trajectories: time ranges do not overlap");
    }

    CompareReport report;
    report.rows = a_rows.size();
    for (const auto& name : a.columns) {
        if (name == "t") continue;
        if (std::find(b.columns.begin(), b.columns.end(), name) == b.columns.end()) continue;
        const std::size_t ca = a.column_index(name);
        const std::size_t cb = b.column_index(name);
        ColumnDeviation dev;
        dev.column = name;
        auto it = tolerances.find(name);
        dev.tolerance = it != tolerances.end() ? it->second : default_tolerance;
        double sum_sq = 0.0;
        for (std::size_t k = 0; k < a_rows.size(); ++k) {
            const auto [j, w] = b_pos[k];
            double vb = b.rows[j][cb];
            if (w > 0.0) vb = (1.0 - w) * vb + w * b.rows[j + 1][cb];
            const double d = std::abs(a.rows[a_rows[k]][ca] - vb);
            dev.max_abs = std::isnan(d) ? d : std::max(dev.max_abs, d);
            sum_sq += d * d;
        }
        dev.rms = std::sqrt(sum_sq / static_cast<double>(a_rows.size()));
        dev.pass = dev.max_abs <= dev.tolerance;
        report.pass = report.pass && dev.pass;
        report.columns.push_back(dev);
    }
    return report;
}

// ---------------------------------------------------------------------------
// files

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << format_double(row[k]);
        out << '\n';
    }
    if (!out) throw ConfigError("write failed for " + path.string());
}

void write_trajectory_csv(const fs::path& path, const TrajectoryRecord& rec) {
    write_csv(path, rec.columns, rec.rows);
}

TrajectoryRecord read_trajectory_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path.string());
    TrajectoryRecord rec;
    std::string line;
    if (!std::getline(in, line) || line.empty()) throw ConfigError(path.string() + ": missing header");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) rec.columns.push_back(cell);
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0')
                throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
            row.push_back(v);
        }
        if (row.size() != rec.columns.size())
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": wrong number of fields");
        rec.rows.push_back(std::move(row));
    }
    if (!rec.rows.empty()) rec.last_valid_time = rec.rows.back()[0];
    return rec;
}

// ---------------------------------------------------------------------------
// experiments

namespace {

json cplx_json(cplx z) { return json::array({z.real(), z.imag()}); }

json spec_json(const RunSpec& spec) {
    json j;
    j["experiment"] = to_string(spec.kind);
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::vector<cplx>>) {
                json arr = json::array();
                for (cplx z : v) arr.push_back(cplx_json(z));
                j["initial"]["coefficients"] = arr;
            } else if constexpr (std::is_same_v<T, RationalState>) {
                j["initial"]["rational"] = {{"b", cplx_json(v.b)}, {"c", cplx_json(v.c)}, {"p", cplx_json(v.p)}};
            } else if constexpr (std::is_same_v<T, BlowupRequest>) {
                j["initial"]["blowup"] = {{"Q", v.Q}, {"M", v.M}, {"p_abs", v.p_abs}};
            }
        },
        spec.initial);
    switch (spec.kind) {
        case Experiment::evolve_pde:
        case Experiment::evolve_l1:
        case Experiment::blowup_hunt:
        case Experiment::compare:
            j["flow"] = {{"dt", spec.flow.dt},
                         {"t_end", spec.flow.t_end},
                         {"cutoff", spec.flow.cutoff},
                         {"monitor_stride", spec.flow.monitor_stride},
                         {"spectrum_rank", spec.flow.spectrum_rank},
                         {"integrator", integrator_name(spec.flow.integrator)}};
            if (spec.kind == Experiment::compare)
                j["compare"] = {{"p_limit", spec.compare.p_limit},
                                {"default_tolerance", spec.compare.default_tolerance},
                                {"tolerances", spec.compare.tolerances}};
            break;
        case Experiment::lax_audit:
            j["lax"] = {{"cutoff", spec.flow.cutoff},
                        {"N", spec.lax.N},
                        {"dts", spec.lax.dts},
                        {"integrator", integrator_name(spec.flow.integrator)}};
            break;
        case Experiment::xy_demo:
            j["xy"] = {{"x0", spec.xy.x0}, {"y0", spec.xy.y0}, {"Q", spec.xy.Q}, {"dt", spec.xy.dt},
                       {"cutoff", spec.xy.cutoff}};
            break;
        case Experiment::fit:
            j["fit"] = {{"input", spec.fit.input.string()},
                        {"column", spec.fit.column},
                        {"t_start", spec.fit.t_start},
                        {"t_end", spec.fit.t_end}};
            break;
    }
    return j;
}

bool is_conserved_column(const std::string& c) {
    return c == "Q" || c == "M" || c == "E" || c == "absJ" || c == "H12" || c.rfind("sigma", 0) == 0;
}

json drift_table(const TrajectoryRecord& rec) {
    json table = json::object();
    if (rec.rows.empty()) return table;
    for (std::size_t k = 0; k < rec.columns.size(); ++k) {
        if (!is_conserved_column(rec.columns[k])) continue;
        const double v0 = rec.rows.front()[k];
        double abs_drift = 0.0;
        for (const auto& row : rec.rows) abs_drift = std::max(abs_drift, std::abs(row[k] - v0));
        json entry{{"initial", v0}, {"max_abs_drift", abs_drift}};
        entry["max_rel_drift"] = v0 != 0.0 ? json(abs_drift / std::abs(v0)) : json(nullptr);
        table[rec.columns[k]] = entry;
    }
    return table;
}

struct TailTracker {
    explicit TailTracker(std::size_t n) : N(n) {}

    std::size_t N;
    double max_tail = 0.0;
    std::optional<double> first_flag_time;

    void observe(double t, double tail) {
        max_tail = std::max(max_tail, tail);
        if (!first_flag_time && !(tail <= kTailFlagThreshold)) first_flag_time = t;
    }
    json to_json(const char* estimator) const {
        json j{{"N", N}, {"estimator", estimator}, {"threshold", kTailFlagThreshold},
               {"max_tail", max_tail}, {"flagged", first_flag_time.has_value()}};
        j["first_flag_time"] = first_flag_time ? json(*first_flag_time) : json(nullptr);
        return j;
    }
};

json not_tracked_tail() { return json{{"flagged", false}, {"estimator", "not tracked for this experiment"}}; }

void ensure_out_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
    const fs::path probe = dir / ".qszego-write-probe";
    {
        std::ofstream out(probe);
        if (!out) throw ConfigError("output directory " + dir.string() + " is not writable");
    }
    fs::remove(probe, ec);
}

std::vector<std::string> rational_columns() {
    return {"t", "b_re", "b_im", "c_re", "c_im", "p_re", "p_im", "abs_c", "abs_p", "tail"};
}

std::vector<double> rational_row(double t, const RationalState& s, std::size_t N) {
    return {t,           s.b.real(),        s.b.imag(),        s.c.real(), s.c.imag(),
            s.p.real(),  s.p.imag(),        std::abs(s.c),     std::abs(s.p), tail_magnitude(s, N)};
}

class Runner {
public:
    explicit Runner(const RunSpec& spec) : spec_(spec) {}

    RunResult operator()() {
        ensure_out_dir(spec_.out_dir);
        result_.summary["config"] = spec_json(spec_);
        switch (spec_.kind) {
            case Experiment::evolve_pde: evolve_pde(); break;
            case Experiment::evolve_l1: evolve_l1(); break;
            case Experiment::compare: compare(); break;
            case Experiment::blowup_hunt: blowup_hunt(); break;
            case Experiment::lax_audit: lax_audit(); break;
            case Experiment::xy_demo: xy_demo(); break;
            case Experiment::fit: fit(); break;
        }
        result_.summary["exit_code"] = result_.exit_code;
        write_summary();
        return result_;
    }

    // Best effort for error exits: the summary records what went wrong.
    RunResult fail(int code, const std::string& message) {
        result_.exit_code = code;
        result_.summary["exit_code"] = code;
        result_.summary["error"] = message;
        if (!result_.summary.contains("config")) result_.summary["config"] = spec_json(spec_);
        if (!result_.summary.contains("conservation_drift")) result_.summary["conservation_drift"] = json::object();
        if (!result_.summary.contains("truncation")) result_.summary["truncation"] = not_tracked_tail();
        try {
            write_summary();
        } catch (const std::exception&) {
        }
        return result_;
    }

private:
    fs::path out(const char* name) {
        fs::path p = spec_.out_dir / name;
        result_.files.push_back(p);
        return p;
    }

    void write_summary() {
        const fs::path p = spec_.out_dir / "summary.json";
        std::ofstream o(p, std::ios::binary | std::ios::trunc);
        if (!o) throw ConfigError("cannot write " + p.string());
        o << result_.summary.dump(2) << '\n';
        if (std::find(result_.files.begin(), result_.files.end(), p) == result_.files.end())
            result_.files.push_back(p);
    }

    void mark_abort(const TrajectoryRecord& rec) {
        result_.summary["aborted"] = rec.aborted;
        result_.summary["last_valid_time"] = rec.last_valid_time;
        if (rec.aborted) {
            result_.summary["diagnostic"] = rec.diagnostic;
            result_.exit_code = kExitNumerical;
        }
    }

    void evolve_pde() {
        const FlowConfig& cfg = spec_.flow;
        TailTracker tail{cfg.cutoff};
        const TrajectoryRecord rec = evolve(initial_spectrum(spec_.initial, cfg.cutoff), cfg,
                                            [&](double t, const SpectrumPlus& u) {
                                                tail.observe(t, truncation_tail_estimate(u));
                                            });
        write_trajectory_csv(out("trajectory.csv"), rec);
        result_.summary["conservation_drift"] = drift_table(rec);
        result_.summary["truncation"] = tail.to_json("geometric extrapolation of the top two modes");
        result_.summary["rows"] = rec.rows.size();
        mark_abort(rec);
    }

    L1Trajectory run_l1(const RationalState& s0, TailTracker& tail) {
        const L1Trajectory traj = evolve_ode(s0, spec_.flow);
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < traj.states.size(); ++i) {
            rows.push_back(rational_row(traj.times[i], traj.states[i], spec_.flow.cutoff));
            tail.observe(traj.times[i], rows.back().back());
        }
        const TrajectoryRecord rec = l1_record(traj, spec_.flow.spectrum_rank);
        write_trajectory_csv(out("trajectory.csv"), rec);
        write_csv(out("rational.csv"), rational_columns(), rows);
        result_.summary["conservation_drift"] = drift_table(rec);
        result_.summary["truncation"] = tail.to_json("|c| |p|^N / (1 - |p|)");
        result_.summary["rows"] = rec.rows.size();
        mark_abort(rec);
        return traj;
    }

    json state_json(const RationalState& s) {
        const ConservedSet c = conserved_closed_form(s);
        return {{"b", cplx_json(s.b)}, {"c", cplx_json(s.c)},  {"p", cplx_json(s.p)},
                {"Q", c.Q},            {"M", c.M},             {"E", c.E},
                {"absJ", std::abs(c.J)}, {"resonance_residual", resonance_residual(s)}};
    }

    void evolve_l1() {
        const RationalState s0 = initial_rational(spec_.initial);
        result_.summary["initial_state"] = state_json(s0);
        TailTracker tail{spec_.flow.cutoff};
        run_l1(s0, tail);
    }

    void blowup_hunt() {
        const RationalState s0 = initial_rational(spec_.initial);
        const ConservedSet c0 = conserved_closed_form(s0);
        result_.summary["initial_state"] = state_json(s0);
        result_.summary["resonant"] = std::abs(resonance_residual(s0)) < 1e-10;
        if (c0.Q < 4.0 * c0.M) {
            const EnvelopeData env = envelope_data(c0.Q, c0.M);
            result_.summary["kappa"] = env.kappa;
            result_.summary["envelope_roots"] = {env.r_minus, env.r_plus};
        }

        TailTracker tail{spec_.flow.cutoff};
        const L1Trajectory traj = run_l1(s0, tail);

        double min_c = std::numeric_limits<double>::infinity();
        for (const auto& s : traj.states) min_c = std::min(min_c, std::abs(s.c));
        result_.summary["min_abs_c"] = min_c;

        json fits;
        try {
            const std::size_t i0 = decay_window_start(traj);
            const auto win = std::make_pair(traj.times[i0], traj.times.back());
            std::vector<double> ac;
            std::vector<double> h1;
            for (const auto& s : traj.states) {
                ac.push_back(std::abs(s.c));
                h1.push_back(h1_norm_sq_closed_form(s));
            }
            auto fit_json = [](const FitResult& f) {
                return json{{"slope", f.slope},     {"intercept", f.intercept},
                            {"t_start", f.t_start}, {"t_end", f.t_end},
                            {"residual_rms", f.residual_rms}, {"points", f.points}};
            };
            fits["abs_c"] = fit_json(fit_exponential(traj.times, ac, win));
            fits["H1_squared"] = fit_json(fit_exponential(traj.times, h1, win));
            fits["growth_diagnostic_s1"] = growth_diagnostic(traj, 1.0);
            fits["exponential_regime"] = true;
        } catch (const NoExponentialRegime& e) {
            fits["exponential_regime"] = false;
            fits["reason"] = e.what();
        } catch (const std::invalid_argument& e) {
            fits["exponential_regime"] = false;
            fits["reason"] = e.what();
        }
        result_.summary["fits"] = fits;
    }

    void compare() {
        FlowConfig cfg = spec_.flow;
        cfg.keep_snapshots = true;
        const RationalState s0 = initial_rational(spec_.initial);
        TailTracker pde_tail{cfg.cutoff};
        const TrajectoryRecord pde = evolve(to_spectrum(s0, cfg.cutoff), cfg, [&](double t, const SpectrumPlus& u) {
            pde_tail.observe(t, truncation_tail_estimate(u));
        });
        const L1Trajectory ode = evolve_ode(s0, cfg);
        const TrajectoryRecord ode_rec = l1_record(ode, cfg.spectrum_rank);

        const std::size_t n = std::min(pde.rows.size(), ode.states.size());
        std::vector<std::vector<double>> rows;
        double max_dev = 0.0;
        double window_end = 0.0;
        bool in_window = true;
        TailTracker tail{cfg.cutoff};
        TrajectoryRecord pde_w;
        TrajectoryRecord ode_w;
        pde_w.columns = pde.columns;
        ode_w.columns = ode_rec.columns;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = pde.rows[i][0];
            const RationalState& s = ode.states[i];
            const double dev = l2_distance(pde.snapshots[i], to_spectrum(s, cfg.cutoff));
            const double ap = std::abs(s.p);
            const double tl = tail_magnitude(s, cfg.cutoff);
            rows.push_back({t, dev, ap, tl});
            tail.observe(t, tl);
            in_window = in_window && ap <= spec_.compare.p_limit;
            if (in_window) {
                max_dev = std::max(max_dev, dev);
                window_end = t;
                pde_w.rows.push_back(pde.rows[i]);
                ode_w.rows.push_back(ode_rec.rows[i]);
            }
        }
        write_trajectory_csv(out("trajectory.csv"), pde);
        write_trajectory_csv(out("trajectory_l1.csv"), ode_rec);
        write_csv(out("compare.csv"), {"t", "l2_deviation", "abs_p", "tail"}, rows);

        auto tol_it = spec_.compare.tolerances.find("l2_deviation");
        const double l2_tol =
            tol_it != spec_.compare.tolerances.end() ? tol_it->second : spec_.compare.default_tolerance;
        json cmp{{"p_limit", spec_.compare.p_limit},
                 {"window_end", window_end},
                 {"max_l2_deviation", max_dev},
                 {"l2_tolerance", l2_tol},
                 {"l2_pass", max_dev <= l2_tol}};
        if (!pde_w.rows.empty()) {
            const CompareReport rep = compare_trajectories(pde_w, ode_w, spec_.compare.tolerances,
                                                           spec_.compare.default_tolerance, false);
            json cols = json::object();
            for (const auto& c : rep.columns)
                cols[c.column] = {{"max_abs", c.max_abs}, {"rms", c.rms}, {"tolerance", c.tolerance},
                                  {"pass", c.pass}};
            cmp["columns"] = cols;
            cmp["pass"] = rep.pass && max_dev <= l2_tol;
        } else {
            cmp["pass"] = false;
        }
        result_.summary["comparison"] = cmp;
        result_.summary["conservation_drift"] = drift_table(pde);
        result_.summary["truncation"] = tail.to_json("|c| |p|^N / (1 - |p|) along the reduced solution");
        result_.summary["truncation_pde_estimate"] = pde_tail.to_json("geometric extrapolation of the top two modes");
        mark_abort(pde);
        if (ode.aborted) {
            result_.summary["l1_diagnostic"] = ode.diagnostic;
        }
    }

    void lax_audit() {
        const SpectrumPlus u = initial_spectrum(spec_.initial, spec_.flow.cutoff);
        std::vector<std::vector<double>> rows;
        json residuals = json::array();
        json ratios = json::array();
        double prev = 0.0;
        for (std::size_t k = 0; k < spec_.lax.dts.size(); ++k) {
            const double dt = spec_.lax.dts[k];
            const double r = lax_residual(u, dt, spec_.lax.N, spec_.flow.integrator);
            const double ratio = k == 0 ? std::numeric_limits<double>::quiet_NaN() : prev / r;
            rows.push_back({dt, r, ratio});
            residuals.push_back(r);
            if (k) ratios.push_back(ratio);
            prev = r;
        }
        write_csv(out("lax.csv"), {"dt", "residual", "ratio"}, rows);
        result_.summary["residuals"] = residuals;
        result_.summary["ratios"] = ratios;

        // Conservation over the widest stencil used.
        const double dtmax = *std::max_element(spec_.lax.dts.begin(), spec_.lax.dts.end());
        TrajectoryRecord rec;
        rec.columns = trajectory_columns(0);
        rec.rows.push_back(monitor_row(u, 0.0, 0));
        rec.rows.push_back(monitor_row(integrate(u, dtmax, 1, spec_.flow.integrator), dtmax, 0));
        rec.rows.push_back(monitor_row(integrate(u, -dtmax, 1, spec_.flow.integrator), -dtmax, 0));
        result_.summary["conservation_drift"] = drift_table(rec);
        TailTracker tail{spec_.flow.cutoff};
        tail.observe(0.0, truncation_tail_estimate(u));
        result_.summary["truncation"] = tail.to_json("geometric extrapolation of the top two modes");
    }

    void xy_demo() {
        const XYParams& p = spec_.xy;
        TildeEResult res;
        try {
            res = tilde_e_demo(p.x0, p.y0, p.Q, p.dt, p.cutoff);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("xy: ") + e.what());
        }
        std::vector<std::vector<double>> rows;
        for (const auto& r : res.path) rows.push_back({r[0], r[1], r[2], r[3]});
        write_csv(out("xy.csv"), {"t", "x", "y", "Q"}, rows);
        result_.summary["blowup_time"] = res.blowup_time;
        if (p.y0 != 0.0) {
            const double bound = 1.0 / std::abs(p.y0);
            result_.summary["bound"] = bound;
            result_.summary["within_bound"] = std::abs(res.blowup_time) <= bound;
        }
        // Q is not an invariant of this flow; its excursion is reported for reference.
        double q_drift = 0.0;
        for (const auto& r : res.path) q_drift = std::max(q_drift, std::abs(r[3] - p.Q));
        result_.summary["conservation_drift"] = json{{"Q", {{"initial", p.Q}, {"max_abs_drift", q_drift},
                                                            {"conserved_by_flow", false}}}};
        result_.summary["truncation"] = not_tracked_tail();
    }

    void fit() {
        const FitParams& p = spec_.fit;
        const fs::path input = p.input.is_absolute() ? p.input : spec_.base_dir / p.input;
        const TrajectoryRecord rec = read_trajectory_csv(input);
        std::vector<double> t;
        std::vector<double> y;
        try {
            t = rec.column("t");
            y = rec.column(p.column);
        } catch (const std::out_of_range& e) {
            throw ConfigError(std::string("fit: ") + e.what());
        }
        FitResult f;
        try {
            f = fit_exponential(t, y, {p.t_start, p.t_end});
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("fit: ") + e.what());
        }
        result_.summary["fit"] = {{"column", p.column},       {"slope", f.slope},
                                  {"intercept", f.intercept}, {"t_start", f.t_start},
                                  {"t_end", f.t_end},         {"residual_rms", f.residual_rms},
                                  {"points", f.points}};
        result_.summary["conservation_drift"] = json::object();
        result_.summary["truncation"] = not_tracked_tail();
    }

    const RunSpec& spec_;
    RunResult result_;
};

}  // namespace

RunResult run(const RunSpec& spec) {
    Runner runner(spec);
    try {
        return runner();
    } catch (const ConfigError& e) {
        return runner.fail(kExitConfig, e.what());
    } catch (const NoResonantPhase& e) {
        return runner.fail(kExitConfig, e.what());
    } catch (const NumericalInstability& e) {
        return runner.fail(kExitNumerical, e.what());
    } catch (const std::invalid_argument& e) {
        return runner.fail(kExitConfig, e.what());
    } catch (const std::domain_error& e) {
        return runner.fail(kExitConfig, e.what());
    } catch (const std::runtime_error& e) {
        return runner.fail(kExitNumerical, e.what());
    }
}

}  // namespace qszego::lab
