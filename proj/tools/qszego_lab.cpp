// qszego-lab: run experiments from JSON configs.
//
//   qszego-lab <subcommand> --config run.json [--config more.json ...] --out DIR [--jobs N]
//
// With a single config the files land in DIR; with several, each run gets
// DIR/<config stem>. The process exit code is the worst run's code
// (2 over 3 over 0).

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "qszego/lab.hpp"

namespace fs = std::filesystem;
namespace lab = qszego::lab;

namespace {

struct Job {
    fs::path config;
    fs::path out;
    int exit_code = lab::kExitOk;
    std::string message;
};

void run_job(Job& job, lab::Experiment kind) {
    lab::RunSpec spec;
    try {
        spec = lab::load_run_spec(job.config, kind);
    } catch (const lab::ConfigError& e) {
        job.exit_code = lab::kExitConfig;
        job.message = e.what();
        return;
    }
    spec.out_dir = job.out;
    const lab::RunResult res = lab::run(spec);
    job.exit_code = res.exit_code;
    if (res.summary.contains("error")) job.message = res.summary["error"].get<std::string>();
    else if (res.summary.contains("diagnostic")) job.message = res.summary["diagnostic"].get<std::string>();
}

int combine(const std::vector<Job>& jobs) {
    int code = lab::kExitOk;
    for (const auto& j : jobs) {
        if (j.exit_code == lab::kExitConfig) return lab::kExitConfig;
        if (j.exit_code != lab::kExitOk) code = j.exit_code;
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Experiments for the truncated quadratic Szego flow"};
    app.require_subcommand(1);

    std::vector<std::string> configs;
    std::string out_dir;
    unsigned jobs_n = 1;
    bool seedless = false;

    const std::vector<std::pair<std::string, std::string>> commands{
        {"evolve", "time-step the truncated PDE"},
        {"evolve-l1", "integrate the reduced (b, c, p) system"},
        {"compare", "PDE against the reduced system from the same rational state"},
        {"blowup-hunt", "resonant state search and growth-rate fits"},
        {"lax-audit", "finite-difference check of the Lax equation"},
        {"xy-demo", "blow-up time of the Re J flow"},
        {"fit", "exponential fit of one CSV column"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", configs, "JSON run configuration (repeatable)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory")->required();
        sub->add_option("--jobs", jobs_n, "worker threads for multiple configs")->check(CLI::Range(1u, 1024u));
        sub->add_flag("--seedless", seedless, "reserved; rejected");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return lab::kExitConfig;
    }

    if (seedless) {
        std::cerr << "error: --seedless is reserved; no run uses randomness\n";
        return lab::kExitConfig;
    }

    const CLI::App* sub = app.get_subcommands().front();
    const lab::Experiment kind = lab::experiment_from_string(sub->get_name());

    std::vector<Job> jobs;
    std::set<std::string> stems;
    for (const auto& c : configs) {
        Job j;
        j.config = c;
        if (configs.size() == 1) {
            j.out = out_dir;
        } else {
            const std::string stem = fs::path(c).stem().string();
            if (!stems.insert(stem).second) {
                std::cerr << "error: two configs share the stem '" << stem << "'; output directories would collide\n";
                return lab::kExitConfig;
            }
            j.out = fs::path(out_dir) / stem;
        }
        jobs.push_back(std::move(j));
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) run_job(jobs[i], kind);
    };
    const unsigned n_threads = std::min<unsigned>(jobs_n, static_cast<unsigned>(jobs.size()));
    std::vector<std::thread> pool;
    for (unsigned k = 1; k < n_threads; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (const auto& j : jobs) {
        std::cout << j.config.string() << " -> " << j.out.string() << " [exit " << j.exit_code << "]";
        if (!j.message.empty()) std::cout << " " << j.message;
        std::cout << '\n';
    }
    return combine(jobs);
}
