#pragma once

#include "monoflow/ergodics.hpp"
#include "monoflow/presets.hpp"

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace monoflow {

/// Fixed set of worker threads. parallel_for blocks until every index has
/// run; the exception of the lowest failing index is rethrown.
class WorkerPool {
public:
    explicit WorkerPool(int workers);
    ~WorkerPool();
    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    int workers() const { return static_cast<int>(threads_.size()) + 1; }
    void parallel_for(int count, const std::function<void(int)>& task);
    PathExecutor executor();

private:
    void worker_loop();
    void drain();

    std::vector<std::thread> threads_;
    std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable done_;
    const std::function<void(int)>* task_ = nullptr;
    int count_ = 0;
    int next_ = 0;
    int finished_ = 0;
    int active_ = 0;
    std::uint64_t generation_ = 0;
    bool stop_ = false;
    std::vector<std::pair<int, std::exception_ptr>> errors_;
};

struct RunOptions {
    std::string subcommand;
    std::string config_path;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "monoflow_out";
    int workers = 1;
    std::optional<double> horizon;
    std::optional<double> dt;
    std::optional<int> paths;
};

const std::vector<std::string>& subcommands();

/// Preset from --config and/or --preset with the CLI overrides applied; validated.
ExperimentPreset resolve_preset(const RunOptions& opts);

/// Executes one subcommand, writing CSV artifacts and manifest.json into
/// opts.out_dir. Returns the process exit status.
int run(const RunOptions& opts, std::ostream& log);

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Hermetic property suite: fixed seeds, reduced sizes.
std::vector<CheckResult> verify_suite(WorkerPool& pool);

}  // namespace monoflow
