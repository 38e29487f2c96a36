// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "membench/alloc.hpp"
#include "membench/clock.hpp"
#include "membench/kernels.hpp"
#include "membench/matrix.hpp"
#include "membench/records.hpp"
#include "membench/topo.hpp"

namespace membench {

struct BufferSpec {
    std::size_t length = 0;
    PlacementPolicy policy;
    std::size_t alignment = 4096;
};

struct NoiseConfig {
    std::vector<int> cores;
    std::size_t length = kDefaultNoiseBytes;
    PlacementPolicy policy;
};

struct BenchmarkCase {
    std::string id;
    KernelKind kernel = KernelKind::Read;
    std::vector<int> cores;
    std::optional<std::string> initiator;  // topology PU, used for bound analysis
    std::vector<BufferSpec> buffers;       // copy: {src, dst}; others: one
    std::size_t repetitions = 10;
    std::size_t warmup = 1;
    std::size_t passes = 1;  // read: passes over each partition per iteration
    std::optional<std::size_t> stride;  // write: 16 (dense); chase: the cache line
    Tick duration_ns = kDefaultChaseDuration;
    std::uint64_t granularity = kDefaultChaseGranularity;
    std::uint64_t seed = 1;
    std::uint64_t rounds = 10000;
    std::optional<NoiseConfig> noise;
};

// Shape checks that do not need the host: operand counts, core counts,
// noise/initiator core overlap. Throws Error.
void validate_case(const BenchmarkCase& c);

// Suite file: a JSON list of case objects.
std::vector<BenchmarkCase> parse_suite(std::string_view text);
std::vector<BenchmarkCase> load_suite(const std::string& path);

struct TeamOptions {
    bool pin = true;
    // Yield inside the start spin; needed when workers outnumber cores.
    bool yield_while_waiting = false;
};

// Outcome of one synchronized-start attempt. Ticks are indexed by worker.
struct StartOutcome {
    Tick start = 0;
    std::vector<Tick> arrival;
    std::vector<Tick> begin;
    std::vector<Tick> end;
    Tick skew = 0;      // max(begin - start)
    bool valid = true;  // false when some worker arrived at or after start
    bool retried = false;

    // max(end) - start
    Tick elapsed() const;
};

// Persistent pinned workers driven by one control thread (the caller). The
// control thread picks start = now + delay and broadcasts it; each worker
// spins on the clock until start, runs the body, and records its end tick.
class WorkerTeam {
public:
    WorkerTeam(std::vector<int> cores, const Clock& clock, TeamOptions options = {});
    WorkerTeam(const WorkerTeam&) = delete;
    WorkerTeam& operator=(const WorkerTeam&) = delete;
    ~WorkerTeam();

    std::size_t size() const { return cores_.size(); }
    const std::vector<int>& cores() const { return cores_; }
    const Clock& clock() const { return clock_; }

    // One attempt, no retry. Rethrows the first exception a body raised.
    StartOutcome run_once(const std::function<void(std::size_t)>& body, Tick delay_ns);

private:
    struct Slot {
        Tick arrival = 0;
        Tick begin = 0;
        Tick end = 0;
        std::exception_ptr error;
    };

    void worker_main(std::size_t index);

    std::vector<int> cores_;
    const Clock& clock_;
    TeamOptions options_;
    std::vector<std::thread> threads_;
    std::vector<Slot> slots_;
    const std::function<void(std::size_t)>* body_ = nullptr;
    std::atomic<Tick> start_{0};
    std::atomic<std::uint64_t> generation_{0};
    std::atomic<std::size_t> done_{0};
    std::atomic<std::size_t> ready_{0};
    std::atomic<bool> stop_{false};
    std::mutex pin_mutex_;
    std::vector<std::string> pin_errors_;
};

inline constexpr Tick kDefaultStartDelay = 1'000'000;  // 1 ms

// run_once, and on an invalid start one retry with 4x the delay. Throws
// Error if the retry is also invalid.
StartOutcome synchronized_start(WorkerTeam& team, const std::function<void(std::size_t)>& body,
                                Tick delay_ns = kDefaultStartDelay);

struct RunOptions {
    const Clock* clock = nullptr;  // system clock when null
    Tick start_delay_ns = kDefaultStartDelay;
    // MEMBENCH_NO_PIN mode: workers are not pinned and cores need not exist.
    bool allow_unpinned = false;
    Tick cooldown_ns = 100'000'000;
    Tick pingpong_deadline_ns = 5'000'000'000;
};

// `spec` may be null; with a spec the record carries its hash and the
// initiator PU supplies the cache line size.
MeasurementRecord run_case(const BenchmarkCase& c, const TopologySpec* spec, const RunOptions& options = {});

struct CaseError {
    std::string case_id;
    std::string message;
};

struct SuiteResult {
    std::vector<MeasurementRecord> records;
    std::vector<CaseError> errors;
};

// Cases run one after another in order, never concurrently. `on_record` is
// called after every successful case so partial results can be persisted.
SuiteResult run_suite(const std::vector<BenchmarkCase>& cases, const TopologySpec* spec, const RunOptions& options = {},
                      const std::function<void(const MeasurementRecord&)>& on_record = {});

// Rows are (ping core, pong core) pairs, columns flag placements; cells hold
// the mean full-exchange latency in ns.
Matrix pingpong_matrix(const std::vector<std::pair<int, int>>& pairs, const std::vector<PlacementPolicy>& placements,
                       std::uint64_t rounds, const RunOptions& options = {}, std::size_t repetitions = 10);

}  // namespace membench
