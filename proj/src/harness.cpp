// SPDX-License-Identifier: Apache-2.0

#include "membench/harness.hpp"

#include <algorithm>
#include <latch>
#include <set>

#include "membench/affinity.hpp"
#include "membench/error.hpp"

namespace membench {

Tick StartOutcome::elapsed() const {
    Tick last = start;
    for (Tick e : end) last = std::max(last, e);
    return last - start;
}

WorkerTeam::WorkerTeam(std::vector<int> cores, const Clock& clock, TeamOptions options)
    : cores_(std::move(cores)), clock_(clock), options_(options), slots_(cores_.size()) {
    if (cores_.empty()) throw Error("worker team needs at least one core");
    threads_.reserve(cores_.size());
    for (std::size_t i = 0; i < cores_.size(); ++i) threads_.emplace_back([this, i] { worker_main(i); });
    std::size_t ready;
    while ((ready = ready_.load(std::memory_order_acquire)) < cores_.size()) ready_.wait(ready);

    std::lock_guard lock(pin_mutex_);
    if (!pin_errors_.empty()) {
        stop_.store(true);
        generation_.fetch_add(1, std::memory_order_release);
        generation_.notify_all();
        for (auto& t : threads_) t.join();
        threads_.clear();
        std::string msg = "pinning failed:";
        for (const auto& e : pin_errors_) msg += " " + e;
        throw Error(msg);
    }
}

WorkerTeam::~WorkerTeam() {
    stop_.store(true);
    generation_.fetch_add(1, std::memory_order_release);
    generation_.notify_all();
    for (auto& t : threads_) t.join();
}

void WorkerTeam::worker_main(std::size_t index) {
    if (options_.pin) {
        try {
            pin_current_thread(cores_[index]);
        } catch (const Error& e) {
            std::lock_guard lock(pin_mutex_);
            pin_errors_.push_back(e.what());
        }
    }
    ready_.fetch_add(1, std::memory_order_acq_rel);
    ready_.notify_all();

    std::uint64_t seen = 0;
    for (;;) {
        generation_.wait(seen, std::memory_order_acquire);
        seen = generation_.load(std::memory_order_acquire);
        if (stop_.load()) return;

        Slot& slot = slots_[index];
        const Tick start = start_.load(std::memory_order_acquire);
        Tick now = clock_.now();
        slot.arrival = now;
        while (now < start) {
            if (options_.yield_while_waiting) std::this_thread::yield();
            now = clock_.now();
        }
        slot.begin = now;
        try {
            (*body_)(index);
        } catch (...) {
            slot.error = std::current_exception();
        }
        slot.end = clock_.now();
        if (done_.fetch_add(1, std::memory_order_acq_rel) + 1 == cores_.size()) done_.notify_all();
    }
}

StartOutcome WorkerTeam::run_once(const std::function<void(std::size_t)>& body, Tick delay_ns) {
    for (auto& s : slots_) s = Slot{};
    body_ = &body;
    done_.store(0, std::memory_order_relaxed);

    StartOutcome out;
    out.start = clock_.now() + delay_ns;
    start_.store(out.start, std::memory_order_release);
    generation_.fetch_add(1, std::memory_order_release);
    generation_.notify_all();

    std::size_t done;
    while ((done = done_.load(std::memory_order_acquire)) < cores_.size()) done_.wait(done);

    std::exception_ptr first_error;
    for (const auto& s : slots_) {
        out.arrival.push_back(s.arrival);
        out.begin.push_back(s.begin);
        out.end.push_back(s.end);
        out.skew = std::max(out.skew, s.begin - out.start);
        if (s.arrival >= out.start) out.valid = false;
        if (s.error && !first_error) first_error = s.error;
    }
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

StartOutcome synchronized_start(WorkerTeam& team, const std::function<void(std::size_t)>& body, Tick delay_ns) {
    StartOutcome first = team.run_once(body, delay_ns);
    if (first.valid) return first;
    StartOutcome second = team.run_once(body, delay_ns * 4);
    second.retried = true;
    if (!second.valid) {
        Tick late = 0;
        for (Tick a : second.arrival) late = std::max(late, a >= second.start ? a - second.start : 0);
        throw Error("synchronized start failed: a worker arrived " + std::to_string(late) +
                    " ns after the start tick with delay " + std::to_string(delay_ns * 4) + " ns");
    }
    return second;
}

namespace {

std::string join_cores(const std::vector<int>& cores) {
    std::string out;
    for (std::size_t i = 0; i < cores.size(); ++i) out += (i ? "," : "") + std::to_string(cores[i]);
    return out;
}

// Background readers; cancelled and joined on destruction.
class NoiseCrew {
public:
    NoiseCrew(const NoiseConfig& cfg, bool pin, const AllocOptions& alloc_options)
        : buffer_(allocate(cfg.length, cfg.policy.kind == PlacementPolicy::Kind::FirstTouch && cfg.policy.cores.empty()
                                           ? PlacementPolicy::first_touch(cfg.cores)
                                           : cfg.policy,
                           4096, alloc_options)) {
        auto parts = partition(buffer_, cfg.cores.size(), alloc_options.cache_line);
        for (std::size_t i = 0; i < cfg.cores.size(); ++i) tokens_.push_back(std::make_unique<NoiseToken>());
        std::latch started(static_cast<std::ptrdiff_t>(cfg.cores.size()));
        std::mutex mu;
        std::vector<std::string> errors;
        for (std::size_t i = 0; i < cfg.cores.size(); ++i) {
            threads_.emplace_back([&, i, core = cfg.cores[i], slice = buffer_.slice(parts[i])] {
                bool ok = true;
                if (pin) {
                    try {
                        pin_current_thread(core);
                    } catch (const Error& e) {
                        std::lock_guard lock(mu);
                        errors.push_back(e.what());
                        ok = false;
                    }
                }
                started.count_down();
                if (ok) kernel_noise(slice, *tokens_[i]);
            });
        }
        started.wait();
        if (!errors.empty()) {
            stop();
            throw Error("noise worker " + errors.front());
        }
    }
    NoiseCrew(const NoiseCrew&) = delete;
    NoiseCrew& operator=(const NoiseCrew&) = delete;
    ~NoiseCrew() { stop(); }

    std::uint64_t stop() {
        for (auto& t : tokens_) t->cancel.store(true);
        for (auto& t : threads_) {
            if (t.joinable()) t.join();
        }
        std::uint64_t total = 0;
        for (auto& t : tokens_) total += t->bytes_read.load();
        return total;
    }

    const BenchBuffer& buffer() const { return buffer_; }

private:
    BenchBuffer buffer_;
    std::vector<std::unique_ptr<NoiseToken>> tokens_;
    std::vector<std::thread> threads_;
};

PlacementRecord placement_record(const BenchBuffer& b) {
    return {b.policy().label(), b.length(), b.realized_nodes(), b.degraded(), b.notes()};
}

std::size_t effective_stride(const BenchmarkCase& c, std::size_t cache_line) {
    if (c.stride) return *c.stride;
    return c.kernel == KernelKind::Chase ? cache_line : kAccessWidth;
}

}  // namespace

MeasurementRecord run_case(const BenchmarkCase& c, const TopologySpec* spec, const RunOptions& options) {
    validate_case(c);
    const Clock& clock = options.clock ? *options.clock : system_clock();

    std::vector<int> all_cores = c.cores;
    if (c.noise) all_cores.insert(all_cores.end(), c.noise->cores.begin(), c.noise->cores.end());
    const auto host = host_cores();
    if (!options.allow_unpinned) {
        for (int core : all_cores) {
            if (std::find(host.begin(), host.end(), core) == host.end()) {
                throw Error("core " + std::to_string(core) + " is not available; host cores: " + join_cores(host));
            }
        }
    }

    std::size_t cache_line = kDefaultCacheLine;
    if (spec && c.initiator) {
        const auto* pu = spec->find_pu(*c.initiator);
        if (!pu) throw Error("initiator '" + *c.initiator + "' is not a PU of topology '" + spec->name + "'");
        cache_line = pu->cache_line;
    }
    const AllocOptions alloc_options{cache_line, options.allow_unpinned};

    MeasurementRecord rec;
    rec.case_id = c.id;
    rec.kernel = c.kernel;
    rec.cores = c.cores;
    rec.workers = c.cores.size();
    rec.initiator = c.initiator;
    rec.unit = std::string(unit_for(c.kernel));
    try {
        rec.clock = estimate_resolution(clock, 10000);
    } catch (const Error&) {
        rec.clock = {clock.frequency_hz(), 0, clock.source()};  // frozen or coarse test clock
    }
    rec.topology_hash = spec ? topology_hash(*spec) : "";
    rec.timestamp = utc_timestamp();
    rec.version = toolkit_version();
    rec.access_width = kAccessWidth;
    rec.pinned = !options.allow_unpinned;

    std::vector<BenchBuffer> buffers;
    if (c.kernel == KernelKind::PingPong) {
        PlacementPolicy policy = c.buffers.empty() ? PlacementPolicy{} : c.buffers[0].policy;
        if (policy.kind == PlacementPolicy::Kind::FirstTouch && policy.cores.empty()) policy.cores = {c.cores[0]};
        buffers.push_back(allocate(kPingPongRegion, policy, c.buffers.empty() ? 4096 : c.buffers[0].alignment,
                                   alloc_options));
    } else {
        for (const auto& b : c.buffers) {
            PlacementPolicy policy = b.policy;
            if (policy.kind == PlacementPolicy::Kind::FirstTouch && policy.cores.empty()) policy.cores = c.cores;
            buffers.push_back(allocate(b.length, policy, b.alignment, alloc_options));
        }
    }
    for (const auto& b : buffers) rec.placements.push_back(placement_record(b));

    const std::size_t workers = c.cores.size();
    const std::size_t stride = effective_stride(c, cache_line);
    std::vector<Range> parts;
    std::optional<ChaseBuffer> chase;
    switch (c.kernel) {
        case KernelKind::Read:
        case KernelKind::Write:
        case KernelKind::Copy: parts = partition(buffers[0], workers, cache_line); break;
        case KernelKind::Chase: chase = build_chase(buffers[0].bytes(), stride, c.seed); break;
        case KernelKind::PingPong: break;
    }
    if (c.kernel == KernelKind::Copy && buffers[1].length() != buffers[0].length()) {
        throw Error("copy operands differ in length after rounding");
    }

    const bool oversubscribed = all_cores.size() > host.size();
    WorkerTeam team(c.cores, clock, {!options.allow_unpinned, options.allow_unpinned || oversubscribed});

    std::vector<KernelResult> results(workers);
    const Pattern16 pattern{0x5a5a5a5a5a5a5a5aull, 0xa5a5a5a5a5a5a5a5ull};
    std::function<void(std::size_t)> body = [&](std::size_t i) {
        switch (c.kernel) {
            case KernelKind::Read: results[i] = kernel_read(buffers[0].slice(parts[i]), c.passes); break;
            case KernelKind::Write: results[i] = kernel_write(buffers[0].slice(parts[i]), stride, pattern); break;
            case KernelKind::Copy:
                results[i] = kernel_copy(buffers[0].slice(parts[i]), buffers[1].slice(parts[i]));
                break;
            case KernelKind::Chase: results[i] = kernel_chase(*chase, c.duration_ns, c.granularity, clock); break;
            case KernelKind::PingPong:
                results[i] = kernel_pingpong(buffers[0].bytes(), i == 0 ? PingPongRole::Ping : PingPongRole::Pong,
                                             c.rounds, clock, options.pingpong_deadline_ns);
                break;
        }
    };

    std::optional<NoiseCrew> noise;
    if (c.noise) noise.emplace(*c.noise, !options.allow_unpinned, alloc_options);

    const std::size_t total = c.warmup + c.repetitions;
    for (std::size_t iter = 0; iter < total; ++iter) {
        if (c.kernel == KernelKind::PingPong) init_pingpong_flag(buffers[0].bytes());
        for (auto& r : results) r = KernelResult{};
        StartOutcome outcome = synchronized_start(team, body, options.start_delay_ns);

        IterationSample sample;
        sample.warmup = iter < c.warmup;
        sample.elapsed_ns = outcome.elapsed();
        switch (c.kernel) {
            case KernelKind::Read:
            case KernelKind::Write:
            case KernelKind::Copy:
                for (const auto& r : results) sample.units += r.bytes_moved;
                break;
            case KernelKind::Chase: sample.units = results[0].accesses; break;
            case KernelKind::PingPong:
                // Timed from the ping side's first successful swap.
                sample.elapsed_ns = results[0].elapsed_ns;
                sample.units = c.rounds - 1;
                break;
        }
        for (const auto& r : results) rec.checksum ^= r.checksum;
        rec.start_skew_ns = std::max(rec.start_skew_ns, outcome.skew);
        rec.iterations.push_back(sample);
    }

    if (noise) {
        const std::uint64_t bytes_read = noise->stop();
        rec.noise = NoiseRecord{c.noise->cores, noise->buffer().length(), noise->buffer().policy().label(), bytes_read};
    }

    if (is_latency_kernel(c.kernel)) {
        rec.bytes_per_iteration = buffers[0].length();
    } else {
        rec.bytes_per_iteration = rec.iterations.front().units;
    }
    rec.derived_value = derive_value(c.kernel, rec.iterations);
    return rec;
}

Matrix pingpong_matrix(const std::vector<std::pair<int, int>>& pairs, const std::vector<PlacementPolicy>& placements,
                       std::uint64_t rounds, const RunOptions& options, std::size_t repetitions) {
    Matrix m;
    m.title = "ping-pong full-exchange latency";
    m.unit = "ns";
    for (const auto& p : placements) m.column_labels.push_back(p.label());
    for (const auto& [ping, pong] : pairs) {
        if (ping == pong) throw Error("ping-pong pair needs two distinct cores, got " + std::to_string(ping) + " twice");
        m.row_labels.push_back(std::to_string(ping) + "->" + std::to_string(pong));
        auto& row = m.values.emplace_back();
        for (const auto& placement : placements) {
            BenchmarkCase c;
            c.id = "pingpong " + m.row_labels.back() + " " + placement.label();
            c.kernel = KernelKind::PingPong;
            c.cores = {ping, pong};
            c.buffers = {BufferSpec{kPingPongRegion, placement, 4096}};
            c.repetitions = repetitions;
            c.warmup = 1;
            c.rounds = rounds;
            row.push_back(run_case(c, nullptr, options).derived_value);
        }
    }
    return m;
}

}  // namespace membench
