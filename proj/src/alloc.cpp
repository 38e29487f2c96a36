// SPDX-License-Identifier: Apache-2.0

#include "membench/alloc.hpp"

#include <numa.h>
#include <numaif.h>
#include <sys/mman.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "membench/affinity.hpp"
#include "membench/error.hpp"

namespace membench {

namespace {

bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

std::size_t round_up(std::size_t v, std::size_t multiple) { return (v + multiple - 1) / multiple * multiple; }

std::string join(const std::vector<int>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(values[i]);
    }
    return out;
}

}  // namespace

std::string PlacementPolicy::label() const {
    switch (kind) {
        case Kind::Default: return "default";
        case Kind::FirstTouch: return cores.empty() ? "first_touch" : "first_touch:" + join(cores);
        case Kind::ExplicitNode: return "node:" + std::to_string(node);
        case Kind::Interleave: return "interleave:" + join(nodes);
    }
    return "?";
}

namespace {

std::vector<int> parse_int_list(std::string_view text, std::string_view whole) {
    std::vector<int> out;
    while (!text.empty()) {
        auto comma = text.find(',');
        auto item = text.substr(0, comma);
        int value = 0;
        auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
        if (ec != std::errc{} || ptr != item.data() + item.size()) {
            throw Error("bad placement '" + std::string(whole) + "'");
        }
        out.push_back(value);
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    return out;
}

}  // namespace

PlacementPolicy PlacementPolicy::from_label(std::string_view label) {
    auto colon = label.find(':');
    auto head = label.substr(0, colon);
    auto tail = colon == std::string_view::npos ? std::string_view{} : label.substr(colon + 1);
    if (head == "default" && tail.empty()) return default_policy();
    if (head == "first_touch") return first_touch(parse_int_list(tail, label));
    if (head == "node" && !tail.empty()) {
        auto nodes = parse_int_list(tail, label);
        if (nodes.size() == 1) return explicit_node(nodes[0]);
    }
    if (head == "interleave" && !tail.empty()) return interleave(parse_int_list(tail, label));
    throw Error("bad placement '" + std::string(label) + "'");
}

BenchBuffer::BenchBuffer(BenchBuffer&& other) noexcept { *this = std::move(other); }

BenchBuffer& BenchBuffer::operator=(BenchBuffer&& other) noexcept {
    if (this != &other) {
        release();
        data_ = std::exchange(other.data_, nullptr);
        length_ = std::exchange(other.length_, 0);
        alignment_ = other.alignment_;
        mapping_ = std::exchange(other.mapping_, nullptr);
        mapping_length_ = std::exchange(other.mapping_length_, 0);
        policy_ = std::move(other.policy_);
        realized_nodes_ = std::move(other.realized_nodes_);
        degraded_ = other.degraded_;
        notes_ = std::move(other.notes_);
    }
    return *this;
}

BenchBuffer::~BenchBuffer() { release(); }

void BenchBuffer::release() noexcept {
    if (mapping_) munmap(mapping_, mapping_length_);
    mapping_ = nullptr;
    data_ = nullptr;
}

std::size_t query_page_size() { return static_cast<std::size_t>(sysconf(_SC_PAGESIZE)); }

NumaHost numa_host() {
    NumaHost host;
    host.available = numa_available() != -1;
    if (!host.available) return host;
    const int max_node = numa_max_node();
    for (int n = 0; n <= max_node; ++n) {
        if (numa_bitmask_isbitset(numa_nodes_ptr, static_cast<unsigned>(n))) host.nodes.push_back(n);
    }
    return host;
}

std::optional<std::vector<int>> query_page_nodes(std::span<const std::byte> bytes, std::size_t max_pages) {
    if (bytes.empty()) return std::vector<int>{};
    const std::size_t page = query_page_size();
    const std::size_t pages = (bytes.size() + page - 1) / page;
    const std::size_t count = std::min(pages, std::max<std::size_t>(max_pages, 1));
    std::vector<void*> addrs(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t index = count == 1 ? 0 : i * (pages - 1) / (count - 1);
        addrs[i] = const_cast<std::byte*>(bytes.data()) + index * page;
    }
    std::vector<int> status(count, -1);
    if (numa_available() == -1) return std::nullopt;
    if (numa_move_pages(0, count, addrs.data(), nullptr, status.data(), 0) != 0) return std::nullopt;
    std::set<int> nodes;
    for (int s : status) {
        if (s < 0) return std::nullopt;  // page not present or query refused
        nodes.insert(s);
    }
    return std::vector<int>(nodes.begin(), nodes.end());
}

std::vector<Range> partition(std::size_t length, std::size_t workers, std::size_t cache_line) {
    if (workers == 0) throw Error("partition needs at least one worker");
    if (cache_line == 0 || length % cache_line != 0) {
        throw Error("buffer length " + std::to_string(length) + " is not a multiple of the cache line");
    }
    const std::size_t lines = length / cache_line;
    if (workers > lines) {
        throw Error(std::to_string(workers) + " workers exceed the buffer's " + std::to_string(lines) + " cache lines");
    }
    const std::size_t base = lines / workers;
    const std::size_t extra = lines % workers;
    std::vector<Range> ranges;
    ranges.reserve(workers);
    std::size_t offset = 0;
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t n = base + (w < extra ? 1 : 0);
        ranges.push_back({offset * cache_line, n * cache_line});
        offset += n;
    }
    return ranges;
}

BenchBuffer allocate(std::size_t length, const PlacementPolicy& policy, std::size_t alignment,
                     const AllocOptions& options) {
    if (length == 0) throw Error("allocation length must be positive");
    if (!is_power_of_two(options.cache_line)) throw Error("cache line size must be a power of two");
    if (!is_power_of_two(alignment)) throw Error("alignment " + std::to_string(alignment) + " is not a power of two");

    BenchBuffer buf;
    buf.policy_ = policy;
    if (alignment < options.cache_line) {
        buf.notes_.push_back("alignment raised from " + std::to_string(alignment) + " to the cache line");
        alignment = options.cache_line;
    }
    std::size_t rounded = round_up(length, options.cache_line);
    if (rounded != length) {
        buf.notes_.push_back("length rounded up from " + std::to_string(length) + " to " + std::to_string(rounded));
    }

    const std::size_t page = query_page_size();
    const std::size_t map_align = std::max(alignment, page);
    const std::size_t mapped = round_up(rounded, page) + (map_align > page ? map_align : 0);
    void* mapping = mmap(nullptr, mapped, PROT_READ | PROT_WRITE, MAP_PRIVATE | MAP_ANONYMOUS | MAP_NORESERVE, -1, 0);
    if (mapping == MAP_FAILED) {
        throw Error("out of memory: cannot map " + std::to_string(rounded) + " bytes: " + std::strerror(errno));
    }
    auto base = reinterpret_cast<std::uintptr_t>(mapping);
    buf.mapping_ = mapping;
    buf.mapping_length_ = mapped;
    buf.data_ = reinterpret_cast<std::byte*>(round_up(base, map_align));
    buf.length_ = rounded;
    buf.alignment_ = alignment;

    const NumaHost host = numa_host();
    auto node_known = [&](int n) { return std::find(host.nodes.begin(), host.nodes.end(), n) != host.nodes.end(); };
    auto degrade = [&](const std::string& why) {
        buf.degraded_ = true;
        buf.notes_.push_back("placement " + policy.label() + " degraded to default: " + why);
    };
    auto bind = [&](int mode, const std::vector<int>& nodes) {
        for (int n : nodes) {
            if (node_known(n)) continue;
            if (host.multi_node()) throw Error("NUMA node " + std::to_string(n) + " does not exist on this host");
            degrade(host.available ? "node " + std::to_string(n) + " absent on a single-node host"
                                   : "host has no NUMA support");
            return;
        }
        if (!host.available) {
            degrade("host has no NUMA support");
            return;
        }
        bitmask* mask = numa_bitmask_alloc(static_cast<unsigned>(numa_max_possible_node() + 1));
        for (int n : nodes) numa_bitmask_setbit(mask, static_cast<unsigned>(n));
        long rc = mbind(buf.data_, buf.length_, mode, mask->maskp, mask->size + 1, 0);
        int err = errno;
        numa_bitmask_free(mask);
        if (rc != 0) degrade(std::string("mbind failed: ") + std::strerror(err));
    };

    switch (policy.kind) {
        case PlacementPolicy::Kind::Default:
            std::memset(buf.data_, 0, buf.length_);
            break;
        case PlacementPolicy::Kind::ExplicitNode:
            bind(MPOL_BIND, {policy.node});
            std::memset(buf.data_, 0, buf.length_);
            break;
        case PlacementPolicy::Kind::Interleave:
            if (policy.nodes.empty()) throw Error("interleave placement needs at least one node");
            bind(MPOL_INTERLEAVE, policy.nodes);
            std::memset(buf.data_, 0, buf.length_);
            break;
        case PlacementPolicy::Kind::FirstTouch: {
            if (policy.cores.empty()) throw Error("first-touch placement needs a worker core map");
            auto ranges = partition(buf.length_, policy.cores.size(), options.cache_line);
            std::mutex mu;
            std::exception_ptr failure;
            bool unpinned = false;
            std::vector<std::thread> touchers;
            for (std::size_t w = 0; w < ranges.size(); ++w) {
                touchers.emplace_back([&, w] {
                    try {
                        pin_current_thread(policy.cores[w]);
                    } catch (const Error&) {
                        std::lock_guard lock(mu);
                        if (!options.allow_unpinned) {
                            if (!failure) failure = std::current_exception();
                            return;
                        }
                        unpinned = true;
                    }
                    std::memset(buf.data_ + ranges[w].offset, 0, ranges[w].length);
                });
            }
            for (auto& t : touchers) t.join();
            if (failure) std::rethrow_exception(failure);
            if (unpinned) degrade("some first-touch workers ran unpinned");
            break;
        }
    }

    buf.realized_nodes_ = query_page_nodes(buf.bytes());
    return buf;
}

}  // namespace membench
