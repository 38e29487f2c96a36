// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace membench {

inline constexpr std::size_t kDefaultCacheLine = 64;

struct PlacementPolicy {
    enum class Kind { Default, FirstTouch, ExplicitNode, Interleave };

    Kind kind = Kind::Default;
    int node = -1;             // ExplicitNode
    std::vector<int> nodes;    // Interleave
    std::vector<int> cores;    // FirstTouch: partition i is touched from cores[i]

    static PlacementPolicy default_policy() { return {}; }
    static PlacementPolicy first_touch(std::vector<int> cores) { return {Kind::FirstTouch, -1, {}, std::move(cores)}; }
    static PlacementPolicy explicit_node(int node) { return {Kind::ExplicitNode, node, {}, {}}; }
    static PlacementPolicy interleave(std::vector<int> nodes) { return {Kind::Interleave, -1, std::move(nodes), {}}; }

    // "default", "first_touch", "node:3", "interleave:0,1"
    std::string label() const;
    // Inverse of label(); "first_touch:0,1" also accepted. Throws Error.
    static PlacementPolicy from_label(std::string_view label);

    friend bool operator==(const PlacementPolicy&, const PlacementPolicy&) = default;
};

// Byte range inside a buffer.
struct Range {
    std::size_t offset = 0;
    std::size_t length = 0;

    friend bool operator==(const Range&, const Range&) = default;
};

struct AllocOptions {
    std::size_t cache_line = kDefaultCacheLine;
    // FirstTouch normally refuses to run when a core cannot be pinned.
    bool allow_unpinned = false;
};

// Anonymous mapping owned for the lifetime of the object.
class BenchBuffer {
public:
    BenchBuffer() = default;
    BenchBuffer(const BenchBuffer&) = delete;
    BenchBuffer& operator=(const BenchBuffer&) = delete;
    BenchBuffer(BenchBuffer&& other) noexcept;
    BenchBuffer& operator=(BenchBuffer&& other) noexcept;
    ~BenchBuffer();

    std::byte* data() const { return data_; }
    std::size_t length() const { return length_; }
    std::size_t alignment() const { return alignment_; }
    const PlacementPolicy& policy() const { return policy_; }

    std::span<std::byte> bytes() const { return {data_, length_}; }
    std::span<std::byte> slice(const Range& r) const { return bytes().subspan(r.offset, r.length); }

    // nullopt when the OS gave no page-location answer ("unverified").
    const std::optional<std::vector<int>>& realized_nodes() const { return realized_nodes_; }
    bool degraded() const { return degraded_; }
    const std::vector<std::string>& notes() const { return notes_; }

private:
    friend BenchBuffer allocate(std::size_t, const PlacementPolicy&, std::size_t, const AllocOptions&);

    void release() noexcept;

    std::byte* data_ = nullptr;
    std::size_t length_ = 0;
    std::size_t alignment_ = 0;
    void* mapping_ = nullptr;
    std::size_t mapping_length_ = 0;
    PlacementPolicy policy_;
    std::optional<std::vector<int>> realized_nodes_;
    bool degraded_ = false;
    std::vector<std::string> notes_;
};

// Zero-initialised buffer placed per `policy`. Lengths are rounded up to a
// cache line multiple. Hosts without usable NUMA support fall back to
// Default placement and set degraded(); an unknown node on a multi-node
// host is an error.
BenchBuffer allocate(std::size_t length, const PlacementPolicy& policy, std::size_t alignment = 4096,
                     const AllocOptions& options = {});

// Contiguous, cache-line aligned ranges covering [0, length); sizes differ by
// at most one line and the leading ranges take the remainder.
std::vector<Range> partition(std::size_t length, std::size_t workers, std::size_t cache_line = kDefaultCacheLine);

inline std::vector<Range> partition(const BenchBuffer& buffer, std::size_t workers,
                                    std::size_t cache_line = kDefaultCacheLine) {
    return partition(buffer.length(), workers, cache_line);
}

std::size_t query_page_size();

struct NumaHost {
    bool available = false;  // libnuma usable
    std::vector<int> nodes;  // online nodes
    bool multi_node() const { return available && nodes.size() > 1; }
};

NumaHost numa_host();

// Distinct nodes backing a sample of the pages of `bytes`; nullopt when the
// kernel refuses the query.
std::optional<std::vector<int>> query_page_nodes(std::span<const std::byte> bytes, std::size_t max_pages = 1024);

}  // namespace membench
