// SPDX-License-Identifier: Apache-2.0
//
// Two-tier memory accounting: a fast "device" tier and a slow "host" tier,
// with per-tag live/peak counters, an event timeline, and simulated budgets.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "sptrain/errors.hpp"

namespace sptrain {

enum class Tier : uint8_t { kDevice = 0, kHost = 1 };

enum class MemTag : uint8_t {
    kWeights = 0,
    kGrads,
    kOptimizer,
    kActivationCkpt,
    kLogits,
    kWorkspace,
    kCommBuffer,
    kNumTags,
};

constexpr std::size_t kNumMemTags = static_cast<std::size_t>(MemTag::kNumTags);

const char* tier_name(Tier t);
const char* mem_tag_name(MemTag t);

class MemoryLedger {
public:
    using AllocId = uint64_t;
    static constexpr AllocId kInvalidAlloc = 0;

    struct Event {
        uint64_t ordinal;
        char kind; // 'A' alloc, 'F' free, 'M' tier move, 'T' retag
        Tier tier;
        MemTag tag;
        int64_t delta_bytes;
        uint64_t device_live;
        uint64_t host_live;
    };

    MemoryLedger() = default;
    MemoryLedger(const MemoryLedger&) = delete;
    MemoryLedger& operator=(const MemoryLedger&) = delete;

    // Budgets: 0 means unlimited. Exceeding a budget throws SimulatedOomError.
    void set_device_budget(std::size_t bytes) { device_budget_ = bytes; }
    void set_host_budget(std::size_t bytes) { host_budget_ = bytes; }
    std::size_t device_budget() const { return device_budget_; }
    std::size_t host_budget() const { return host_budget_; }

    void set_record_timeline(bool on) { record_timeline_ = on; }

    AllocId track(Tier tier, MemTag tag, std::size_t bytes);
    void release(AllocId id);
    void move_tier(AllocId id, Tier to);
    void retag(AllocId id, MemTag tag);

    uint64_t live_bytes(Tier tier) const { return live_[idx(tier)]; }
    uint64_t peak_bytes(Tier tier) const { return peak_[idx(tier)]; }
    uint64_t tag_live(Tier tier, MemTag tag) const { return tag_live_[idx(tier)][tag_idx(tag)]; }
    uint64_t tag_peak(Tier tier, MemTag tag) const { return tag_peak_[idx(tier)][tag_idx(tag)]; }
    // Largest single allocation ever tracked under a tag, either tier.
    uint64_t largest_single(MemTag tag) const { return largest_single_[tag_idx(tag)]; }
    uint64_t ordinal() const { return ordinal_; }
    std::size_t live_allocation_count() const { return allocs_.size(); }

    // Resets peak trackers to current live values; live allocations stay.
    void reset_peaks();

    void check_no_leaks() const;

    const std::vector<Event>& timeline() const { return events_; }
    std::string summary_json() const;
    std::string timeline_csv() const;

private:
    static std::size_t idx(Tier t) { return static_cast<std::size_t>(t); }
    static std::size_t tag_idx(MemTag t) { return static_cast<std::size_t>(t); }

    void charge(Tier tier, MemTag tag, std::size_t bytes);
    void discharge(Tier tier, MemTag tag, std::size_t bytes);
    void push_event(char kind, Tier tier, MemTag tag, int64_t delta);

    struct AllocInfo {
        Tier tier;
        MemTag tag;
        std::size_t bytes;
    };

    std::unordered_map<AllocId, AllocInfo> allocs_;
    AllocId next_id_ = 1;
    uint64_t ordinal_ = 0;
    std::array<uint64_t, 2> live_{0, 0};
    std::array<uint64_t, 2> peak_{0, 0};
    std::array<std::array<uint64_t, kNumMemTags>, 2> tag_live_{};
    std::array<std::array<uint64_t, kNumMemTags>, 2> tag_peak_{};
    std::array<uint64_t, kNumMemTags> largest_single_{};
    std::size_t device_budget_ = 0;
    std::size_t host_budget_ = 0;
    bool record_timeline_ = true;
    std::vector<Event> events_;
};

// Ambient per-thread ledger binding. Allocations made while a scope is active
// are charged to that ledger; with no scope active nothing is recorded.
MemoryLedger* current_ledger();
MemTag current_mem_tag();

class LedgerScope {
public:
    explicit LedgerScope(MemoryLedger& ledger);
    ~LedgerScope();
    LedgerScope(const LedgerScope&) = delete;
    LedgerScope& operator=(const LedgerScope&) = delete;

private:
    MemoryLedger* prev_;
};

class TagScope {
public:
    explicit TagScope(MemTag tag);
    ~TagScope();
    TagScope(const TagScope&) = delete;
    TagScope& operator=(const TagScope&) = delete;

private:
    MemTag prev_;
};

// RAII registration of one buffer with the ambient ledger. Movable so buffers
// can hand their accounting over (checkpoint offload moves tiers this way).
class LedgerReg {
public:
    LedgerReg() = default;
    LedgerReg(MemoryLedger* ledger, Tier tier, MemTag tag, std::size_t bytes);
    ~LedgerReg();
    LedgerReg(LedgerReg&& other) noexcept;
    LedgerReg& operator=(LedgerReg&& other) noexcept;
    LedgerReg(const LedgerReg&) = delete;
    LedgerReg& operator=(const LedgerReg&) = delete;

    bool active() const { return ledger_ != nullptr; }
    void move_tier(Tier to);
    void retag(MemTag tag);
    void release();

private:
    MemoryLedger* ledger_ = nullptr;
    MemoryLedger::AllocId id_ = MemoryLedger::kInvalidAlloc;
};

} // namespace sptrain
