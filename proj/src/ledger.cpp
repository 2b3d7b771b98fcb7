// SPDX-License-Identifier: Apache-2.0

#include "sptrain/ledger.hpp"

#include <algorithm>
#include <sstream>

namespace sptrain {

const char* tier_name(Tier t) {
    return t == Tier::kDevice ? "device" : "host";
}

const char* mem_tag_name(MemTag t) {
    switch (t) {
    case MemTag::kWeights: return "weights";
    case MemTag::kGrads: return "grads";
    case MemTag::kOptimizer: return "optimizer";
    case MemTag::kActivationCkpt: return "activation-checkpoint";
    case MemTag::kLogits: return "logits";
    case MemTag::kWorkspace: return "workspace";
    case MemTag::kCommBuffer: return "comm-buffer";
    default: return "?";
    }
}

void MemoryLedger::charge(Tier tier, MemTag tag, std::size_t bytes) {
    const std::size_t ti = idx(tier);
    const std::size_t budget = tier == Tier::kDevice ? device_budget_ : host_budget_;
    if (budget != 0 && live_[ti] + bytes > budget) {
        throw SimulatedOomError(tier_name(tier), live_[ti] + bytes, budget);
    }
    live_[ti] += bytes;
    peak_[ti] = std::max(peak_[ti], live_[ti]);
    tag_live_[ti][tag_idx(tag)] += bytes;
    tag_peak_[ti][tag_idx(tag)] = std::max(tag_peak_[ti][tag_idx(tag)], tag_live_[ti][tag_idx(tag)]);
}

void MemoryLedger::discharge(Tier tier, MemTag tag, std::size_t bytes) {
    const std::size_t ti = idx(tier);
    if (live_[ti] < bytes || tag_live_[ti][tag_idx(tag)] < bytes) {
        throw LedgerError("ledger underflow: freeing more than live");
    }
    live_[ti] -= bytes;
    tag_live_[ti][tag_idx(tag)] -= bytes;
}

void MemoryLedger::push_event(char kind, Tier tier, MemTag tag, int64_t delta) {
    ++ordinal_;
    if (!record_timeline_) {
        return;
    }
    events_.push_back(Event{ordinal_, kind, tier, tag, delta, live_[0], live_[1]});
}

MemoryLedger::AllocId MemoryLedger::track(Tier tier, MemTag tag, std::size_t bytes) {
    charge(tier, tag, bytes);
    largest_single_[tag_idx(tag)] = std::max<uint64_t>(largest_single_[tag_idx(tag)], bytes);
    const AllocId id = next_id_++;
    allocs_.emplace(id, AllocInfo{tier, tag, bytes});
    push_event('A', tier, tag, static_cast<int64_t>(bytes));
    return id;
}

void MemoryLedger::release(AllocId id) {
    auto it = allocs_.find(id);
    if (it == allocs_.end()) {
        throw LedgerError("release of unknown allocation id " + std::to_string(id) +
                          " (double free?)");
    }
    const AllocInfo info = it->second;
    allocs_.erase(it);
    discharge(info.tier, info.tag, info.bytes);
    push_event('F', info.tier, info.tag, -static_cast<int64_t>(info.bytes));
}

void MemoryLedger::move_tier(AllocId id, Tier to) {
    auto it = allocs_.find(id);
    if (it == allocs_.end()) {
        throw LedgerError("tier move of unknown allocation id " + std::to_string(id));
    }
    AllocInfo& info = it->second;
    if (info.tier == to) {
        return;
    }
    discharge(info.tier, info.tag, info.bytes);
    charge(to, info.tag, info.bytes);
    info.tier = to;
    push_event('M', to, info.tag, static_cast<int64_t>(info.bytes));
}

void MemoryLedger::retag(AllocId id, MemTag tag) {
    auto it = allocs_.find(id);
    if (it == allocs_.end()) {
        throw LedgerError("retag of unknown allocation id " + std::to_string(id));
    }
    AllocInfo& info = it->second;
    if (info.tag == tag) {
        return;
    }
    discharge(info.tier, info.tag, info.bytes);
    charge(info.tier, tag, info.bytes);
    largest_single_[tag_idx(tag)] = std::max<uint64_t>(largest_single_[tag_idx(tag)], info.bytes);
    info.tag = tag;
    push_event('T', info.tier, tag, 0);
}

void MemoryLedger::reset_peaks() {
    for (std::size_t t = 0; t < 2; ++t) {
        peak_[t] = live_[t];
        for (std::size_t g = 0; g < kNumMemTags; ++g) {
            tag_peak_[t][g] = tag_live_[t][g];
        }
    }
    largest_single_.fill(0);
}

void MemoryLedger::check_no_leaks() const {
    if (!allocs_.empty()) {
        throw LedgerError("leak check failed: " + std::to_string(allocs_.size()) +
                          " allocations still live (" + std::to_string(live_[0]) +
                          " device bytes, " + std::to_string(live_[1]) + " host bytes)");
    }
}

std::string MemoryLedger::summary_json() const {
    std::ostringstream os;
    os << "{";
    for (std::size_t t = 0; t < 2; ++t) {
        const char* name = tier_name(static_cast<Tier>(t));
        os << "\"" << name << "\":{\"live_bytes\":" << live_[t]
           << ",\"peak_bytes\":" << peak_[t] << ",\"tags\":{";
        for (std::size_t g = 0; g < kNumMemTags; ++g) {
            os << "\"" << mem_tag_name(static_cast<MemTag>(g)) << "\":{\"live\":" << tag_live_[t][g]
               << ",\"peak\":" << tag_peak_[t][g] << "}";
            if (g + 1 < kNumMemTags) os << ",";
        }
        os << "}},";
    }
    os << "\"largest_single\":{";
    for (std::size_t g = 0; g < kNumMemTags; ++g) {
        os << "\"" << mem_tag_name(static_cast<MemTag>(g)) << "\":" << largest_single_[g];
        if (g + 1 < kNumMemTags) os << ",";
    }
    os << "},\"events\":" << ordinal_ << "}";
    return os.str();
}

std::string MemoryLedger::timeline_csv() const {
    std::ostringstream os;
    os << "ordinal,kind,tier,tag,delta_bytes,device_live,host_live\n";
    for (const Event& e : events_) {
        os << e.ordinal << "," << e.kind << "," << tier_name(e.tier) << "," << mem_tag_name(e.tag)
           << "," << e.delta_bytes << "," << e.device_live << "," << e.host_live << "\n";
    }
    return os.str();
}

namespace {
thread_local MemoryLedger* g_ledger = nullptr;
thread_local MemTag g_tag = MemTag::kWorkspace;
} // namespace

MemoryLedger* current_ledger() { return g_ledger; }
MemTag current_mem_tag() { return g_tag; }

LedgerScope::LedgerScope(MemoryLedger& ledger) : prev_(g_ledger) { g_ledger = &ledger; }
LedgerScope::~LedgerScope() { g_ledger = prev_; }

TagScope::TagScope(MemTag tag) : prev_(g_tag) { g_tag = tag; }
TagScope::~TagScope() { g_tag = prev_; }

LedgerReg::LedgerReg(MemoryLedger* ledger, Tier tier, MemTag tag, std::size_t bytes)
    : ledger_(ledger) {
    if (ledger_ != nullptr) {
        id_ = ledger_->track(tier, tag, bytes);
    }
}

LedgerReg::~LedgerReg() { release(); }

LedgerReg::LedgerReg(LedgerReg&& other) noexcept : ledger_(other.ledger_), id_(other.id_) {
    other.ledger_ = nullptr;
    other.id_ = MemoryLedger::kInvalidAlloc;
}

LedgerReg& LedgerReg::operator=(LedgerReg&& other) noexcept {
    if (this != &other) {
        release();
        ledger_ = other.ledger_;
        id_ = other.id_;
        other.ledger_ = nullptr;
        other.id_ = MemoryLedger::kInvalidAlloc;
    }
    return *this;
}

void LedgerReg::move_tier(Tier to) {
    if (ledger_ != nullptr) {
        ledger_->move_tier(id_, to);
    }
}

void LedgerReg::retag(MemTag tag) {
    if (ledger_ != nullptr) {
        ledger_->retag(id_, tag);
    }
}

void LedgerReg::release() {
    if (ledger_ != nullptr) {
        ledger_->release(id_);
        ledger_ = nullptr;
        id_ = MemoryLedger::kInvalidAlloc;
    }
}

} // namespace sptrain
