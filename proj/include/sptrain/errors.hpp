// SPDX-License-Identifier: Apache-2.0
//
// Error taxonomy shared across the engine.

#pragma once

#include <stdexcept>
#include <string>

namespace sptrain {

// Bad user input: out-of-range labels, malformed position ids, bad config values.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor shape disagreement between operands.
class ShapeError : public ValidationError {
public:
    explicit ShapeError(const std::string& msg) : ValidationError(msg) {}
};

// A collective saw incompatible payloads across ranks.
class CollectiveError : public std::runtime_error {
public:
    explicit CollectiveError(const std::string& msg) : std::runtime_error(msg) {}
};

// Ranks diverged from lock-step collective order (or a rank died / timed out).
class ProtocolError : public CollectiveError {
public:
    explicit ProtocolError(const std::string& msg) : CollectiveError(msg) {}
};

// A replayed region produced values different from its recorded forward.
class DeterminismError : public std::runtime_error {
public:
    explicit DeterminismError(const std::string& msg) : std::runtime_error(msg) {}
};

// A tiled function broke its token-locality contract.
class ContractViolationError : public std::runtime_error {
public:
    explicit ContractViolationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Ledger misuse: double free, negative counters.
class LedgerError : public std::runtime_error {
public:
    explicit LedgerError(const std::string& msg) : std::runtime_error(msg) {}
};

// A simulated memory tier ran out of budget.
class SimulatedOomError : public std::runtime_error {
public:
    SimulatedOomError(const std::string& tier, std::size_t required, std::size_t available)
        : std::runtime_error("simulated " + tier + " OOM: required " + std::to_string(required) +
                             " bytes, available " + std::to_string(available) +
                             " (deficit " + std::to_string(required - available) + ")"),
          required_bytes(required),
          available_bytes(available) {}

    std::size_t required_bytes;
    std::size_t available_bytes;
};

// Run configuration rejected; carries the offending field path in the message.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace sptrain
