// SPDX-License-Identifier: Apache-2.0
//
// Backward engine, recompute-on-backward checkpointing, and the
// finite-difference gradient oracle.

#pragma once

#include <functional>

#include "sptrain/tensor.hpp"

namespace sptrain {

// Runs reverse-mode accumulation from root (scalar) with seed 1.
// Gradients accumulate additively into leaf .grad buffers.
void backward(const Tensor& root);
void backward(const Tensor& root, std::span<const double> seed);

using RegionFn = std::function<Tensor(const Tensor&)>;

enum class CheckpointMode {
    kPlain,   // saved input stays on the device tier
    kOffload, // saved input bytes are parked on the host tier until backward
};

// Recompute-on-backward checkpoint. Forward runs region without recording and
// keeps only the input; backward replays the region, verifies the replay is
// bit-identical to the recorded forward values, then differentiates through
// the replayed subgraph. The returned tensor's storage is reclaimed during
// backward; do not read it afterwards.
Tensor checkpoint(const RegionFn& region, const Tensor& x,
                  CheckpointMode mode = CheckpointMode::kPlain);

// Central-difference gradient of a scalar-valued function, as an independent
// check against tape gradients.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x,
                        double eps = 1e-5);

} // namespace sptrain
