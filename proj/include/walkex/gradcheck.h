// Copyright 2026 The walkex Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WALKEX_GRADCHECK_H_
#define WALKEX_GRADCHECK_H_

#include <optional>
#include <string>
#include <vector>

namespace walkex {

struct BlockCheck {
  std::string block;
  double max_rel_error = 0.0;
  int redrawn = 0;  // instances rejected for lying too close to a kink
};

struct GradCheckReport {
  std::vector<BlockCheck> blocks;  // worst error per block over all seeds
  double tolerance = 1e-4;

  bool passed() const;
  const BlockCheck& worst() const;
};

// Block names checked by run_gradient_checks.
std::vector<std::string> gradient_check_blocks();

// Finite-difference check of every differentiable block on random small
// instances, one instance per seed. ReLU and L1 are not differentiable at
// 0, so an instance whose taped forward pass comes within kink_margin of
// either kink is redrawn. `corrupt_block` injects a wrong gradient into
// that block (used to test the failure path).
GradCheckReport run_gradient_checks(int seeds = 20, double tolerance = 1e-4, double h = 1e-4,
                                    const std::optional<std::string>& corrupt_block = {},
                                    double kink_margin = 1e-3);

}  // namespace walkex

#endif  // WALKEX_GRADCHECK_H_
