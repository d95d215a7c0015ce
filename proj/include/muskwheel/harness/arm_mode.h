// Copyright 2026 The Muskwheel Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef MUSKWHEEL_HARNESS_ARM_MODE_H_
#define MUSKWHEEL_HARNESS_ARM_MODE_H_

#include "muskwheel/core/errors.h"

namespace muskwheel {

// Muscle relaxation rewrites the tensions the stiffness command depends
// on, so the two never run together. Posture holding without a stiffness
// target is compatible with either.
enum class ArmMode { kPosture, kRelaxation, kVariableStiffness };

const char* ArmModeName(ArmMode mode);

class ModeError : public UsageError {
 public:
  using UsageError::UsageError;
};

class ArmModeGuard {
 public:
  ArmMode mode() const { return mode_; }
  // Switching is explicit; it is always allowed.
  void Switch(ArmMode mode) { mode_ = mode; }

  // Throw ModeError when the other exclusive mode is active.
  void RequireStiffnessCommand() const;
  void RequireRelaxation() const;

 private:
  ArmMode mode_ = ArmMode::kPosture;
};

}  // namespace muskwheel

#endif  // MUSKWHEEL_HARNESS_ARM_MODE_H_
