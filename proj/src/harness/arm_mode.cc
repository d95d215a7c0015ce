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


#include "muskwheel/harness/arm_mode.h"

#include <string>

namespace muskwheel {

const char* ArmModeName(ArmMode mode) {
  switch (mode) {
    case ArmMode::kPosture:
      return "posture";
    case ArmMode::kRelaxation:
      return "relaxation";
    case ArmMode::kVariableStiffness:
      return "variable_stiffness";
  }
  return "?";
}

void ArmModeGuard::RequireStiffnessCommand() const {
  if (mode_ == ArmMode::kRelaxation) {
    throw ModeError("stiffness command refused while muscle relaxation is active");
  }
}

void ArmModeGuard::RequireRelaxation() const {
  if (mode_ == ArmMode::kVariableStiffness) {
    throw ModeError("muscle relaxation refused while variable stiffness is active");
  }
}

}  // namespace muskwheel
