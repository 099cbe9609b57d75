/*
 * Copyright 2026 The gbstrain Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "gbs/error.hpp"

namespace gbs {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::invalid_argument: return "invalid argument";
        case ErrorKind::dimension_mismatch: return "dimension mismatch";
        case ErrorKind::invalid_state: return "invalid state";
        case ErrorKind::budget_exceeded: return "oracle budget";
        case ErrorKind::infeasible_rescale: return "infeasible rescale";
        case ErrorKind::numerical: return "numerical";
        case ErrorKind::config: return "config parse";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

}  // namespace gbs
