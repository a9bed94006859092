// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace excurlab {

inline constexpr const char* version_string = "0.1.0";

}  // namespace excurlab
