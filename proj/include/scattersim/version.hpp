// Copyright (c) 2026 scattersim developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace scattersim {

inline constexpr const char* version = "0.1.0";

}  // namespace scattersim
