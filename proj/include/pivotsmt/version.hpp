// Copyright 2026 The pivotsmt Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace pivotsmt {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pivotsmt
