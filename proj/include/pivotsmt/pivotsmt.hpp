// Copyright 2026 The pivotsmt Authors
//
// SPDX-License-Identifier: Apache-2.0

// Umbrella header.

#pragma once

#include "pivotsmt/align.hpp"
#include "pivotsmt/decoder.hpp"
#include "pivotsmt/errors.hpp"
#include "pivotsmt/evalmetrics.hpp"
#include "pivotsmt/experiment.hpp"
#include "pivotsmt/ngramlm.hpp"
#include "pivotsmt/phrasetab.hpp"
#include "pivotsmt/pivot.hpp"
#include "pivotsmt/synthlang.hpp"
#include "pivotsmt/textseg.hpp"
#include "pivotsmt/util.hpp"
#include "pivotsmt/version.hpp"
