// Copyright 2026 The saedrift Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "saedrift/actstore.hpp"
#include "saedrift/analysis.hpp"
#include "saedrift/error.hpp"
#include "saedrift/numkit.hpp"
#include "saedrift/sae.hpp"
#include "saedrift/svg.hpp"
