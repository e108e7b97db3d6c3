// Copyright 2026 The tenerv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tenerv/adam.hpp"
#include "tenerv/bench.hpp"
#include "tenerv/bitstream.hpp"
#include "tenerv/error.hpp"
#include "tenerv/gop.hpp"
#include "tenerv/grids.hpp"
#include "tenerv/metrics.hpp"
#include "tenerv/model.hpp"
#include "tenerv/ops.hpp"
#include "tenerv/quant.hpp"
#include "tenerv/range_coder.hpp"
#include "tenerv/rng.hpp"
#include "tenerv/tensor.hpp"
#include "tenerv/training.hpp"
#include "tenerv/video.hpp"
