// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "seal/bounds.hpp"
#include "seal/error.hpp"
#include "seal/io.hpp"
#include "seal/lock.hpp"
#include "seal/nn/gradient.hpp"
#include "seal/nn/network.hpp"
#include "seal/nn/receptive_field.hpp"
#include "seal/nn/serialize.hpp"
#include "seal/nn/surgery.hpp"
#include "seal/rng.hpp"
#include "seal/stain.hpp"
#include "seal/tensor.hpp"
#include "seal/trigger.hpp"
#include "seal/harness/dataset.hpp"
#include "seal/harness/eval.hpp"
#include "seal/harness/models.hpp"
#include "seal/harness/montecarlo.hpp"
#include "seal/harness/parallel.hpp"
#include "seal/harness/prune.hpp"
#include "seal/harness/train.hpp"
