// Copyright 2026 The alti-plus Authors
// Licensed under the Apache License, Version 2.0

#ifndef ALTI_ALTI_HPP
#define ALTI_ALTI_HPP

#include "alti/aggregation.hpp"
#include "alti/config.hpp"
#include "alti/contributions.hpp"
#include "alti/decomposition.hpp"
#include "alti/eval/alignment.hpp"
#include "alti/eval/bleu.hpp"
#include "alti/eval/eos.hpp"
#include "alti/eval/hallucination.hpp"
#include "alti/eval/stats.hpp"
#include "alti/format.hpp"
#include "alti/io.hpp"
#include "alti/layer_norm.hpp"
#include "alti/model.hpp"
#include "alti/tensor.hpp"
#include "alti/weights.hpp"

#endif  // ALTI_ALTI_HPP
