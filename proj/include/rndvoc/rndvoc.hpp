// Copyright 2026 the rndvoc authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include "rndvoc/config.hpp"
#include "rndvoc/core.hpp"
#include "rndvoc/dsp.hpp"
#include "rndvoc/fft.hpp"
#include "rndvoc/generator.hpp"
#include "rndvoc/losses.hpp"
#include "rndvoc/rnd.hpp"
#include "rndvoc/wav.hpp"
#include "rndvoc/weights.hpp"
