#pragma once

#include "linescan/error.hpp"
#include "linescan/model.hpp"
#include "linescan/rng.hpp"
#include "linescan/sizing.hpp"
#include "linescan/optics.hpp"
#include "linescan/dsp.hpp"
#include "linescan/stream.hpp"
#include "linescan/io.hpp"
#include "linescan/config.hpp"
#include "linescan/sweep.hpp"
