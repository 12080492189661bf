#pragma once

// Umbrella header for the distributional return forecasting library.

#include "probcast/autodiff.hpp"
#include "probcast/checkpoint.hpp"
#include "probcast/data.hpp"
#include "probcast/distributions.hpp"
#include "probcast/errors.hpp"
#include "probcast/forecaster.hpp"
#include "probcast/garch.hpp"
#include "probcast/nelder_mead.hpp"
#include "probcast/nll_losses.hpp"
#include "probcast/numerics.hpp"
#include "probcast/optimizer.hpp"
#include "probcast/pipeline.hpp"
#include "probcast/plot.hpp"
#include "probcast/records.hpp"
#include "probcast/risk.hpp"
#include "probcast/rng.hpp"
#include "probcast/scoring.hpp"
#include "probcast/serialize.hpp"
#include "probcast/special_functions.hpp"
#include "probcast/tensor.hpp"
