#pragma once

#include "gammabayes/analysis.hpp"
#include "gammabayes/curves.hpp"
#include "gammabayes/errors.hpp"
#include "gammabayes/estimators.hpp"
#include "gammabayes/experiment.hpp"
#include "gammabayes/gamma_model.hpp"
#include "gammabayes/io.hpp"
#include "gammabayes/random.hpp"
#include "gammabayes/specfun.hpp"
