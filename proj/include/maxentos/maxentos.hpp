#pragma once

#include "maxentos/cdf.hpp"
#include "maxentos/copula.hpp"
#include "maxentos/error.hpp"
#include "maxentos/hazard.hpp"
#include "maxentos/interval_set.hpp"
#include "maxentos/io.hpp"
#include "maxentos/joint.hpp"
#include "maxentos/marginals.hpp"
#include "maxentos/multidiag.hpp"
#include "maxentos/quadrature.hpp"
#include "maxentos/random.hpp"
#include "maxentos/verify.hpp"
