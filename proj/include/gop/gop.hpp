#pragma once

#include "gop/errors.hpp"
#include "gop/normal.hpp"
#include "gop/density.hpp"
#include "gop/market.hpp"
#include "gop/views.hpp"
#include "gop/payoff.hpp"
#include "gop/index.hpp"
#include "gop/hedged.hpp"
#include "gop/model_risk.hpp"
#include "gop/io.hpp"
