#pragma once

#include "oddshts/error.hpp"
#include "oddshts/eval.hpp"
#include "oddshts/forecast.hpp"
#include "oddshts/hierarchy.hpp"
#include "oddshts/io.hpp"
#include "oddshts/odds.hpp"
#include "oddshts/pipeline.hpp"
#include "oddshts/simulate.hpp"
