// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stochctl/dynamics.hpp"
#include "stochctl/error.hpp"
#include "stochctl/histogram.hpp"
#include "stochctl/lie.hpp"
#include "stochctl/manifold.hpp"
#include "stochctl/measure.hpp"
#include "stochctl/parallel.hpp"
#include "stochctl/random.hpp"
#include "stochctl/report_json.hpp"
#include "stochctl/scalar_field.hpp"
#include "stochctl/scenarios.hpp"
#include "stochctl/torus_expr.hpp"
#include "stochctl/vector_field.hpp"
#include "stochctl/verify.hpp"
