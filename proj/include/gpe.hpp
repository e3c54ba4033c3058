#pragma once

#include "gpe/abstraction.hpp"
#include "gpe/dot.hpp"
#include "gpe/error.hpp"
#include "gpe/graph.hpp"
#include "gpe/lispress.hpp"
#include "gpe/program.hpp"
#include "gpe/schema.hpp"
#include "gpe/sexpr.hpp"
#include "gpe/synthesis.hpp"
#include "gpe/value.hpp"
#include "gpe/world.hpp"
