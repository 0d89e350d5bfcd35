#pragma once

#include "amdn/errors.hpp"
#include "amdn/sexpr.hpp"
#include "amdn/pddl.hpp"
#include "amdn/trace.hpp"
#include "amdn/random.hpp"
#include "amdn/forge.hpp"
#include "amdn/formula.hpp"
#include "amdn/wcnf.hpp"
#include "amdn/compiler.hpp"
#include "amdn/maxsat.hpp"
#include "amdn/decoder.hpp"
#include "amdn/metrics.hpp"
#include "amdn/config.hpp"
#include "amdn/settings.hpp"
