#pragma once

#include "metacmi/bounds.hpp"
#include "metacmi/config.hpp"
#include "metacmi/enumeration.hpp"
#include "metacmi/environment.hpp"
#include "metacmi/experiments.hpp"
#include "metacmi/findist.hpp"
#include "metacmi/learners.hpp"
#include "metacmi/losses.hpp"
#include "metacmi/mc.hpp"
#include "metacmi/plot.hpp"
#include "metacmi/random.hpp"
#include "metacmi/rational.hpp"
#include "metacmi/supersample.hpp"
#include "metacmi/validation.hpp"
