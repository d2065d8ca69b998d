#pragma once

#include "distrust/analytic.hpp"
#include "distrust/classical.hpp"
#include "distrust/commands.hpp"
#include "distrust/core.hpp"
#include "distrust/hierarchy.hpp"
#include "distrust/io.hpp"
#include "distrust/parallel.hpp"
#include "distrust/randomness.hpp"
#include "distrust/sdp.hpp"
#include "distrust/seesaw.hpp"
