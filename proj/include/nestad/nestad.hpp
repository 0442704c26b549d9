#pragma once

#include "core.hpp"
#include "diff.hpp"
#include "fixed_point.hpp"
#include "numerical.hpp"
#include "optim.hpp"
#include "serialize.hpp"
