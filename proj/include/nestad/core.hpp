#pragma once

// Scalars, arrays and the tape. Everything else in nestad builds on this.

#include "tag.hpp"
#include "errors.hpp"
#include "backend.hpp"
#include "scalar.hpp"
#include "array.hpp"
#include "tape.hpp"
#include "linalg.hpp"
