#pragma once

#include "nladstv/dpe.hpp"
#include "nladstv/error.hpp"
#include "nladstv/image.hpp"
#include "nladstv/image_io.hpp"
#include "nladstv/jacobian.hpp"
#include "nladstv/linops.hpp"
#include "nladstv/nlweights.hpp"
#include "nladstv/solver.hpp"
#include "nladstv/spectral2.hpp"
