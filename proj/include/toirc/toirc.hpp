#pragma once

// Umbrella header.

#include "config.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "gp.hpp"
#include "hog.hpp"
#include "hyperopt.hpp"
#include "image.hpp"
#include "linalg.hpp"
#include "optimize.hpp"
#include "pca.hpp"
#include "preprocess.hpp"
#include "random.hpp"
#include "readout.hpp"
#include "reservoir.hpp"
#include "synthetic.hpp"
