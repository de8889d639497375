#pragma once

// Labelled Reeb graphs of circle-valued simple Morse functions: extraction,
// elementary deformations, certified editing-distance estimation,
// reparameterization bounds, homotopy tracing, and serialization.

#include "reebedit/circle_function.hpp"
#include "reebedit/deformations.hpp"
#include "reebedit/edit_distance.hpp"
#include "reebedit/errors.hpp"
#include "reebedit/homotopy.hpp"
#include "reebedit/json_io.hpp"
#include "reebedit/pseudo_distance.hpp"
#include "reebedit/random_morse.hpp"
#include "reebedit/reeb_graph.hpp"
