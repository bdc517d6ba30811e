#pragma once

#include "eulerfem/mesh.hpp"
#include "eulerfem/quadrature.hpp"
#include "eulerfem/fespace.hpp"
#include "eulerfem/assembly.hpp"
#include "eulerfem/saddle.hpp"
#include "eulerfem/scenarios.hpp"
#include "eulerfem/stepper.hpp"
#include "eulerfem/analysis.hpp"
#include "eulerfem/io.hpp"
#include "eulerfem/config.hpp"
#include "eulerfem/study.hpp"
#include "eulerfem/commands.hpp"
