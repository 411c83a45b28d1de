/*!
  \file lgn.hpp
  \brief Umbrella header.
*/

#pragma once

#include "adam.hpp"
#include "arch.hpp"
#include "circuit.hpp"
#include "common.hpp"
#include "connectome.hpp"
#include "data.hpp"
#include "gates.hpp"
#include "matrix.hpp"
#include "network.hpp"
#include "rng.hpp"
#include "serialize.hpp"
#include "trainer.hpp"
#include "verilog.hpp"
