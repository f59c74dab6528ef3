#pragma once

#include "plg/field.hpp"
#include "plg/norm.hpp"
#include "plg/grid.hpp"
#include "plg/problem.hpp"
#include "plg/solver.hpp"
#include "plg/certify.hpp"
#include "plg/levelset.hpp"
#include "plg/oracle.hpp"
#include "plg/parallel.hpp"
#include "plg/io.hpp"
