#pragma once

#include "asls/analysis.hpp"
#include "asls/libsvm.hpp"
#include "asls/momentum.hpp"
#include "asls/objective.hpp"
#include "asls/optimizer.hpp"
#include "asls/preconditioner.hpp"
#include "asls/problems.hpp"
#include "asls/step_size.hpp"
#include "asls/types.hpp"
