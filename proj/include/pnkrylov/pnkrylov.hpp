#pragma once

#include <pnkrylov/types.hpp>
#include <pnkrylov/linop.hpp>
#include <pnkrylov/matrix_market.hpp>
#include <pnkrylov/penalty.hpp>
#include <pnkrylov/rng.hpp>
#include <pnkrylov/problems.hpp>
#include <pnkrylov/problem_io.hpp>
#include <pnkrylov/incremental_qr.hpp>
#include <pnkrylov/gksubspace.hpp>
#include <pnkrylov/trace.hpp>
#include <pnkrylov/result.hpp>
#include <pnkrylov/pnewton.hpp>
#include <pnkrylov/reference/irn.hpp>
#include <pnkrylov/reference/gks.hpp>
#include <pnkrylov/reference/gkspq.hpp>
