#pragma once

#include "unlinked/conditional.hpp"
#include "unlinked/criterion.hpp"
#include "unlinked/csv.hpp"
#include "unlinked/dataset.hpp"
#include "unlinked/density.hpp"
#include "unlinked/experiments.hpp"
#include "unlinked/fit.hpp"
#include "unlinked/gauss.hpp"
#include "unlinked/noise.hpp"
#include "unlinked/parallel.hpp"
#include "unlinked/rng.hpp"
#include "unlinked/svg.hpp"
#include "unlinked/types.hpp"
#include "unlinked/wasserstein.hpp"
