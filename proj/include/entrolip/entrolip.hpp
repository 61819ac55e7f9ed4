#pragma once

#include "entrolip/bounds.hpp"
#include "entrolip/common.hpp"
#include "entrolip/cov_inequalities.hpp"
#include "entrolip/entropic_maps.hpp"
#include "entrolip/experiments.hpp"
#include "entrolip/gaussian_oracle.hpp"
#include "entrolip/measures.hpp"
#include "entrolip/sinkhorn.hpp"
