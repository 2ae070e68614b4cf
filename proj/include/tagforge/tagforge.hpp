#pragma once

#include "tagforge/bench.hpp"
#include "tagforge/checkpoint.hpp"
#include "tagforge/dataset.hpp"
#include "tagforge/emb1.hpp"
#include "tagforge/error.hpp"
#include "tagforge/gradcheck.hpp"
#include "tagforge/graph.hpp"
#include "tagforge/layers.hpp"
#include "tagforge/model.hpp"
#include "tagforge/ops.hpp"
#include "tagforge/optim.hpp"
#include "tagforge/planetoid.hpp"
#include "tagforge/remote.hpp"
#include "tagforge/rng.hpp"
#include "tagforge/tensor.hpp"
#include "tagforge/text.hpp"
#include "tagforge/train.hpp"
