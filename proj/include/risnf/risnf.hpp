#pragma once

#include "risnf/channel.hpp"
#include "risnf/codebook.hpp"
#include "risnf/experiment.hpp"
#include "risnf/geometry.hpp"
#include "risnf/io.hpp"
#include "risnf/linalg.hpp"
#include "risnf/optimizer.hpp"
#include "risnf/rate.hpp"
#include "risnf/rng.hpp"
#include "risnf/training.hpp"
#include "risnf/validate.hpp"
